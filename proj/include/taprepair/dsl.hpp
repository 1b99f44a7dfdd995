#pragma once

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "taprepair/rules.hpp"

namespace taprepair {

struct ParseError : std::runtime_error {
    int line;
    int col;
    ParseError(int line_, int col_, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_) + ", col " +
                             std::to_string(col_) + ": " + msg),
          line(line_),
          col(col_) {}
};

struct Token {
    enum class Kind { Word, Number, Punct, End };
    Kind kind = Kind::End;
    std::string text;
    int line = 0;
    int col = 0;  // 1-based
};

// Tokenizes one line. Numbers may carry a decimal part and a unit suffix
// ("0.5min"); ".." is its own token so range bounds stay separate.
inline std::vector<Token> lex_line(const std::string& s, int lineno) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto is_word_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '%'; };
    auto is_word_char = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
    };
    while (i < s.size()) {
        char c = s[i];
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        if (c == '#') break;  // comment to end of line
        int col = static_cast<int>(i) + 1;
        if (is_word_start(c)) {
            if (c == '%') {
                out.push_back({Token::Kind::Word, "%", lineno, col});
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < s.size() && is_word_char(s[j])) ++j;
            // trailing dots belong to punctuation, not the identifier
            while (j > i && s[j - 1] == '.') --j;
            out.push_back({Token::Kind::Word, s.substr(i, j - i), lineno, col});
            i = j;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
            std::size_t j = i;
            if (s[j] == '-') ++j;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            if (j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
                ++j;
                while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            }
            while (j < s.size() && (std::isalpha(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
            out.push_back({Token::Kind::Number, s.substr(i, j - i), lineno, col});
            i = j;
            continue;
        }
        if (c == '.' && i + 1 < s.size() && s[i + 1] == '.') {
            out.push_back({Token::Kind::Punct, "..", lineno, col});
            i += 2;
            continue;
        }
        if (c == '-' && i + 1 < s.size() && s[i + 1] == '>') {
            out.push_back({Token::Kind::Punct, "->", lineno, col});
            i += 2;
            continue;
        }
        if (c == '!' || c == '<' || c == '>' || c == '=') {
            std::size_t j = i + 1;
            if (j < s.size() && s[j] == '=') ++j;
            out.push_back({Token::Kind::Punct, s.substr(i, j - i), lineno, col});
            i = j;
            continue;
        }
        static const std::string singles = ":{}[],()+";
        if (singles.find(c) != std::string::npos) {
            out.push_back({Token::Kind::Punct, std::string(1, c), lineno, col});
            ++i;
            continue;
        }
        throw ParseError(lineno, col, std::string("unexpected character '") + c + "'");
    }
    out.push_back({Token::Kind::End, "", lineno, static_cast<int>(s.size()) + 1});
    return out;
}

class TokenStream {
public:
    explicit TokenStream(std::vector<Token> toks) : toks_(std::move(toks)) {}

    const Token& peek() const { return toks_[pos_]; }
    const Token& get() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    bool at_end() const { return peek().kind == Token::Kind::End; }

    bool accept_word(const std::string& w) {
        if (peek().kind == Token::Kind::Word && peek().text == w) {
            get();
            return true;
        }
        return false;
    }
    bool accept_punct(const std::string& p) {
        if (peek().kind == Token::Kind::Punct && peek().text == p) {
            get();
            return true;
        }
        return false;
    }
    Token expect_word(const std::string& what) {
        if (peek().kind != Token::Kind::Word)
            throw ParseError(peek().line, peek().col, "expected " + what);
        return get();
    }
    void expect_punct(const std::string& p) {
        if (!accept_punct(p))
            throw ParseError(peek().line, peek().col, "expected '" + p + "'");
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(peek().line, peek().col, msg);
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

// "600", "600s", "10min", "2h", "0.5min" -> seconds (rounded to nearest).
inline int parse_duration_token(const Token& t) {
    if (t.kind != Token::Kind::Number)
        throw ParseError(t.line, t.col, "expected a duration");
    std::size_t i = 0;
    const std::string& s = t.text;
    if (i < s.size() && s[i] == '-') ++i;
    while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
    double num = 0;
    try {
        num = std::stod(s.substr(0, i));
    } catch (...) {
        throw ParseError(t.line, t.col, "bad duration '" + s + "'");
    }
    std::string unit = s.substr(i);
    double mult = 1;
    if (unit.empty() || unit == "s") mult = 1;
    else if (unit == "min" || unit == "m") mult = 60;
    else if (unit == "h") mult = 3600;
    else throw ParseError(t.line, t.col, "unknown duration unit '" + unit + "'");
    long long sec = std::llround(num * mult);
    if (sec < 0) throw ParseError(t.line, t.col, "negative duration");
    return static_cast<int>(sec);
}

inline int parse_int_token(const Token& t) {
    if (t.kind != Token::Kind::Number)
        throw ParseError(t.line, t.col, "expected an integer");
    for (char c : t.text)
        if (!std::isdigit(static_cast<unsigned char>(c)) && c != '-')
            throw ParseError(t.line, t.col, "expected an integer, got '" + t.text + "'");
    return std::stoi(t.text);
}

// Attribute reference: validates declaration.
inline AttributeId parse_attr_ref(TokenStream& ts, const AttributeTable& attrs) {
    Token t = ts.expect_word("an attribute name");
    AttributeId id = AttributeId::parse(t.text);
    if (!attrs.find(id))
        throw ParseError(t.line, t.col, "undeclared attribute '" + t.text + "'");
    return id;
}

// Value in the context of a known attribute: enum label or in-range integer.
inline Value parse_value(TokenStream& ts, const AttributeTable& attrs, const AttributeId& id) {
    const Domain& d = attrs.at(id).domain;
    const Token& t = ts.peek();
    if (t.kind == Token::Kind::Word) {
        if (!d.is_enum())
            throw ParseError(t.line, t.col, id.str() + " is numeric; expected a number");
        auto v = d.index_of(t.text);
        if (!v)
            throw ParseError(t.line, t.col,
                             "'" + t.text + "' is not a value of " + id.str());
        ts.get();
        return *v;
    }
    if (t.kind == Token::Kind::Number) {
        if (!d.is_range())
            throw ParseError(t.line, t.col, id.str() + " is enumerated; expected a label");
        int v = parse_int_token(t);
        ts.get();
        if (!d.contains(v))
            throw ParseError(t.line, t.col,
                             std::to_string(v) + " is outside the domain of " + id.str());
        return v;
    }
    throw ParseError(t.line, t.col, "expected a value for " + id.str());
}

inline Constraint parse_constraint(TokenStream& ts, const AttributeTable& attrs) {
    Constraint c;
    c.attr = parse_attr_ref(ts, attrs);
    const Token& opTok = ts.peek();
    if (opTok.kind != Token::Kind::Punct)
        throw ParseError(opTok.line, opTok.col, "expected a comparison operator");
    auto op = parse_op(opTok.text);
    if (!op) throw ParseError(opTok.line, opTok.col, "unknown operator '" + opTok.text + "'");
    ts.get();
    c.op = *op;
    c.value = parse_value(ts, attrs, c.attr);
    return c;
}

inline std::vector<Assignment> parse_assignments(TokenStream& ts, const AttributeTable& attrs) {
    std::vector<Assignment> out;
    while (true) {
        Token nameTok = ts.peek();
        AttributeId id = parse_attr_ref(ts, attrs);
        if (!attrs.at(id).actuator)
            throw ParseError(nameTok.line, nameTok.col,
                             id.str() + " is not an actuator attribute");
        if (!ts.accept_punct("=") && !ts.accept_punct("=="))
            ts.fail("expected '=' in assignment");
        Value v = parse_value(ts, attrs, id);
        for (const auto& prev : out)
            if (prev.attr == id)
                throw ParseError(nameTok.line, nameTok.col,
                                 "duplicate assignment to " + id.str());
        out.push_back({id, v});
        if (!ts.accept_punct(",")) break;
    }
    return out;
}

// ATTR <name> : {a, b, c} | [lo..hi] [unit]   [ACTUATOR] [TARDY <interval>]
inline AttributeDecl parse_attr_decl(TokenStream& ts) {
    AttributeDecl d;
    Token name = ts.expect_word("an attribute name");
    d.id = AttributeId::parse(name.text);
    ts.expect_punct(":");
    if (ts.accept_punct("{")) {
        std::vector<std::string> labels;
        while (true) {
            Token lab = ts.expect_word("an enum label");
            for (const auto& l : labels)
                if (l == lab.text)
                    throw ParseError(lab.line, lab.col, "duplicate label '" + lab.text + "'");
            labels.push_back(lab.text);
            if (!ts.accept_punct(",")) break;
        }
        ts.expect_punct("}");
        if (labels.size() < 2)
            throw ParseError(name.line, name.col, "enum domain needs at least two labels");
        d.domain = Domain::make_enum(std::move(labels));
    } else if (ts.accept_punct("[")) {
        int lo = parse_int_token(ts.get());
        ts.expect_punct("..");
        int hi = parse_int_token(ts.get());
        ts.expect_punct("]");
        if (hi < lo) throw ParseError(name.line, name.col, "empty numeric domain");
        std::string unit;
        if (ts.peek().kind == Token::Kind::Word && ts.peek().text != "ACTUATOR" &&
            ts.peek().text != "TARDY")
            unit = ts.get().text;
        d.domain = Domain::make_range(lo, hi, unit);
    } else {
        ts.fail("expected '{' or '[' to open a domain");
    }
    while (!ts.at_end()) {
        if (ts.accept_word("ACTUATOR")) {
            d.actuator = true;
        } else if (ts.accept_word("TARDY")) {
            d.sensing = Sensing::Tardy;
            d.sensor_interval_sec = parse_duration_token(ts.get());
        } else {
            ts.fail("unexpected token after attribute declaration");
        }
    }
    return d;
}

// RULE [<id>:] IF <constraint> [AFTER <dur>] [WHILE <c> {AND <c>}]
//   THEN <assignments> [FOR <dur>] [UNTIL <constraint>] [FINALLY <assignments>]
inline TapRule parse_rule_body(TokenStream& ts, const AttributeTable& attrs,
                               const std::string& default_id) {
    TapRule r;
    r.id = default_id;
    if (ts.peek().kind == Token::Kind::Word && ts.peek().text != "IF") {
        Token idTok = ts.get();
        ts.expect_punct(":");
        r.id = idTok.text;
    }
    if (!ts.accept_word("IF")) ts.fail("expected IF");
    r.trigger = parse_constraint(ts, attrs);
    if (ts.accept_word("AFTER")) r.delay_sec = parse_duration_token(ts.get());
    if (ts.accept_word("WHILE")) {
        r.conditions.push_back(parse_constraint(ts, attrs));
        while (ts.accept_word("AND")) r.conditions.push_back(parse_constraint(ts, attrs));
    }
    Token thenTok = ts.peek();
    if (!ts.accept_word("THEN")) ts.fail("expected THEN");
    r.action.assigns = parse_assignments(ts, attrs);
    bool has_for = false, has_until = false, has_finally = false;
    if (ts.accept_word("FOR")) {
        has_for = true;
        r.action.duration_sec = parse_duration_token(ts.get());
        if (r.action.duration_sec <= 0)
            throw ParseError(thenTok.line, thenTok.col, "FOR duration must be positive");
    }
    if (ts.accept_word("UNTIL")) {
        has_until = true;
        r.action.until = parse_constraint(ts, attrs);
    }
    if (ts.accept_word("FINALLY")) {
        has_finally = true;
        r.action.completion = parse_assignments(ts, attrs);
        for (const auto& ca : r.action.completion) {
            bool held = false;
            for (const auto& a : r.action.assigns) held = held || a.attr == ca.attr;
            if (!held)
                throw ParseError(thenTok.line, thenTok.col,
                                 "FINALLY assigns " + ca.attr.str() +
                                     " which the action does not hold");
        }
    }
    if (has_for || has_until || has_finally) {
        r.action.kind = ActionKind::Extended;
        if (!has_for && !has_until)
            throw ParseError(thenTok.line, thenTok.col,
                             "extended action needs FOR or UNTIL to complete");
        try {
            effective_completion(r.action, attrs);
        } catch (const std::invalid_argument& e) {
            throw ParseError(thenTok.line, thenTok.col, e.what());
        }
    }
    if (!ts.at_end()) ts.fail("unexpected trailing tokens");
    return r;
}

struct RulesFile {
    AttributeTable attrs;
    std::vector<TapRule> rules;
};

inline RulesFile parse_rules_text(const std::string& text) {
    RulesFile f;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::set<std::string> ids;
    while (std::getline(in, line)) {
        ++lineno;
        TokenStream ts(lex_line(line, lineno));
        if (ts.at_end()) continue;
        if (ts.accept_word("ATTR")) {
            try {
                f.attrs.declare(parse_attr_decl(ts));
            } catch (const std::invalid_argument& e) {
                throw ParseError(lineno, 1, e.what());
            }
        } else if (ts.accept_word("RULE")) {
            TapRule r = parse_rule_body(ts, f.attrs,
                                        "r" + std::to_string(f.rules.size() + 1));
            if (!ids.insert(r.id).second)
                throw ParseError(lineno, 1, "duplicate rule id '" + r.id + "'");
            f.rules.push_back(std::move(r));
        } else {
            ts.fail("expected ATTR or RULE");
        }
    }
    return f;
}

inline std::string read_file_or_throw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline RulesFile parse_rules_file(const std::string& path) {
    return parse_rules_text(read_file_or_throw(path));
}

inline std::string print_rules_file(const RulesFile& f) {
    std::string out;
    for (const auto& id : f.attrs.order()) out += print_attr_decl(f.attrs.at(id)) + "\n";
    for (const auto& r : f.rules) out += print_rule(r, f.attrs) + "\n";
    return out;
}

}  // namespace taprepair
