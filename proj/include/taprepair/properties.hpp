#pragma once

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "taprepair/dsl.hpp"
#include "taprepair/util.hpp"

namespace taprepair {

// Property atoms. A State atom holds in a state; an Event atom is evaluated
// at the following (settled) state, matching the next-state operator; a Timer
// atom constrains the remaining hold time of a named rule's extended action
// and is false while that rule holds nothing.
enum class AtomKind { State, Event, Timer };

struct Atom {
    AtomKind kind = AtomKind::State;
    Constraint constraint;  // State/Event
    std::string rule_id;    // Timer
    CmpOp timer_op = CmpOp::Geq;
    int timer_sec = 0;

    static Atom state(Constraint c) { return {AtomKind::State, c, "", CmpOp::Geq, 0}; }
    static Atom event(Constraint c) { return {AtomKind::Event, c, "", CmpOp::Geq, 0}; }
    static Atom timer(std::string rule, CmpOp op, int sec) {
        return {AtomKind::Timer, {}, std::move(rule), op, sec};
    }

    bool operator==(const Atom& o) const {
        return kind == o.kind && constraint == o.constraint && rule_id == o.rule_id &&
               timer_op == o.timer_op && timer_sec == o.timer_sec;
    }
};

// Event-based properties demand a follow-up: whenever the precondition holds,
// the post constraint holds at the next settled state. State-based properties
// constrain every settled state directly.
enum class PropertyShape { EventBased, StateBased };

struct Property {
    std::string id;
    std::vector<Atom> pre;  // State and Timer atoms
    Atom post;              // Event (EventBased) or State (StateBased)
    PropertyShape shape = PropertyShape::EventBased;
    std::optional<int> permitted_latency_sec;
    std::string scenario_group;    // G1..G7
    std::string capability_group;  // G8..G23

    bool operator==(const Property& o) const {
        return id == o.id && pre == o.pre && post == o.post && shape == o.shape &&
               permitted_latency_sec == o.permitted_latency_sec;
    }
};

// The negation used for repair reasoning: the post constraint flips to its
// complement, the precondition stays. Involutive.
inline Property negate(Property p) {
    p.post.constraint = p.post.constraint.negated();
    return p;
}

// The nine surface templates users write properties in.
enum class TemplateKind {
    OneEventNever,
    EventStateAlways,
    EventStateNever,
    OneStateAlways,
    OneStateNever,
    MultiStateAlways,
    MultiStateNever,
    StateStateAlways,
    StateStateNever,
};

// Folds every surface template onto the two logical shapes. "Never" variants
// complement the target constraint; unconditional variants have an empty
// precondition; the multi-state form binds its last state by the others.
inline Property normalize(TemplateKind kind, std::vector<Constraint> states, Constraint target,
                          std::string id = "p") {
    Property p;
    p.id = std::move(id);
    bool never = kind == TemplateKind::OneEventNever || kind == TemplateKind::EventStateNever ||
                 kind == TemplateKind::OneStateNever || kind == TemplateKind::MultiStateNever ||
                 kind == TemplateKind::StateStateNever;
    bool event = kind == TemplateKind::OneEventNever || kind == TemplateKind::EventStateAlways ||
                 kind == TemplateKind::EventStateNever;
    switch (kind) {
        case TemplateKind::OneEventNever:
        case TemplateKind::OneStateAlways:
        case TemplateKind::OneStateNever:
            if (!states.empty())
                throw std::invalid_argument("unconditional template takes no states");
            break;
        case TemplateKind::MultiStateAlways:
        case TemplateKind::MultiStateNever:
            if (states.empty())
                throw std::invalid_argument("multi-state template needs at least two states");
            break;
        default:
            break;
    }
    for (const auto& s : states) p.pre.push_back(Atom::state(s));
    Constraint post = never ? target.negated() : target;
    p.shape = event ? PropertyShape::EventBased : PropertyShape::StateBased;
    p.post = event ? Atom::event(post) : Atom::state(post);
    return p;
}

// --- prioritization ----------------------------------------------------------

// One priority row: matches a constraint by attribute, and by value when one
// is given. Lower rank sorts first.
struct PriorityEntry {
    AttributeId attr;
    std::optional<Value> value;
    int rank = 0;
};

class PriorityTable {
public:
    static constexpr int kUnranked = 99;

    void add(PriorityEntry e) { entries_.push_back(std::move(e)); }

    int rank_of(const Constraint& c) const {
        int best = kUnranked;
        for (const auto& e : entries_) {
            if (e.attr != c.attr) continue;
            if (e.value && *e.value != c.value) continue;
            best = std::min(best, e.rank);
        }
        return best;
    }

    bool empty() const { return entries_.empty(); }

private:
    std::vector<PriorityEntry> entries_;
};

// Precondition rank: the strongest (lowest) rank among pre atoms; properties
// with an empty or unranked precondition sort last.
inline int pre_priority(const Property& p, const PriorityTable& t) {
    int best = PriorityTable::kUnranked;
    for (const auto& a : p.pre)
        if (a.kind == AtomKind::State) best = std::min(best, t.rank_of(a.constraint));
    return best;
}

inline int post_priority(const Property& p, const PriorityTable& t) {
    return t.rank_of(p.post.constraint);
}

// Sorts by (pre rank, post rank); remaining ties break by a seeded hash of
// the property id, so the order is stable across runs with the same seed.
inline std::vector<Property> prioritize(std::vector<Property> props, const PriorityTable& pre,
                                        const PriorityTable& post, std::uint64_t seed) {
    std::stable_sort(props.begin(), props.end(), [&](const Property& a, const Property& b) {
        int pa = pre_priority(a, pre), pb = pre_priority(b, pre);
        if (pa != pb) return pa < pb;
        int qa = post_priority(a, post), qb = post_priority(b, post);
        if (qa != qb) return qa < qb;
        return fnv1a64(a.id, seed * 0x9E3779B97F4A7C15ULL + 0xCBF29CE484222325ULL) <
               fnv1a64(b.id, seed * 0x9E3779B97F4A7C15ULL + 0xCBF29CE484222325ULL);
    });
    return props;
}

// --- parsing -----------------------------------------------------------------

// Atom syntax: "<attr> <op> <value>" or "<rule>.timer <op> <duration>".
inline Atom parse_pre_atom(TokenStream& ts, const AttributeTable& attrs) {
    Token t = ts.peek();
    if (t.kind == Token::Kind::Word) {
        AttributeId id = AttributeId::parse(t.text);
        if (id.capability == "timer") {
            ts.get();
            const Token& opTok = ts.peek();
            auto op = opTok.kind == Token::Kind::Punct ? parse_op(opTok.text) : std::nullopt;
            if (!op) throw ParseError(opTok.line, opTok.col, "expected a comparison operator");
            ts.get();
            int sec = parse_duration_token(ts.get());
            return Atom::timer(id.entity, *op, sec);
        }
    }
    return Atom::state(parse_constraint(ts, attrs));
}

// PROP <id> STATE|EVENT WHEN <atom> {AND <atom>} THEN <constraint>
//      [WITHIN <duration>] [TAGS <scenario> <capability>]
inline Property parse_property_line(TokenStream& ts, const AttributeTable& attrs) {
    Property p;
    p.id = ts.expect_word("a property id").text;
    if (ts.accept_word("STATE")) p.shape = PropertyShape::StateBased;
    else if (ts.accept_word("EVENT")) p.shape = PropertyShape::EventBased;
    else ts.fail("expected STATE or EVENT");
    if (ts.accept_word("WHEN")) {
        p.pre.push_back(parse_pre_atom(ts, attrs));
        while (ts.accept_word("AND")) p.pre.push_back(parse_pre_atom(ts, attrs));
    }
    if (!ts.accept_word("THEN")) ts.fail("expected THEN");
    Constraint post = parse_constraint(ts, attrs);
    p.post = p.shape == PropertyShape::EventBased ? Atom::event(post) : Atom::state(post);
    if (ts.accept_word("WITHIN")) p.permitted_latency_sec = parse_duration_token(ts.get());
    if (ts.accept_word("TAGS")) {
        p.scenario_group = ts.expect_word("a scenario group").text;
        p.capability_group = ts.expect_word("a capability group").text;
    }
    if (!ts.at_end()) ts.fail("unexpected trailing tokens");
    return p;
}

inline std::vector<Property> parse_properties_text(const std::string& text,
                                                   const AttributeTable& attrs) {
    std::vector<Property> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        TokenStream ts(lex_line(line, lineno));
        if (ts.at_end()) continue;
        if (!ts.accept_word("PROP")) ts.fail("expected PROP");
        Property p = parse_property_line(ts, attrs);
        for (const auto& prev : out)
            if (prev.id == p.id)
                throw ParseError(lineno, 1, "duplicate property id '" + p.id + "'");
        out.push_back(std::move(p));
    }
    return out;
}

// PRE <attr> [= <value>] <rank> | POST <attr> [= <value>] <rank>
inline std::pair<PriorityTable, PriorityTable> parse_priority_text(const std::string& text,
                                                                   const AttributeTable& attrs) {
    PriorityTable pre, post;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        TokenStream ts(lex_line(line, lineno));
        if (ts.at_end()) continue;
        bool is_pre = ts.accept_word("PRE");
        if (!is_pre && !ts.accept_word("POST")) ts.fail("expected PRE or POST");
        PriorityEntry e;
        e.attr = parse_attr_ref(ts, attrs);
        if (ts.accept_punct("=")) e.value = parse_value(ts, attrs, e.attr);
        e.rank = parse_int_token(ts.get());
        if (!ts.at_end()) ts.fail("unexpected trailing tokens");
        (is_pre ? pre : post).add(std::move(e));
    }
    return {std::move(pre), std::move(post)};
}

// A property applies to a model when every attribute it references is
// declared compatibly: identical labels for enumerated attributes, value in
// range for numeric ones. Timer atoms resolve against rules, not attributes.
inline bool in_scope(const Property& p, const AttributeTable& model_attrs,
                     const AttributeTable& reference_attrs) {
    auto constraint_ok = [&](const Constraint& c) {
        const AttributeDecl* md = model_attrs.find(c.attr);
        if (!md) return false;
        const AttributeDecl* rd = reference_attrs.find(c.attr);
        if (rd && rd->domain.is_enum())
            return md->domain.is_enum() && md->domain.labels == rd->domain.labels;
        return md->domain.contains(c.value);
    };
    for (const auto& a : p.pre)
        if (a.kind != AtomKind::Timer && !constraint_ok(a.constraint)) return false;
    return constraint_ok(p.post.constraint);
}

inline std::string atom_str(const Atom& a, const AttributeTable& attrs) {
    if (a.kind == AtomKind::Timer)
        return a.rule_id + ".timer " + op_str(a.timer_op) + " " + duration_str(a.timer_sec);
    return constraint_str(a.constraint, attrs);
}

inline std::string print_property(const Property& p, const AttributeTable& attrs) {
    std::string out = "PROP " + p.id + " ";
    out += p.shape == PropertyShape::StateBased ? "STATE" : "EVENT";
    for (std::size_t i = 0; i < p.pre.size(); ++i)
        out += (i == 0 ? " WHEN " : " AND ") + atom_str(p.pre[i], attrs);
    out += " THEN " + constraint_str(p.post.constraint, attrs);
    if (p.permitted_latency_sec) out += " WITHIN " + duration_str(*p.permitted_latency_sec);
    if (!p.scenario_group.empty())
        out += " TAGS " + p.scenario_group + " " + p.capability_group;
    return out;
}

}  // namespace taprepair
