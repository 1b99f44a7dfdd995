#pragma once

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "taprepair/dsl.hpp"

namespace taprepair {

// A scenario narrows the exploration: INIT fixes an attribute's starting
// value, PIN additionally exempts it from environmental change, OUTDOOR sets
// the outdoor temperature (for window heat exchange), and MANUAL marks a
// device attribute as user-operable (it may flip spontaneously).
// Attributes without INIT/PIN start in every domain value.
struct Scenario {
    std::map<AttributeId, Value> init;
    std::map<AttributeId, Value> pins;
    std::optional<int> outdoor_temp;
    std::set<AttributeId> manual;

    std::optional<Value> initial_value(const AttributeId& id) const {
        auto p = pins.find(id);
        if (p != pins.end()) return p->second;
        auto i = init.find(id);
        if (i != init.end()) return i->second;
        return std::nullopt;
    }
    bool pinned(const AttributeId& id) const { return pins.count(id) > 0; }
};

// INIT <attr> = <value> | PIN <attr> = <value> | OUTDOOR <int> | MANUAL <attr>
inline Scenario parse_scenario_text(const std::string& text, const AttributeTable& attrs) {
    Scenario sc;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        TokenStream ts(lex_line(line, lineno));
        if (ts.at_end()) continue;
        if (ts.accept_word("INIT") ) {
            Token nameTok = ts.peek();
            AttributeId id = parse_attr_ref(ts, attrs);
            if (!ts.accept_punct("=") && !ts.accept_punct("=="))
                ts.fail("expected '='");
            Value v = parse_value(ts, attrs, id);
            if (sc.init.count(id) || sc.pins.count(id))
                throw ParseError(nameTok.line, nameTok.col,
                                 "attribute " + id.str() + " already initialized");
            sc.init[id] = v;
        } else if (ts.accept_word("PIN")) {
            Token nameTok = ts.peek();
            AttributeId id = parse_attr_ref(ts, attrs);
            if (!ts.accept_punct("=") && !ts.accept_punct("=="))
                ts.fail("expected '='");
            Value v = parse_value(ts, attrs, id);
            if (sc.init.count(id) || sc.pins.count(id))
                throw ParseError(nameTok.line, nameTok.col,
                                 "attribute " + id.str() + " already initialized");
            sc.pins[id] = v;
        } else if (ts.accept_word("OUTDOOR")) {
            sc.outdoor_temp = parse_int_token(ts.get());
        } else if (ts.accept_word("MANUAL")) {
            Token nameTok = ts.peek();
            AttributeId id = parse_attr_ref(ts, attrs);
            if (!attrs.at(id).actuator)
                throw ParseError(nameTok.line, nameTok.col,
                                 "MANUAL applies to actuator attributes only");
            sc.manual.insert(id);
        } else {
            ts.fail("expected INIT, PIN, OUTDOOR, or MANUAL");
        }
        if (!ts.at_end()) ts.fail("unexpected trailing tokens");
    }
    return sc;
}

inline Scenario parse_scenario_file(const std::string& path, const AttributeTable& attrs) {
    return parse_scenario_text(read_file_or_throw(path), attrs);
}

}  // namespace taprepair
