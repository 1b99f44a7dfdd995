#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "taprepair/catalog.hpp"
#include "taprepair/npr.hpp"
#include "taprepair/scenario.hpp"

namespace taprepair {

// Benchmark deployments: five rule-interaction cases and two rule-absence
// cases. Each bundles a rule set, an initialization scenario, a platform tick,
// the catalog property it violates, and the interaction pattern expected from
// classification (empty for the absence cases).
struct Fixture {
    std::string name;
    std::string rules_text;
    std::string scenario_text;
    int tick_sec = 300;
    std::string property_id;
    std::string primary_pattern;  // "" when no rule interaction is involved
};

inline const std::vector<Fixture>& benchmark_fixtures() {
    static const std::vector<Fixture> cases = {
        {"G1",
         R"(
ATTR presence : {not_present, present} TARDY 10s
ATTR temperature : [0..40] C TARDY 10min
ATTR heater : {off, on} ACTUATOR
ATTR window : {closed, open} ACTUATOR
RULE r3: IF temperature < 16 THEN heater = on
RULE r4: IF temperature > 24 THEN heater = off
RULE r5: IF temperature > 20 THEN window = open
)",
         "INIT heater = off\nINIT window = closed\nOUTDOOR 5\n", 600, "P.22", "V4"},
        {"G2",
         R"(
ATTR presence : {not_present, present} TARDY 10s
ATTR ac.mode : {off, cool, heat} ACTUATOR
RULE r1: IF presence = present AFTER 10min THEN ac.mode = cool
RULE r2: IF presence = present THEN ac.mode = off
)",
         "INIT ac.mode = off\n", 300, "P.17", "V5"},
        {"G3",
         R"(
ATTR presence : {not_present, present} TARDY 10s
ATTR blanket : {off, on} ACTUATOR
RULE r1: IF presence = present AFTER 10min THEN blanket = on
RULE r2: IF presence = not_present THEN blanket = off
)",
         "INIT blanket = off\n", 300, "P.26", "V6"},
        {"G4",
         R"(
ATTR presence : {not_present, present} TARDY 10s
ATTR co2 : {low, moderate, high} TARDY 5min
ATTR humidity : [0..100] % TARDY 5min
ATTR fan : {off, on} ACTUATOR
RULE r1: IF co2 = high THEN fan = on FOR 15min
RULE r2: IF humidity > 80 THEN fan = on FOR 10min
RULE r3: IF presence = present THEN fan = on FOR 5min
)",
         "INIT fan = off\nINIT humidity = 78\nINIT co2 = low\nPIN presence = present\n", 300,
         "P.34", "V7"},
        {"G5",
         R"(
ATTR presence : {not_present, present} TARDY 10s
ATTR temperature : [0..40] C TARDY 10min
ATTR heater : {off, on} ACTUATOR
ATTR window : {closed, open} ACTUATOR
RULE r1: IF temperature < 18 WHILE presence = present THEN heater = on
RULE r2: IF temperature < 25 AFTER 20min WHILE presence = present AND window = closed THEN heater = off
RULE r3: IF temperature > 27 THEN window = open
RULE r4: IF temperature < 16 THEN window = closed
)",
         "INIT heater = off\nINIT window = closed\nOUTDOOR 5\n", 600, "P.20", "V8"},
        {"NA1",
         R"(
ATTR smoke : {none, detected} TARDY 10s
ATTR alarm : {off, on} ACTUATOR
)",
         "INIT alarm = off\nINIT smoke = none\n", 60, "P.28", ""},
        {"NA2",
         R"(
ATTR ac.mode : {off, cool, heat} ACTUATOR
ATTR heater : {off, on} ACTUATOR
)",
         "INIT ac.mode = off\nINIT heater = off\nMANUAL ac.mode\nMANUAL heater\n", 60, "P.21",
         ""},
    };
    return cases;
}

inline const Fixture& fixture_by_name(const std::string& name) {
    for (const auto& f : benchmark_fixtures())
        if (f.name == name) return f;
    throw std::invalid_argument("no fixture named " + name);
}

inline const Property& catalog_property(const std::string& id) {
    for (const auto& p : load_catalog())
        if (p.id == id) return p;
    throw std::invalid_argument("no catalog property " + id);
}

inline NprEngine fixture_engine(const Fixture& f, NprOptions opt = {}) {
    RulesFile rf = parse_rules_text(f.rules_text);
    Scenario sc = parse_scenario_text(f.scenario_text, rf.attrs);
    ModelOptions mopt;
    mopt.tick_sec = f.tick_sec;
    return NprEngine(rf.attrs, rf.rules, sc, builtin_channel_table(), mopt, load_catalog(),
                     opt);
}

inline RepairOutcome run_fixture(const Fixture& f, NprOptions opt = {}) {
    return fixture_engine(f, opt).repair(catalog_property(f.property_id));
}

}  // namespace taprepair
