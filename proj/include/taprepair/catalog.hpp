#pragma once

#include <string>
#include <vector>

#include "taprepair/properties.hpp"

namespace taprepair {

// Canonical declarations for every device and sensor the built-in property
// catalog mentions. Models that want catalog coverage should declare these
// names with these domains; in_scope() filters the rest out.
inline const char* catalog_attribute_text() {
    return R"(
ATTR presence : {not_present, present} TARDY 10s
ATTR temperature : [0..40] C TARDY 10min
ATTR humidity : [0..100] % TARDY 5min
ATTR soil : [0..100] % TARDY 10min
ATTR co2 : {low, moderate, high} TARDY 5min
ATTR co : {none, detected} TARDY 10s
ATTR smoke : {none, detected} TARDY 10s
ATTR weather : {clear, raining} TARDY 1min
ATTR light : {off, on} ACTUATOR
ATTR garage : {closed, open} ACTUATOR
ATTR door.lock : {unlocked, locked} ACTUATOR
ATTR door.state : {closed, open}
ATTR camera : {off, on} ACTUATOR
ATTR camera.capture : {off, on} ACTUATOR
ATTR plug : {off, on} ACTUATOR
ATTR ac.mode : {off, cool, heat} ACTUATOR
ATTR heater : {off, on} ACTUATOR
ATTR coffee : {off, on} ACTUATOR
ATTR blanket : {off, on} ACTUATOR
ATTR alarm : {off, on} ACTUATOR
ATTR fan : {off, on} ACTUATOR
ATTR oven : {off, on} ACTUATOR
ATTR gas_water_heater : {off, on} ACTUATOR
ATTR gas_valve : {off, on} ACTUATOR
ATTR water_valve : {off, on} ACTUATOR
ATTR sprinkler : {off, on} ACTUATOR
ATTR window : {closed, open} ACTUATOR
)";
}

inline const AttributeTable& catalog_attributes() {
    static const RulesFile f = parse_rules_text(catalog_attribute_text());
    return f.attrs;
}

// The built-in correctness catalog. Numeric thresholds default to: cold
// below 16, hot above 24, humid above 80, dry soil below 30. The two
// minimum-runtime properties default to 10 minutes of permitted latency.
// Tags: scenario group first, device-capability group second.
inline const char* catalog_property_text() {
    return R"(
PROP P.1 EVENT WHEN presence = present THEN light = on TAGS G1 G8
PROP P.2 EVENT WHEN presence = not_present THEN light = off TAGS G2 G8
PROP P.3 STATE WHEN presence = not_present THEN light = off TAGS G2 G8
PROP P.4 EVENT WHEN presence = present THEN garage = open TAGS G1 G9
PROP P.5 EVENT WHEN presence = not_present THEN garage = closed TAGS G2 G9
PROP P.6 STATE WHEN presence = not_present THEN garage = closed TAGS G2 G9
PROP P.7 EVENT WHEN presence = not_present THEN door.lock = locked TAGS G2 G9
PROP P.8 STATE WHEN presence = not_present THEN door.lock = locked TAGS G2 G9
PROP P.9 EVENT WHEN presence = not_present THEN camera = on TAGS G2 G10
PROP P.10 STATE WHEN presence = not_present THEN camera = on TAGS G2 G10
PROP P.11 EVENT WHEN door.state = open AND presence = not_present THEN camera.capture = on TAGS G2 G10
PROP P.12 EVENT WHEN presence = not_present THEN plug = off TAGS G2 G11
PROP P.13 STATE WHEN presence = not_present THEN plug = off TAGS G2 G11
PROP P.14 EVENT WHEN temperature < 16 AND presence = present THEN ac.mode = heat TAGS G3 G12
PROP P.15 EVENT WHEN temperature > 24 THEN ac.mode = cool TAGS G3 G12
PROP P.16 STATE WHEN heater = on THEN ac.mode = off TAGS G3 G12
PROP P.17 EVENT WHEN presence = not_present THEN ac.mode = off TAGS G2 G12
PROP P.18 STATE WHEN presence = not_present THEN ac.mode = off TAGS G2 G12
PROP P.19 EVENT WHEN temperature < 16 AND presence = present THEN heater = on TAGS G3 G13
PROP P.20 EVENT WHEN temperature > 24 THEN heater = off TAGS G3 G13
PROP P.21 STATE WHEN ac.mode != off THEN heater = off TAGS G3 G13
PROP P.22 EVENT WHEN presence = not_present THEN heater = off TAGS G2 G13
PROP P.23 STATE WHEN presence = not_present THEN heater = off TAGS G2 G13
PROP P.24 EVENT WHEN presence = not_present THEN coffee = off TAGS G2 G14
PROP P.25 STATE WHEN presence = not_present THEN coffee = off TAGS G2 G14
PROP P.26 EVENT WHEN presence = not_present THEN blanket = off TAGS G2 G15
PROP P.27 STATE WHEN presence = not_present THEN blanket = off TAGS G2 G15
PROP P.28 EVENT WHEN smoke = detected THEN alarm = on TAGS G4 G16
PROP P.29 STATE WHEN smoke = detected THEN alarm = on TAGS G4 G16
PROP P.30 EVENT WHEN co = detected THEN alarm = on TAGS G5 G16
PROP P.31 STATE WHEN co = detected THEN alarm = on TAGS G5 G16
PROP P.32 EVENT WHEN humidity > 80 THEN fan = on TAGS G6 G17
PROP P.33 EVENT WHEN co2 = high THEN fan = on TAGS G4 G17
PROP P.34 STATE WHEN co2 = high THEN fan = on WITHIN 10min TAGS G4 G17
PROP P.35 EVENT WHEN presence = not_present THEN oven = off TAGS G2 G18
PROP P.36 STATE WHEN presence = not_present THEN oven = off TAGS G2 G18
PROP P.37 EVENT WHEN co = detected THEN gas_water_heater = off TAGS G5 G19
PROP P.38 STATE WHEN co = detected THEN gas_water_heater = off TAGS G5 G19
PROP P.39 EVENT WHEN co = detected THEN gas_valve = off TAGS G5 G20
PROP P.40 STATE WHEN co = detected THEN gas_valve = off TAGS G5 G20
PROP P.41 EVENT WHEN smoke = detected THEN water_valve = on TAGS G4 G20
PROP P.42 STATE WHEN smoke = detected THEN water_valve = on TAGS G4 G20
PROP P.43 EVENT WHEN soil < 30 THEN sprinkler = on TAGS G6 G21
PROP P.44 STATE WHEN soil < 30 THEN sprinkler = on WITHIN 10min TAGS G6 G21
PROP P.45 EVENT WHEN weather = raining THEN sprinkler = off TAGS G7 G21
PROP P.46 STATE WHEN weather = raining THEN sprinkler = off TAGS G7 G21
PROP P.47 EVENT WHEN co2 = high THEN window = open TAGS G5 G22
PROP P.48 EVENT WHEN weather = raining THEN window = closed TAGS G7 G22
PROP P.49 STATE WHEN weather = raining THEN window = closed TAGS G7 G22
PROP P.50 EVENT WHEN smoke = detected THEN window = open TAGS G4 G23
PROP P.51 STATE WHEN smoke = detected THEN window = open TAGS G4 G23
PROP P.52 EVENT WHEN co = detected THEN window = open TAGS G5 G23
PROP P.53 STATE WHEN co = detected THEN window = open TAGS G5 G23
)";
}

inline const std::vector<Property>& load_catalog() {
    static const std::vector<Property> props =
        parse_properties_text(catalog_property_text(), catalog_attributes());
    return props;
}

// Default priority data. Preconditions: an away user ranks above hazard
// detection, then a present user, rain, air quality and humidity; in the
// temperature scenario a running heater or AC outranks threshold crossings.
// Postconditions: per capability, the safe resting state ranks first; pairs
// documented as equal share a rank.
inline const char* default_priority_text() {
    return R"(
PRE presence = not_present 0
PRE smoke = detected 1
PRE co = detected 1
PRE presence = present 2
PRE weather = raining 3
PRE co2 4
PRE humidity 4
PRE heater = on 5
PRE ac.mode 5
PRE temperature 6

POST light 0
POST door.lock = locked 0
POST door.lock = unlocked 1
POST camera = on 0
POST camera = off 1
POST plug = off 0
POST plug = on 1
POST ac.mode = heat 0
POST ac.mode = cool 0
POST heater = off 0
POST heater = on 1
POST coffee = off 0
POST coffee = on 1
POST blanket = off 0
POST blanket = on 1
POST alarm = on 0
POST alarm = off 1
POST fan = off 0
POST fan = on 1
POST oven = off 0
POST oven = on 1
POST gas_water_heater = off 0
POST gas_water_heater = on 1
POST gas_valve = off 0
POST gas_valve = on 1
POST water_valve = on 0
POST water_valve = off 1
POST sprinkler 0
POST window 0
)";
}

inline const std::pair<PriorityTable, PriorityTable>& default_priorities() {
    static const std::pair<PriorityTable, PriorityTable> tables =
        parse_priority_text(default_priority_text(), catalog_attributes());
    return tables;
}

}  // namespace taprepair
