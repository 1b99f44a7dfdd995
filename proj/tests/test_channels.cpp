#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "taprepair/channels.hpp"

using namespace taprepair;

namespace {

Assignment asg(const char* attr, Value v) { return {AttributeId::parse(attr), v}; }

// Independent oracle for the per-tick drift of one rate effect: delta spread
// over the interval, endpoints ordered.
DeltaRange rate_oracle(const EffectSpec& e, int tick) {
    double a = static_cast<double>(e.delta) * tick / e.lo_sec;
    double b = static_cast<double>(e.delta) * tick / e.hi_sec;
    return {std::min(a, b), std::max(a, b)};
}

const AttributeTable& decl_table() {
    static RulesFile f = parse_rules_text(R"(
ATTR heater : {off, on} ACTUATOR
ATTR window : {closed, open} ACTUATOR
ATTR fan : {off, on} ACTUATOR
ATTR humidifier : {off, on} ACTUATOR
ATTR temperature : [0..40] C TARDY 10min
ATTR humidity : [0..100] % TARDY 5min
ATTR co2 : {low, moderate, high} TARDY 5min
)");
    return f.attrs;
}

}  // namespace

TEST_CASE("single-effect per-tick range matches the endpoint oracle") {
    ChannelTable t = builtin_channel_table();
    // heater on: +1 degree per [600..900]s; with a 600 s tick this is the
    // frozen range [2/3, 1].
    DeltaRange r = joint_effect({asg("heater", 1)}, PhysicalChannel::Temperature, t, 600);
    CHECK(r.lo == Catch::Approx(2.0 / 3.0));
    CHECK(r.hi == Catch::Approx(1.0));

    for (const auto& e : t.effects()) {
        if (e.kind != EffectKind::Shift || e.instant()) continue;
        DeltaRange got = joint_effect({e.action}, e.channel, t, 450,
                                      e.condition == EffectCondition::None
                                          ? EffectCondition::OutdoorColder
                                          : e.condition);
        DeltaRange want = rate_oracle(e, 450);
        CHECK(got.lo == Catch::Approx(want.lo));
        CHECK(got.hi == Catch::Approx(want.hi));
    }
}

TEST_CASE("opposed effects sum endpoint-wise") {
    ChannelTable t = builtin_channel_table();
    // heater +[2/3,1] plus window-open drop (outdoor colder) -[1,2/3]
    DeltaRange r = joint_effect({asg("heater", 1), asg("window", 1)},
                                PhysicalChannel::Temperature, t, 600,
                                EffectCondition::OutdoorColder);
    CHECK(r.lo == Catch::Approx(2.0 / 3.0 - 1.0));
    CHECK(r.hi == Catch::Approx(1.0 - 2.0 / 3.0));
}

TEST_CASE("joint effect is additive over disjoint action sets") {
    ChannelTable t = builtin_channel_table();
    const int tick = 300;
    std::vector<Assignment> a = {asg("heater", 1)};
    std::vector<Assignment> b = {asg("window", 1), asg("ac.mode", 1)};
    std::vector<Assignment> ab = {asg("heater", 1), asg("window", 1), asg("ac.mode", 1)};
    for (auto outdoor : {EffectCondition::OutdoorColder, EffectCondition::OutdoorWarmer}) {
        DeltaRange ra = joint_effect(a, PhysicalChannel::Temperature, t, tick, outdoor);
        DeltaRange rb = joint_effect(b, PhysicalChannel::Temperature, t, tick, outdoor);
        DeltaRange rab = joint_effect(ab, PhysicalChannel::Temperature, t, tick, outdoor);
        CHECK(rab.lo == Catch::Approx(ra.lo + rb.lo));
        CHECK(rab.hi == Catch::Approx(ra.hi + rb.hi));
    }
}

TEST_CASE("conditional window effect follows the outdoor relation") {
    ChannelTable t = builtin_channel_table();
    DeltaRange colder = joint_effect({asg("window", 1)}, PhysicalChannel::Temperature, t, 600,
                                     EffectCondition::OutdoorColder);
    DeltaRange warmer = joint_effect({asg("window", 1)}, PhysicalChannel::Temperature, t, 600,
                                     EffectCondition::OutdoorWarmer);
    CHECK(colder.hi < 0);
    CHECK(warmer.lo > 0);
    DeltaRange none = joint_effect({asg("window", 1)}, PhysicalChannel::Temperature, t, 600,
                                   EffectCondition::None);
    CHECK(none == DeltaRange{0, 0});
}

TEST_CASE("built-in table never targets motion or weather and rejects both") {
    ChannelTable t = builtin_channel_table();
    for (const auto& e : t.effects()) {
        CHECK(e.channel != PhysicalChannel::Motion);
        CHECK(e.channel != PhysicalChannel::Weather);
    }
    EffectSpec bad;
    bad.action = asg("fan", 1);
    bad.channel = PhysicalChannel::Motion;
    CHECK_THROWS_AS(t.add(bad), std::invalid_argument);
    bad.channel = PhysicalChannel::Weather;
    CHECK_THROWS_AS(t.add(bad), std::invalid_argument);
}

TEST_CASE("implicit effects of opening and closing a window") {
    ChannelTable t = builtin_channel_table();
    auto open = t.implicit_effects(asg("window", 1));
    // two conditional temperature rows plus smoke, CO, CO2
    CHECK(open.size() == 5);
    std::map<PhysicalChannel, int> per_channel;
    for (const auto& e : open) per_channel[e.channel]++;
    CHECK(per_channel[PhysicalChannel::Temperature] == 2);
    CHECK(per_channel[PhysicalChannel::Smoke] == 1);
    CHECK(per_channel[PhysicalChannel::CO] == 1);
    CHECK(per_channel[PhysicalChannel::CO2] == 1);

    auto close = t.implicit_effects(asg("window", 0));
    REQUIRE(close.size() == 1);
    CHECK(close[0].channel == PhysicalChannel::Sound);
    CHECK(close[0].instant());
    CHECK(close[0].delta == -20);
}

TEST_CASE("instant steps apply on actuation edges only") {
    ChannelTable t = builtin_channel_table();
    CHECK(instant_step(asg("light", 1), PhysicalChannel::Illuminance, t) == 100);
    CHECK(instant_step(asg("light", 0), PhysicalChannel::Illuminance, t) == -100);
    CHECK(instant_step(asg("window", 0), PhysicalChannel::Sound, t) == -20);
    CHECK(instant_step(asg("heater", 1), PhysicalChannel::Temperature, t) == 0);
    // instant rows contribute nothing to drift
    DeltaRange r = joint_effect({asg("light", 1)}, PhysicalChannel::Illuminance, t, 600);
    CHECK(r == DeltaRange{0, 0});
}

TEST_CASE("leveled decay picks the fastest active effect") {
    ChannelTable t = builtin_channel_table();
    const int tick = 300;
    // window alone clears smoke in [20..25] min -> [4..5] ticks
    auto w = level_decay({asg("window", 1)}, PhysicalChannel::Smoke, t, tick);
    REQUIRE(w.has_value());
    CHECK(w->kind == EffectKind::Clear);
    CHECK(w->lo_ticks == 4);
    CHECK(w->hi_ticks == 5);
    // the water valve is faster: [10..15] min -> [2..3] ticks
    auto both = level_decay({asg("window", 1), asg("water_valve", 1)}, PhysicalChannel::Smoke, t,
                            tick);
    REQUIRE(both.has_value());
    CHECK(both->lo_ticks == 2);
    CHECK(both->hi_ticks == 3);
    // nothing active
    CHECK_FALSE(level_decay({asg("heater", 1)}, PhysicalChannel::Smoke, t, tick).has_value());
    // CO2 steps down one level at a time
    auto co2 = level_decay({asg("fan", 1)}, PhysicalChannel::CO2, t, tick);
    REQUIRE(co2.has_value());
    CHECK(co2->kind == EffectKind::DownLevel);
    // intervals never collapse below one tick
    auto coarse = level_decay({asg("fan", 1)}, PhysicalChannel::CO2, t, 3600);
    REQUIRE(coarse.has_value());
    CHECK(coarse->lo_ticks == 1);
    CHECK(coarse->hi_ticks == 1);
}

TEST_CASE("ranges collapse to at most three branch values") {
    CHECK(branch_values(2.0 / 3.0, 1.0) == std::vector<int>{1});
    CHECK(branch_values(-1.0, 1.0) == std::vector<int>{-1, 0, 1});
    CHECK(branch_values(4, 5) == std::vector<int>{4, 5});  // mid 4.5 rounds into 5
    CHECK(branch_values(0, 0) == std::vector<int>{0});
    CHECK(branch_values(-1.0 / 3.0, 1.0 / 3.0) == std::vector<int>{0});
}

TEST_CASE("branch sampling is close to uniform") {
    SplitMix64 rng(7);
    std::vector<int> branches = {-1, 0, 1};
    std::map<int, int> counts;
    const int n = 3000;
    for (int i = 0; i < n; ++i) counts[sample_branch(branches, rng)]++;
    // chi-square against uniform; 2 dof, 99.9% quantile is 13.8
    double chi2 = 0;
    for (int b : branches) {
        double d = counts[b] - n / 3.0;
        chi2 += d * d / (n / 3.0);
    }
    CHECK(chi2 < 13.8);
}

TEST_CASE("EFFECT lines parse into specs") {
    const auto& attrs = decl_table();
    ChannelTable t = parse_channel_table_text(
        "EFFECT heater=on -> temperature +1 PER [10min..15min]\n"
        "EFFECT window=open -> temperature -1 PER [600..900]s IF outdoor_colder\n"
        "EFFECT fan=on -> co2 -1level PER [10min..15min]\n"
        "EFFECT window=open -> smoke clear PER [20min..25min]\n"
        "EFFECT window=closed -> sound -20\n",
        attrs);
    REQUIRE(t.effects().size() == 5);
    CHECK(t.effects()[0].delta == 1);
    CHECK(t.effects()[0].lo_sec == 600);
    CHECK(t.effects()[0].hi_sec == 900);
    CHECK(t.effects()[1].condition == EffectCondition::OutdoorColder);
    CHECK(t.effects()[1].delta == -1);
    CHECK(t.effects()[2].kind == EffectKind::DownLevel);
    CHECK(t.effects()[3].kind == EffectKind::Clear);
    CHECK(t.effects()[4].instant());
    CHECK(t.effects()[4].delta == -20);
}

TEST_CASE("empty effect config falls back to the built-in table") {
    ChannelTable t = parse_channel_table_text("  \n# only comments\n", decl_table());
    CHECK(t.effects().size() == builtin_channel_table().effects().size());
}

TEST_CASE("bad EFFECT lines are rejected with positions") {
    const auto& attrs = decl_table();
    auto bad = [&](const std::string& text, const std::string& needle) {
        try {
            parse_channel_table_text(text, attrs);
            FAIL("expected ParseError for: " << text);
        } catch (const ParseError& e) {
            CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring(needle));
        }
    };
    bad("EFFECT fan=on -> motion +1 PER [10min..15min]\n", "cannot be affected");
    bad("EFFECT fan=on -> weather +1 PER [10min..15min]\n", "cannot be affected");
    bad("EFFECT fan=on -> breeze +1 PER [10min..15min]\n", "unknown channel");
    bad("EFFECT fan=on -> humidity -10 PER [20min..15min]\n", "lo > hi");
    bad("EFFECT fan=on -> co2 -1level\n", "PER interval");
    bad("EFFECT fan=on -> co2 -2level PER [10min..15min]\n", "-1level");
    bad("EFFECT fan=on -> co2 -1 PER [10min..15min]\n", "leveled");
    bad("EFFECT fan=on -> humidity clear PER [10min..15min]\n", "numeric");
    bad("EFFECT fan=on -> humidity -10 PER [15min..20min]\n"
        "EFFECT fan=on -> humidity -5 PER [15min..20min]\n",
        "duplicate effect");
    bad("EFFECT breeze=on -> humidity -10 PER [15min..20min]\n", "undeclared");
}
