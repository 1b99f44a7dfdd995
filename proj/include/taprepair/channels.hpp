#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "taprepair/dsl.hpp"
#include "taprepair/rules.hpp"
#include "taprepair/util.hpp"

namespace taprepair {

// The nine physical channels shared by all co-located devices and sensors.
// Motion and weather change only by themselves, never through a device.
enum class PhysicalChannel {
    Temperature,
    Humidity,
    Illuminance,
    Sound,
    Smoke,
    CO,
    CO2,
    Motion,
    Weather,
};

inline const char* channel_name(PhysicalChannel c) {
    switch (c) {
        case PhysicalChannel::Temperature: return "temperature";
        case PhysicalChannel::Humidity: return "humidity";
        case PhysicalChannel::Illuminance: return "illuminance";
        case PhysicalChannel::Sound: return "sound";
        case PhysicalChannel::Smoke: return "smoke";
        case PhysicalChannel::CO: return "co";
        case PhysicalChannel::CO2: return "co2";
        case PhysicalChannel::Motion: return "motion";
        case PhysicalChannel::Weather: return "weather";
    }
    return "?";
}

inline std::optional<PhysicalChannel> channel_from_name(const std::string& s) {
    if (s == "temperature") return PhysicalChannel::Temperature;
    if (s == "humidity") return PhysicalChannel::Humidity;
    if (s == "illuminance") return PhysicalChannel::Illuminance;
    if (s == "sound") return PhysicalChannel::Sound;
    if (s == "smoke") return PhysicalChannel::Smoke;
    if (s == "co") return PhysicalChannel::CO;
    if (s == "co2") return PhysicalChannel::CO2;
    if (s == "motion" || s == "presence") return PhysicalChannel::Motion;
    if (s == "weather") return PhysicalChannel::Weather;
    return std::nullopt;
}

// Smoke/CO/CO2 hold discrete hazard levels that decay stepwise; the rest are
// numeric quantities that drift at a rate.
inline bool channel_is_leveled(PhysicalChannel c) {
    return c == PhysicalChannel::Smoke || c == PhysicalChannel::CO || c == PhysicalChannel::CO2;
}

inline bool channel_actuatable(PhysicalChannel c) {
    return c != PhysicalChannel::Motion && c != PhysicalChannel::Weather;
}

// Some effects only apply under an outdoor/indoor relation (an open window
// warms the room only when it is warmer outside).
enum class EffectCondition { None, OutdoorColder, OutdoorWarmer };

enum class EffectKind {
    Shift,      // numeric channel moves by delta per interval ([0..0] = instant step)
    Clear,      // leveled channel resets to its lowest level after the interval
    DownLevel,  // leveled channel drops one level per interval
};

// One row of the device-effect table: while the device attribute holds the
// given value, the channel changes as described.
struct EffectSpec {
    Assignment action;
    PhysicalChannel channel = PhysicalChannel::Temperature;
    EffectKind kind = EffectKind::Shift;
    int delta = 0;  // Shift only, signed
    int lo_sec = 0;
    int hi_sec = 0;
    EffectCondition condition = EffectCondition::None;

    bool instant() const { return kind == EffectKind::Shift && lo_sec == 0 && hi_sec == 0; }
};

class ChannelTable {
public:
    void add(const EffectSpec& e) {
        if (!channel_actuatable(e.channel))
            throw std::invalid_argument(std::string("channel '") + channel_name(e.channel) +
                                        "' cannot be affected by a device");
        if (e.lo_sec > e.hi_sec || e.lo_sec < 0)
            throw std::invalid_argument("bad effect interval");
        if (channel_is_leveled(e.channel) && e.kind == EffectKind::Shift)
            throw std::invalid_argument(std::string("channel '") + channel_name(e.channel) +
                                        "' is leveled; use clear or -1level");
        if (!channel_is_leveled(e.channel) && e.kind != EffectKind::Shift)
            throw std::invalid_argument(std::string("channel '") + channel_name(e.channel) +
                                        "' is numeric; use a signed delta");
        for (const auto& prev : effects_)
            if (prev.action == e.action && prev.channel == e.channel &&
                prev.condition == e.condition)
                throw std::invalid_argument("duplicate effect for " + e.action.attr.str() +
                                            " on " + channel_name(e.channel));
        effects_.push_back(e);
    }

    const std::vector<EffectSpec>& effects() const { return effects_; }

    // Every channel effect (explicit and implicit) of holding one device state.
    std::vector<EffectSpec> implicit_effects(const Assignment& action) const {
        std::vector<EffectSpec> out;
        for (const auto& e : effects_)
            if (e.action == action) out.push_back(e);
        return out;
    }

    bool touches(PhysicalChannel ch) const {
        for (const auto& e : effects_)
            if (e.channel == ch) return true;
        return false;
    }

private:
    std::vector<EffectSpec> effects_;
};

// Per-tick drift range of a numeric channel. Endpoints add across effects.
struct DeltaRange {
    double lo = 0;
    double hi = 0;
    bool operator==(const DeltaRange& o) const { return lo == o.lo && hi == o.hi; }
};

namespace detail {
inline bool effect_active(const EffectSpec& e, const std::vector<Assignment>& states,
                          EffectCondition outdoor) {
    bool held = false;
    for (const auto& s : states) held = held || s == e.action;
    if (!held) return false;
    return e.condition == EffectCondition::None || e.condition == outdoor;
}
}  // namespace detail

// Summed per-tick drift of all active rate effects on a numeric channel.
// Instant ([0..0]) effects are step changes, not rates, and are excluded.
inline DeltaRange joint_effect(const std::vector<Assignment>& active_states, PhysicalChannel ch,
                               const ChannelTable& table, int tick_sec,
                               EffectCondition outdoor = EffectCondition::None) {
    if (channel_is_leveled(ch))
        throw std::invalid_argument("joint_effect applies to numeric channels only");
    DeltaRange r;
    for (const auto& e : table.effects()) {
        if (e.channel != ch || e.instant()) continue;
        if (!detail::effect_active(e, active_states, outdoor)) continue;
        double fast = static_cast<double>(e.delta) * tick_sec / e.lo_sec;
        double slow = static_cast<double>(e.delta) * tick_sec / e.hi_sec;
        r.lo += std::min(fast, slow);
        r.hi += std::max(fast, slow);
    }
    return r;
}

// Instant numeric steps fired by a device entering a state.
inline int instant_step(const Assignment& entered, PhysicalChannel ch, const ChannelTable& table,
                        EffectCondition outdoor = EffectCondition::None) {
    int sum = 0;
    for (const auto& e : table.effects())
        if (e.channel == ch && e.instant() &&
            detail::effect_active(e, {entered}, outdoor) && e.action == entered)
            sum += e.delta;
    return sum;
}

// Decay behavior of a leveled channel under the active device states: the
// fastest active clearing/step-down effect wins. Interval is converted to
// whole ticks (at least one).
struct LevelDecay {
    EffectKind kind = EffectKind::Clear;  // Clear or DownLevel
    int lo_ticks = 1;
    int hi_ticks = 1;
};

inline std::optional<LevelDecay> level_decay(const std::vector<Assignment>& active_states,
                                             PhysicalChannel ch, const ChannelTable& table,
                                             int tick_sec,
                                             EffectCondition outdoor = EffectCondition::None) {
    if (!channel_is_leveled(ch))
        throw std::invalid_argument("level_decay applies to leveled channels only");
    std::optional<LevelDecay> best;
    int best_lo_sec = 0;
    for (const auto& e : table.effects()) {
        if (e.channel != ch) continue;
        if (!detail::effect_active(e, active_states, outdoor)) continue;
        if (!best || e.lo_sec < best_lo_sec ||
            (e.lo_sec == best_lo_sec && e.kind == EffectKind::Clear)) {
            LevelDecay d;
            d.kind = e.kind;
            d.lo_ticks = std::max(1, static_cast<int>(std::llround(
                                         static_cast<double>(e.lo_sec) / tick_sec)));
            d.hi_ticks = std::max(d.lo_ticks, static_cast<int>(std::llround(
                                                  static_cast<double>(e.hi_sec) / tick_sec)));
            best = d;
            best_lo_sec = e.lo_sec;
        }
    }
    return best;
}

// Nondeterministic ranges collapse to three branches: both endpoints and the
// midpoint. Duplicates are dropped.
inline std::vector<int> branch_values(double lo, double hi) {
    std::vector<int> out;
    auto push = [&](double v) {
        int iv = static_cast<int>(std::llround(v));
        for (int x : out)
            if (x == iv) return;
        out.push_back(iv);
    };
    push(lo);
    push((lo + hi) / 2);
    push(hi);
    std::sort(out.begin(), out.end());
    return out;
}

inline int sample_branch(const std::vector<int>& branches, SplitMix64& rng) {
    if (branches.empty()) return 0;
    return branches[rng.below(branches.size())];
}

// Built-in effect table. Rows: heaters and AC/thermostat modes move
// temperature 1 degree per 10-15 or 15-20 min; sprinkler/humidifier raise
// humidity 10 points per 10-15 min while fan/dehumidifier drop 10 per
// 15-20 min; a water valve or open window clears smoke; a fan or open window
// clears CO and steps CO2 down a level; closing the window cuts 20 db of
// sound instantly; lights step illuminance by 100 lux instantly. An open
// window moves temperature toward the outdoor side.
inline ChannelTable builtin_channel_table() {
    ChannelTable t;
    auto A = [](const char* attr, const char* cap, Value v) {
        return Assignment{AttributeId{attr, cap}, v};
    };
    // enum value conventions: {off,on} 0/1; {closed,open} 0/1; ac/thermostat
    // mode {off,cool,heat} 0/1/2
    const int kMin = 60;
    auto rate = [&](Assignment a, PhysicalChannel ch, int delta, int lo_min, int hi_min,
                    EffectCondition cond = EffectCondition::None) {
        EffectSpec e;
        e.action = a;
        e.channel = ch;
        e.kind = EffectKind::Shift;
        e.delta = delta;
        e.lo_sec = lo_min * kMin;
        e.hi_sec = hi_min * kMin;
        e.condition = cond;
        t.add(e);
    };
    auto level = [&](Assignment a, PhysicalChannel ch, EffectKind kind, int lo_min, int hi_min) {
        EffectSpec e;
        e.action = a;
        e.channel = ch;
        e.kind = kind;
        e.lo_sec = lo_min * kMin;
        e.hi_sec = hi_min * kMin;
        t.add(e);
    };
    auto step = [&](Assignment a, PhysicalChannel ch, int delta) {
        EffectSpec e;
        e.action = a;
        e.channel = ch;
        e.kind = EffectKind::Shift;
        e.delta = delta;
        t.add(e);
    };

    rate(A("ac", "mode", 2), PhysicalChannel::Temperature, +1, 10, 15);
    rate(A("ac", "mode", 1), PhysicalChannel::Temperature, -1, 10, 15);
    rate(A("thermostat", "mode", 2), PhysicalChannel::Temperature, +1, 15, 20);
    rate(A("thermostat", "mode", 1), PhysicalChannel::Temperature, -1, 15, 20);
    rate(A("heater", "value", 1), PhysicalChannel::Temperature, +1, 10, 15);
    rate(A("blanket", "value", 1), PhysicalChannel::Temperature, +1, 10, 15);
    rate(A("window", "value", 1), PhysicalChannel::Temperature, +1, 10, 15,
         EffectCondition::OutdoorWarmer);
    rate(A("window", "value", 1), PhysicalChannel::Temperature, -1, 10, 15,
         EffectCondition::OutdoorColder);

    rate(A("sprinkler", "value", 1), PhysicalChannel::Humidity, +10, 10, 15);
    rate(A("fan", "value", 1), PhysicalChannel::Humidity, -10, 15, 20);
    rate(A("humidifier", "value", 1), PhysicalChannel::Humidity, +10, 10, 15);
    rate(A("dehumidifier", "value", 1), PhysicalChannel::Humidity, -10, 15, 20);

    level(A("water_valve", "value", 1), PhysicalChannel::Smoke, EffectKind::Clear, 10, 15);
    level(A("window", "value", 1), PhysicalChannel::Smoke, EffectKind::Clear, 20, 25);

    level(A("fan", "value", 1), PhysicalChannel::CO, EffectKind::Clear, 15, 20);
    level(A("window", "value", 1), PhysicalChannel::CO, EffectKind::Clear, 15, 20);

    level(A("fan", "value", 1), PhysicalChannel::CO2, EffectKind::DownLevel, 10, 15);
    level(A("window", "value", 1), PhysicalChannel::CO2, EffectKind::DownLevel, 10, 15);

    step(A("window", "value", 0), PhysicalChannel::Sound, -20);
    step(A("light", "value", 1), PhysicalChannel::Illuminance, +100);
    step(A("light", "value", 0), PhysicalChannel::Illuminance, -100);
    return t;
}

// EFFECT <attr>=<value> -> <channel> <delta> PER [<lo>..<hi>]s [IF <predicate>]
// where <delta> is a signed number, "clear", or "-1level"; PER is omitted for
// instant effects. Values are parsed against the declared attribute domain.
inline EffectSpec parse_effect_line(TokenStream& ts, const AttributeTable& attrs) {
    EffectSpec e;
    Token nameTok = ts.peek();
    AttributeId id = parse_attr_ref(ts, attrs);
    if (!ts.accept_punct("=") && !ts.accept_punct("=="))
        ts.fail("expected '=' after the device attribute");
    e.action = {id, parse_value(ts, attrs, id)};
    ts.expect_punct("->");
    Token chTok = ts.expect_word("a channel name");
    auto ch = channel_from_name(chTok.text);
    if (!ch) throw ParseError(chTok.line, chTok.col, "unknown channel '" + chTok.text + "'");
    if (!channel_actuatable(*ch))
        throw ParseError(chTok.line, chTok.col,
                         "channel '" + chTok.text + "' cannot be affected by a device");
    e.channel = *ch;

    if (ts.accept_word("clear")) {
        e.kind = EffectKind::Clear;
    } else {
        int sign = 1;
        if (ts.accept_punct("-")) sign = -1;
        else ts.accept_punct("+");
        Token num = ts.peek();
        if (num.kind != Token::Kind::Number)
            throw ParseError(num.line, num.col, "expected a delta, 'clear', or '-1level'");
        ts.get();
        std::string text = num.text;
        bool neg = !text.empty() && text[0] == '-';
        if (neg) {
            sign = -sign;
            text = text.substr(1);
        }
        std::size_t i = 0;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
        std::string digits = text.substr(0, i), suffix = text.substr(i);
        if (digits.empty()) throw ParseError(num.line, num.col, "expected a numeric delta");
        if (suffix == "level") {
            if (sign > 0 || digits != "1")
                throw ParseError(num.line, num.col, "leveled deltas must be '-1level'");
            e.kind = EffectKind::DownLevel;
        } else if (suffix.empty()) {
            e.kind = EffectKind::Shift;
            e.delta = sign * std::stoi(digits);
        } else {
            throw ParseError(num.line, num.col, "bad delta suffix '" + suffix + "'");
        }
    }

    if (ts.accept_word("PER")) {
        ts.expect_punct("[");
        Token loTok = ts.get();
        int lo = parse_duration_token(loTok);
        ts.expect_punct("..");
        Token hiTok = ts.get();
        int hi = parse_duration_token(hiTok);
        ts.expect_punct("]");
        if (ts.peek().kind == Token::Kind::Word &&
            (ts.peek().text == "s" || ts.peek().text == "min" || ts.peek().text == "h")) {
            std::string unit = ts.get().text;
            int mult = unit == "s" ? 1 : unit == "min" ? 60 : 3600;
            lo *= mult;
            hi *= mult;
        }
        if (lo > hi) throw ParseError(loTok.line, loTok.col, "effect interval has lo > hi");
        e.lo_sec = lo;
        e.hi_sec = hi;
    }

    if (ts.accept_word("IF")) {
        Token pred = ts.expect_word("a predicate");
        if (pred.text == "outdoor_colder") e.condition = EffectCondition::OutdoorColder;
        else if (pred.text == "outdoor_warmer") e.condition = EffectCondition::OutdoorWarmer;
        else throw ParseError(pred.line, pred.col, "unknown predicate '" + pred.text + "'");
    }
    if (!ts.at_end()) ts.fail("unexpected trailing tokens");

    if (e.kind != EffectKind::Shift && e.lo_sec == 0 && e.hi_sec == 0)
        throw ParseError(nameTok.line, nameTok.col, "leveled effects need a PER interval");
    return e;
}

// Parses EFFECT lines against declared attributes; any other line is an
// error. An empty text yields the built-in table.
inline ChannelTable parse_channel_table_text(const std::string& text,
                                             const AttributeTable& attrs) {
    ChannelTable t;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool any = false;
    while (std::getline(in, line)) {
        ++lineno;
        TokenStream ts(lex_line(line, lineno));
        if (ts.at_end()) continue;
        if (!ts.accept_word("EFFECT")) ts.fail("expected EFFECT");
        try {
            t.add(parse_effect_line(ts, attrs));
        } catch (const std::invalid_argument& e) {
            throw ParseError(lineno, 1, e.what());
        }
        any = true;
    }
    if (!any) return builtin_channel_table();
    return t;
}

}  // namespace taprepair
