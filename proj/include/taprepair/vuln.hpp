#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "taprepair/checker.hpp"
#include "taprepair/model.hpp"

namespace taprepair {

struct VulnPattern {
    int tag = 0;  // 1..8
    std::string actor;
    std::string victim;
    AttributeId attr;  // shared attribute (or conflicted device attribute)

    std::string str() const {
        return "V" + std::to_string(tag) + "(" + actor + "," + victim + "," + attr.str() + ")";
    }
    bool operator==(const VulnPattern& o) const {
        return tag == o.tag && actor == o.actor && victim == o.victim && attr == o.attr;
    }
};

namespace detail {

// Attributes a rule's execution can move: directly assigned ones plus channel
// attributes physically affected by the assigned device states.
inline std::vector<AttributeId> influence_set(const CompiledRule& r, const Model& m) {
    std::vector<AttributeId> out;
    auto add = [&](const AttributeId& id) {
        if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
    };
    auto add_assign = [&](const Assignment& a) {
        add(a.attr);
        for (const auto& e : m.channels().effects()) {
            if (!(e.action == a)) continue;
            AttributeId ch = AttributeId::parse(channel_name(e.channel));
            if (m.relevant(ch)) add(ch);
        }
    };
    for (const auto& a : r.rule.action.assigns) add_assign(a);
    for (const auto& a : r.completion) add_assign(a);
    return out;
}

// Context attributes a rule reads late: explicit conditions, the release
// guard, and the trigger of a delayed rule (its scheduling outlives the
// event).
inline std::vector<AttributeId> condition_set(const CompiledRule& r) {
    std::vector<AttributeId> out;
    for (const auto& c : r.rule.conditions) out.push_back(c.attr);
    if (r.rule.action.until) out.push_back(r.rule.action.until->attr);
    if (r.delay_ticks > 0) out.push_back(r.rule.trigger.attr);
    return out;
}

inline bool co_satisfiable(const Constraint& a, const Constraint& b, const Domain& dom) {
    if (!(a.attr == b.attr)) return false;
    for (Value v = dom.is_enum() ? 0 : dom.lo;
         v <= (dom.is_enum() ? static_cast<Value>(dom.labels.size()) - 1 : dom.hi); ++v)
        if (a.holds(v) && b.holds(v)) return true;
    return false;
}

// Conflicting commands: the two rules drive some common device attribute to
// different values. The interrupted side counts only its held assignments.
inline std::optional<AttributeId> action_conflict(const CompiledRule& actor,
                                                  const CompiledRule& victim,
                                                  bool victim_holds_only = false) {
    auto actor_assigns = actor.rule.action.assigns;
    actor_assigns.insert(actor_assigns.end(), actor.completion.begin(), actor.completion.end());
    auto victim_assigns = victim.rule.action.assigns;
    if (!victim_holds_only)
        victim_assigns.insert(victim_assigns.end(), victim.completion.begin(),
                              victim.completion.end());
    for (const auto& x : actor_assigns)
        for (const auto& y : victim_assigns)
            if (x.attr == y.attr && x.value != y.value) return x.attr;
    return std::nullopt;
}

}  // namespace detail

// Structural interference tests over ordered rule pairs where at least one
// rule acted on the counterexample path. Tags are reported most specific
// first (descending), one evidence pair per tag.
inline std::vector<VulnPattern> classify_pattern(const Counterexample& cex, const Model& m) {
    std::set<std::string> acted;
    for (const auto& l : cex.labels)
        if (l.kind == EdgeKind::RuleFire || l.kind == EdgeKind::ActionComplete)
            acted.insert(l.subject);

    std::vector<VulnPattern> found;
    auto emit = [&](int tag, const CompiledRule& ri, const CompiledRule& rj,
                    const AttributeId& attr) {
        for (const auto& f : found)
            if (f.tag == tag) return;  // first evidence per tag
        found.push_back({tag, ri.rule.id, rj.rule.id, attr});
    };

    const auto& rules = m.rules();
    for (const auto& ri : rules) {
        for (const auto& rj : rules) {
            if (ri.rule.id == rj.rule.id) continue;
            if (!acted.count(ri.rule.id) && !acted.count(rj.rule.id)) continue;

            auto influence = detail::influence_set(ri, m);
            for (const auto& x : influence) {
                Sensing sensing = m.attrs().at(x).sensing;
                if (x == rj.rule.trigger.attr)
                    emit(sensing == Sensing::Immediate ? 1 : 4, ri, rj, x);
                for (const auto& c : detail::condition_set(rj))
                    if (x == c) emit(sensing == Sensing::Immediate ? 2 : 8, ri, rj, x);
            }

            bool ri_immd = !ri.extended;
            bool rj_immd = !rj.extended;
            bool any_delay = ri.delay_ticks > 0 || rj.delay_ticks > 0;
            bool co_triggered = detail::co_satisfiable(
                ri.rule.trigger, rj.rule.trigger, m.attrs().at(ri.rule.trigger.attr).domain);

            if (auto attr = detail::action_conflict(ri, rj)) {
                if (ri_immd && rj_immd && !any_delay) emit(3, ri, rj, *attr);
                if (ri_immd && rj_immd && any_delay && co_triggered) emit(5, ri, rj, *attr);
                if (ri_immd && rj_immd && any_delay && !co_triggered &&
                    ri.delay_ticks > rj.delay_ticks)
                    emit(6, ri, rj, *attr);
            }
            if (rj.extended) {
                if (auto attr = detail::action_conflict(ri, rj, true)) emit(7, ri, rj, *attr);
            }
        }
    }
    std::sort(found.begin(), found.end(),
              [](const VulnPattern& a, const VulnPattern& b) { return a.tag > b.tag; });
    return found;
}

}  // namespace taprepair
