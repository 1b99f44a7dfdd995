#pragma once

// Shared by the unit and acceptance suites: an independent trace-level
// evaluator for the nine surface property templates, written directly from
// their temporal-logic readings, plus an evaluator for normalized properties.
// Traces range over three two-valued attributes; positions are flat states.

#include <array>
#include <cstdint>
#include <vector>

#include "taprepair/properties.hpp"

namespace trace_oracle {

using taprepair::Constraint;
using taprepair::Property;
using taprepair::PropertyShape;
using taprepair::TemplateKind;

using State = std::array<int, 3>;  // values of attributes a, b, c
using Trace = std::vector<State>;

inline int attr_index(const taprepair::AttributeId& id) {
    if (id.entity == "a") return 0;
    if (id.entity == "b") return 1;
    return 2;
}

inline bool holds(const Constraint& c, const State& s) {
    return c.holds(s[attr_index(c.attr)]);
}

inline bool all_hold(const std::vector<Constraint>& cs, const State& s) {
    for (const auto& c : cs)
        if (!holds(c, s)) return false;
    return true;
}

// Direct reading of each surface template over a finite trace. Event
// templates look one step ahead; the final position has no successor.
inline bool surface_eval(TemplateKind kind, const std::vector<Constraint>& states,
                         const Constraint& target, const Trace& tr) {
    const std::size_t n = tr.size();
    switch (kind) {
        case TemplateKind::OneEventNever:
            for (std::size_t i = 0; i + 1 < n; ++i)
                if (holds(target, tr[i + 1])) return false;
            return true;
        case TemplateKind::EventStateAlways:
            for (std::size_t i = 0; i + 1 < n; ++i)
                if (all_hold(states, tr[i]) && !holds(target, tr[i + 1])) return false;
            return true;
        case TemplateKind::EventStateNever:
            for (std::size_t i = 0; i + 1 < n; ++i)
                if (all_hold(states, tr[i]) && holds(target, tr[i + 1])) return false;
            return true;
        case TemplateKind::OneStateAlways:
            for (const auto& s : tr)
                if (!holds(target, s)) return false;
            return true;
        case TemplateKind::OneStateNever:
            for (const auto& s : tr)
                if (holds(target, s)) return false;
            return true;
        case TemplateKind::MultiStateAlways:
        case TemplateKind::StateStateAlways:
            for (const auto& s : tr)
                if (all_hold(states, s) && !holds(target, s)) return false;
            return true;
        case TemplateKind::MultiStateNever:
        case TemplateKind::StateStateNever:
            // never occur together: no position satisfies all states and the target
            for (const auto& s : tr)
                if (all_hold(states, s) && holds(target, s)) return false;
            return true;
    }
    return true;
}

// Normalized-property evaluation over the same traces.
inline bool normalized_eval(const Property& p, const Trace& tr) {
    auto pre_holds = [&](const State& s) {
        for (const auto& a : p.pre)
            if (a.kind == taprepair::AtomKind::State && !holds(a.constraint, s)) return false;
        return true;
    };
    const std::size_t n = tr.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (p.shape == PropertyShape::EventBased) {
            if (i + 1 >= n) continue;
            if (pre_holds(tr[i]) && !holds(p.post.constraint, tr[i + 1])) return false;
        } else {
            if (pre_holds(tr[i]) && !holds(p.post.constraint, tr[i])) return false;
        }
    }
    return true;
}

// Enumerates every trace of length 1..maxLen over three two-valued
// attributes and calls fn on each.
template <typename Fn>
inline void for_each_trace(int maxLen, Fn&& fn) {
    for (int len = 1; len <= maxLen; ++len) {
        std::uint64_t total = 1;
        for (int i = 0; i < len; ++i) total *= 8;
        for (std::uint64_t code = 0; code < total; ++code) {
            Trace tr(static_cast<std::size_t>(len));
            std::uint64_t c = code;
            for (int i = 0; i < len; ++i) {
                tr[i] = {static_cast<int>(c & 1), static_cast<int>((c >> 1) & 1),
                         static_cast<int>((c >> 2) & 1)};
                c >>= 3;
            }
            fn(tr);
        }
    }
}

// Counts surface-vs-normalized disagreements for one template instance.
inline std::uint64_t mismatches(TemplateKind kind, const std::vector<Constraint>& states,
                                const Constraint& target, int maxLen) {
    Property p = taprepair::normalize(kind, states, target);
    std::uint64_t bad = 0;
    for_each_trace(maxLen, [&](const Trace& tr) {
        if (surface_eval(kind, states, target, tr) != normalized_eval(p, tr)) ++bad;
    });
    return bad;
}

}  // namespace trace_oracle
