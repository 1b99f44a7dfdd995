#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "taprepair/core.hpp"

namespace taprepair {

struct Assignment {
    AttributeId attr;
    Value value = 0;

    bool operator==(const Assignment& o) const { return attr == o.attr && value == o.value; }
};

// Immediate actions take effect and finish at once. Extended actions hold a
// device state for a duration and/or until a guard holds, then run their
// completion assignments.
enum class ActionKind { Immediate, Extended };

struct Action {
    std::vector<Assignment> assigns;
    ActionKind kind = ActionKind::Immediate;
    int duration_sec = 0;                 // FOR clause; 0 when absent
    std::optional<Constraint> until;      // UNTIL clause; completion waits on it
    std::vector<Assignment> completion;   // FINALLY clause; empty means defaulted

    bool operator==(const Action& o) const {
        return assigns == o.assigns && kind == o.kind && duration_sec == o.duration_sec &&
               until == o.until && completion == o.completion;
    }
};

// One trigger-action rule. The trigger is edge-sensitive (the constraint must
// become true); conditions are level-sensitive and checked when the firing is
// dispatched. delay_sec postpones dispatch after the trigger edge.
struct TapRule {
    std::string id;
    Constraint trigger;
    std::vector<Constraint> conditions;
    Action action;
    int delay_sec = 0;  // AFTER clause

    bool operator==(const TapRule& o) const {
        return id == o.id && trigger == o.trigger && conditions == o.conditions &&
               action == o.action && delay_sec == o.delay_sec;
    }
};

// For a two-valued domain, the completion default is the other value.
inline std::optional<Value> complement_value(const Domain& d, Value v) {
    if (d.size() != 2) return std::nullopt;
    Value lo = d.is_enum() ? 0 : d.lo;
    Value hi = d.is_enum() ? 1 : d.hi;
    if (v == lo) return hi;
    if (v == hi) return lo;
    return std::nullopt;
}

// Effective completion assignments of an extended action: the explicit FINALLY
// list if present, otherwise the complement of each assigned value.
inline std::vector<Assignment> effective_completion(const Action& a, const AttributeTable& attrs) {
    if (a.kind != ActionKind::Extended) return {};
    if (!a.completion.empty()) return a.completion;
    std::vector<Assignment> out;
    for (const auto& as : a.assigns) {
        auto c = complement_value(attrs.at(as.attr).domain, as.value);
        if (!c) throw std::invalid_argument(
            "extended assignment to non-two-valued attribute " + as.attr.str() +
            " needs an explicit FINALLY clause");
        out.push_back({as.attr, *c});
    }
    return out;
}

// --- structural projection -------------------------------------------------
//
// A rule splits into its shape (which attributes participate, and how) and its
// parameters (operators, values, timings). reconstruct(project(r)) == r.

struct RuleShape {
    std::string id;
    AttributeId trigger_attr;
    std::vector<AttributeId> condition_attrs;
    ActionKind kind = ActionKind::Immediate;
    std::vector<AttributeId> action_attrs;
    std::optional<AttributeId> until_attr;
    std::vector<AttributeId> completion_attrs;

    bool operator==(const RuleShape& o) const {
        return id == o.id && trigger_attr == o.trigger_attr &&
               condition_attrs == o.condition_attrs && kind == o.kind &&
               action_attrs == o.action_attrs && until_attr == o.until_attr &&
               completion_attrs == o.completion_attrs;
    }
};

struct RuleParams {
    CmpOp trigger_op = CmpOp::Eq;
    Value trigger_value = 0;
    std::vector<std::pair<CmpOp, Value>> condition_params;
    std::vector<Value> action_values;
    std::optional<std::pair<CmpOp, Value>> until_param;
    std::vector<Value> completion_values;
    int delay_sec = 0;
    int duration_sec = 0;

    bool operator==(const RuleParams& o) const {
        return trigger_op == o.trigger_op && trigger_value == o.trigger_value &&
               condition_params == o.condition_params && action_values == o.action_values &&
               until_param == o.until_param && completion_values == o.completion_values &&
               delay_sec == o.delay_sec && duration_sec == o.duration_sec;
    }
};

inline std::pair<RuleShape, RuleParams> project(const TapRule& r) {
    RuleShape s;
    RuleParams p;
    s.id = r.id;
    s.trigger_attr = r.trigger.attr;
    p.trigger_op = r.trigger.op;
    p.trigger_value = r.trigger.value;
    for (const auto& c : r.conditions) {
        s.condition_attrs.push_back(c.attr);
        p.condition_params.emplace_back(c.op, c.value);
    }
    s.kind = r.action.kind;
    for (const auto& a : r.action.assigns) {
        s.action_attrs.push_back(a.attr);
        p.action_values.push_back(a.value);
    }
    if (r.action.until) {
        s.until_attr = r.action.until->attr;
        p.until_param = {r.action.until->op, r.action.until->value};
    }
    for (const auto& a : r.action.completion) {
        s.completion_attrs.push_back(a.attr);
        p.completion_values.push_back(a.value);
    }
    p.delay_sec = r.delay_sec;
    p.duration_sec = r.action.duration_sec;
    return {std::move(s), std::move(p)};
}

inline TapRule reconstruct(const RuleShape& s, const RuleParams& p) {
    if (s.condition_attrs.size() != p.condition_params.size() ||
        s.action_attrs.size() != p.action_values.size() ||
        s.completion_attrs.size() != p.completion_values.size() ||
        s.until_attr.has_value() != p.until_param.has_value())
        throw std::invalid_argument("rule shape/params arity mismatch");
    TapRule r;
    r.id = s.id;
    r.trigger = {s.trigger_attr, p.trigger_op, p.trigger_value};
    for (std::size_t i = 0; i < s.condition_attrs.size(); ++i)
        r.conditions.push_back(
            {s.condition_attrs[i], p.condition_params[i].first, p.condition_params[i].second});
    r.action.kind = s.kind;
    for (std::size_t i = 0; i < s.action_attrs.size(); ++i)
        r.action.assigns.push_back({s.action_attrs[i], p.action_values[i]});
    if (s.until_attr)
        r.action.until = Constraint{*s.until_attr, p.until_param->first, p.until_param->second};
    for (std::size_t i = 0; i < s.completion_attrs.size(); ++i)
        r.action.completion.push_back({s.completion_attrs[i], p.completion_values[i]});
    r.delay_sec = p.delay_sec;
    r.action.duration_sec = p.duration_sec;
    return r;
}

// --- printing ----------------------------------------------------------------

inline std::string duration_str(int sec) {
    if (sec % 3600 == 0 && sec != 0) return std::to_string(sec / 3600) + "h";
    if (sec % 60 == 0 && sec != 0) return std::to_string(sec / 60) + "min";
    return std::to_string(sec) + "s";
}

inline std::string constraint_str(const Constraint& c, const AttributeTable& attrs) {
    const auto& d = attrs.at(c.attr).domain;
    return c.attr.str() + " " + op_str(c.op) + " " + d.value_str(c.value);
}

inline std::string assignments_str(const std::vector<Assignment>& as, const AttributeTable& attrs) {
    std::string out;
    for (std::size_t i = 0; i < as.size(); ++i) {
        if (i) out += ", ";
        out += as[i].attr.str() + " = " + attrs.at(as[i].attr).domain.value_str(as[i].value);
    }
    return out;
}

inline std::string print_rule(const TapRule& r, const AttributeTable& attrs) {
    std::string out = "RULE " + r.id + ": IF " + constraint_str(r.trigger, attrs);
    if (r.delay_sec > 0) out += " AFTER " + duration_str(r.delay_sec);
    for (std::size_t i = 0; i < r.conditions.size(); ++i)
        out += (i == 0 ? " WHILE " : " AND ") + constraint_str(r.conditions[i], attrs);
    out += " THEN " + assignments_str(r.action.assigns, attrs);
    if (r.action.kind == ActionKind::Extended) {
        if (r.action.duration_sec > 0) out += " FOR " + duration_str(r.action.duration_sec);
        if (r.action.until) out += " UNTIL " + constraint_str(*r.action.until, attrs);
        if (!r.action.completion.empty())
            out += " FINALLY " + assignments_str(r.action.completion, attrs);
    }
    return out;
}

inline std::string print_attr_decl(const AttributeDecl& d) {
    std::string out = "ATTR " + d.id.str() + " : ";
    if (d.domain.is_enum()) {
        out += "{";
        for (std::size_t i = 0; i < d.domain.labels.size(); ++i) {
            if (i) out += ", ";
            out += d.domain.labels[i];
        }
        out += "}";
    } else {
        out += "[" + std::to_string(d.domain.lo) + ".." + std::to_string(d.domain.hi) + "]";
        if (!d.domain.unit.empty()) out += " " + d.domain.unit;
    }
    if (d.actuator) out += " ACTUATOR";
    if (d.sensing == Sensing::Tardy) out += " TARDY " + std::to_string(d.sensor_interval_sec);
    return out;
}

}  // namespace taprepair
