#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "taprepair/util.hpp"

namespace taprepair {

// Attribute values are small integers. Enumerated domains map each label to its
// index; numeric domains use the number itself.
using Value = int;

// Identifies one capability of one entity: "heater.power", "temperature.value".
// A bare entity name in the surface syntax means the "value" capability.
struct AttributeId {
    std::string entity;
    std::string capability;

    static AttributeId parse(const std::string& text) {
        auto dot = text.find('.');
        if (dot == std::string::npos) return {text, "value"};
        return {text.substr(0, dot), text.substr(dot + 1)};
    }

    std::string str() const {
        if (capability == "value") return entity;
        return entity + "." + capability;
    }

    bool operator==(const AttributeId& o) const {
        return entity == o.entity && capability == o.capability;
    }
    bool operator!=(const AttributeId& o) const { return !(*this == o); }
    bool operator<(const AttributeId& o) const {
        return std::tie(entity, capability) < std::tie(o.entity, o.capability);
    }
};

inline std::uint64_t hash_of(const AttributeId& a) {
    std::uint64_t h = fnv1a64(a.entity);
    h = fnv1a64(".", h);
    return fnv1a64(a.capability, h);
}

// An attribute's domain: either a closed list of labels or an integer range.
struct Domain {
    enum class Kind { Enum, Range } kind = Kind::Enum;
    std::vector<std::string> labels;  // Enum
    Value lo = 0, hi = 0;             // Range, inclusive
    std::string unit;                 // Range only, may be empty

    static Domain make_enum(std::vector<std::string> ls) {
        Domain d;
        d.kind = Kind::Enum;
        d.labels = std::move(ls);
        return d;
    }
    static Domain make_range(Value lo, Value hi, std::string unit = "") {
        Domain d;
        d.kind = Kind::Range;
        d.lo = lo;
        d.hi = hi;
        d.unit = std::move(unit);
        return d;
    }

    bool is_enum() const { return kind == Kind::Enum; }
    bool is_range() const { return kind == Kind::Range; }

    std::size_t size() const {
        if (is_enum()) return labels.size();
        return static_cast<std::size_t>(hi - lo + 1);
    }

    bool contains(Value v) const {
        if (is_enum()) return v >= 0 && static_cast<std::size_t>(v) < labels.size();
        return v >= lo && v <= hi;
    }

    std::optional<Value> index_of(const std::string& label) const {
        if (!is_enum()) return std::nullopt;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) return static_cast<Value>(i);
        return std::nullopt;
    }

    std::string value_str(Value v) const {
        if (is_enum()) {
            if (!contains(v)) return "<bad:" + std::to_string(v) + ">";
            return labels[static_cast<std::size_t>(v)];
        }
        return std::to_string(v);
    }

    bool operator==(const Domain& o) const {
        return kind == o.kind && labels == o.labels && lo == o.lo && hi == o.hi;
    }
};

enum class CmpOp { Eq, Neq, Lt, Leq, Gt, Geq };

inline const char* op_str(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return "=";
        case CmpOp::Neq: return "!=";
        case CmpOp::Lt: return "<";
        case CmpOp::Leq: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Geq: return ">=";
    }
    return "?";
}

inline std::optional<CmpOp> parse_op(const std::string& s) {
    if (s == "=" || s == "==") return CmpOp::Eq;
    if (s == "!=") return CmpOp::Neq;
    if (s == "<") return CmpOp::Lt;
    if (s == "<=") return CmpOp::Leq;
    if (s == ">") return CmpOp::Gt;
    if (s == ">=") return CmpOp::Geq;
    return std::nullopt;
}

// The complement operator: negating "a op v" yields "a comp(op) v".
inline CmpOp complement_op(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return CmpOp::Neq;
        case CmpOp::Neq: return CmpOp::Eq;
        case CmpOp::Lt: return CmpOp::Geq;
        case CmpOp::Leq: return CmpOp::Gt;
        case CmpOp::Gt: return CmpOp::Leq;
        case CmpOp::Geq: return CmpOp::Lt;
    }
    return op;
}

inline bool eval_op(Value lhs, CmpOp op, Value rhs) {
    switch (op) {
        case CmpOp::Eq: return lhs == rhs;
        case CmpOp::Neq: return lhs != rhs;
        case CmpOp::Lt: return lhs < rhs;
        case CmpOp::Leq: return lhs <= rhs;
        case CmpOp::Gt: return lhs > rhs;
        case CmpOp::Geq: return lhs >= rhs;
    }
    return false;
}

// One comparison over a single attribute.
struct Constraint {
    AttributeId attr;
    CmpOp op = CmpOp::Eq;
    Value value = 0;

    bool holds(Value attr_value) const { return eval_op(attr_value, op, value); }
    Constraint negated() const { return {attr, complement_op(op), value}; }

    bool operator==(const Constraint& o) const {
        return attr == o.attr && op == o.op && value == o.value;
    }
    bool operator<(const Constraint& o) const {
        return std::tie(attr, op, value) < std::tie(o.attr, o.op, o.value);
    }
};

// Attribute sensing class. Immediate attributes propagate to the automation
// platform with negligible delay; tardy ones are sampled on a sensor interval.
enum class Sensing { Immediate, Tardy };

// Declaration of one attribute in a model: its domain, sensing class, and
// (for tardy attributes) the sensor reporting interval.
struct AttributeDecl {
    AttributeId id;
    Domain domain;
    Sensing sensing = Sensing::Immediate;
    int sensor_interval_sec = 0;  // tardy only
    bool actuator = false;        // true when some device can be commanded to set it

    bool operator==(const AttributeDecl& o) const {
        return id == o.id && domain == o.domain && sensing == o.sensing &&
               sensor_interval_sec == o.sensor_interval_sec && actuator == o.actuator;
    }
};

// Symbol table of declared attributes; preserves declaration order.
class AttributeTable {
public:
    const AttributeDecl& declare(AttributeDecl d) {
        if (find(d.id)) throw std::invalid_argument("duplicate attribute: " + d.id.str());
        order_.push_back(d.id);
        auto [it, _] = decls_.emplace(d.id, std::move(d));
        return it->second;
    }

    const AttributeDecl* find(const AttributeId& id) const {
        auto it = decls_.find(id);
        return it == decls_.end() ? nullptr : &it->second;
    }

    const AttributeDecl& at(const AttributeId& id) const {
        const auto* d = find(id);
        if (!d) throw std::out_of_range("undeclared attribute: " + id.str());
        return *d;
    }

    const std::vector<AttributeId>& order() const { return order_; }
    std::size_t size() const { return order_.size(); }
    bool empty() const { return order_.empty(); }

private:
    std::map<AttributeId, AttributeDecl> decls_;
    std::vector<AttributeId> order_;
};

}  // namespace taprepair
