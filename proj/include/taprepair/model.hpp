#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "taprepair/channels.hpp"
#include "taprepair/properties.hpp"
#include "taprepair/rules.hpp"
#include "taprepair/scenario.hpp"

namespace taprepair {

// Packed model state. Layout (all small ints):
//   [0, nAttr)            physical value per relevant attribute
//   [nAttr, +nMirror)     sensor-mirror value per mirrored attribute
//   then per rule: trigSat, pendFire, delayTimer, holdPhase, holdTimer, pendComplete
//   then per mirror: sync countdown (0 = update due)
//   then per leveled channel attribute: decay countdown (0 = unarmed)
using PackedState = std::vector<std::int16_t>;

enum class EdgeKind { RuleFire, ActionComplete, EnvChange, PhysicalTick, SensorUpdate, Stutter };

struct EdgeLabel {
    EdgeKind kind = EdgeKind::Stutter;
    std::string subject;  // rule id, attribute, or tick-variant summary
    std::string str() const {
        switch (kind) {
            case EdgeKind::RuleFire: return "RuleFire(" + subject + ")";
            case EdgeKind::ActionComplete: return "ActionComplete(" + subject + ")";
            case EdgeKind::EnvChange: return "EnvChange(" + subject + ")";
            case EdgeKind::PhysicalTick:
                return subject.empty() ? "PhysicalTick" : "PhysicalTick[" + subject + "]";
            case EdgeKind::SensorUpdate: return "SensorUpdate(" + subject + ")";
            case EdgeKind::Stutter: return "Stutter";
        }
        return "?";
    }
};

enum class HoldPhase : std::int16_t { Idle = 0, Running = 1, Waiting = 2 };

// One rule compiled against the tick: latencies in whole ticks, completion
// assignments resolved.
struct CompiledRule {
    TapRule rule;
    int delay_ticks = 0;
    int dur_ticks = 0;
    bool extended = false;
    bool has_until = false;
    std::vector<Assignment> completion;
};

struct ModelOptions {
    int tick_sec = 300;
    bool keep_all_attributes = false;  // skip relevance filtering
};

// The verification model: relevant attributes with compressed domains, rule
// execution with firing/holding latencies, sensor mirrors, physical drift and
// hazard decay, environmental interference. States are settled when no
// platform reaction (firing, completion, sensor update) is due; reactions are
// urgent and preempt time and environment.
class Model {
public:
    Model(const AttributeTable& declared, std::vector<TapRule> rules, Scenario scenario,
          ChannelTable channels, const std::vector<Property>& properties, ModelOptions opt)
        : scenario_(std::move(scenario)), channels_(std::move(channels)), opt_(opt) {
        if (opt_.tick_sec <= 0) throw std::invalid_argument("tick must be positive");
        build_relevance(declared, rules, properties);
        compile_rules(rules);
        compress_domains(rules, properties);
        build_layout();
    }

    int tick_sec() const { return opt_.tick_sec; }
    const AttributeTable& attrs() const { return attrs_; }
    const std::vector<CompiledRule>& rules() const { return rules_; }
    const std::vector<AttributeId>& attr_order() const { return order_; }
    const ChannelTable& channels() const { return channels_; }
    const Scenario& scenario() const { return scenario_; }

    bool relevant(const AttributeId& id) const { return index_.count(id) > 0; }

    int attr_index(const AttributeId& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw std::out_of_range("not a model attribute: " + id.str());
        return it->second;
    }

    const CompiledRule* find_rule(const std::string& id) const {
        for (const auto& r : rules_)
            if (r.rule.id == id) return &r;
        return nullptr;
    }

    // compressed bounds of a numeric attribute (declared bounds if enum/uncompressed)
    std::pair<Value, Value> bounds(const AttributeId& id) const {
        int i = attr_index(id);
        return {lo_[i], hi_[i]};
    }

    int mirror_lag_ticks(const AttributeId& id) const {
        int i = attr_index(id);
        return mirror_of_[i] >= 0 ? mirror_lag_[mirror_of_[i]] : 0;
    }

    // --- state accessors ---

    Value phys(const PackedState& s, int attr_idx) const { return s[attr_idx]; }
    Value phys(const PackedState& s, const AttributeId& id) const { return s[attr_index(id)]; }

    Value logical(const PackedState& s, int attr_idx) const {
        int m = mirror_of_[attr_idx];
        return m >= 0 ? s[n_attr_ + m] : s[attr_idx];
    }
    Value logical(const PackedState& s, const AttributeId& id) const {
        return logical(s, attr_index(id));
    }

    bool holds_phys(const PackedState& s, const Constraint& c) const {
        return c.holds(phys(s, c.attr));
    }
    bool holds_log(const PackedState& s, const Constraint& c) const {
        return c.holds(logical(s, c.attr));
    }

    std::int16_t rule_slot(const PackedState& s, int rule_idx, int slot) const {
        return s[rule_base_ + rule_idx * kRuleSlots + slot];
    }
    HoldPhase hold_phase(const PackedState& s, int rule_idx) const {
        return static_cast<HoldPhase>(rule_slot(s, rule_idx, kPhase));
    }
    int hold_timer(const PackedState& s, int rule_idx) const {
        return rule_slot(s, rule_idx, kHoldT);
    }

    // Timer atoms: remaining hold ticks while the rule's action runs; false
    // when idle or waiting on a guard.
    bool eval_timer_atom(const PackedState& s, const std::string& rule_id, CmpOp op,
                         int threshold_ticks) const {
        for (std::size_t i = 0; i < rules_.size(); ++i) {
            if (rules_[i].rule.id != rule_id) continue;
            if (hold_phase(s, static_cast<int>(i)) != HoldPhase::Running) return false;
            return eval_op(hold_timer(s, static_cast<int>(i)), op, threshold_ticks);
        }
        return false;
    }

    bool conditions_hold(const PackedState& s, const CompiledRule& r) const {
        for (const auto& c : r.rule.conditions)
            if (!holds_log(s, c)) return false;
        return true;
    }

    bool settled(const PackedState& s) const {
        for (std::size_t i = 0; i < rules_.size(); ++i)
            if (rule_slot(s, static_cast<int>(i), kPendFire) ||
                rule_slot(s, static_cast<int>(i), kPendComp))
                return false;
        for (std::size_t m = 0; m < mirrors_.size(); ++m)
            if (s[sync_base_ + m] == 0) return false;
        return true;
    }

    // --- construction of the state space ---

    std::vector<PackedState> initial_states() const {
        std::vector<PackedState> out;
        PackedState base(state_len_, 0);
        for (std::size_t m = 0; m < mirrors_.size(); ++m)
            base[sync_base_ + m] = static_cast<std::int16_t>(mirror_lag_[m]);
        // free attributes range over their whole (compressed) domain
        std::vector<int> free_idx;
        for (int i = 0; i < n_attr_; ++i) {
            auto v = scenario_.initial_value(order_[i]);
            if (v) base[i] = static_cast<std::int16_t>(clamp_value(i, *v));
            else free_idx.push_back(i);
        }
        std::vector<Value> cursor(free_idx.size());
        for (std::size_t k = 0; k < free_idx.size(); ++k) cursor[k] = lo_[free_idx[k]];
        while (true) {
            PackedState s = base;
            for (std::size_t k = 0; k < free_idx.size(); ++k)
                s[free_idx[k]] = static_cast<std::int16_t>(cursor[k]);
            for (std::size_t m = 0; m < mirrors_.size(); ++m)
                s[n_attr_ + m] = s[mirrors_[m]];  // mirrors start in sync
            for (std::size_t r = 0; r < rules_.size(); ++r)
                set_rule_slot(s, static_cast<int>(r), kTrigSat,
                              holds_log(s, rules_[r].rule.trigger) ? 1 : 0);
            arm_decays(s);
            out.push_back(std::move(s));
            // next combination
            std::size_t k = 0;
            for (; k < free_idx.size(); ++k) {
                if (cursor[k] < hi_[free_idx[k]]) {
                    ++cursor[k];
                    break;
                }
                cursor[k] = lo_[free_idx[k]];
            }
            if (k == free_idx.size()) break;
            if (free_idx.empty()) break;
        }
        return out;
    }

    std::vector<std::pair<EdgeLabel, PackedState>> successors(const PackedState& s) const {
        std::vector<std::pair<EdgeLabel, PackedState>> out;
        if (!settled(s)) {
            urgent_successors(s, out);
            return out;
        }
        env_successors(s, out);
        tick_successors(s, out);
        out.push_back({{EdgeKind::Stutter, ""}, s});
        return out;
    }

    // Urgent edges only (used for settled-descendant walks). Due sensor
    // samples are ingested before any rule machinery runs: the platform's
    // fire and completion decisions always see the freshest mirror.
    void urgent_successors(const PackedState& s,
                           std::vector<std::pair<EdgeLabel, PackedState>>& out) const {
        bool sensor_due = false;
        for (std::size_t m = 0; m < mirrors_.size(); ++m) {
            if (s[sync_base_ + m] != 0) continue;
            sensor_due = true;
            PackedState t = s;
            t[n_attr_ + m] = t[mirrors_[m]];
            t[sync_base_ + m] = static_cast<std::int16_t>(mirror_lag_[m]);
            recompute(t);
            out.push_back({{EdgeKind::SensorUpdate, order_[mirrors_[m]].str()}, std::move(t)});
        }
        if (sensor_due) return;
        for (std::size_t r = 0; r < rules_.size(); ++r) {
            int ri = static_cast<int>(r);
            if (rule_slot(s, ri, kPendFire)) {
                PackedState t = s;
                apply_fire(t, ri);
                out.push_back({{EdgeKind::RuleFire, rules_[r].rule.id}, std::move(t)});
            }
            if (rule_slot(s, ri, kPendComp)) {
                PackedState t = s;
                apply_complete(t, ri);
                out.push_back({{EdgeKind::ActionComplete, rules_[r].rule.id}, std::move(t)});
            }
        }
    }

    std::string state_str(const PackedState& s) const {
        std::string out = "{";
        for (int i = 0; i < n_attr_; ++i) {
            if (i) out += " ";
            out += order_[i].str() + "=" + attrs_.at(order_[i]).domain.value_str(s[i]);
            if (mirror_of_[i] >= 0 && s[n_attr_ + mirror_of_[i]] != s[i])
                out += "(seen " + attrs_.at(order_[i]).domain.value_str(logical(s, i)) + ")";
        }
        for (std::size_t r = 0; r < rules_.size(); ++r) {
            int ri = static_cast<int>(r);
            if (hold_phase(s, ri) == HoldPhase::Running)
                out += " " + rules_[r].rule.id + ".timer=" +
                       std::to_string(hold_timer(s, ri) * opt_.tick_sec) + "s";
            if (hold_phase(s, ri) == HoldPhase::Waiting) out += " " + rules_[r].rule.id + ".wait";
            if (rule_slot(s, ri, kDelayT) > 0)
                out += " " + rules_[r].rule.id + ".delay=" +
                       std::to_string(rule_slot(s, ri, kDelayT) * opt_.tick_sec) + "s";
            if (rule_slot(s, ri, kPendFire)) out += " " + rules_[r].rule.id + "!fire";
            if (rule_slot(s, ri, kPendComp)) out += " " + rules_[r].rule.id + "!done";
        }
        out += "}";
        return out;
    }

    // Per-tick drift magnitude bound for one attribute (used by compression
    // and exposed for tests).
    int margin_for(const AttributeId& id) const {
        auto it = index_.find(id);
        return it == index_.end() ? 0 : margin_[it->second];
    }

private:
    static constexpr int kRuleSlots = 6;
    static constexpr int kTrigSat = 0, kPendFire = 1, kDelayT = 2, kPhase = 3, kHoldT = 4,
                         kPendComp = 5;

    // --- compilation -----------------------------------------------------

    void build_relevance(const AttributeTable& declared, const std::vector<TapRule>& all_rules,
                         const std::vector<Property>& properties) {
        std::set<AttributeId> rel;
        std::set<std::string> rel_rules;
        auto add_attr = [&](const AttributeId& id) {
            if (!declared.find(id))
                throw std::invalid_argument("undeclared attribute: " + id.str());
            rel.insert(id);
        };
        for (const auto& p : properties) {
            for (const auto& a : p.pre) {
                if (a.kind == AtomKind::Timer) rel_rules.insert(a.rule_id);
                else add_attr(a.constraint.attr);
            }
            add_attr(p.post.constraint.attr);
        }
        if (opt_.keep_all_attributes)
            for (const auto& id : declared.order()) rel.insert(id);

        bool grew = true;
        while (grew) {
            grew = false;
            for (const auto& r : all_rules) {
                if (rel_rules.count(r.id)) continue;
                bool writes_rel = false;
                for (const auto& a : r.action.assigns) writes_rel |= rel.count(a.attr) > 0;
                for (const auto& a : r.action.completion) writes_rel |= rel.count(a.attr) > 0;
                if (writes_rel) {
                    rel_rules.insert(r.id);
                    grew = true;
                }
            }
            for (const auto& r : all_rules) {
                if (!rel_rules.count(r.id)) continue;
                auto touch = [&](const AttributeId& id) {
                    if (!rel.count(id)) {
                        add_attr(id);
                        grew = true;
                    }
                };
                touch(r.trigger.attr);
                for (const auto& c : r.conditions) touch(c.attr);
                for (const auto& a : r.action.assigns) touch(a.attr);
                for (const auto& a : r.action.completion) touch(a.attr);
                if (r.action.until) touch(r.action.until->attr);
            }
            // device states that physically move a relevant channel
            for (const auto& e : channels_.effects()) {
                AttributeId ch_attr = channel_attribute(e.channel);
                if (!rel.count(ch_attr) || !declared.find(ch_attr)) continue;
                if (!declared.find(e.action.attr)) continue;  // device not in this home
                if (!rel.count(e.action.attr)) {
                    rel.insert(e.action.attr);
                    grew = true;
                }
            }
        }

        for (const auto& id : declared.order())
            if (rel.count(id)) {
                attrs_.declare(declared.at(id));
                index_[id] = static_cast<int>(order_.size());
                order_.push_back(id);
            }
        n_attr_ = static_cast<int>(order_.size());
        relevant_rule_ids_ = std::move(rel_rules);
    }

    static AttributeId channel_attribute(PhysicalChannel ch) {
        return AttributeId::parse(channel_name(ch));
    }

    void compile_rules(const std::vector<TapRule>& all_rules) {
        for (const auto& r : all_rules) {
            if (!relevant_rule_ids_.count(r.id)) continue;
            CompiledRule cr;
            cr.rule = r;
            cr.delay_ticks = static_cast<int>(
                std::llround(static_cast<double>(r.delay_sec) / opt_.tick_sec));
            cr.extended = r.action.kind == ActionKind::Extended;
            cr.has_until = r.action.until.has_value();
            if (cr.extended) {
                cr.dur_ticks = static_cast<int>(
                    std::llround(static_cast<double>(r.action.duration_sec) / opt_.tick_sec));
                if (r.action.duration_sec > 0) cr.dur_ticks = std::max(1, cr.dur_ticks);
                cr.completion = effective_completion(r.action, attrs_);
            }
            rules_.push_back(std::move(cr));
        }
    }

    // Numeric domains shrink to the interval spanned by configured values
    // plus one tick of drift; everything a property or rule mentions stays
    // representable and one reachable neighbor survives on each side.
    void compress_domains(const std::vector<TapRule>&, const std::vector<Property>& properties) {
        lo_.resize(n_attr_);
        hi_.resize(n_attr_);
        margin_.assign(n_attr_, 0);
        std::vector<std::set<Value>> configured(n_attr_);
        auto note = [&](const AttributeId& id, Value v) {
            auto it = index_.find(id);
            if (it != index_.end()) configured[it->second].insert(v);
        };
        for (const auto& cr : rules_) {
            const TapRule& r = cr.rule;
            note(r.trigger.attr, r.trigger.value);
            for (const auto& c : r.conditions) note(c.attr, c.value);
            for (const auto& a : r.action.assigns) note(a.attr, a.value);
            for (const auto& a : r.action.completion) note(a.attr, a.value);
            if (r.action.until) note(r.action.until->attr, r.action.until->value);
        }
        for (const auto& p : properties) {
            for (const auto& a : p.pre)
                if (a.kind != AtomKind::Timer) note(a.constraint.attr, a.constraint.value);
            note(p.post.constraint.attr, p.post.constraint.value);
        }
        for (const auto& [id, v] : scenario_.init) note(id, v);
        for (const auto& [id, v] : scenario_.pins) note(id, v);

        for (int i = 0; i < n_attr_; ++i) {
            const AttributeDecl& d = attrs_.at(order_[i]);
            if (d.domain.is_enum()) {
                lo_[i] = 0;
                hi_[i] = static_cast<Value>(d.domain.labels.size()) - 1;
                continue;
            }
            int margin = env_driftable(i) ? 1 : 0;
            auto ch = channel_from_name(order_[i].entity);
            if (ch && !channel_is_leveled(*ch)) {
                for (const auto& e : channels_.effects()) {
                    if (e.channel != *ch || e.kind != EffectKind::Shift) continue;
                    int mag = e.instant()
                                  ? std::abs(e.delta)
                                  : static_cast<int>(std::llround(
                                        std::abs(e.delta) * static_cast<double>(opt_.tick_sec) /
                                        e.lo_sec));
                    margin = std::max(margin, mag);
                }
            }
            margin_[i] = margin;
            if (configured[i].empty()) {
                lo_[i] = d.domain.lo;
                hi_[i] = d.domain.hi;
            } else {
                lo_[i] = std::max(d.domain.lo, *configured[i].begin() - margin);
                hi_[i] = std::min(d.domain.hi, *configured[i].rbegin() + margin);
            }
        }
    }

    void build_layout() {
        mirror_of_.assign(n_attr_, -1);
        for (int i = 0; i < n_attr_; ++i) {
            const AttributeDecl& d = attrs_.at(order_[i]);
            if (d.sensing != Sensing::Tardy) continue;
            int lag = static_cast<int>(
                std::llround(static_cast<double>(d.sensor_interval_sec) / opt_.tick_sec));
            if (lag >= 1) {
                mirror_of_[i] = static_cast<int>(mirrors_.size());
                mirrors_.push_back(i);
                mirror_lag_.push_back(lag);
            }
        }
        for (int i = 0; i < n_attr_; ++i) {
            auto ch = channel_from_name(order_[i].entity);
            if (ch && channel_is_leveled(*ch)) leveled_.push_back(i);
        }
        rule_base_ = n_attr_ + static_cast<int>(mirrors_.size());
        sync_base_ = rule_base_ + static_cast<int>(rules_.size()) * kRuleSlots;
        decay_base_ = sync_base_ + static_cast<int>(mirrors_.size());
        state_len_ = decay_base_ + static_cast<int>(leveled_.size());
    }

    bool env_driftable(int attr_idx) const {
        const AttributeDecl& d = attrs_.at(order_[attr_idx]);
        return !d.actuator && d.domain.is_range() && d.sensing == Sensing::Tardy;
    }

    Value clamp_value(int attr_idx, Value v) const {
        return std::max(lo_[attr_idx], std::min(hi_[attr_idx], v));
    }

    void set_rule_slot(PackedState& s, int rule_idx, int slot, std::int16_t v) const {
        s[rule_base_ + rule_idx * kRuleSlots + slot] = v;
    }

    // --- shared physics helpers -------------------------------------------

    EffectCondition outdoor_relation(const PackedState& s) const {
        if (!scenario_.outdoor_temp) return EffectCondition::None;
        auto it = index_.find(AttributeId::parse("temperature"));
        if (it == index_.end()) return EffectCondition::None;
        Value indoor = s[it->second];
        if (*scenario_.outdoor_temp < indoor) return EffectCondition::OutdoorColder;
        if (*scenario_.outdoor_temp > indoor) return EffectCondition::OutdoorWarmer;
        return EffectCondition::None;
    }

    std::vector<Assignment> active_device_states(const PackedState& s) const {
        std::vector<Assignment> out;
        for (int i = 0; i < n_attr_; ++i)
            if (attrs_.at(order_[i]).actuator) out.push_back({order_[i], s[i]});
        return out;
    }

    // Applies one device assignment: sets the physical value and, when the
    // value actually changes, any instantaneous channel steps.
    void apply_assignment(PackedState& s, const Assignment& a) const {
        int i = attr_index(a.attr);
        Value v = clamp_value(i, a.value);
        if (s[i] == v) return;
        s[i] = static_cast<std::int16_t>(v);
        EffectCondition rel = outdoor_relation(s);
        for (const auto& e : channels_.effects()) {
            if (!e.instant() || !(e.action == Assignment{a.attr, v})) continue;
            if (e.condition != EffectCondition::None && e.condition != rel) continue;
            auto it = index_.find(channel_attribute(e.channel));
            if (it == index_.end()) continue;
            s[it->second] =
                static_cast<std::int16_t>(clamp_value(it->second, s[it->second] + e.delta));
        }
    }

    int leveled_floor(int) const { return 0; }  // lowest label is the clear level

    bool decay_active(const PackedState& s, int attr_idx) const {
        if (s[attr_idx] <= leveled_floor(attr_idx)) return false;
        auto ch = channel_from_name(order_[attr_idx].entity);
        if (!ch) return false;
        auto d = level_decay(active_device_states(s), *ch, channels_, opt_.tick_sec,
                             outdoor_relation(s));
        return d.has_value();
    }

    std::optional<LevelDecay> decay_spec(const PackedState& s, int attr_idx) const {
        auto ch = channel_from_name(order_[attr_idx].entity);
        if (!ch) return std::nullopt;
        return level_decay(active_device_states(s), *ch, channels_, opt_.tick_sec,
                           outdoor_relation(s));
    }

    // Unarmed decay counters stay 0; arming happens at tick boundaries (see
    // tick_successors). Initial states arm deterministically at the slow end.
    void arm_decays(PackedState& s) const {
        for (std::size_t k = 0; k < leveled_.size(); ++k) {
            int i = leveled_[k];
            if (scenario_.pinned(order_[i])) continue;
            if (s[decay_base_ + k] == 0 && decay_active(s, i)) {
                auto d = decay_spec(s, i);
                s[decay_base_ + k] = static_cast<std::int16_t>(d->hi_ticks);
            }
        }
    }

    // Re-evaluates trigger edges and completion guards after any change.
    void recompute(PackedState& s) const {
        for (std::size_t r = 0; r < rules_.size(); ++r) {
            const CompiledRule& cr = rules_[r];
            int ri = static_cast<int>(r);
            bool was = rule_slot(s, ri, kTrigSat) != 0;
            bool now = holds_log(s, cr.rule.trigger);
            if (!was && now) {
                if (cr.delay_ticks == 0) {
                    if (conditions_hold(s, cr)) set_rule_slot(s, ri, kPendFire, 1);
                } else {
                    set_rule_slot(s, ri, kDelayT, static_cast<std::int16_t>(cr.delay_ticks));
                }
            }
            set_rule_slot(s, ri, kTrigSat, now ? 1 : 0);
            // a guarded release is withdrawn if the guard stops holding
            // before the completion executes
            if (hold_phase(s, ri) == HoldPhase::Waiting && cr.has_until)
                set_rule_slot(s, ri, kPendComp,
                              holds_log(s, *cr.rule.action.until) ? 1 : 0);
        }
    }

    void apply_fire(PackedState& s, int ri) const {
        const CompiledRule& cr = rules_[ri];
        set_rule_slot(s, ri, kPendFire, 0);
        for (const auto& a : cr.rule.action.assigns) apply_assignment(s, a);
        if (cr.extended) {
            if (cr.dur_ticks > 0) {
                set_rule_slot(s, ri, kPhase, static_cast<std::int16_t>(HoldPhase::Running));
                set_rule_slot(s, ri, kHoldT, static_cast<std::int16_t>(cr.dur_ticks));
            } else {
                set_rule_slot(s, ri, kPhase, static_cast<std::int16_t>(HoldPhase::Waiting));
                set_rule_slot(s, ri, kHoldT, 0);
            }
            set_rule_slot(s, ri, kPendComp, 0);
        }
        recompute(s);
    }

    void apply_complete(PackedState& s, int ri) const {
        const CompiledRule& cr = rules_[ri];
        set_rule_slot(s, ri, kPendComp, 0);
        set_rule_slot(s, ri, kPhase, static_cast<std::int16_t>(HoldPhase::Idle));
        set_rule_slot(s, ri, kHoldT, 0);
        for (const auto& a : cr.completion) apply_assignment(s, a);
        recompute(s);
    }

    // --- settled-state successors ------------------------------------------

    void env_successors(const PackedState& s,
                        std::vector<std::pair<EdgeLabel, PackedState>>& out) const {
        auto emit = [&](int attr_idx, Value v) {
            PackedState t = s;
            bool manual = scenario_.manual.count(order_[attr_idx]) > 0;
            if (manual) {
                apply_assignment(t, {order_[attr_idx], v});
            } else {
                t[attr_idx] = static_cast<std::int16_t>(v);
            }
            recompute(t);
            const Domain& d = attrs_.at(order_[attr_idx]).domain;
            out.push_back({{EdgeKind::EnvChange, order_[attr_idx].str() + "=" + d.value_str(v)},
                           std::move(t)});
        };
        for (int i = 0; i < n_attr_; ++i) {
            const AttributeId& id = order_[i];
            if (scenario_.pinned(id)) continue;
            const AttributeDecl& d = attrs_.at(id);
            auto ch = channel_from_name(id.entity);
            bool leveled = ch && channel_is_leveled(*ch);
            if (d.actuator) {
                if (!scenario_.manual.count(id)) continue;
                for (Value v = lo_[i]; v <= hi_[i]; ++v)
                    if (v != s[i]) emit(i, v);
            } else if (leveled) {
                // hazards only appear or worsen on their own
                if (s[i] < hi_[i]) emit(i, s[i] + 1);
            } else if (d.domain.is_enum()) {
                for (Value v = lo_[i]; v <= hi_[i]; ++v)
                    if (v != s[i]) emit(i, v);
            } else if (env_driftable(i)) {
                if (s[i] > lo_[i]) emit(i, s[i] - 1);
                if (s[i] < hi_[i]) emit(i, s[i] + 1);
            }
        }
    }

    struct TickDim {
        enum class Kind { Numeric, Arm } kind;
        int attr_idx;           // model attr
        int leveled_slot = -1;  // for Arm
        std::vector<int> choices;
    };

    void tick_successors(const PackedState& s,
                         std::vector<std::pair<EdgeLabel, PackedState>>& out) const {
        // Nondeterministic dimensions of this tick.
        std::vector<TickDim> dims;
        EffectCondition rel = outdoor_relation(s);
        auto active = active_device_states(s);
        for (int i = 0; i < n_attr_; ++i) {
            if (scenario_.pinned(order_[i])) continue;
            const AttributeDecl& d = attrs_.at(order_[i]);
            if (!d.domain.is_range() || d.sensing != Sensing::Tardy) continue;
            auto ch = channel_from_name(order_[i].entity);
            if (!ch || channel_is_leveled(*ch)) continue;
            DeltaRange r = joint_effect(active, *ch, channels_, opt_.tick_sec, rel);
            std::vector<int> branches = branch_values(r.lo, r.hi);
            if (branches.size() == 1 && branches[0] == 0) continue;
            dims.push_back({TickDim::Kind::Numeric, i, -1, branches});
        }
        for (std::size_t k = 0; k < leveled_.size(); ++k) {
            int i = leveled_[k];
            if (scenario_.pinned(order_[i])) continue;
            if (s[decay_base_ + k] != 0) continue;
            auto spec = decay_spec(s, i);
            if (!spec || s[i] <= leveled_floor(i)) continue;
            std::vector<int> choices = {spec->lo_ticks, (spec->lo_ticks + spec->hi_ticks) / 2,
                                        spec->hi_ticks};
            choices.erase(std::unique(choices.begin(), choices.end()), choices.end());
            dims.push_back({TickDim::Kind::Arm, i, static_cast<int>(k), choices});
        }

        std::vector<std::size_t> cursor(dims.size(), 0);
        while (true) {
            PackedState t = s;
            std::string variant;
            for (std::size_t d = 0; d < dims.size(); ++d) {
                int choice = dims[d].choices[cursor[d]];
                if (dims[d].kind == TickDim::Kind::Numeric) {
                    t[dims[d].attr_idx] = static_cast<std::int16_t>(
                        clamp_value(dims[d].attr_idx, t[dims[d].attr_idx] + choice));
                    if (choice != 0) {
                        if (!variant.empty()) variant += " ";
                        variant += order_[dims[d].attr_idx].str() +
                                   (choice > 0 ? "+" : "") + std::to_string(choice);
                    }
                } else {
                    t[decay_base_ + dims[d].leveled_slot] = static_cast<std::int16_t>(choice);
                }
            }
            finish_tick(t);
            out.push_back({{EdgeKind::PhysicalTick, variant}, std::move(t)});
            std::size_t d = 0;
            for (; d < dims.size(); ++d) {
                if (++cursor[d] < dims[d].choices.size()) break;
                cursor[d] = 0;
            }
            if (d == dims.size()) break;
        }
    }

    // The deterministic remainder of a tick: decay countdowns, rule timers,
    // sensor sync countdowns.
    void finish_tick(PackedState& t) const {
        for (std::size_t k = 0; k < leveled_.size(); ++k) {
            int i = leveled_[k];
            if (scenario_.pinned(order_[i])) continue;
            std::int16_t& c = t[decay_base_ + k];
            if (c == 0) continue;
            if (!decay_active(t, i)) {
                c = 0;  // the clearing device stopped; progress restarts
                continue;
            }
            if (--c == 0) {
                auto spec = decay_spec(t, i);
                if (spec && spec->kind == EffectKind::Clear)
                    t[i] = static_cast<std::int16_t>(leveled_floor(i));
                else if (t[i] > leveled_floor(i))
                    --t[i];
                // re-arming happens at the next tick while decay stays active
            }
        }
        for (std::size_t r = 0; r < rules_.size(); ++r) {
            int ri = static_cast<int>(r);
            const CompiledRule& cr = rules_[r];
            std::int16_t dt = rule_slot(t, ri, kDelayT);
            if (dt > 0) {
                set_rule_slot(t, ri, kDelayT, static_cast<std::int16_t>(dt - 1));
                if (dt - 1 == 0 && conditions_hold(t, cr)) set_rule_slot(t, ri, kPendFire, 1);
            }
            if (hold_phase(t, ri) == HoldPhase::Running) {
                std::int16_t ht = static_cast<std::int16_t>(hold_timer(t, ri) - 1);
                set_rule_slot(t, ri, kHoldT, ht);
                if (ht == 0) {
                    if (cr.has_until) {
                        set_rule_slot(t, ri, kPhase,
                                      static_cast<std::int16_t>(HoldPhase::Waiting));
                    } else {
                        set_rule_slot(t, ri, kPhase, static_cast<std::int16_t>(HoldPhase::Idle));
                        set_rule_slot(t, ri, kPendComp, 1);
                    }
                }
            }
        }
        for (std::size_t m = 0; m < mirrors_.size(); ++m)
            if (t[sync_base_ + m] > 0) --t[sync_base_ + m];
        recompute(t);
    }

    // --- members ----------------------------------------------------------

    AttributeTable attrs_;
    std::vector<AttributeId> order_;
    std::map<AttributeId, int> index_;
    std::vector<CompiledRule> rules_;
    std::set<std::string> relevant_rule_ids_;
    Scenario scenario_;
    ChannelTable channels_;
    ModelOptions opt_;

    std::vector<Value> lo_, hi_;
    std::vector<int> margin_;
    std::vector<int> mirror_of_;   // attr idx -> mirror slot or -1
    std::vector<int> mirrors_;     // mirror slot -> attr idx
    std::vector<int> mirror_lag_;  // mirror slot -> lag ticks
    std::vector<int> leveled_;     // leveled slot -> attr idx

    int n_attr_ = 0;
    int rule_base_ = 0;
    int sync_base_ = 0;
    int decay_base_ = 0;
    int state_len_ = 0;
};

}  // namespace taprepair
