#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "taprepair/automaton.hpp"
#include "taprepair/catalog.hpp"
#include "taprepair/checker.hpp"
#include "taprepair/dsl.hpp"
#include "taprepair/model.hpp"
#include "taprepair/properties.hpp"
#include "taprepair/vuln.hpp"

namespace taprepair {

// --- predicates and flags ----------------------------------------------------
//
// The repair search is organized as toggles over a predicate universe: status
// predicates bind an attribute to a value inside some rule, trigger predicates
// nominate an attribute as a rule's trigger subject. A flag assignment records
// which toggles a candidate patch turns on. Discipline: within one rule, at
// most one status flag per attribute and at most one trigger flag.

enum class PredicateKind { Status, TriggerPred };

struct Predicate {
    PredicateKind kind = PredicateKind::Status;
    std::string rule_id;  // owning rule; synthetic rules get their assigned id
    AttributeId attr;
    CmpOp op = CmpOp::Eq;
    Value value = 0;

    std::string str() const {
        if (kind == PredicateKind::TriggerPred)
            return "isTrigger(" + rule_id + "," + attr.str() + ")";
        return "take(" + rule_id + "," + attr.str() + op_str(op) + std::to_string(value) + ")";
    }
};

struct FlagAssignment {
    std::vector<Predicate> on;  // flags toggled away from the concrete model
};

// Per rule: status-flag sum per attribute and trigger-flag sum must stay <= 1.
inline bool flags_disciplined(const FlagAssignment& fa) {
    std::set<std::pair<std::string, std::string>> status;
    std::set<std::string> trig;
    for (const auto& p : fa.on) {
        if (p.kind == PredicateKind::Status) {
            if (!status.insert({p.rule_id, p.attr.str()}).second) return false;
        } else {
            if (!trig.insert(p.rule_id).second) return false;
        }
    }
    return true;
}

// --- rule edits ---------------------------------------------------------------

struct RuleEdit {
    enum class Kind { AddRule, AddCondition, ModifyAction, ModifyLatency, RemoveRule };

    Kind kind = Kind::AddRule;
    TapRule rule;            // AddRule payload
    std::string rule_id;     // target of the remaining kinds
    Constraint constraint;   // AddCondition payload; ModifyLatency wait guard
    Action action;           // ModifyAction payload

    std::string str(const AttributeTable& attrs) const {
        switch (kind) {
            case Kind::AddRule: return "ADD " + print_rule(rule, attrs);
            case Kind::AddCondition:
                return "ADD CONDITION " + rule_id + ": " + constraint_str(constraint, attrs);
            case Kind::ModifyAction:
                return "MODIFY ACTION " + rule_id + ": THEN " +
                       assignments_str(action.assigns, attrs);
            case Kind::ModifyLatency:
                return "MODIFY LATENCY " + rule_id + ": WAIT UNTIL " +
                       constraint_str(constraint, attrs);
            case Kind::RemoveRule: return "REMOVE RULE " + rule_id;
        }
        return "?";
    }
};

// Applies edits to a rule set. Targets must exist; the caller re-validates the
// result through a print/parse round trip before deploying it to a model.
inline std::vector<TapRule> apply_edits(std::vector<TapRule> rules,
                                        const std::vector<RuleEdit>& edits) {
    auto find = [&](const std::string& id) -> TapRule* {
        for (auto& r : rules)
            if (r.id == id) return &r;
        return nullptr;
    };
    for (const auto& e : edits) {
        switch (e.kind) {
            case RuleEdit::Kind::AddRule:
                if (e.rule.id.empty()) throw std::invalid_argument("added rule needs an id");
                if (find(e.rule.id))
                    throw std::invalid_argument("duplicate rule id " + e.rule.id);
                rules.push_back(e.rule);
                break;
            case RuleEdit::Kind::AddCondition: {
                TapRule* r = find(e.rule_id);
                if (!r) throw std::invalid_argument("no rule " + e.rule_id);
                r->conditions.push_back(e.constraint);
                break;
            }
            case RuleEdit::Kind::ModifyAction: {
                TapRule* r = find(e.rule_id);
                if (!r) throw std::invalid_argument("no rule " + e.rule_id);
                r->action = e.action;
                break;
            }
            case RuleEdit::Kind::ModifyLatency: {
                TapRule* r = find(e.rule_id);
                if (!r) throw std::invalid_argument("no rule " + e.rule_id);
                if (r->action.kind != ActionKind::Extended)
                    throw std::invalid_argument(e.rule_id + " has no latency to modify");
                r->action.until = e.constraint;
                break;
            }
            case RuleEdit::Kind::RemoveRule: {
                auto it = std::find_if(rules.begin(), rules.end(),
                                       [&](const TapRule& r) { return r.id == e.rule_id; });
                if (it == rules.end()) throw std::invalid_argument("no rule " + e.rule_id);
                rules.erase(it);
                break;
            }
        }
    }
    return rules;
}

// --- patches ------------------------------------------------------------------

enum class PatchClass { P_C, P_I, P_X, Unclassified };

inline const char* patch_class_str(PatchClass c) {
    switch (c) {
        case PatchClass::P_C: return "P_C";
        case PatchClass::P_I: return "P_I";
        case PatchClass::P_X: return "P_X";
        case PatchClass::Unclassified: return "unclassified";
    }
    return "?";
}

// A candidate patch: the reasoning witness (a counterexample against the
// negated property, i.e. a trace exhibiting the desired behavior), the flag
// assignment that produced it, and the rule edits it maps to. Witness states
// are recorded as attribute value maps plus per-rule execution signatures so
// feasibility checks do not depend on the patched model's state layout.
struct Patch {
    Counterexample trace;
    FlagAssignment flags;
    PatchClass cls = PatchClass::Unclassified;
    std::vector<RuleEdit> edits;
    int move_index = -1;
    std::string move_key;
    std::string rendered;  // witness rendered against the patched model

    std::vector<std::map<AttributeId, Value>> state_values;  // logical values
    std::vector<std::string> state_sigs;  // shared-rule execution signatures
};

// --- candidate moves ----------------------------------------------------------

namespace detail {

struct Move {
    int phase = 0;  // 0: conditions, waits, additions; 1: action changes, removals
    int tier = 0;   // ordering within a phase
    std::vector<RuleEdit> edits;
    FlagAssignment flags;
    std::string key;  // stable identity for bans
};

inline std::string move_key(const Move& m, const AttributeTable& attrs) {
    std::string k;
    for (const auto& e : m.edits) k += e.str(attrs) + ";";
    return k;
}

// Execution signature of the shared rules in a (possibly patched) model state:
// attribute values plus every shared rule's slot block. Used to test whether
// the spurious indicator reappears inside a witness.
inline std::string exec_signature(const Model& m, const PackedState& s,
                                  const std::vector<std::string>& rule_ids,
                                  const std::vector<AttributeId>& attr_ids) {
    std::string sig;
    for (const auto& id : attr_ids) {
        if (!m.relevant(id)) continue;
        sig += id.str() + "=" + std::to_string(m.phys(s, id)) + "/" +
               std::to_string(m.logical(s, id)) + ";";
    }
    for (const auto& rid : rule_ids) {
        int ri = -1;
        for (std::size_t i = 0; i < m.rules().size(); ++i)
            if (m.rules()[i].rule.id == rid) ri = static_cast<int>(i);
        if (ri < 0) continue;
        sig += rid + ":";
        for (int slot = 0; slot < 6; ++slot)
            sig += std::to_string(m.rule_slot(s, ri, slot)) + ",";
        sig += ";";
    }
    return sig;
}

}  // namespace detail

// The over-approximated search space: the predicate universe, the enumerated
// interpolation moves (ordered), refinement state (frozen environment values
// and banned predicate combinations), and the concrete context candidates are
// evaluated against.
struct AbstractModel {
    const Model* base = nullptr;
    std::vector<TapRule> base_rules;  // full rule set behind `base`
    Property phi;
    Counterexample defect;
    int indicator_index = 0;

    std::vector<Predicate> universe;
    std::vector<detail::Move> moves;
    std::vector<std::vector<int>> subsets;  // enumeration order over move sets
    std::size_t cursor = 0;
    bool aborted = false;  // predicate cap exceeded

    std::map<AttributeId, Value> frozen;      // P_I refinement: pinned values
    std::set<std::string> invariants;         // P_X refinement: banned move keys
    std::map<std::string, int> retry_counts;  // P_I single-retry bookkeeping

    std::set<std::string> base_fired;  // rules that fire somewhere in `base`
};

struct NprOptions {
    int iter_limit = 50;
    int round_limit = 15;
    std::size_t state_cap = 2'000'000;
    int bmc_factor = 2;  // reasoning depth = factor x defect trace length
    int predicate_cap = 64;
};

struct GlobalResult {
    std::optional<Counterexample> phi_residual;
    std::string regressed_id;
    std::optional<Counterexample> regressed_cex;

    bool ok() const { return !phi_residual && regressed_id.empty(); }
};

// Report record for one repair attempt.
struct PatchReport {
    std::string property_id;
    std::vector<std::string> vuln_patterns;
    std::string cex_trace;
    std::vector<std::string> edits_dsl;
    std::vector<std::string> class_history;
    int iterations = 0;
    int round_count = 0;
};

struct RepairOutcome {
    Verdict initial_verdict = Verdict::Pass;
    std::vector<VulnPattern> patterns;
    std::optional<Counterexample> defect;
    std::optional<std::vector<RuleEdit>> edits;  // empty optional: unrepairable
    std::vector<TapRule> patched_rules;
    PatchReport report;
};

// Negated-property reasoning over a rule set: detection, abstraction, bounded
// reasoning against the negated property, feasibility checking with
// refinement, and rule-edit emission.
class NprEngine {
public:
    NprEngine(AttributeTable declared, std::vector<TapRule> rules, Scenario scenario,
              ChannelTable channels, ModelOptions mopt, std::vector<Property> catalog,
              NprOptions opt = {})
        : declared_(std::move(declared)),
          rules_(std::move(rules)),
          scenario_(std::move(scenario)),
          channels_(std::move(channels)),
          mopt_(mopt),
          catalog_(std::move(catalog)),
          opt_(opt) {}

    const NprOptions& options() const { return opt_; }
    const std::vector<TapRule>& rules() const { return rules_; }

    std::unique_ptr<Model> build_model(const std::vector<TapRule>& rules, const Property& phi,
                                       const std::map<AttributeId, Value>& pins = {}) const {
        Scenario sc = scenario_;
        for (const auto& [a, v] : pins) sc.pins[a] = v;
        return std::make_unique<Model>(declared_, rules, sc, channels_,
                                       std::vector<Property>{phi}, mopt_);
    }

    // Detection plus repair for one property.
    RepairOutcome repair(const Property& phi) {
        RepairOutcome out;
        out.report.property_id = phi.id;
        auto m = build_model(rules_, phi);
        Checker ck(*m, {opt_.state_cap});
        CheckResult r = ck.check(phi);
        out.initial_verdict = r.verdict;
        if (r.verdict != Verdict::Violation) return out;

        out.defect = r.cex;
        out.patterns = classify_pattern(*r.cex, *m);
        for (const auto& p : out.patterns) out.report.vuln_patterns.push_back(p.str());
        out.report.cex_trace = r.cex->render(*m, phi.id);

        progress_sigs_.clear();
        total_iterations_ = 0;
        rounds_entered_ = 0;
        class_history_.clear();

        auto edits = npr(*r.cex, phi, negate(phi), *m, rules_, 0);
        out.report.iterations = total_iterations_;
        out.report.round_count = rounds_entered_;
        out.report.class_history = class_history_;
        if (edits) {
            out.edits = edits;
            out.patched_rules = apply_edits(rules_, *edits);
            for (const auto& e : *edits) out.report.edits_dsl.push_back(e.str(declared_));
        }
        return out;
    }

    // --- the repair loop ---

    // One round: abstraction over the current model, candidate reasoning under
    // the iteration budget, local and global feasibility, refinement. A
    // residual defect showing progress recurses with the patch applied. The
    // round's own defect signature is registered up front so a residual
    // identical to it never recurses; that keeps no-op edits from piling up.
    std::optional<std::vector<RuleEdit>> npr(const Counterexample& cex, const Property& phi,
                                             const Property& notphi, const Model& m,
                                             const std::vector<TapRule>& rules, int rnd) {
        if (rnd >= opt_.round_limit) return std::nullopt;
        ++rounds_entered_;

        Checker ck(m, {opt_.state_cap});
        int is_idx = search_spurious_indicator(ck, cex, phi);
        progress_sigs_.insert(progress_signature(cex, m, rules, phi));

        std::vector<Property> passing = passing_in_scope(rules, phi);
        AbstractModel am = abstract_model({}, {}, phi, m, rules, cex, is_idx);
        if (am.aborted) {
            class_history_.push_back("abort: predicate cap");
            return std::nullopt;
        }

        int iter = 0;
        while (iter < opt_.iter_limit) {
            std::optional<Patch> patch = reason_patch(am, notphi);
            if (!patch) break;  // abstract space exhausted
            ++iter;
            ++total_iterations_;

            if (patch->trace.states.empty()) {
                class_history_.push_back(patch->move_key + " -> no witness");
                am.cursor++;
                continue;
            }

            patch->cls = check_local_feasibility(*patch, phi, am, m);
            class_history_.push_back(patch->move_key + " -> " + patch_class_str(patch->cls));
            if (patch->cls == PatchClass::P_I || patch->cls == PatchClass::P_X) {
                refine(am, *patch);
                continue;
            }

            GlobalResult g = verify_global_feasibility(phi, m, rules, *patch, passing);
            if (g.ok()) return emit_rule_edits(*patch);

            if (!g.regressed_id.empty()) {
                class_history_.back() += " (regresses " + g.regressed_id + ")";
                am.invariants.insert(patch->move_key);
                am.cursor++;
                continue;
            }

            // residual violation of phi on the patched model
            std::vector<TapRule> patched = apply_edits(rules, patch->edits);
            auto pm = build_model(patched, phi);
            std::string sig = progress_signature(*g.phi_residual, *pm, rules, phi);
            if (!progress_sigs_.count(sig)) {
                auto sub = npr(*g.phi_residual, phi, notphi, *pm, patched, rnd + 1);
                if (sub) {
                    std::vector<RuleEdit> all = emit_rule_edits(*patch);
                    all.insert(all.end(), sub->begin(), sub->end());
                    return all;
                }
            }
            am.invariants.insert(patch->move_key);
            am.cursor++;
        }
        return std::nullopt;
    }

    // --- spec operations (also exercised directly by tests) ---

    static int search_spurious_indicator(const Checker& ck, const Counterexample& cex,
                                         const Property& phi) {
        for (const auto& inst : Checker::expand_within(phi, ck.model())) {
            try {
                return ck.locate_violating_state(cex, inst);
            } catch (const std::logic_error&) {
            }
        }
        return ck.locate_violating_state(cex, phi);
    }

    // Builds the candidate move space: semantic interpolation of defect-trace
    // rules (condition predicates over the property's attribute vocabulary),
    // latency interpolation (wait-for-completion guards), new-rule
    // interpolation seeded from the property, and the deferred destructive
    // moves. Past refinements are replayed into the fresh abstraction.
    AbstractModel abstract_model(const std::vector<Patch>& pi_hist,
                                 const std::vector<Patch>& px_hist, const Property& phi,
                                 const Model& m, const std::vector<TapRule>& rules,
                                 const Counterexample& cex, int is_idx) {
        AbstractModel am;
        am.base = &m;
        am.base_rules = rules;
        am.phi = phi;
        am.defect = cex;
        am.indicator_index = is_idx;
        for (const auto& p : pi_hist) refine(am, p);
        for (const auto& p : px_hist) refine(am, p);

        am.base_fired = fired_rules(m);
        const PackedState& is_state = cex.states[static_cast<std::size_t>(is_idx)];

        std::vector<std::string> acted = acted_rules(cex);
        std::vector<Atom> vocab;
        for (const auto& a : phi.pre)
            if (a.kind != AtomKind::Timer) vocab.push_back(a);

        bool complete_entry =
            cex.violating_index > 0 &&
            cex.labels[static_cast<std::size_t>(cex.violating_index) - 1].kind ==
                EdgeKind::ActionComplete;

        // latency moves: one collective wait converting every defect-trace
        // extended rule whose completion un-does the desired device state
        {
            std::optional<Constraint> guard = wait_guard(phi, m);
            std::vector<RuleEdit> edits;
            FlagAssignment fa;
            if (guard) {
                for (const auto& rid : acted) {
                    const TapRule* r = find_rule(rules, rid);
                    if (!r || r->action.kind != ActionKind::Extended) continue;
                    bool undoes = false;
                    try {
                        for (const auto& asg : effective_completion(r->action, m.attrs()))
                            undoes |= asg.attr == phi.post.constraint.attr &&
                                      !phi.post.constraint.holds(asg.value);
                    } catch (const std::exception&) {
                        continue;
                    }
                    if (!undoes) continue;
                    if (r->action.until && *r->action.until == *guard) continue;
                    RuleEdit e;
                    e.kind = RuleEdit::Kind::ModifyLatency;
                    e.rule_id = rid;
                    e.constraint = *guard;
                    edits.push_back(e);
                    fa.on.push_back(
                        {PredicateKind::Status, rid, guard->attr, guard->op, guard->value});
                }
            }
            if (!edits.empty()) {
                detail::Move mv;
                mv.phase = 0;
                mv.tier = complete_entry ? -1 : 1;
                mv.edits = std::move(edits);
                mv.flags = std::move(fa);
                am.moves.push_back(std::move(mv));
            }
        }

        // condition moves: defect-trace rules x property vocabulary, blockers
        // (false at the indicator) ahead of non-blockers
        for (const auto& rid : acted) {
            const TapRule* r = find_rule(rules, rid);
            if (!r) continue;
            for (const auto& atom : vocab) {
                const AttributeId& attr = atom.constraint.attr;
                bool own_target = false;
                for (const auto& asg : r->action.assigns) own_target |= asg.attr == attr;
                if (own_target || !m.relevant(attr)) continue;
                std::vector<Constraint> cands = condition_candidates(atom.constraint, m);
                std::stable_partition(cands.begin(), cands.end(), [&](const Constraint& c) {
                    return !c.holds(m.logical(is_state, attr));
                });
                for (const auto& c : cands) {
                    bool dup = false;
                    for (const auto& ex : r->conditions) dup |= ex == c;
                    if (dup) continue;
                    detail::Move mv;
                    mv.phase = 0;
                    mv.tier = 0;
                    RuleEdit e;
                    e.kind = RuleEdit::Kind::AddCondition;
                    e.rule_id = rid;
                    e.constraint = c;
                    mv.edits.push_back(e);
                    mv.flags.on.push_back({PredicateKind::Status, rid, attr, c.op, c.value});
                    am.moves.push_back(std::move(mv));
                }
            }
        }

        // new-rule moves seeded from the property: direct and contrapositive
        const Constraint& post = phi.post.constraint;
        if (post.op == CmpOp::Eq && m.attrs().find(post.attr) &&
            m.attrs().at(post.attr).actuator) {
            for (std::size_t i = 0; i < vocab.size(); ++i) {
                TapRule nr;
                nr.trigger = vocab[i].constraint;
                for (std::size_t j = 0; j < vocab.size(); ++j)
                    if (j != i) nr.conditions.push_back(vocab[j].constraint);
                nr.action.assigns.push_back({post.attr, post.value});
                detail::Move mv;
                mv.phase = 0;
                mv.tier = 2;
                RuleEdit e;
                e.kind = RuleEdit::Kind::AddRule;
                e.rule = nr;
                mv.edits.push_back(e);
                mv.flags.on.push_back({PredicateKind::TriggerPred, "", nr.trigger.attr,
                                       nr.trigger.op, nr.trigger.value});
                mv.flags.on.push_back(
                    {PredicateKind::Status, "", post.attr, CmpOp::Eq, post.value});
                am.moves.push_back(std::move(mv));
            }
            for (const auto& atom : vocab) {
                auto falsify = falsifying_assignment(atom.constraint, m);
                if (!falsify) continue;
                TapRule nr;
                nr.trigger = post.negated();
                nr.action.assigns.push_back(*falsify);
                detail::Move mv;
                mv.phase = 0;
                mv.tier = 2;
                RuleEdit e;
                e.kind = RuleEdit::Kind::AddRule;
                e.rule = nr;
                mv.edits.push_back(e);
                mv.flags.on.push_back({PredicateKind::TriggerPred, "", nr.trigger.attr,
                                       nr.trigger.op, nr.trigger.value});
                mv.flags.on.push_back(
                    {PredicateKind::Status, "", falsify->attr, CmpOp::Eq, falsify->value});
                am.moves.push_back(std::move(mv));
            }
        }

        // deferred phase: action changes and removals of defect-trace rules
        for (const auto& rid : acted) {
            const TapRule* r = find_rule(rules, rid);
            if (!r) continue;
            for (const auto& asg : r->action.assigns) {
                if (post.op != CmpOp::Eq || asg.attr != post.attr || post.holds(asg.value))
                    continue;
                detail::Move mv;
                mv.phase = 1;
                mv.tier = 3;
                RuleEdit e;
                e.kind = RuleEdit::Kind::ModifyAction;
                e.rule_id = rid;
                e.action = r->action;
                for (auto& a : e.action.assigns)
                    if (a.attr == post.attr) a.value = post.value;
                mv.edits.push_back(e);
                mv.flags.on.push_back(
                    {PredicateKind::Status, rid, asg.attr, CmpOp::Eq, post.value});
                am.moves.push_back(std::move(mv));
            }
            detail::Move mv;
            mv.phase = 1;
            mv.tier = 4;
            RuleEdit e;
            e.kind = RuleEdit::Kind::RemoveRule;
            e.rule_id = rid;
            mv.edits.push_back(e);
            mv.flags.on.push_back({PredicateKind::TriggerPred, rid, r->trigger.attr,
                                   r->trigger.op, r->trigger.value});
            am.moves.push_back(std::move(mv));
        }

        for (auto& mv : am.moves) mv.key = detail::move_key(mv, m.attrs());

        for (const auto& mv : am.moves)
            for (const auto& p : mv.flags.on) {
                bool dup = false;
                for (const auto& u : am.universe) dup |= u.str() == p.str();
                if (!dup) am.universe.push_back(p);
            }
        if (static_cast<int>(am.universe.size()) > opt_.predicate_cap) {
            am.aborted = true;
            return am;
        }

        build_subsets(am);
        return am;
    }

    // Picks the next candidate in enumeration order, applies its edits, and
    // runs the bounded search for a counterexample to the negated property on
    // the patched model (under any frozen environment values). A candidate
    // that silences a rule still alive in the base model is discarded before
    // reasoning and consumes no iteration.
    std::optional<Patch> reason_patch(AbstractModel& am, const Property& notphi) {
        while (am.cursor < am.subsets.size()) {
            const auto& subset = am.subsets[am.cursor];
            Patch patch;
            patch.move_index = static_cast<int>(am.cursor);
            int next_id = next_rule_number(am.base_rules);
            for (int mi : subset) {
                std::string assigned;
                for (RuleEdit e : am.moves[static_cast<std::size_t>(mi)].edits) {
                    if (e.kind == RuleEdit::Kind::AddRule && e.rule.id.empty()) {
                        e.rule.id = "r" + std::to_string(++next_id);
                        assigned = e.rule.id;
                    }
                    patch.edits.push_back(std::move(e));
                }
                for (Predicate p : am.moves[static_cast<std::size_t>(mi)].flags.on) {
                    if (p.rule_id.empty())
                        p.rule_id = assigned.empty() ? "+" + std::to_string(mi) : assigned;
                    patch.flags.on.push_back(std::move(p));
                }
                patch.move_key += am.moves[static_cast<std::size_t>(mi)].key + "|";
            }
            if (am.invariants.count(patch.move_key) || !flags_disciplined(patch.flags)) {
                am.cursor++;
                continue;
            }

            std::vector<TapRule> patched;
            try {
                patched = apply_edits(am.base_rules, patch.edits);
                RulesFile rf{declared_, patched};
                RulesFile back = parse_rules_text(print_rules_file(rf));
                if (!(back.rules == patched)) throw std::logic_error("round trip drift");
            } catch (const std::exception&) {
                am.cursor++;
                continue;
            }

            // liveness is a deployment property: judge it without the
            // reasoning-time freezes, which can starve a rule legitimately
            auto pm = build_model(patched, am.phi, am.frozen);
            if (am.frozen.empty()) {
                if (!rules_alive(am, *pm)) {
                    am.cursor++;
                    continue;
                }
            } else {
                auto free_pm = build_model(patched, am.phi);
                if (!rules_alive(am, *free_pm)) {
                    am.cursor++;
                    continue;
                }
            }

            std::size_t depth = static_cast<std::size_t>(opt_.bmc_factor) *
                                std::max<std::size_t>(am.defect.states.size(), 4);
            Checker ck(*pm, {opt_.state_cap, depth});
            // latency-bounded targets expand into timer instances first and
            // are negated after, so the timer atoms survive into the target
            std::vector<Property> targets = Checker::expand_within(am.phi, *pm);
            if (targets.empty()) targets.push_back(am.phi);
            for (const auto& t : targets) {
                CheckResult r = ck.check(negate(t));
                if (r.verdict == Verdict::Violation) {
                    patch.trace = *r.cex;
                    patch.rendered = r.cex->render(*pm, "not " + t.id);
                    record_trace_views(patch, *pm, am);
                    break;
                }
            }
            (void)notphi;
            return patch;  // trace left empty when no witness was found
        }
        return std::nullopt;
    }

    // P_X when the witness's success is produced by an uncontrollable
    // transition or the spurious indicator reappears; P_I when an attribute no
    // device can influence deviates from its defect-trace values; P_C
    // otherwise.
    PatchClass check_local_feasibility(const Patch& patch, const Property& phi,
                                       const AbstractModel& am, const Model& base) {
        const AttributeId& post_attr = phi.post.constraint.attr;
        int last_change = -1;
        for (std::size_t k = 1; k < patch.state_values.size(); ++k) {
            auto prev = patch.state_values[k - 1].find(post_attr);
            auto cur = patch.state_values[k].find(post_attr);
            if (prev != patch.state_values[k - 1].end() &&
                cur != patch.state_values[k].end() && prev->second != cur->second)
                last_change = static_cast<int>(k);
        }
        if (last_change > 0 &&
            patch.trace.labels[static_cast<std::size_t>(last_change) - 1].kind ==
                EdgeKind::EnvChange)
            return PatchClass::P_X;

        for (const auto& attr : unaffected_attrs(base)) {
            std::set<Value> allowed;
            for (int k = 0; k <= am.indicator_index; ++k)
                allowed.insert(
                    base.logical(am.defect.states[static_cast<std::size_t>(k)], attr));
            for (const auto& vals : patch.state_values) {
                auto it = vals.find(attr);
                if (it != vals.end() && !allowed.count(it->second)) return PatchClass::P_I;
            }
        }

        std::vector<std::string> ids;
        for (const auto& r : am.base_rules) ids.push_back(r.id);
        std::string is_sig = detail::exec_signature(
            base, am.defect.states[static_cast<std::size_t>(am.indicator_index)], ids,
            base.attr_order());
        for (const auto& sig : patch.state_sigs)
            if (sig == is_sig) return PatchClass::P_X;

        return PatchClass::P_C;
    }

    // Full (unbounded) re-check of the repaired property and every property
    // that passed before the patch, on the patched model without any
    // reasoning-time freezes. An empty edit list reproduces the defect.
    GlobalResult verify_global_feasibility(const Property& phi, const Model& base,
                                           const std::vector<TapRule>& rules,
                                           const Patch& patch,
                                           const std::vector<Property>& passing) {
        (void)base;
        GlobalResult g;
        std::vector<TapRule> patched = apply_edits(rules, patch.edits);
        auto pm = build_model(patched, phi);
        Checker ck(*pm, {opt_.state_cap});
        CheckResult r = ck.check(phi);
        if (r.verdict == Verdict::Violation) g.phi_residual = r.cex;
        // regressions disqualify even candidates kept alive by a residual:
        // a recursion round recomputes its guards on the patched model, so a
        // break sneaking past here would vanish from every later guard set
        for (const auto& p : passing) {
            auto gm = build_model(patched, p);
            CheckResult pr = Checker(*gm, {opt_.state_cap}).check(p);
            if (pr.verdict == Verdict::Violation) {
                g.regressed_id = p.id;
                g.regressed_cex = pr.cex;
                return g;
            }
        }
        return g;
    }

    // P_I freezes the values of device-unaffected attributes at the defect
    // context; P_X bans the predicate combination. Both are idempotent. A
    // frozen candidate gets one retry before its combination is banned too.
    void refine(AbstractModel& am, const Patch& patch) {
        if (patch.cls == PatchClass::P_I) {
            const Model& base = *am.base;
            for (const auto& attr : unaffected_attrs(base))
                am.frozen.emplace(
                    attr, base.logical(am.defect.states[static_cast<std::size_t>(
                                           am.indicator_index)],
                                       attr));
            if (++am.retry_counts[patch.move_key] > 1) {
                am.invariants.insert(patch.move_key);
                if (patch.move_index == static_cast<int>(am.cursor)) am.cursor++;
            }
            return;
        }
        am.invariants.insert(patch.move_key);
        if (patch.move_index == static_cast<int>(am.cursor)) am.cursor++;
    }

    // Edits of a feasible patch, presentation-ordered: additions first.
    static std::vector<RuleEdit> emit_rule_edits(const Patch& patch) {
        std::vector<RuleEdit> out = patch.edits;
        std::stable_sort(out.begin(), out.end(), [](const RuleEdit& a, const RuleEdit& b) {
            return static_cast<int>(a.kind) < static_cast<int>(b.kind);
        });
        return out;
    }

    // Catalog properties evaluable on this deployment (other than the target)
    // that pass before repair; these are the regression guards. Each guard is
    // judged on a model built for it: a model built for phi may filter out
    // attributes the guard needs.
    std::vector<Property> passing_in_scope(const std::vector<TapRule>& rules,
                                           const Property& phi) const {
        std::vector<Property> out;
        for (const auto& p : catalog_) {
            if (p.id == phi.id) continue;
            if (!in_scope(p, declared_, catalog_attributes())) continue;
            auto gm = build_model(rules, p);
            if (Checker(*gm, {opt_.state_cap}).check(p).verdict == Verdict::Pass)
                out.push_back(p);
        }
        return out;
    }

private:
    static const TapRule* find_rule(const std::vector<TapRule>& rules,
                                    const std::string& id) {
        for (const auto& r : rules)
            if (r.id == id) return &r;
        return nullptr;
    }

    static std::vector<std::string> acted_rules(const Counterexample& cex) {
        std::vector<std::string> out;
        for (const auto& l : cex.labels) {
            if (l.kind != EdgeKind::RuleFire && l.kind != EdgeKind::ActionComplete) continue;
            if (std::find(out.begin(), out.end(), l.subject) == out.end())
                out.push_back(l.subject);
        }
        return out;
    }

    static int next_rule_number(const std::vector<TapRule>& rules) {
        int next = 0;
        for (const auto& r : rules) {
            if (r.id.size() < 2 || r.id[0] != 'r') continue;
            bool num = true;
            for (std::size_t i = 1; i < r.id.size(); ++i)
                num &= r.id[i] >= '0' && r.id[i] <= '9';
            if (num) next = std::max(next, std::stoi(r.id.substr(1)));
        }
        return next;
    }

    // Release guard for wait-completion moves: the lowest label of a leveled
    // precondition attribute, or the complement of a numeric precondition.
    static std::optional<Constraint> wait_guard(const Property& phi, const Model& m) {
        for (const auto& a : phi.pre) {
            if (a.kind == AtomKind::Timer) continue;
            const AttributeId& attr = a.constraint.attr;
            if (!m.relevant(attr) || m.attrs().at(attr).actuator) continue;
            if (m.attrs().at(attr).domain.is_enum()) return Constraint{attr, CmpOp::Eq, 0};
            return Constraint{attr, complement_op(a.constraint.op), a.constraint.value};
        }
        return std::nullopt;
    }

    // Condition vocabulary for one property atom: every label of an enum
    // attribute, the atom and its complement for a numeric one.
    static std::vector<Constraint> condition_candidates(const Constraint& atom,
                                                        const Model& m) {
        const Domain& d = m.attrs().at(atom.attr).domain;
        std::vector<Constraint> out;
        if (d.is_enum()) {
            for (std::size_t i = 0; i < d.labels.size(); ++i)
                out.push_back({atom.attr, CmpOp::Eq, static_cast<Value>(i)});
        } else {
            out.push_back(atom);
            out.push_back(atom.negated());
        }
        return out;
    }

    // Assignment making a precondition atom false, when its attribute is an
    // actuator the system can drive.
    static std::optional<Assignment> falsifying_assignment(const Constraint& c,
                                                           const Model& m) {
        if (!m.relevant(c.attr) || !m.attrs().at(c.attr).actuator) return std::nullopt;
        if (c.op == CmpOp::Neq) return Assignment{c.attr, c.value};
        if (c.op == CmpOp::Eq) {
            auto comp = complement_value(m.attrs().at(c.attr).domain, c.value);
            if (comp) return Assignment{c.attr, *comp};
        }
        return std::nullopt;
    }

    // Rules that fire somewhere in the model's reachable space.
    std::set<std::string> fired_rules(const Model& m) const {
        Automaton a(m, opt_.state_cap);
        std::set<std::string> out;
        for (const auto& e : a.edges())
            if (e.label.kind == EdgeKind::RuleFire) out.insert(e.label.subject);
        return out;
    }

    // Every base-fired rule still present must fire somewhere after the patch.
    bool rules_alive(const AbstractModel& am, const Model& patched) const {
        std::set<std::string> fired = fired_rules(patched);
        for (const auto& rid : am.base_fired) {
            bool present = false;
            for (const auto& cr : patched.rules()) present |= cr.rule.id == rid;
            if (present && !fired.count(rid)) return false;
        }
        return true;
    }

    void record_trace_views(Patch& patch, const Model& pm, const AbstractModel& am) const {
        std::vector<std::string> ids;
        for (const auto& r : am.base_rules) ids.push_back(r.id);
        for (const auto& s : patch.trace.states) {
            std::map<AttributeId, Value> vals;
            for (const auto& id : am.base->attr_order())
                if (pm.relevant(id)) vals[id] = pm.logical(s, id);
            patch.state_values.push_back(std::move(vals));
            // only a settled recurrence means the patched system rests in the
            // indicator configuration; urgent passes through it are the patch
            // doing its work
            if (pm.settled(s))
                patch.state_sigs.push_back(
                    detail::exec_signature(pm, s, ids, am.base->attr_order()));
        }
    }

    // Attributes the automation cannot influence: not actuators, and no device
    // effect targets their channel.
    std::vector<AttributeId> unaffected_attrs(const Model& m) const {
        std::vector<AttributeId> out;
        for (const auto& id : m.attr_order()) {
            if (m.attrs().at(id).actuator) continue;
            auto ch = channel_from_name(id.entity);
            bool affected = false;
            if (ch) {
                for (const auto& spec : m.channels().effects()) {
                    if (spec.channel != *ch) continue;
                    if (m.relevant(spec.action.attr)) affected = true;
                }
            }
            if (!affected) out.push_back(id);
        }
        return out;
    }

    // Residual-progress identity: the indicator's attribute values plus the
    // set of original rules acting on the residual trace.
    std::string progress_signature(const Counterexample& cex, const Model& pm,
                                   const std::vector<TapRule>& base_rules,
                                   const Property& phi) const {
        Checker ck(pm, {opt_.state_cap});
        int idx = search_spurious_indicator(ck, cex, phi);
        std::string sig;
        for (const auto& id : pm.attr_order())
            sig += id.str() + "=" +
                   std::to_string(
                       pm.logical(cex.states[static_cast<std::size_t>(idx)], id)) +
                   ";";
        sig += "|";
        for (const auto& rid : acted_rules(cex))
            if (find_rule(base_rules, rid)) sig += rid + ",";
        return sig;
    }

    // Enumeration order: phase-0 singles by tier, phase-0 pairs by summed
    // tier, then the deferred phase's singles and pairs. Pairs violating flag
    // discipline are dropped here; synthetic rules count as distinct owners.
    static void build_subsets(AbstractModel& am) {
        std::vector<int> order(am.moves.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            const auto& ma = am.moves[static_cast<std::size_t>(a)];
            const auto& mb = am.moves[static_cast<std::size_t>(b)];
            if (ma.phase != mb.phase) return ma.phase < mb.phase;
            if (ma.tier != mb.tier) return ma.tier < mb.tier;
            return a < b;
        });

        auto placed_flags = [&](int i) {
            FlagAssignment fa;
            for (Predicate p : am.moves[static_cast<std::size_t>(i)].flags.on) {
                if (p.rule_id.empty()) p.rule_id = "+" + std::to_string(i);
                fa.on.push_back(std::move(p));
            }
            return fa;
        };

        std::vector<int> p0, p1;
        for (int i : order)
            (am.moves[static_cast<std::size_t>(i)].phase == 0 ? p0 : p1).push_back(i);

        auto add_pairs = [&](const std::vector<int>& pool) {
            std::vector<std::pair<int, std::pair<int, int>>> pairs;
            for (std::size_t i = 0; i < pool.size(); ++i)
                for (std::size_t j = i + 1; j < pool.size(); ++j) {
                    FlagAssignment fa = placed_flags(pool[i]);
                    for (const auto& p : placed_flags(pool[j]).on) fa.on.push_back(p);
                    if (!flags_disciplined(fa)) continue;
                    pairs.push_back({am.moves[static_cast<std::size_t>(pool[i])].tier +
                                         am.moves[static_cast<std::size_t>(pool[j])].tier,
                                     {pool[i], pool[j]}});
                }
            std::stable_sort(pairs.begin(), pairs.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            for (const auto& pr : pairs)
                am.subsets.push_back({pr.second.first, pr.second.second});
        };

        for (int i : p0) am.subsets.push_back({i});
        add_pairs(p0);
        for (int i : p1) am.subsets.push_back({i});
        add_pairs(p1);
    }

    AttributeTable declared_;
    std::vector<TapRule> rules_;
    Scenario scenario_;
    ChannelTable channels_;
    ModelOptions mopt_;
    std::vector<Property> catalog_;
    NprOptions opt_;

    std::set<std::string> progress_sigs_;
    std::vector<std::string> class_history_;
    int total_iterations_ = 0;
    int rounds_entered_ = 0;
};

}  // namespace taprepair
