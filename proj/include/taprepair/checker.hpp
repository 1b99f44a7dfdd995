#pragma once

#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "taprepair/model.hpp"
#include "taprepair/properties.hpp"

namespace taprepair {

enum class Verdict { Pass, Violation, Inconclusive };

inline const char* verdict_str(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Violation: return "violation";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct Counterexample {
    std::vector<PackedState> states;  // states[0] is initial
    std::vector<EdgeLabel> labels;    // labels[i] takes states[i] to states[i+1]
    int violating_index = 0;          // the settled state where post fails
    int pre_index = 0;                // the state where the precondition held
    std::optional<int> lasso_start;   // set when the last state loops back into the path

    std::string render(const Model& m, const std::string& prop_id = "") const {
        std::string out;
        for (std::size_t i = 0; i < states.size(); ++i) {
            std::string line = "[" + std::to_string(i) + "] ";
            if (i > 0) line += "-" + labels[i - 1].str() + "-> ";
            if (i > 0) {
                for (int a = 0; a < static_cast<int>(m.attr_order().size()); ++a)
                    if (states[i][a] != states[i - 1][a])
                        line += "@" + m.attr_order()[a].str() + "=" +
                                m.attrs().at(m.attr_order()[a]).domain.value_str(states[i][a]) +
                                " ";
            }
            line += m.state_str(states[i]);
            if (static_cast<int>(i) == violating_index)
                line += "  << violates" + (prop_id.empty() ? "" : " " + prop_id);
            out += line + "\n";
        }
        if (lasso_start) out += "(loops back to [" + std::to_string(*lasso_start) + "])\n";
        return out;
    }
};

struct CheckResult {
    Verdict verdict = Verdict::Pass;
    std::optional<Counterexample> cex;
    std::size_t states_explored = 0;
    bool truncated = false;
    std::string instance_id;  // latency-expanded instance that produced the verdict
};

struct CheckOptions {
    std::size_t state_cap = 2'000'000;
    // Bounded search: states deeper than this many edges from an initial
    // state are not expanded; a Pass under an active bound reports
    // Inconclusive. Urgent-burst resolution is not cut off mid-burst.
    std::size_t depth_cap = std::numeric_limits<std::size_t>::max();
};

// Explicit-state breadth-first safety checking over the model. Atoms read the
// platform-visible attribute values (sensor mirrors), matching what rules and
// users observe; raw physical values only drive the dynamics underneath.
// Preconditions are read at any state; postconditions are read once the
// platform settles: a violation is a state where the precondition holds and
// some urgent resolution reaches a settled state falsifying the
// postcondition. State shapes restrict both readings to settled states.
class Checker {
public:
    explicit Checker(const Model& m, CheckOptions opt = {}) : m_(&m), opt_(opt) {}

    const Model& model() const { return *m_; }

    // Latency-bounded properties compile into one instance per extended rule
    // that drives the postcondition: the hold schedule must still be intact
    // while more than (duration - permitted) of it remains.
    static std::vector<Property> expand_within(const Property& p, const Model& m) {
        if (!p.permitted_latency_sec) return {p};
        std::vector<Property> out;
        for (const auto& cr : m.rules()) {
            if (!cr.extended || cr.dur_ticks <= 0) continue;
            bool drives = false;
            for (const auto& a : cr.rule.action.assigns)
                drives |= a.attr == p.post.constraint.attr && p.post.constraint.holds(a.value);
            if (!drives) continue;
            Property inst = p;
            inst.id = p.id + "[" + cr.rule.id + "]";
            inst.permitted_latency_sec.reset();
            int threshold = std::max(0, cr.rule.action.duration_sec - *p.permitted_latency_sec);
            inst.pre.push_back(Atom::timer(cr.rule.id, CmpOp::Geq, threshold));
            out.push_back(std::move(inst));
        }
        return out;
    }

    CheckResult check(const Property& p) const {
        auto instances = expand_within(p, *m_);
        CheckResult merged;
        for (const auto& inst : instances) {
            CheckResult r = check_instance(inst);
            merged.states_explored += r.states_explored;
            if (r.verdict == Verdict::Violation) {
                r.states_explored = merged.states_explored;
                r.instance_id = inst.id;
                return r;
            }
            merged.truncated |= r.truncated;
        }
        merged.verdict = merged.truncated ? Verdict::Inconclusive : Verdict::Pass;
        return merged;
    }

    bool pre_holds(const PackedState& s, const Property& p) const {
        for (const auto& a : p.pre) {
            if (a.kind == AtomKind::Timer) {
                int ticks = (a.timer_sec + m_->tick_sec() - 1) / m_->tick_sec();
                if (!m_->eval_timer_atom(s, a.rule_id, a.timer_op, ticks)) return false;
            } else if (!m_->holds_log(s, a.constraint)) {
                return false;
            }
        }
        return true;
    }

    bool post_holds(const PackedState& s, const Property& p) const {
        return m_->holds_log(s, p.post.constraint);
    }

    // Recomputes the violating index of a counterexample: the first settled
    // state satisfying the precondition with the postcondition failed.
    int locate_violating_state(const Counterexample& cex, const Property& p) const {
        for (std::size_t k = 0; k < cex.states.size(); ++k) {
            if (!m_->settled(cex.states[k])) continue;
            if (pre_holds(cex.states[k], p) && !post_holds(cex.states[k], p))
                return static_cast<int>(k);
        }
        throw std::logic_error("counterexample has no violating state for " + p.id);
    }

private:
    struct Search {
        std::map<PackedState, int> ids;
        std::vector<PackedState> states;
        std::vector<int> parent;
        std::vector<EdgeLabel> in_label;
        std::vector<std::size_t> depth;
        std::deque<int> queue;

        int intern(const PackedState& s, int par, const EdgeLabel& l) {
            auto it = ids.find(s);
            if (it != ids.end()) return it->second;
            int id = static_cast<int>(states.size());
            states.push_back(s);
            ids.emplace(s, id);
            parent.push_back(par);
            in_label.push_back(l);
            depth.push_back(par < 0 ? 0 : depth[par] + 1);
            queue.push_back(id);
            return id;
        }
    };

    // Both shapes check settled observation points: the urgent burst is the
    // platform's zero-time window to discharge the obligation, so a violation
    // exists only when the system RESTS in pre with the postcondition failed.
    // Over stuttering traces this collapses the X() of the event template onto
    // the settled reading; timer atoms in pre carry the latency bound.
    CheckResult check_instance(const Property& p) const {
        Search g;
        CheckResult res;
        for (const auto& s : m_->initial_states()) g.intern(s, -1, {});
        while (!g.queue.empty()) {
            int id = g.queue.front();
            g.queue.pop_front();
            if (g.states.size() > opt_.state_cap) {
                res.truncated = true;
                break;
            }
            if (g.depth[id] >= opt_.depth_cap) {
                res.truncated = true;
                continue;
            }
            PackedState s = g.states[id];
            if (m_->settled(s) && pre_holds(s, p) && !post_holds(s, p)) {
                res.verdict = Verdict::Violation;
                res.cex = build_cex(g, id);
                res.states_explored = g.states.size();
                return res;
            }
            for (auto& [l, t] : m_->successors(s)) g.intern(t, id, l);
        }
        res.states_explored = g.states.size();
        res.verdict = res.truncated ? Verdict::Inconclusive : Verdict::Pass;
        return res;
    }

    // Discovery path from an initial state to the violating settled state.
    Counterexample build_cex(const Search& g, int bad_id) const {
        std::vector<int> chain;
        for (int cur = bad_id; cur != -1; cur = g.parent[cur]) chain.push_back(cur);
        std::reverse(chain.begin(), chain.end());
        Counterexample cex;
        for (std::size_t i = 0; i < chain.size(); ++i) {
            cex.states.push_back(g.states[chain[i]]);
            if (i > 0) cex.labels.push_back(g.in_label[chain[i]]);
        }
        cex.pre_index = static_cast<int>(chain.size()) - 1;
        cex.violating_index = static_cast<int>(cex.states.size()) - 1;
        // a safety prefix closes into a lasso when the last state can rejoin
        // the path; the trivial self-stutter does not count as a cycle
        for (auto& [l, t] : m_->successors(cex.states.back())) {
            if (l.kind == EdgeKind::Stutter) continue;
            for (std::size_t i = 0; i < cex.states.size(); ++i)
                if (cex.states[i] == t) {
                    cex.lasso_start = static_cast<int>(i);
                    break;
                }
            if (cex.lasso_start) break;
        }
        return cex;
    }

    const Model* m_;
    CheckOptions opt_;
};

}  // namespace taprepair
