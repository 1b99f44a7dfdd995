#pragma once

#include <deque>
#include <map>
#include <string>
#include <vector>

#include "taprepair/model.hpp"

namespace taprepair {

// Explicit state graph built breadth-first from the model's initial states.
// State ids are discovery order, so the construction is deterministic for a
// fixed model.
class Automaton {
public:
    struct Edge {
        int from = 0;
        EdgeLabel label;
        int to = 0;
    };

    explicit Automaton(const Model& model, std::size_t state_cap = 2'000'000)
        : model_(&model) {
        std::deque<int> queue;
        for (const auto& s : model.initial_states()) {
            int id = intern(s);
            if (id == static_cast<int>(states_.size()) - 1) {
                initial_.push_back(id);
                queue.push_back(id);
            } else if (std::find(initial_.begin(), initial_.end(), id) == initial_.end()) {
                initial_.push_back(id);
            }
        }
        while (!queue.empty()) {
            int id = queue.front();
            queue.pop_front();
            if (states_.size() > state_cap) {
                truncated_ = true;
                break;
            }
            PackedState s = states_[id];  // copy: successors() may grow states_
            for (auto& [label, t] : model.successors(s)) {
                std::size_t before = states_.size();
                int tid = intern(t);
                edges_.push_back({id, label, tid});
                if (states_.size() > before) queue.push_back(tid);
            }
        }
    }

    const Model& model() const { return *model_; }
    const std::vector<PackedState>& states() const { return states_; }
    const std::vector<int>& initial() const { return initial_; }
    const std::vector<Edge>& edges() const { return edges_; }
    bool truncated() const { return truncated_; }

    int id_of(const PackedState& s) const {
        auto it = ids_.find(s);
        return it == ids_.end() ? -1 : it->second;
    }

    std::size_t settled_count() const {
        std::size_t n = 0;
        for (const auto& s : states_) n += model_->settled(s) ? 1 : 0;
        return n;
    }

    // One line per transition: "<id> -label-> <id>".
    std::string dump() const {
        std::string out;
        for (int id : initial_) out += "initial " + std::to_string(id) + "\n";
        for (const auto& e : edges_)
            out += std::to_string(e.from) + " -" + e.label.str() + "-> " +
                   std::to_string(e.to) + "\n";
        return out;
    }

private:
    int intern(const PackedState& s) {
        auto it = ids_.find(s);
        if (it != ids_.end()) return it->second;
        int id = static_cast<int>(states_.size());
        states_.push_back(s);
        ids_.emplace(s, id);
        return id;
    }

    const Model* model_;
    std::vector<PackedState> states_;
    std::map<PackedState, int> ids_;
    std::vector<int> initial_;
    std::vector<Edge> edges_;
    bool truncated_ = false;
};

}  // namespace taprepair
