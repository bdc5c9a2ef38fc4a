#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "aptc/action.hpp"

namespace aptc {

// State-operator tables. Missing entries default to the identity action and
// an unchanged state, which is also the one-state encoding the race-pattern
// specifications use. An action entry of "delta" kills the transition.
// For a joint step the effects of its events are applied in canonical
// (sorted-label) order, so effect tables used with multi-event steps should
// be commutative on them.
struct StateSpec {
    std::vector<std::string> states;
    std::map<std::pair<std::string, std::string>, std::string> action;  // (state, name) -> name
    std::map<std::pair<std::string, std::string>, std::string> effect;  // (state, name) -> state

    std::string apply_action(const std::string& state, const std::string& name) const {
        auto it = action.find({state, name});
        return it == action.end() ? name : it->second;
    }
    std::string apply_effect(const std::string& state, const std::string& name) const {
        auto it = effect.find({state, name});
        return it == effect.end() ? state : it->second;
    }
};

// An asynchronous-causality constraint: send must causally precede receive.
// Operationally the pair is a credit counter keyed by the send's rendered
// data: firing `send` grants one credit, `receive` needs and consumes one.
struct CausalPair {
    ActionLabel send;
    ActionLabel receive;

    friend bool operator<(const CausalPair& a, const CausalPair& b) {
        if (a.send != b.send) return a.send < b.send;
        return a.receive < b.receive;
    }
};

// The semantic context a term is interpreted against: the communication
// function, the conflict (#), race (%) and causality (<=) relations, data
// maps for processing functions, state-operator tables, and the round-mode
// input/output classification declared by a pattern.
struct Environment {
    // gamma, keyed by the canonical renderings of the two events in sorted
    // order; absent pairs do not communicate. Symmetry is by construction.
    std::map<std::pair<std::string, std::string>, ActionLabel> gamma;

    // Irreflexive symmetric relations, stored with both orientations, keyed
    // by canonical event renderings.
    std::set<std::pair<std::string, std::string>> conflicts;  // #
    std::set<std::pair<std::string, std::string>> races;      // %

    std::vector<CausalPair> causality;  // a <= b pairs, expanded per datum

    // Data maps for processing-function symbols; identity unless declared.
    std::map<std::string, std::map<std::string, std::string>> data_maps;

    std::optional<StateSpec> state_spec;

    // Round-synchronous classification (by action name).
    std::set<std::string> inputs;
    std::set<std::string> outputs;

    void add_gamma(const ActionLabel& a, const ActionLabel& b, ActionLabel result) {
        auto ka = a.str(), kb = b.str();
        if (kb < ka) std::swap(ka, kb);
        gamma.emplace(std::make_pair(ka, kb), std::move(result));
    }
    std::optional<ActionLabel> gamma_of(const ActionLabel& a, const ActionLabel& b) const {
        auto ka = a.str(), kb = b.str();
        if (kb < ka) std::swap(ka, kb);
        auto it = gamma.find({ka, kb});
        if (it == gamma.end()) return std::nullopt;
        return it->second;
    }

    void add_conflict(const ActionLabel& a, const ActionLabel& b) {
        conflicts.insert({a.str(), b.str()});
        conflicts.insert({b.str(), a.str()});
    }
    bool in_conflict(const ActionLabel& a, const ActionLabel& b) const {
        return conflicts.count({a.str(), b.str()}) != 0;
    }

    void add_race(const ActionLabel& a, const ActionLabel& b) {
        races.insert({a.str(), b.str()});
        races.insert({b.str(), a.str()});
    }
    bool in_race(const ActionLabel& a, const ActionLabel& b) const {
        return races.count({a.str(), b.str()}) != 0;
    }

    std::string apply_data_map(const std::string& fn, const std::string& value) const {
        auto mit = data_maps.find(fn);
        if (mit == data_maps.end()) return value;
        auto vit = mit->second.find(value);
        return vit == mit->second.end() ? value : vit->second;
    }

    // True when the event is one half of some declared communication.
    bool is_comm_half(const ActionLabel& e) const;
};

}  // namespace aptc
