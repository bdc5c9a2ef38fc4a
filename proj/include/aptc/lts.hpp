#pragma once

#include <string>
#include <vector>

#include "aptc/action.hpp"

namespace aptc {

// A finite step-labeled transition system. State 0 is initial. A transition
// target of TICK (-1) is successful termination after the step. States also
// carry a `terminating` flag for processes that may finish without a step
// (skip-like states); `divergent` marks collapsed tau clusters with no exit.
//
// Identity is canonical: states are numbered in breadth-first discovery
// order, transitions per state explored in sorted (label, target-key) order,
// so equal inputs produce identical systems byte for byte.
struct StepLTS {
    static constexpr int TICK = -1;

    struct State {
        std::string key;  // canonical term rendering (debugging / determinism)
        bool terminating = false;
        bool divergent = false;
    };
    struct Transition {
        int src = 0;
        StepLabel label;
        int dst = TICK;

        friend bool operator<(const Transition& a, const Transition& b) {
            if (a.src != b.src) return a.src < b.src;
            if (a.label != b.label) return a.label < b.label;
            return a.dst < b.dst;
        }
        friend bool operator==(const Transition& a, const Transition& b) {
            return a.src == b.src && a.label == b.label && a.dst == b.dst;
        }
    };

    std::vector<State> states;
    std::vector<Transition> transitions;  // kept sorted

    int initial = 0;

    std::size_t state_count() const { return states.size(); }

    // Outgoing transitions of one state (contiguous in the sorted vector).
    std::vector<Transition> outgoing(int state) const;

    // All distinct labels.
    std::vector<StepLabel> alphabet() const;

    void sort_transitions();

    // Canonical JSON (stable field order, sorted transitions).
    std::string to_json(bool include_keys = true) const;
    static StepLTS from_json(const std::string& text);

    // GraphViz rendering.
    std::string to_dot() const;
};

}  // namespace aptc
