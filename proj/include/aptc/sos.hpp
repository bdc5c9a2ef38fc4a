#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "aptc/env.hpp"
#include "aptc/lts.hpp"
#include "aptc/term.hpp"

namespace aptc {

// Thrown when an exploration exceeds its state bound (CLI exit code 3).
struct ResourceLimitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One first step of a term: the step label and the successor term.
// A null successor means the step ends in successful termination.
struct StepOption {
    StepLabel label;
    Term next;
};

// Whether the term can terminate successfully right now without a step.
bool can_terminate(const Term& t);

// All first steps of `t` in the free (unconstrained interleaving+step)
// semantics. Shadow events may appear in the returned labels; they are
// pairing obligations for an enclosing parallel composition and are
// discarded only at the root of an exploration.
std::vector<StepOption> step_outgoing(const Term& t, const Environment& env);

struct BuildOptions {
    std::size_t max_states = 1'000'000;
    // Store the rendered term (plus any credit context) in State::key.
    bool keep_term_keys = true;
};

struct BuildStats {
    std::size_t states = 0;
    std::size_t transitions = 0;
};

// Explore the reachable step-labelled transition system of a closed term.
// Causality constraints from the environment are enforced with credit
// counters woven into the state. Steps whose labels still carry unpaired
// shadow events are dropped at this root level. Throws ResourceLimitError
// when `max_states` is exceeded.
StepLTS build_lts(const Term& t, const Environment& env, const BuildOptions& opts = {},
                  BuildStats* stats = nullptr);

}  // namespace aptc
