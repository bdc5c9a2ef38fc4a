#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "aptc/bisim.hpp"
#include "aptc/dsl.hpp"
#include "aptc/lts.hpp"
#include "aptc/term.hpp"

namespace aptc {

// The fully composed system of a spec: conflict elimination (when the
// environment declares conflicts), then encapsulation (when the block set
// is nonempty), then abstraction (when the hide set is nonempty), wrapped
// around the declared composition. A spec with a single process and no
// relations composes to the process itself. Null when the spec declares no
// composition.
Term compose(const PatternSpec& spec);

struct VerifyOptions {
    // Bound on explored states, per side, before the collapse.
    std::size_t max_states = 200'000;
};

enum class Verdict { Holds, Fails, Error };

struct VerificationReport {
    Verdict verdict = Verdict::Error;
    std::string pattern;
    std::string error;            // Verdict::Error only
    bool resource_limit = false;  // the error was a state-bound overflow

    std::size_t system_states = 0;     // raw composed exploration
    std::size_t collapsed_states = 0;  // after fair-abstraction collapse
    std::size_t claim_states = 0;

    // Verdict::Fails only: a distinguishing observation, replayable on the
    // collapsed system and on the claim.
    std::optional<Counterexample> counterexample;

    double seconds = 0.0;

    std::string to_json() const;
};

// Check a spec's claim: explore the composed system under the spec's
// environment, collapse fair silent clusters, explore the claim, and decide
// rooted branching step equivalence between the two.
VerificationReport verify(const PatternSpec& spec, const VerifyOptions& opts = {});

}  // namespace aptc
