#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aptc/lts.hpp"

namespace aptc {

enum class EquivKind {
    StrongStep,
    BranchingStep,
    RootedBranchingStep,
};

// A distinguishing observation. `trace` is a sequence of step labels leading
// both systems (deterministically, as label-set runs) to a divergence point;
// `refused` is a label one side can then perform and the other cannot —
// refusing_side names the refuser (1 or 2). For differences that are not
// trace-expressible (equal traces, different branching), `trace` leads to the
// earliest split found by refinement and `note` carries both offer sets.
struct Counterexample {
    std::vector<StepLabel> trace;
    std::optional<StepLabel> refused;
    int refusing_side = 0;
    bool termination_mismatch = false;
    std::string note;
};

struct EquivalenceVerdict {
    bool equivalent = false;
    // Witness relation over (state of l1, state of l2); StepLTS::TICK stands
    // for the successful-termination state. Present when equivalent.
    std::vector<std::pair<int, int>> relation;
    std::optional<Counterexample> counterexample;

    std::string to_json() const;
};

// Greatest-fixpoint decision procedure straight off the definitions.
// Testing oracle: intentionally simple, quadratic in pairs, capped at 40
// states combined (throws std::length_error beyond).
EquivalenceVerdict brute_force_bisim(const StepLTS& l1, const StepLTS& l2, EquivKind kind);

// Re-check that `relation` satisfies the transfer conditions of `kind`
// between l1 and l2 and relates the two initial states. Used to audit
// returned witnesses.
bool verify_witness(const StepLTS& l1, const StepLTS& l2, EquivKind kind,
                    const std::vector<std::pair<int, int>>& relation);

// Partition-refinement checkers (efficient path). Verdicts agree with
// brute_force_bisim by construction and by the randomized agreement suite.
EquivalenceVerdict strong_step_bisim(const StepLTS& l1, const StepLTS& l2);
EquivalenceVerdict rooted_branching_step_bisim(const StepLTS& l1, const StepLTS& l2);

// Bounded pomset equivalence: step transitions are closed under sequential
// composition into pomset-labeled transitions of at most k events (rendered
// as a series of steps); bisimulation is then decided on the enriched
// systems. k = 1 restricts to singleton steps. k is capped (throws
// std::invalid_argument beyond the cap).
EquivalenceVerdict pomset_bisim_bounded(const StepLTS& l1, const StepLTS& l2, int k);
inline constexpr int kMaxPomsetBound = 6;

enum class QuotientKind { StrongStep, BranchingStep };

// Minimal LTS per the kind; idempotent; equivalent to the input under the
// same kind. Branching quotient drops inert tau loops.
StepLTS quotient(const StepLTS& l, QuotientKind kind);

// The partition underlying quotient: block id per state.
std::vector<int> partition_states(const StepLTS& l, QuotientKind kind);

// Does `trace` (with `refused` afterwards, if set) replay on l? For
// branching kinds, tau-steps may be interleaved between trace labels.
// Returns true when the trace is executable and, if `refused` is set, the
// refusal is real (no continuation with that label).
bool trace_replays(const StepLTS& l, const std::vector<StepLabel>& trace,
                   const std::optional<StepLabel>& refused, bool tau_abstract,
                   bool expect_refusal);

}  // namespace aptc
