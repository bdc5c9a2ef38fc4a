#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "aptc/bisim.hpp"
#include "aptc/env.hpp"
#include "aptc/lts.hpp"
#include "aptc/sos.hpp"
#include "aptc/term.hpp"

namespace aptc {

// ---------------------------------------------------------------------------
// Axiom identifiers
//
// The closed identifier set of the equational theory: A1-A7 (choice and
// sequence), P1-P10 (parallelism), C11-C18 (communication), CE19-CE24
// (conflict elimination), U25-U37 (unless), D1-D6 (encapsulation), B1-B3 and
// TI1-TI6 (silent steps and abstraction), SC1-SC9 (shadows), SO1-SO5 (state
// operator), RDP (recursive definition unfolding) and CFAR (fair abstraction
// of clusters, realized on the transition system, see cfar_collapse).

const std::vector<std::string>& all_axiom_ids();
bool is_axiom_id(const std::string& id);

// Which oriented rules the rewriter may apply. Strong keeps only rules whose
// two sides are strongly step bisimilar; Full adds the silent-step laws B1
// (trailing tau erasure) and B3 (tau unit of the synchronous parallel),
// which are sound modulo rooted branching step equivalence only.
enum class RuleSet {
    Strong,
    Full,
};

// ---------------------------------------------------------------------------
// Directed rewriting

// One oriented rewrite applied at the leftmost-innermost redex: the rewritten
// term, the axiom used, and the path of child indices from the root to the
// redex. Several laws never appear as explicit steps because the term
// constructors apply them at construction time (commutativity, associativity
// and idempotence of +, right association of ., the delta and skip units);
// rewrite_step reports only the laws with visible work left to do.
struct RewriteStep {
    Term term;
    std::string axiom;
    std::vector<int> path;
};

// Returns the applied step, or nullopt when the term is a fixpoint for the
// rule set (a basic term, possibly with opaque recursion references under
// operators no oriented rule can push further).
std::optional<RewriteStep> rewrite_step(const Term& t, const Environment& env,
                                        RuleSet rules = RuleSet::Full);

// Audit trail of a normalization: the ordered list of applied axioms with
// their redex paths. Serializes to a JSON array of {axiom, path} records.
struct RewriteRecord {
    std::string axiom;
    std::vector<int> path;
};

struct RewriteTrace {
    std::vector<RewriteRecord> steps;
    std::string to_json() const;
};

// Repeated rewrite_step to a fixpoint. With the Strong rule set the result
// is strongly step bisimilar to the input; recursion-free inputs reach a
// basic term. Recursion references are treated as opaque constants: an
// operator applied directly to one stays in place. Throws ResourceLimitError
// when the fuel budget is exhausted.
Term normalize_basic(const Term& t, const Environment& env, std::size_t fuel = 1'000'000,
                     RuleSet rules = RuleSet::Strong, RewriteTrace* trace = nullptr);

// Is t a basic term: a sum of summands, each a multi-event bundle (an event
// or a ||-combination of events) optionally followed by "." and a basic
// term, or delta. With allow_rec_refs, a recursion reference may stand as a
// summand or close a summand's tail.
bool is_basic_term(const Term& t, bool allow_rec_refs = false);

// ---------------------------------------------------------------------------
// Fair abstraction

// Collapses every maximal cluster — a set of states strongly connected
// through silent transitions — to a single state carrying the cluster's
// exits; internal silent moves disappear. A transition counts as silent if
// its label is {tau} or if every event it carries is named in I. A cluster
// with no exits at all becomes a single state flagged divergent. Realizes
// fair abstraction: a retry loop equals the choice among its exits.
StepLTS cfar_collapse(const StepLTS& lts, const std::vector<std::string>& I = {});

// ---------------------------------------------------------------------------
// Axiom soundness schemas
//
// One schema per axiom: a generator drawing random closed instantiations of
// both sides together with an environment satisfying the axiom's side
// conditions. The property suite checks LTS(lhs) equivalent to LTS(rhs)
// under the schema's kind for every draw. Axioms whose side conditions
// constrain the environment (conflict, causality, communication and state
// tables) generate environments honoring exactly those conditions.

struct AxiomInstance {
    Term lhs;
    Term rhs;
    Environment env;
};

struct AxiomSchema {
    std::string id;
    EquivKind kind;  // StrongStep or RootedBranchingStep
    std::function<AxiomInstance(std::mt19937_64&)> instantiate;
};

// All schemas in table order. CFAR has no schema (it is a transition-system
// transformation, exercised through cfar_collapse and the verifier).
const std::vector<AxiomSchema>& axiom_schemas();

}  // namespace aptc
