#pragma once

#include <string>
#include <vector>

#include "aptc/env.hpp"
#include "aptc/term.hpp"

namespace aptc {

enum class Severity { Error, Warning };

struct Diagnostic {
    Severity severity = Severity::Error;
    std::string path;  // term path like "root.kids[1]" or a declaration site
    std::string message;
};

// Well-formedness of a term against an environment:
//   - every Var is bound by an enclosing specification (RecRef closure);
//   - encap/abs sets contain ordinary action names only (never tau/delta);
//   - gamma is symmetric, # and % irreflexive, <= acyclic;
//   - all indexed shadows within the term are pairwise distinct as
//     (base event, index) pairs;
//   - a state operator requires state tables in the environment;
//   - events mentioned by gamma/#/%/<=/H/I that never occur in the term's
//     alphabet are reported as warnings.
// Returns an empty list iff the term is accepted by every later stage.
std::vector<Diagnostic> validate(const Term& t, const Environment& env);

bool has_errors(const std::vector<Diagnostic>& diags);

std::string format_diagnostics(const std::vector<Diagnostic>& diags);

}  // namespace aptc
