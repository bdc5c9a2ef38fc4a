#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aptc/env.hpp"
#include "aptc/term.hpp"
#include "aptc/validate.hpp"

namespace aptc {

// A parsed and fully expanded pattern specification. Families, sum binders
// and declaration for-clauses are expanded at parse time, so everything in
// here is concrete: process names like "L[2]" are plain strings and the
// environment holds per-datum entries.
struct PatternSpec {
    std::string name;

    // The data domain, in declaration order.
    std::vector<std::string> delta;

    // Named integer parameters (n, bounds, ...) after overrides.
    std::map<std::string, int> params;

    // Declared or inferred action arities: name -> argument count.
    std::map<std::string, int> actions;

    // Every process equation, closed under one specification.
    RecSpecPtr processes;

    // Communication, conflicts, races, causality, data maps, state tables.
    Environment env;

    std::vector<std::string> block_set;  // encapsulated names (killed at the boundary)
    std::vector<std::string> hide_set;   // abstracted names (turned silent)

    // The declared root bundle with process references closed; null when the
    // file declares none (a single-process file defaults to that process).
    Term system;

    // The claimed external behavior; null when omitted. A self-referential
    // claim is closed through its own one-equation specification.
    Term claim;
};

// A parse/validation message anchored to the source text.
struct SpecDiagnostic {
    int line = 0;  // 1-based
    int col = 0;   // 1-based
    Severity severity = Severity::Error;
    std::string message;

    std::string render() const;
};

struct SpecParseResult {
    // Present iff no error-severity diagnostics were produced.
    std::optional<PatternSpec> spec;
    std::vector<SpecDiagnostic> diagnostics;

    bool ok() const { return spec.has_value(); }
};

// Parse specification text; `overrides` replaces declared parameter values
// (and the special parameter "delta" regenerates the data domain as
// d1..dN before expansion).
SpecParseResult parse_pattern(const std::string& text,
                              const std::map<std::string, int>& overrides = {});

// Canonical text for a spec: fixed statement order, expanded families,
// deterministic set/table ordering. parse_pattern(pretty_print(s)) yields a
// spec structurally equal to s.
std::string pretty_print(const PatternSpec& spec);

// Canonical rendering of one term in the surface syntax (used by the
// pretty-printer and the CLI's canonical-form output).
std::string render_term(const Term& t);

// Structural equality of two specs (field-by-field; terms by canonical key).
bool specs_equal(const PatternSpec& a, const PatternSpec& b);

}  // namespace aptc
