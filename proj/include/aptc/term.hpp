#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "aptc/action.hpp"

namespace aptc {

struct TermNode;
using Term = std::shared_ptr<const TermNode>;
struct RecursiveSpec;
using RecSpecPtr = std::shared_ptr<const RecursiveSpec>;

// Operators of the term language. Alt and WholePar are kept flattened and
// sorted (n-ary); Seq is kept right-associated. Empty is the internal
// "skip" (successfully terminated) process; it is not part of the surface
// syntax but arises from plain shadows and from advancing compositions.
enum class Op : std::uint8_t {
    Empty,     // skip: terminates immediately, no steps
    Atom,      // event constant (ordinary, tau, delta, shadow)
    Seq,       // x . y
    Alt,       // x + y (n-ary, sorted, deduplicated)
    Par,       // x || y : synchronous parallel, both sides step together
    Comm,      // x | y : communication merge, all first events pair via gamma
    WholePar,  // x & y : whole parallelism (n-ary, sorted)
    Theta,     // conflict elimination
    Unless,    // x <| y
    Encaps,    // encap{H}(x)
    Abstract,  // abs{I}(x)
    StateOp,   // state[s](x)
    Var,       // recursion variable (unbound until attached to a spec)
    RecRef,    // <X | E> : variable X of recursive specification E
};

struct TermNode {
    Op op = Op::Empty;
    ActionLabel atom;                    // Atom
    std::vector<Term> kids;              // operands
    std::vector<std::string> label_set;  // Encaps H / Abstract I (sorted action names)
    std::string state;                   // StateOp: current state id
    std::string var;                     // Var / RecRef: variable name
    RecSpecPtr spec;                     // RecRef: the defining specification
    std::string key;                     // canonical rendering, computed at construction
};

// A recursive specification: named equations X_i = t_i where the right-hand
// sides refer to variables via Var nodes. Equations are closed by rec_ref /
// unfold, which substitute Var(X) with RecRef(X, spec).
struct RecursiveSpec {
    std::map<std::string, Term> equations;
    std::string hash;  // content hash over equation keys, for stable RecRef keys

    static RecSpecPtr make(std::map<std::string, Term> equations);
};

// Smart constructors. All perform the cheap structural canonicalization the
// state space is quotiented by: commutative/associative flattening and
// sorting of + and &, right-association of ., deduplication of + summands,
// unit laws for skip and annihilation/identity laws for delta.
Term empty_term();
Term atom(ActionLabel a);
Term delta_term();
Term tau_term();
Term seq(Term x, Term y);
Term alt(Term x, Term y);
Term alt(std::vector<Term> xs);
Term par(Term x, Term y);
Term comm(Term x, Term y);
Term wpar(Term x, Term y);
Term wpar(std::vector<Term> xs);
Term theta(Term x);
Term unless(Term x, Term y);
Term encaps(std::vector<std::string> H, Term x);
Term abstr(std::vector<std::string> I, Term x);
Term state_op(std::string state, Term x);
Term var_ref(std::string name);
Term rec_ref(std::string name, RecSpecPtr spec);

// Substitute Var(name) -> replacement throughout (capture is not possible:
// variables have global names within one specification).
Term substitute(const Term& t, const std::map<std::string, Term>& subst);

// RDP unfolding: the right-hand side of var with every variable replaced by
// its RecRef closure. Throws std::out_of_range for an unknown variable.
Term unfold(const std::string& var, const RecSpecPtr& spec);

// All ordinary action labels syntactically occurring in t (shadow bases
// excluded; recursion followed once per specification variable).
std::set<ActionLabel> alphabet(const Term& t);

// All ordinary action NAMES occurring in t.
std::set<std::string> alphabet_names(const Term& t);

// Guardedness / linearity verdict for a recursive specification.
struct GuardVerdict {
    bool guarded = false;
    bool linear = false;
    std::vector<std::string> witness_cycle;  // variables on a silent cycle when unguarded
};

// guarded: no variable can reach itself through unfoldings whose prefix is
// silent only (tau, shadows, skip) — i.e. no infinite tau/shadow unfolding.
// linear: every right-hand side is a sum of summands of the form
// B1 . B2 . ... . Bm [. X] where each Bi is a multi-event bundle (an event or
// a ||/& bundle of events).
GuardVerdict check_guarded_linear(const RecSpecPtr& spec);

}  // namespace aptc
