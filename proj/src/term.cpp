#include "aptc/term.hpp"

#include "aptc/env.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace aptc {

// ---------------------------------------------------------------------------
// ActionLabel / StepLabel

std::string ActionLabel::str() const {
    switch (kind) {
        case ActionKind::Tau: return "tau";
        case ActionKind::Delta: return "delta";
        case ActionKind::ShadowPlain: return "@S";
        case ActionKind::Shadow: {
            std::string s = "@S[" + name;
            if (!args.empty()) {
                s += "(";
                for (std::size_t i = 0; i < args.size(); ++i) {
                    if (i) s += ",";
                    s += args[i];
                }
                s += ")";
            }
            s += "," + std::to_string(shadow_index) + "]";
            return s;
        }
        case ActionKind::Ordinary: break;
    }
    if (args.empty()) return name;
    std::string s = name + "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) s += ",";
        s += args[i];
    }
    s += ")";
    return s;
}

void StepLabel::normalize() {
    bool any_visible = false;
    for (const auto& e : events) {
        assert(!e.is_delta());
        if (!e.is_tau()) any_visible = true;
    }
    if (any_visible) {
        events.erase(std::remove_if(events.begin(), events.end(),
                                    [](const ActionLabel& e) { return e.is_tau(); }),
                     events.end());
    } else {
        events.assign(1, ActionLabel::tau());
    }
    std::sort(events.begin(), events.end());
}

bool StepLabel::contains_shadow() const {
    return std::any_of(events.begin(), events.end(), [](const ActionLabel& e) {
        return e.is_shadow() || e.is_plain_shadow();
    });
}

std::string StepLabel::str() const {
    std::string s = "{";
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (i) s += ",";
        s += events[i].str();
    }
    s += "}";
    return s;
}

// ---------------------------------------------------------------------------
// Construction helpers

namespace {

Term make_node(TermNode n) {
    return std::make_shared<const TermNode>(std::move(n));
}

std::string join_keys(const std::vector<Term>& kids, const char* sep) {
    std::string s;
    for (std::size_t i = 0; i < kids.size(); ++i) {
        if (i) s += sep;
        s += kids[i]->key;
    }
    return s;
}

std::string set_text(const std::vector<std::string>& names) {
    std::string s = "{";
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) s += ",";
        s += names[i];
    }
    s += "}";
    return s;
}

bool is_delta_term(const Term& t) { return t->op == Op::Atom && t->atom.is_delta(); }
bool is_empty_term(const Term& t) { return t->op == Op::Empty; }

}  // namespace

Term empty_term() {
    static const Term t = [] {
        TermNode n;
        n.op = Op::Empty;
        n.key = "skip";
        return make_node(std::move(n));
    }();
    return t;
}

Term delta_term() {
    static const Term t = [] {
        TermNode n;
        n.op = Op::Atom;
        n.atom = ActionLabel::delta();
        n.key = "delta";
        return make_node(std::move(n));
    }();
    return t;
}

Term tau_term() { return atom(ActionLabel::tau()); }

Term atom(ActionLabel a) {
    if (a.is_plain_shadow()) return empty_term();  // plain shadow is skip
    if (a.is_delta()) return delta_term();
    TermNode n;
    n.op = Op::Atom;
    n.atom = std::move(a);
    n.key = n.atom.str();
    return make_node(std::move(n));
}

Term seq(Term x, Term y) {
    if (is_empty_term(x)) return y;
    if (is_empty_term(y)) return x;
    if (is_delta_term(x)) return delta_term();
    if (x->op == Op::Seq) {  // right-associate
        return seq(x->kids[0], seq(x->kids[1], std::move(y)));
    }
    TermNode n;
    n.op = Op::Seq;
    n.key = "(" + x->key + "." + y->key + ")";
    n.kids = {std::move(x), std::move(y)};
    return make_node(std::move(n));
}

Term alt(std::vector<Term> xs) {
    std::vector<Term> flat;
    for (auto& x : xs) {
        if (x->op == Op::Alt) {
            flat.insert(flat.end(), x->kids.begin(), x->kids.end());
        } else if (!is_delta_term(x)) {
            flat.push_back(std::move(x));
        }
    }
    std::sort(flat.begin(), flat.end(),
              [](const Term& a, const Term& b) { return a->key < b->key; });
    flat.erase(std::unique(flat.begin(), flat.end(),
                           [](const Term& a, const Term& b) { return a->key == b->key; }),
               flat.end());
    if (flat.empty()) return delta_term();
    if (flat.size() == 1) return flat[0];
    TermNode n;
    n.op = Op::Alt;
    n.key = "(" + join_keys(flat, "+") + ")";
    n.kids = std::move(flat);
    return make_node(std::move(n));
}

Term alt(Term x, Term y) { return alt(std::vector<Term>{std::move(x), std::move(y)}); }

Term par(Term x, Term y) {
    if (is_delta_term(x) || is_delta_term(y)) return delta_term();
    if (is_empty_term(x) && is_empty_term(y)) return empty_term();
    TermNode n;
    n.op = Op::Par;
    n.key = "(" + x->key + "||" + y->key + ")";
    n.kids = {std::move(x), std::move(y)};
    return make_node(std::move(n));
}

Term comm(Term x, Term y) {
    if (is_delta_term(x) || is_delta_term(y)) return delta_term();
    if (is_empty_term(x) && is_empty_term(y)) return empty_term();
    TermNode n;
    n.op = Op::Comm;
    n.key = "(" + x->key + "|" + y->key + ")";
    n.kids = {std::move(x), std::move(y)};
    return make_node(std::move(n));
}

Term wpar(std::vector<Term> xs) {
    std::vector<Term> flat;
    bool saw_delta = false;
    for (auto& x : xs) {
        if (x->op == Op::WholePar) {
            flat.insert(flat.end(), x->kids.begin(), x->kids.end());
        } else if (is_empty_term(x)) {
            continue;  // finished component
        } else if (is_delta_term(x)) {
            saw_delta = true;  // blocks termination, contributes no moves
        } else {
            flat.push_back(std::move(x));
        }
    }
    if (saw_delta) flat.push_back(delta_term());
    std::sort(flat.begin(), flat.end(),
              [](const Term& a, const Term& b) { return a->key < b->key; });
    // Duplicate delta components collapse; other duplicates are kept (two
    // equal concurrent processes are a real multiset).
    for (std::size_t i = 1; i < flat.size();) {
        if (is_delta_term(flat[i]) && is_delta_term(flat[i - 1]))
            flat.erase(flat.begin() + static_cast<long>(i));
        else
            ++i;
    }
    if (flat.empty()) return empty_term();
    if (flat.size() == 1) return flat[0];
    TermNode n;
    n.op = Op::WholePar;
    n.key = "(" + join_keys(flat, "&") + ")";
    n.kids = std::move(flat);
    return make_node(std::move(n));
}

Term wpar(Term x, Term y) { return wpar(std::vector<Term>{std::move(x), std::move(y)}); }

Term theta(Term x) {
    if (is_delta_term(x) || is_empty_term(x)) return x;
    TermNode n;
    n.op = Op::Theta;
    n.key = "theta(" + x->key + ")";
    n.kids = {std::move(x)};
    return make_node(std::move(n));
}

Term unless(Term x, Term y) {
    if (is_delta_term(x) || is_empty_term(x)) return x;
    if (is_delta_term(y) || is_empty_term(y)) return x;  // nothing to defer to
    // Stacked guards silence by the union of their alphabets, so they fold
    // into one: (x <| y) <| z = x <| (y + z).  This keeps the guards that
    // accumulate along a run canonical (and finitely many).
    if (x->op == Op::Unless) return unless(x->kids[0], alt(x->kids[1], y));
    TermNode n;
    n.op = Op::Unless;
    n.key = "(" + x->key + "<|" + y->key + ")";
    n.kids = {std::move(x), std::move(y)};
    return make_node(std::move(n));
}

Term encaps(std::vector<std::string> H, Term x) {
    std::sort(H.begin(), H.end());
    H.erase(std::unique(H.begin(), H.end()), H.end());
    if (H.empty()) return x;
    if (is_delta_term(x) || is_empty_term(x)) return x;
    TermNode n;
    n.op = Op::Encaps;
    n.key = "encap" + set_text(H) + "(" + x->key + ")";
    n.label_set = std::move(H);
    n.kids = {std::move(x)};
    return make_node(std::move(n));
}

Term abstr(std::vector<std::string> I, Term x) {
    std::sort(I.begin(), I.end());
    I.erase(std::unique(I.begin(), I.end()), I.end());
    if (I.empty()) return x;
    if (is_delta_term(x) || is_empty_term(x)) return x;
    TermNode n;
    n.op = Op::Abstract;
    n.key = "abs" + set_text(I) + "(" + x->key + ")";
    n.label_set = std::move(I);
    n.kids = {std::move(x)};
    return make_node(std::move(n));
}

Term state_op(std::string state, Term x) {
    if (is_delta_term(x) || is_empty_term(x)) return x;
    TermNode n;
    n.op = Op::StateOp;
    n.key = "state[" + state + "](" + x->key + ")";
    n.state = std::move(state);
    n.kids = {std::move(x)};
    return make_node(std::move(n));
}

Term var_ref(std::string name) {
    TermNode n;
    n.op = Op::Var;
    n.key = name;
    n.var = std::move(name);
    return make_node(std::move(n));
}

Term rec_ref(std::string name, RecSpecPtr spec) {
    if (!spec || !spec->equations.count(name))
        throw std::out_of_range("rec_ref: unknown variable " + name);
    TermNode n;
    n.op = Op::RecRef;
    n.key = "<" + name + "|" + spec->hash + ">";
    n.var = std::move(name);
    n.spec = std::move(spec);
    return make_node(std::move(n));
}

RecSpecPtr RecursiveSpec::make(std::map<std::string, Term> equations) {
    auto spec = std::make_shared<RecursiveSpec>();
    spec->equations = std::move(equations);
    // FNV-1a over the sorted equation renderings.
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
    };
    for (const auto& [name, rhs] : spec->equations) {
        mix(name);
        mix("=");
        mix(rhs->key);
        mix(";");
    }
    std::ostringstream os;
    os << std::hex << h;
    spec->hash = os.str();
    return spec;
}

// ---------------------------------------------------------------------------
// Substitution / unfolding

Term substitute(const Term& t, const std::map<std::string, Term>& subst) {
    switch (t->op) {
        case Op::Empty:
        case Op::RecRef:
            return t;
        case Op::Atom:
            return t;
        case Op::Var: {
            auto it = subst.find(t->var);
            return it == subst.end() ? t : it->second;
        }
        case Op::Seq:
            return seq(substitute(t->kids[0], subst), substitute(t->kids[1], subst));
        case Op::Alt: {
            std::vector<Term> ks;
            ks.reserve(t->kids.size());
            for (const auto& k : t->kids) ks.push_back(substitute(k, subst));
            return alt(std::move(ks));
        }
        case Op::Par:
            return par(substitute(t->kids[0], subst), substitute(t->kids[1], subst));
        case Op::Comm:
            return comm(substitute(t->kids[0], subst), substitute(t->kids[1], subst));
        case Op::WholePar: {
            std::vector<Term> ks;
            ks.reserve(t->kids.size());
            for (const auto& k : t->kids) ks.push_back(substitute(k, subst));
            return wpar(std::move(ks));
        }
        case Op::Theta:
            return theta(substitute(t->kids[0], subst));
        case Op::Unless:
            return unless(substitute(t->kids[0], subst), substitute(t->kids[1], subst));
        case Op::Encaps:
            return encaps(t->label_set, substitute(t->kids[0], subst));
        case Op::Abstract:
            return abstr(t->label_set, substitute(t->kids[0], subst));
        case Op::StateOp:
            return state_op(t->state, substitute(t->kids[0], subst));
    }
    return t;
}

Term unfold(const std::string& var, const RecSpecPtr& spec) {
    auto it = spec->equations.find(var);
    if (it == spec->equations.end())
        throw std::out_of_range("unfold: unknown variable " + var);
    std::map<std::string, Term> closure;
    for (const auto& [name, rhs] : spec->equations) {
        (void)rhs;
        closure.emplace(name, rec_ref(name, spec));
    }
    return substitute(it->second, closure);
}

// ---------------------------------------------------------------------------
// Alphabet

namespace {

void alphabet_walk(const Term& t, std::set<ActionLabel>& out,
                   std::set<std::string>& seen_specs) {
    switch (t->op) {
        case Op::Empty:
        case Op::Var:
            return;
        case Op::Atom:
            if (t->atom.is_ordinary()) out.insert(t->atom);
            return;
        case Op::RecRef: {
            const std::string tag = t->spec->hash;
            if (seen_specs.insert(tag).second) {
                for (const auto& [name, rhs] : t->spec->equations) {
                    (void)name;
                    alphabet_walk(rhs, out, seen_specs);
                }
            }
            return;
        }
        default:
            for (const auto& k : t->kids) alphabet_walk(k, out, seen_specs);
            return;
    }
}

}  // namespace

std::set<ActionLabel> alphabet(const Term& t) {
    std::set<ActionLabel> out;
    std::set<std::string> seen;
    alphabet_walk(t, out, seen);
    return out;
}

std::set<std::string> alphabet_names(const Term& t) {
    std::set<std::string> names;
    for (const auto& a : alphabet(t)) names.insert(a.name);
    return names;
}

// ---------------------------------------------------------------------------
// Guardedness / linearity

namespace {

struct GuardAnalysis {
    const RecursiveSpec& spec;
    std::map<std::string, bool> transparent;  // variable may pass silently

    explicit GuardAnalysis(const RecursiveSpec& s) : spec(s) {
        for (const auto& [name, rhs] : spec.equations) {
            (void)rhs;
            transparent[name] = false;
        }
        // Fixpoint: transparency is monotone in the variable assignment.
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& [name, rhs] : spec.equations) {
                bool t = trans(rhs);
                if (t && !transparent[name]) {
                    transparent[name] = true;
                    changed = true;
                }
            }
        }
    }

    // May the term terminate, or reach a variable, without any real
    // (ordinary, non-shadow) event? Abstraction over a variable-bearing
    // subterm is over-approximated as silent when I meets its alphabet.
    bool trans(const Term& t) const {
        switch (t->op) {
            case Op::Empty: return true;
            case Op::Atom:
                return t->atom.is_tau() || t->atom.is_shadow();
            case Op::Var: {
                auto it = transparent.find(t->var);
                return it != transparent.end() && it->second;
            }
            case Op::RecRef: return false;  // separately closed specification
            case Op::Seq: return trans(t->kids[0]) && trans(t->kids[1]);
            case Op::Alt: {
                for (const auto& k : t->kids)
                    if (trans(k)) return true;
                return false;
            }
            case Op::Par:
            case Op::Comm:
                return trans(t->kids[0]) && trans(t->kids[1]);
            case Op::WholePar: {
                for (const auto& k : t->kids)
                    if (!trans(k)) return false;
                return true;
            }
            case Op::Abstract: {
                std::set<std::string> names = alphabet_names(t->kids[0]);
                for (const auto& i : t->label_set)
                    if (names.count(i)) return true;
                return trans(t->kids[0]);
            }
            case Op::Theta:
            case Op::Unless:
            case Op::Encaps:
            case Op::StateOp:
                return trans(t->kids[0]);
        }
        return false;
    }

    // Variables whose first step could be reached before any real event.
    void exposed(const Term& t, std::set<std::string>& out) const {
        switch (t->op) {
            case Op::Empty:
            case Op::Atom:
            case Op::RecRef:
                return;
            case Op::Var:
                out.insert(t->var);
                return;
            case Op::Seq:
                exposed(t->kids[0], out);
                if (trans(t->kids[0])) exposed(t->kids[1], out);
                return;
            case Op::Abstract: {
                std::set<std::string> names = alphabet_names(t->kids[0]);
                bool widens = false;
                for (const auto& i : t->label_set)
                    if (names.count(i)) widens = true;
                if (widens) {
                    collect_vars(t->kids[0], out);
                } else {
                    exposed(t->kids[0], out);
                }
                return;
            }
            default:
                for (const auto& k : t->kids) exposed(k, out);
                return;
        }
    }

    static void collect_vars(const Term& t, std::set<std::string>& out) {
        if (t->op == Op::Var) {
            out.insert(t->var);
            return;
        }
        if (t->op == Op::RecRef) return;
        for (const auto& k : t->kids) collect_vars(k, out);
    }
};

// A bundle: one ordinary event, or a ||/& combination of bundles.
bool is_event_bundle(const Term& t) {
    switch (t->op) {
        case Op::Atom:
            return t->atom.is_ordinary() || t->atom.is_shadow();
        case Op::Par:
        case Op::WholePar:
            for (const auto& k : t->kids)
                if (!is_event_bundle(k)) return false;
            return true;
        default:
            return false;
    }
}

// Linear summand: B1 . B2 . ... . Bm [. X], m >= 1.
bool is_linear_summand(const Term& t) {
    Term cur = t;
    bool any_bundle = false;
    while (cur->op == Op::Seq) {
        if (!is_event_bundle(cur->kids[0])) return false;
        any_bundle = true;
        cur = cur->kids[1];
    }
    if (cur->op == Op::Var) return any_bundle;
    return is_event_bundle(cur);
}

}  // namespace

GuardVerdict check_guarded_linear(const RecSpecPtr& spec) {
    GuardVerdict v;
    GuardAnalysis ga(*spec);

    // Silent-exposure graph.
    std::map<std::string, std::set<std::string>> edges;
    for (const auto& [name, rhs] : spec->equations) {
        std::set<std::string> ex;
        ga.exposed(rhs, ex);
        edges[name] = std::move(ex);
    }

    // Cycle detection with an explicit stack for the witness.
    std::map<std::string, int> color;  // 0 unvisited, 1 on stack, 2 done
    std::vector<std::string> stack;
    std::function<bool(const std::string&)> dfs = [&](const std::string& u) -> bool {
        color[u] = 1;
        stack.push_back(u);
        for (const auto& w : edges[u]) {
            if (!edges.count(w)) continue;  // free variable: reported by validate
            if (color[w] == 1) {
                auto it = std::find(stack.begin(), stack.end(), w);
                v.witness_cycle.assign(it, stack.end());
                return true;
            }
            if (color[w] == 0 && dfs(w)) return true;
        }
        stack.pop_back();
        color[u] = 2;
        return false;
    };
    bool cyclic = false;
    for (const auto& [name, rhs] : spec->equations) {
        (void)rhs;
        if (color[name] == 0 && dfs(name)) {
            cyclic = true;
            break;
        }
    }
    v.guarded = !cyclic;

    v.linear = true;
    for (const auto& [name, rhs] : spec->equations) {
        (void)name;
        std::vector<Term> summands;
        if (rhs->op == Op::Alt)
            summands = rhs->kids;
        else
            summands = {rhs};
        for (const auto& s : summands) {
            if (!is_linear_summand(s)) {
                v.linear = false;
                break;
            }
        }
        if (!v.linear) break;
    }
    return v;
}

// ---------------------------------------------------------------------------
// Environment helpers

bool Environment::is_comm_half(const ActionLabel& e) const {
    const std::string k = e.str();
    for (const auto& [pair, result] : gamma) {
        (void)result;
        if (pair.first == k || pair.second == k) return true;
    }
    return false;
}

}  // namespace aptc
