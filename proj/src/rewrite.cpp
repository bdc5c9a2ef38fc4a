#include "aptc/rewrite.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>

#include "aptc/sos.hpp"

namespace aptc {

namespace {

// ---------------------------------------------------------------------------
// Axiom identifiers
// ---------------------------------------------------------------------------

const std::vector<std::string>& axiom_id_table() {
    static const std::vector<std::string> ids = [] {
        std::vector<std::string> v;
        auto range = [&](const char* prefix, int lo, int hi) {
            for (int i = lo; i <= hi; ++i) v.push_back(prefix + std::to_string(i));
        };
        range("A", 1, 7);
        range("P", 1, 10);
        range("C", 11, 18);
        range("CE", 19, 24);
        range("U", 25, 37);
        range("D", 1, 6);
        range("B", 1, 3);
        range("TI", 1, 6);
        range("SC", 1, 9);
        range("SO", 1, 5);
        v.push_back("RDP");
        v.push_back("CFAR");
        return v;
    }();
    return ids;
}

// ---------------------------------------------------------------------------
// Head decomposition
//
// A basic term is a sum of summands L·t / L / X / L·X where L is an event
// bundle. The rewriter's expansion rules need those summands syntactically,
// with one summand per *resolution* of each bundle: a bundle containing a
// shadow next to its base event offers both the paired and the unpaired
// reading, exactly as the step relation does.
// ---------------------------------------------------------------------------

struct TaggedEvent {
    int comp;
    ActionLabel e;
};

// Every resolution of a multiset of component-tagged events: each event
// either stays, communicates with an ordinary event of another component
// (gamma must be defined; only under the whole-parallel expansion), or
// resolves a shadow against its base event in another component.
void resolutions_rec(const std::vector<TaggedEvent>& evs, std::size_t idx, std::vector<char>& used,
                     std::vector<ActionLabel>& acc, bool allow_gamma, const Environment& env,
                     std::vector<StepLabel>& out) {
    while (idx < evs.size() && used[idx]) ++idx;
    if (idx == evs.size()) {
        out.push_back(StepLabel(acc));
        return;
    }
    used[idx] = 1;
    acc.push_back(evs[idx].e);
    resolutions_rec(evs, idx + 1, used, acc, allow_gamma, env, out);
    acc.pop_back();
    for (std::size_t j = idx + 1; j < evs.size(); ++j) {
        if (used[j] || evs[j].comp == evs[idx].comp) continue;
        const ActionLabel& a = evs[idx].e;
        const ActionLabel& b = evs[j].e;
        std::optional<ActionLabel> merged;
        if (allow_gamma && a.is_ordinary() && b.is_ordinary()) merged = env.gamma_of(a, b);
        if (!merged && a.is_shadow() && b.is_ordinary() && a.base() == b) merged = b;
        if (!merged && b.is_shadow() && a.is_ordinary() && b.base() == a) merged = a;
        if (!merged) continue;
        used[j] = 1;
        acc.push_back(*merged);
        resolutions_rec(evs, idx + 1, used, acc, allow_gamma, env, out);
        acc.pop_back();
        used[j] = 0;
    }
    used[idx] = 0;
}

std::vector<StepLabel> resolutions(const std::vector<TaggedEvent>& evs, bool allow_gamma,
                                   const Environment& env) {
    std::vector<StepLabel> out;
    std::vector<char> used(evs.size(), 0);
    std::vector<ActionLabel> acc;
    resolutions_rec(evs, 0, used, acc, allow_gamma, env, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// The first-step labels a pure event bundle offers, resolving any internal
// shadow/base synchronisation. Nullopt if the term is not a bundle.
std::optional<std::vector<StepLabel>> bundle_options(const Term& t, const Environment& env) {
    if (!t) return std::nullopt;
    if (t->op == Op::Atom) {
        if (t->atom.is_delta()) return std::nullopt;
        return std::vector<StepLabel>{StepLabel::single(t->atom)};
    }
    if (t->op != Op::Par) return std::nullopt;
    auto left = bundle_options(t->kids[0], env);
    auto right = bundle_options(t->kids[1], env);
    if (!left || !right) return std::nullopt;
    std::vector<StepLabel> out;
    for (const auto& p : *left)
        for (const auto& q : *right) {
            std::vector<TaggedEvent> evs;
            for (const auto& e : p.events) evs.push_back({0, e});
            for (const auto& e : q.events) evs.push_back({1, e});
            for (auto& lab : resolutions(evs, /*allow_gamma=*/false, env))
                out.push_back(std::move(lab));
        }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

struct Summand {
    StepLabel label;
    Term tail;  // null: the summand terminates after its step
};

// Decompose a basic head into its summands. delta decomposes to an empty
// sum. Nullopt when the term is not in decomposable (basic) form.
std::optional<std::vector<Summand>> decompose(const Term& t, const Environment& env) {
    if (!t) return std::nullopt;
    switch (t->op) {
        case Op::Atom:
            if (t->atom.is_delta()) return std::vector<Summand>{};
            return std::vector<Summand>{{StepLabel::single(t->atom), nullptr}};
        case Op::Par: {
            auto labels = bundle_options(t, env);
            if (!labels) return std::nullopt;
            std::vector<Summand> out;
            for (auto& lab : *labels) out.push_back({std::move(lab), nullptr});
            return out;
        }
        case Op::Seq: {
            auto labels = bundle_options(t->kids[0], env);
            if (!labels) return std::nullopt;
            std::vector<Summand> out;
            for (auto& lab : *labels) out.push_back({std::move(lab), t->kids[1]});
            return out;
        }
        case Op::Alt: {
            std::vector<Summand> out;
            for (const auto& k : t->kids) {
                auto sub = decompose(k, env);
                if (!sub) return std::nullopt;
                for (auto& s : *sub) out.push_back(std::move(s));
            }
            return out;
        }
        default:
            return std::nullopt;
    }
}

// Rebuild a step label as an event-bundle term (atom or right-nested &).
Term bundle_term(const StepLabel& lab) {
    Term acc = atom(lab.events.back());
    for (std::size_t i = lab.events.size() - 1; i-- > 0;) acc = par(atom(lab.events[i]), acc);
    return acc;
}

bool has_tails(const std::vector<Summand>& ss) {
    for (const auto& s : ss)
        if (s.tail) return true;
    return false;
}

bool offers_shadow_of(const std::vector<Summand>& ss, const ActionLabel& e) {
    for (const auto& s : ss)
        for (const auto& ev : s.label.events)
            if (ev.is_shadow() && ev.base() == e) return true;
    return false;
}

// Indexed shadow events occurring anywhere in a term, recursive bodies
// included (each specification walked once).
void collect_shadows_rec(const Term& t, std::set<const RecursiveSpec*>& seen,
                         std::vector<ActionLabel>& out) {
    if (!t) return;
    if (t->op == Op::Atom) {
        if (t->atom.is_shadow()) out.push_back(t->atom);
        return;
    }
    for (const auto& k : t->kids) collect_shadows_rec(k, seen, out);
    if (t->op == Op::RecRef && t->spec && seen.insert(t->spec.get()).second)
        for (const auto& [name, rhs] : t->spec->equations) collect_shadows_rec(rhs, seen, out);
}

std::vector<ActionLabel> collect_shadows(const Term& t) {
    std::set<const RecursiveSpec*> seen;
    std::vector<ActionLabel> out;
    collect_shadows_rec(t, seen, out);
    return out;
}

bool is_tau_atom(const Term& t) { return t->op == Op::Atom && t->atom.is_tau(); }

// ---------------------------------------------------------------------------
// The whole-parallel expansion: rewrite X1 & ... & Xn into a sum of
// step-prefixed continuations, mirroring the merge step rule syntactically.
// Requires every component to decompose.
// ---------------------------------------------------------------------------

std::optional<Term> expand_whole(const std::vector<Term>& kids, const Environment& env) {
    const int n = static_cast<int>(kids.size());
    std::vector<std::vector<Summand>> sums(n);
    for (int i = 0; i < n; ++i) {
        auto d = decompose(kids[i], env);
        if (!d) return std::nullopt;
        sums[i] = std::move(*d);
    }

    std::vector<Term> result;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        std::vector<int> movers;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) movers.push_back(i);
        bool dead = false;
        for (int i : movers)
            if (sums[i].empty()) dead = true;
        if (dead) continue;

        std::vector<std::size_t> pick(movers.size(), 0);
        while (true) {
            std::vector<TaggedEvent> evs;
            for (std::size_t m = 0; m < movers.size(); ++m)
                for (const auto& e : sums[movers[m]][pick[m]].label.events)
                    evs.push_back({movers[m], e});

            std::vector<Term> rest;
            for (int i = 0; i < n; ++i) {
                auto mit = std::find(movers.begin(), movers.end(), i);
                if (mit == movers.end()) {
                    rest.push_back(kids[i]);
                } else {
                    const Term& tail = sums[i][pick[mit - movers.begin()]].tail;
                    if (tail) rest.push_back(tail);
                }
            }
            Term next = rest.empty() ? nullptr : wpar(rest);
            if (next && next->op == Op::Empty) next = nullptr;

            for (const auto& lab : resolutions(evs, /*allow_gamma=*/true, env)) {
                bool blocked = false;
                for (const auto& e : lab.events) {
                    if (!e.is_ordinary()) continue;
                    for (int i = 0; i < n && !blocked; ++i)
                        if (!(mask & (1u << i)) && offers_shadow_of(sums[i], e)) blocked = true;
                    if (blocked) break;
                }
                if (!blocked)
                    result.push_back(next ? seq(bundle_term(lab), next) : bundle_term(lab));
            }

            std::size_t m = 0;
            for (; m < movers.size(); ++m) {
                if (++pick[m] < sums[movers[m]].size()) break;
                pick[m] = 0;
            }
            if (m == movers.size()) break;
        }
    }
    return alt(std::move(result));
}

// ---------------------------------------------------------------------------
// The directed rule engine
// ---------------------------------------------------------------------------

using Fired = std::optional<std::pair<Term, std::string>>;

struct Rewriter {
    const Environment& env;
    RuleSet set;

    Fired seq_rules(const Term& t) const {
        if (t->kids[0]->op == Op::Alt) {
            std::vector<Term> out;
            for (const auto& k : t->kids[0]->kids) out.push_back(seq(k, t->kids[1]));
            return {{alt(std::move(out)), "A4"}};
        }
        if (set == RuleSet::Full && is_tau_atom(t->kids[1])) return {{t->kids[0], "B1"}};
        return std::nullopt;
    }

    Fired par_rules(const Term& t) const {
        const Term& x = t->kids[0];
        const Term& y = t->kids[1];
        if (set == RuleSet::Full) {
            if (is_tau_atom(y)) return {{x, "B3"}};
            if (is_tau_atom(x)) return {{y, "B3"}};
        }
        if (x->op == Op::Alt) {
            std::vector<Term> out;
            for (const auto& k : x->kids) out.push_back(par(k, y));
            return {{alt(std::move(out)), "P7"}};
        }
        if (y->op == Op::Alt) {
            std::vector<Term> out;
            for (const auto& k : y->kids) out.push_back(par(x, k));
            return {{alt(std::move(out)), "P8"}};
        }
        auto dx = decompose(x, env);
        auto dy = decompose(y, env);
        if (!dx || !dy) return std::nullopt;
        bool xt = has_tails(*dx);
        bool yt = has_tails(*dy);
        if (!xt && !yt) return std::nullopt;  // a pure event bundle is basic
        std::vector<Term> out;
        for (const auto& sx : *dx)
            for (const auto& sy : *dy) {
                std::vector<TaggedEvent> evs;
                for (const auto& e : sx.label.events) evs.push_back({0, e});
                for (const auto& e : sy.label.events) evs.push_back({1, e});
                Term next = nullptr;
                if (sx.tail && sy.tail)
                    next = wpar(sx.tail, sy.tail);
                else if (sx.tail)
                    next = sx.tail;
                else if (sy.tail)
                    next = sy.tail;
                if (next && next->op == Op::Empty) next = nullptr;
                for (const auto& lab : resolutions(evs, /*allow_gamma=*/false, env))
                    out.push_back(next ? seq(bundle_term(lab), next) : bundle_term(lab));
            }
        const char* id = xt && yt ? "P6" : xt ? "P5" : "P4";
        return {{alt(std::move(out)), id}};
    }

    Fired comm_rules(const Term& t) const {
        const Term& x = t->kids[0];
        const Term& y = t->kids[1];
        if (x->op == Op::Alt) {
            std::vector<Term> out;
            for (const auto& k : x->kids) out.push_back(comm(k, y));
            return {{alt(std::move(out)), "C15"}};
        }
        if (y->op == Op::Alt) {
            std::vector<Term> out;
            for (const auto& k : y->kids) out.push_back(comm(x, k));
            return {{alt(std::move(out)), "C16"}};
        }
        auto dx = decompose(x, env);
        auto dy = decompose(y, env);
        if (!dx || !dy) return std::nullopt;
        std::vector<Term> out;
        for (const auto& sx : *dx)
            for (const auto& sy : *dy) {
                for (const auto& lab : comm_matchings(sx.label, sy.label)) {
                    Term next = nullptr;
                    if (sx.tail && sy.tail)
                        next = wpar(sx.tail, sy.tail);
                    else if (sx.tail)
                        next = sx.tail;
                    else if (sy.tail)
                        next = sy.tail;
                    if (next && next->op == Op::Empty) next = nullptr;
                    out.push_back(next ? seq(bundle_term(lab), next) : bundle_term(lab));
                }
            }
        bool xt = has_tails(*dx);
        bool yt = has_tails(*dy);
        const char* id = xt && yt ? "C14" : xt ? "C13" : yt ? "C12" : "C11";
        return {{alt(std::move(out)), id}};
    }

    // Perfect gamma-matchings of two step labels: every event of one side
    // communicates with exactly one event of the other.
    std::vector<StepLabel> comm_matchings(const StepLabel& a, const StepLabel& b) const {
        const auto& xs = a.events;
        const auto& ys = b.events;
        std::vector<StepLabel> out;
        if (xs.size() != ys.size()) return out;
        std::vector<char> used(ys.size(), 0);
        std::vector<ActionLabel> acc;
        match_rec(xs, ys, 0, used, acc, out);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    void match_rec(const std::vector<ActionLabel>& xs, const std::vector<ActionLabel>& ys,
                   std::size_t i, std::vector<char>& used, std::vector<ActionLabel>& acc,
                   std::vector<StepLabel>& out) const {
        if (i == xs.size()) {
            out.push_back(StepLabel(acc));
            return;
        }
        if (!xs[i].is_ordinary()) return;
        for (std::size_t j = 0; j < ys.size(); ++j) {
            if (used[j] || !ys[j].is_ordinary()) continue;
            auto g = env.gamma_of(xs[i], ys[j]);
            if (!g) continue;
            used[j] = 1;
            acc.push_back(*g);
            match_rec(xs, ys, i + 1, used, acc, out);
            acc.pop_back();
            used[j] = 0;
        }
    }

    Fired wpar_rules(const Term& t) const {
        if (auto expanded = expand_whole(t->kids, env)) return {{*expanded, "P1"}};
        return std::nullopt;
    }

    Fired theta_rules(const Term& t) const {
        const Term& x = t->kids[0];
        if (env.conflicts.empty()) return {{x, "CE19"}};
        switch (x->op) {
            case Op::Atom:
                // a single event never clashes with itself
                return {{x, "CE19"}};
            case Op::Alt: {
                std::vector<Term> out;
                for (std::size_t i = 0; i < x->kids.size(); ++i) {
                    std::vector<Term> others;
                    for (std::size_t j = 0; j < x->kids.size(); ++j)
                        if (j != i) others.push_back(x->kids[j]);
                    out.push_back(unless(theta(x->kids[i]), alt(std::move(others))));
                }
                return {{alt(std::move(out)), "CE21"}};
            }
            case Op::Seq:
                return {{seq(theta(x->kids[0]), theta(x->kids[1])), "CE22"}};
            case Op::Par:
                return {{alt(par(unless(theta(x->kids[0]), x->kids[1]), x->kids[1]),
                             par(unless(theta(x->kids[1]), x->kids[0]), x->kids[0])),
                         "CE23"}};
            case Op::Comm:
                return {{alt(comm(unless(theta(x->kids[0]), x->kids[1]), x->kids[1]),
                             comm(unless(theta(x->kids[1]), x->kids[0]), x->kids[0])),
                         "CE24"}};
            case Op::WholePar:
                // the whole parallel is its expansion; elimination only ever
                // sees the expanded sum
                if (auto expanded = expand_whole(x->kids, env)) return {{theta(*expanded), "P1"}};
                return std::nullopt;
            default:
                return std::nullopt;
        }
    }

    // Pushing an operator under a binary parallel whose two sides both carry
    // continuations splits the merged remainder into per-component pieces,
    // which loses (or invents) communication pairings.  Safe when there is
    // nothing to pair, or when at most one side continues.
    bool splits_merged_tail(const Term& x0, const Term& x1) const {
        if (env.gamma.empty()) return false;
        auto d0 = decompose(x0, env);
        auto d1 = decompose(x1, env);
        if (!d0 || !d1) return true;  // cannot tell; keep the context intact
        return has_tails(*d0) && has_tails(*d1);
    }

    Fired unless_rules(const Term& t) const {
        const Term& x = t->kids[0];
        const Term& y = t->kids[1];
        std::set<ActionLabel> ybet = alphabet(y);
        auto silenced = [&](const ActionLabel& e) {
            if (!e.is_ordinary()) return false;
            for (const ActionLabel& f : ybet) {
                if (env.in_conflict(e, f)) return true;
                for (const auto& cp : env.causality)
                    if (cp.receive == e && env.in_conflict(f, cp.send)) return true;
            }
            return false;
        };

        std::set<ActionLabel> xbet = alphabet(x);
        bool any_silenced = false;
        for (const ActionLabel& e : xbet)
            if (silenced(e)) {
                any_silenced = true;
                break;
            }
        // A shadow whose base the guard silences must keep its enclosing
        // synchronisation context intact: silencing the base first would
        // break the pairing the shadow exists for.
        bool pairing_at_risk = false;
        for (const ActionLabel& s : collect_shadows(x))
            if (xbet.count(s.base()) && silenced(s.base())) {
                pairing_at_risk = true;
                break;
            }
        if (!any_silenced && !pairing_at_risk) return {{x, "U26"}};

        switch (x->op) {
            case Op::Atom: {
                if (x->atom.is_ordinary() && silenced(x->atom)) {
                    for (const ActionLabel& f : ybet)
                        if (env.in_conflict(x->atom, f)) return {{tau_term(), "U25"}};
                    return {{tau_term(), "U27"}};
                }
                return {{x, "U26"}};
            }
            case Op::Alt: {
                std::vector<Term> out;
                for (const auto& k : x->kids) out.push_back(unless(k, y));
                return {{alt(std::move(out)), "U30"}};
            }
            case Op::Seq:
                return {{seq(unless(x->kids[0], y), unless(x->kids[1], y)), "U31"}};
            case Op::Par:
                if (pairing_at_risk || splits_merged_tail(x->kids[0], x->kids[1]))
                    return std::nullopt;
                return {{par(unless(x->kids[0], y), unless(x->kids[1], y)), "U32"}};
            default:
                return std::nullopt;
        }
    }

    Fired encaps_rules(const Term& t) const {
        const auto& H = t->label_set;
        const Term& x = t->kids[0];
        auto hit = [&](const std::string& n) {
            return std::binary_search(H.begin(), H.end(), n);
        };
        bool touched = false;
        for (const std::string& n : alphabet_names(x))
            if (hit(n)) {
                touched = true;
                break;
            }
        if (!touched) return {{x, "D1"}};
        switch (x->op) {
            case Op::Atom:
                if (x->atom.is_ordinary() && hit(x->atom.name)) return {{delta_term(), "D2"}};
                return {{x, "D1"}};
            case Op::Alt: {
                std::vector<Term> out;
                for (const auto& k : x->kids) out.push_back(encaps(H, k));
                return {{alt(std::move(out)), "D4"}};
            }
            case Op::Seq:
                return {{seq(encaps(H, x->kids[0]), encaps(H, x->kids[1])), "D5"}};
            case Op::Par:
                if (splits_merged_tail(x->kids[0], x->kids[1])) return std::nullopt;
                return {{par(encaps(H, x->kids[0]), encaps(H, x->kids[1])), "D6"}};
            default:
                return std::nullopt;
        }
    }

    Fired abstract_rules(const Term& t) const {
        const auto& I = t->label_set;
        const Term& x = t->kids[0];
        auto hit = [&](const std::string& n) {
            return std::binary_search(I.begin(), I.end(), n);
        };
        bool touched = false;
        for (const std::string& n : alphabet_names(x))
            if (hit(n)) {
                touched = true;
                break;
            }
        if (!touched) return {{x, "TI1"}};
        switch (x->op) {
            case Op::Atom:
                if (x->atom.is_ordinary() && hit(x->atom.name)) return {{tau_term(), "TI2"}};
                return {{x, "TI1"}};
            case Op::Alt: {
                std::vector<Term> out;
                for (const auto& k : x->kids) out.push_back(abstr(I, k));
                return {{alt(std::move(out)), "TI4"}};
            }
            case Op::Seq:
                return {{seq(abstr(I, x->kids[0]), abstr(I, x->kids[1])), "TI5"}};
            case Op::Par: {
                // Hiding a shadow's base event would break the pairing the
                // shadow stands for; keep such contexts intact.
                std::set<ActionLabel> xbet = alphabet(x);
                for (const ActionLabel& s : collect_shadows(x))
                    if (xbet.count(s.base()) && hit(s.base().name)) return std::nullopt;
                if (splits_merged_tail(x->kids[0], x->kids[1])) return std::nullopt;
                return {{par(abstr(I, x->kids[0]), abstr(I, x->kids[1])), "TI6"}};
            }
            default:
                return std::nullopt;
        }
    }

    Fired state_rules(const Term& t) const {
        if (!env.state_spec) return std::nullopt;
        const StateSpec& sp = *env.state_spec;
        const Term& x = t->kids[0];
        const std::string& s = t->state;

        // Map one resolved step label through the action table, fold the
        // effect table over its (sorted, pre-map) events, drop raced and
        // killed steps. Returns the mapped label and the successor state.
        auto map_label = [&](const StepLabel& lab)
            -> std::optional<std::pair<StepLabel, std::string>> {
            const auto& ev = lab.events;
            for (std::size_t i = 0; i < ev.size(); ++i)
                for (std::size_t j = i + 1; j < ev.size(); ++j)
                    if (env.in_race(ev[i], ev[j])) return std::nullopt;
            std::vector<ActionLabel> mapped;
            for (const auto& e : ev) {
                if (!e.is_ordinary()) {
                    mapped.push_back(e);
                    continue;
                }
                std::string nm = sp.apply_action(s, e.name);
                if (nm == "delta") return std::nullopt;
                if (nm == "tau") {
                    mapped.push_back(ActionLabel::tau());
                    continue;
                }
                ActionLabel m = e;
                m.name = nm;
                mapped.push_back(m);
            }
            std::string s2 = s;
            std::vector<ActionLabel> sorted_ev = ev;
            std::sort(sorted_ev.begin(), sorted_ev.end());
            for (const auto& e : sorted_ev)
                if (e.is_ordinary()) s2 = sp.apply_effect(s2, e.name);
            return {{StepLabel(std::move(mapped)), std::move(s2)}};
        };

        switch (x->op) {
            case Op::Atom:
            case Op::Par: {
                auto labels = bundle_options(x, env);
                if (!labels) return std::nullopt;
                std::vector<Term> out;
                for (const auto& lab : *labels)
                    if (auto m = map_label(lab)) out.push_back(bundle_term(m->first));
                return {{alt(std::move(out)), "SO1"}};
            }
            case Op::Alt: {
                std::vector<Term> out;
                for (const auto& k : x->kids) out.push_back(state_op(s, k));
                return {{alt(std::move(out)), "SO3"}};
            }
            case Op::Seq: {
                auto labels = bundle_options(x->kids[0], env);
                if (!labels) return std::nullopt;
                std::vector<Term> out;
                for (const auto& lab : *labels)
                    if (auto m = map_label(lab))
                        out.push_back(seq(bundle_term(m->first), state_op(m->second, x->kids[1])));
                return {{alt(std::move(out)), "SO4"}};
            }
            default:
                return std::nullopt;
        }
    }

    Fired apply(const Term& t) const {
        switch (t->op) {
            case Op::Seq: return seq_rules(t);
            case Op::Par: return par_rules(t);
            case Op::Comm: return comm_rules(t);
            case Op::WholePar: return wpar_rules(t);
            case Op::Theta: return theta_rules(t);
            case Op::Unless: return unless_rules(t);
            case Op::Encaps: return encaps_rules(t);
            case Op::Abstract: return abstract_rules(t);
            case Op::StateOp: return state_rules(t);
            default: return std::nullopt;
        }
    }

    Term rebuild(const Term& t, std::size_t i, const Term& nk) const {
        std::vector<Term> ks = t->kids;
        ks[i] = nk;
        switch (t->op) {
            case Op::Seq: return seq(ks[0], ks[1]);
            case Op::Alt: return alt(std::move(ks));
            case Op::Par: return par(ks[0], ks[1]);
            case Op::Comm: return comm(ks[0], ks[1]);
            case Op::WholePar: return wpar(std::move(ks));
            case Op::Theta: return theta(ks[0]);
            case Op::Unless: return unless(ks[0], ks[1]);
            case Op::Encaps: return encaps(t->label_set, ks[0]);
            case Op::Abstract: return abstr(t->label_set, ks[0]);
            case Op::StateOp: return state_op(t->state, ks[0]);
            default: return t;
        }
    }

    // Conflict elimination dispatches on the syntactic shape of its operand,
    // and its choice law ranges over the sibling summands' written alphabets;
    // the same holds for an unless guard.  Rewriting inside those positions
    // can change what gets silenced, so the traversal never descends into a
    // theta operand or a guard — elimination happens at the node, top-down.
    std::optional<RewriteStep> find(const Term& t) const {
        std::size_t first = 0, last = t->kids.size();
        if (t->op == Op::Theta) first = last;
        if (t->op == Op::Unless) last = 1;
        for (std::size_t i = first; i < last; ++i) {
            if (auto sub = find(t->kids[i])) {
                RewriteStep step;
                step.term = rebuild(t, i, sub->term);
                step.axiom = std::move(sub->axiom);
                step.path = std::move(sub->path);
                step.path.insert(step.path.begin(), static_cast<int>(i));
                return step;
            }
        }
        if (auto fired = apply(t)) return RewriteStep{fired->first, fired->second, {}};
        return std::nullopt;
    }
};

bool is_bundle_node(const Term& t) {
    if (t->op == Op::Atom)
        return t->atom.is_ordinary() || t->atom.is_tau() || t->atom.is_shadow();
    if (t->op != Op::Par) return false;
    for (const auto& k : t->kids)
        if (!is_bundle_node(k)) return false;
    return true;
}

bool is_basic_summand(const Term& t, bool allow_rec_refs) {
    if (is_bundle_node(t)) return true;
    if (allow_rec_refs && t->op == Op::RecRef) return true;
    if (t->op == Op::Seq)
        return is_bundle_node(t->kids[0]) && is_basic_term(t->kids[1], allow_rec_refs);
    return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public interface
// ---------------------------------------------------------------------------

const std::vector<std::string>& all_axiom_ids() { return axiom_id_table(); }

bool is_axiom_id(const std::string& id) {
    const auto& ids = axiom_id_table();
    return std::find(ids.begin(), ids.end(), id) != ids.end();
}

std::optional<RewriteStep> rewrite_step(const Term& t, const Environment& env, RuleSet rules) {
    return Rewriter{env, rules}.find(t);
}

Term normalize_basic(const Term& t, const Environment& env, std::size_t fuel, RuleSet rules,
                     RewriteTrace* trace) {
    Rewriter rw{env, rules};
    Term cur = t;
    for (std::size_t used = 0;; ++used) {
        auto step = rw.find(cur);
        if (!step) return cur;
        if (used == fuel)
            throw ResourceLimitError("rewriting exceeded the fuel budget of " +
                                     std::to_string(fuel) + " steps");
        if (trace) trace->steps.push_back({step->axiom, step->path});
        cur = std::move(step->term);
    }
}

bool is_basic_term(const Term& t, bool allow_rec_refs) {
    if (!t) return false;
    if (t->op == Op::Empty) return true;
    if (t->op == Op::Atom && t->atom.is_delta()) return true;
    if (t->op == Op::Alt) {
        for (const auto& k : t->kids)
            if (!is_basic_summand(k, allow_rec_refs)) return false;
        return true;
    }
    return is_basic_summand(t, allow_rec_refs);
}

std::string RewriteTrace::to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& s : steps) {
        nlohmann::ordered_json rec;
        rec["axiom"] = s.axiom;
        rec["path"] = s.path;
        j.push_back(std::move(rec));
    }
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Fair abstraction: collapse clusters of silent steps
// ---------------------------------------------------------------------------

StepLTS cfar_collapse(const StepLTS& lts, const std::vector<std::string>& I) {
    std::vector<std::string> hidden = I;
    std::sort(hidden.begin(), hidden.end());
    auto silent = [&](const StepLabel& lab) {
        if (lab.is_silent()) return true;
        if (lab.events.empty()) return false;
        for (const auto& e : lab.events)
            if (!e.is_ordinary() || !std::binary_search(hidden.begin(), hidden.end(), e.name))
                return false;
        return true;
    };

    const int n = static_cast<int>(lts.states.size());
    std::vector<std::vector<int>> adj(n);
    for (const auto& tr : lts.transitions)
        if (tr.dst >= 0 && silent(tr.label)) adj[tr.src].push_back(tr.dst);

    // Strongly connected components of the silent-step graph (iterative
    // Tarjan; the recursion depth on long tau chains would otherwise be
    // unbounded).
    std::vector<int> comp(n, -1), index(n, -1), low(n, 0);
    std::vector<char> on_stack(n, 0);
    std::vector<int> stack;
    int next_index = 0, next_comp = 0;
    struct Frame {
        int v;
        std::size_t child;
    };
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        std::vector<Frame> frames{{root, 0}};
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!frames.empty()) {
            Frame& f = frames.back();
            if (f.child < adj[f.v].size()) {
                int w = adj[f.v][f.child++];
                if (index[w] == -1) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    frames.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
            } else {
                if (low[f.v] == index[f.v]) {
                    while (true) {
                        int w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                        comp[w] = next_comp;
                        if (w == f.v) break;
                    }
                    ++next_comp;
                }
                int v = f.v;
                frames.pop_back();
                if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
            }
        }
    }

    // Renumber components in first-appearance order over the original
    // states so the result is canonical.
    std::vector<int> renum(next_comp, -1);
    int fresh = 0;
    for (int v = 0; v < n; ++v)
        if (renum[comp[v]] == -1) renum[comp[v]] = fresh++;
    for (int v = 0; v < n; ++v) comp[v] = renum[comp[v]];

    StepLTS out;
    out.states.resize(fresh);
    std::vector<char> named(fresh, 0);
    for (int v = 0; v < n; ++v) {
        StepLTS::State& st = out.states[comp[v]];
        if (!named[comp[v]]) {
            st.key = lts.states[v].key;
            named[comp[v]] = 1;
        }
        st.terminating = st.terminating || lts.states[v].terminating;
        st.divergent = st.divergent || lts.states[v].divergent;
    }

    std::vector<char> internal_silent(fresh, 0);
    for (const auto& tr : lts.transitions) {
        int s = comp[tr.src];
        int d = tr.dst < 0 ? StepLTS::TICK : comp[tr.dst];
        if (tr.dst >= 0 && d == s && silent(tr.label)) {
            internal_silent[s] = 1;
            continue;
        }
        out.transitions.push_back({s, tr.label, d});
    }
    out.sort_transitions();
    out.transitions.erase(std::unique(out.transitions.begin(), out.transitions.end()),
                          out.transitions.end());
    out.initial = comp[lts.initial];

    std::vector<char> has_out(fresh, 0);
    for (const auto& tr : out.transitions) has_out[tr.src] = 1;
    for (int c = 0; c < fresh; ++c)
        if (internal_silent[c] && !has_out[c] && !out.states[c].terminating)
            out.states[c].divergent = true;
    return out;
}

// ---------------------------------------------------------------------------
// The axiom soundness suite
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kPool = {"a", "b", "c", "d"};

ActionLabel ev(const std::string& n) { return ActionLabel::ordinary(n); }

struct Gen {
    std::mt19937_64& rng;

    int pick(int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); }
    bool chance(int pct) { return pick(100) < pct; }
    std::string nm() { return kPool[pick(static_cast<int>(kPool.size()))]; }
    ActionLabel event() { return ev(nm()); }

    // A random closed, recursion-free, shadow-free term.
    Term term(int depth) {
        if (depth <= 0 || chance(30)) {
            int r = pick(10);
            if (r == 0) return tau_term();
            if (r == 1) return delta_term();
            return atom(event());
        }
        switch (pick(6)) {
            case 0: return seq(term(depth - 1), term(depth - 1));
            case 1: return alt(term(depth - 1), term(depth - 1));
            case 2: return par(term(depth - 1), term(depth - 1));
            case 3: return wpar(term(depth - 1), term(depth - 1));
            case 4: return comm(atom(event()), atom(event()));
            default: return seq(atom(event()), term(depth - 1));
        }
    }

    // A term distinct from `other` (up to canonical identity).
    Term term_distinct(int depth, const Term& other) {
        for (int i = 0; i < 16; ++i) {
            Term t = term(depth);
            if (t->key != other->key) return t;
        }
        return seq(atom(event()), other);
    }

    // A term with no deadlock anywhere in its written form.
    Term dfree(int depth) {
        for (int i = 0; i < 32; ++i) {
            Term t = term(depth);
            if (t->key.find("delta") == std::string::npos) return t;
        }
        return atom(event());
    }
};

Environment plain_env(Gen& g) {
    Environment env;
    if (g.chance(60)) env.add_gamma(ev("a"), ev("b"), ev("c"));
    if (g.chance(30)) env.add_gamma(ev("a"), ev("c"), ev("d"));
    return env;
}

void add_conflicts(Environment& env, Gen& g) {
    int pairs = 1 + g.pick(2);
    for (int i = 0; i < pairs; ++i) {
        ActionLabel x = g.event(), y = g.event();
        if (!(x == y)) env.add_conflict(x, y);
    }
    if (g.chance(30)) env.causality.push_back({g.event(), g.event()});
}

Environment conflict_env(Gen& g) {
    Environment env = plain_env(g);
    add_conflicts(env, g);
    return env;
}

// Conflicts with communication disabled: distributing an operator under a
// binary parallel splits the merged remainder, which is only meaning
// preserving when the remainder has nothing to pair.
Environment conflict_only_env(Gen& g) {
    Environment env;
    add_conflicts(env, g);
    return env;
}

Environment state_env(Gen& g, bool with_effects, bool with_races, bool with_gamma = true) {
    Environment env = with_gamma ? plain_env(g) : Environment{};
    StateSpec sp;
    sp.states = {"s0", "s1"};
    for (const std::string& st : sp.states)
        for (const std::string& n : kPool) {
            if (g.chance(35)) {
                int r = g.pick(10);
                sp.action[{st, n}] = r == 0 ? "tau" : r == 1 ? "delta" : g.nm();
            }
            if (with_effects && g.chance(35)) sp.effect[{st, n}] = st == "s0" ? "s1" : "s0";
        }
    env.state_spec = std::move(sp);
    if (with_races && g.chance(25)) {
        ActionLabel x = g.event(), y = g.event();
        if (!(x == y)) env.add_race(x, y);
    }
    return env;
}

using Maker = std::function<AxiomInstance(std::mt19937_64&)>;

void add(std::vector<AxiomSchema>& v, std::string id, EquivKind kind, Maker make) {
    v.push_back({std::move(id), kind, std::move(make)});
}

std::vector<AxiomSchema> build_schemas() {
    std::vector<AxiomSchema> v;
    const EquivKind S = EquivKind::StrongStep;
    const EquivKind RB = EquivKind::RootedBranchingStep;

    // --- sequential core ---
    add(v, "A1", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(3), y = g.term(3);
        return AxiomInstance{alt(x, y), alt(y, x), env};
    });
    add(v, "A2", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(2), y = g.term(2), z = g.term(2);
        return AxiomInstance{alt(alt(x, y), z), alt(x, alt(y, z)), env};
    });
    add(v, "A3", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(3);
        return AxiomInstance{alt(x, x), x, env};
    });
    add(v, "A4", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(2), y = g.term(2), z = g.term(2);
        return AxiomInstance{seq(alt(x, y), z), alt(seq(x, z), seq(y, z)), env};
    });
    add(v, "A5", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(2), y = g.term(2), z = g.term(2);
        return AxiomInstance{seq(seq(x, y), z), seq(x, seq(y, z)), env};
    });
    add(v, "A6", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(3);
        return AxiomInstance{alt(x, delta_term()), x, env};
    });
    add(v, "A7", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(3);
        return AxiomInstance{seq(delta_term(), x), delta_term(), env};
    });

    // --- parallelism ---
    // The whole parallel unfolds into one round of joint steps over its
    // components; the right-hand side is the engine-independent syntactic
    // expansion, so the pair cross-checks the step relation against it.
    add(v, "P1", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = normalize_basic(g.term(2), env);
        Term y = normalize_basic(g.term(2), env);
        Term lhs = wpar(x, y);
        Term rhs = lhs;
        if (lhs->op == Op::WholePar)
            if (auto ex = expand_whole(lhs->kids, env)) rhs = *ex;
        return AxiomInstance{lhs, rhs, env};
    });
    add(v, "P2", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(3), y = g.term(3);
        return AxiomInstance{par(x, y), par(y, x), env};
    });
    add(v, "P3", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(2), y = g.term(2), z = g.term(2);
        return AxiomInstance{par(par(x, y), z), par(x, par(y, z)), env};
    });
    add(v, "P4", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e1 = g.event(), e2 = g.event();
        Term y = g.term(2);
        return AxiomInstance{par(atom(e1), seq(atom(e2), y)), seq(par(atom(e1), atom(e2)), y),
                             env};
    });
    add(v, "P5", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e1 = g.event(), e2 = g.event();
        Term x = g.term(2);
        return AxiomInstance{par(seq(atom(e1), x), atom(e2)), seq(par(atom(e1), atom(e2)), x),
                             env};
    });
    add(v, "P6", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e1 = g.event(), e2 = g.event();
        Term x = g.term(2), y = g.term(2);
        return AxiomInstance{par(seq(atom(e1), x), seq(atom(e2), y)),
                             seq(par(atom(e1), atom(e2)), wpar(x, y)), env};
    });
    add(v, "P7", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(2), y = g.term(2), z = g.term(2);
        return AxiomInstance{par(alt(x, y), z), alt(par(x, z), par(y, z)), env};
    });
    add(v, "P8", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(2), y = g.term(2), z = g.term(2);
        return AxiomInstance{par(x, alt(y, z)), alt(par(x, y), par(x, z)), env};
    });
    add(v, "P9", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(3);
        return AxiomInstance{par(delta_term(), x), delta_term(), env};
    });
    add(v, "P10", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(3);
        return AxiomInstance{par(x, delta_term()), delta_term(), env};
    });

    // --- communication ---
    add(v, "C11", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e1 = g.event(), e2 = g.event();
        auto gm = env.gamma_of(e1, e2);
        Term rhs = gm ? atom(*gm) : delta_term();
        return AxiomInstance{comm(atom(e1), atom(e2)), rhs, env};
    });
    add(v, "C12", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e1 = g.event(), e2 = g.event();
        Term y = g.term(2);
        auto gm = env.gamma_of(e1, e2);
        Term rhs = gm ? seq(atom(*gm), y) : delta_term();
        return AxiomInstance{comm(atom(e1), seq(atom(e2), y)), rhs, env};
    });
    add(v, "C13", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e1 = g.event(), e2 = g.event();
        Term x = g.term(2);
        auto gm = env.gamma_of(e1, e2);
        Term rhs = gm ? seq(atom(*gm), x) : delta_term();
        return AxiomInstance{comm(seq(atom(e1), x), atom(e2)), rhs, env};
    });
    add(v, "C14", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e1 = g.event(), e2 = g.event();
        Term x = g.term(2), y = g.term(2);
        auto gm = env.gamma_of(e1, e2);
        Term rhs = gm ? seq(atom(*gm), wpar(x, y)) : delta_term();
        return AxiomInstance{comm(seq(atom(e1), x), seq(atom(e2), y)), rhs, env};
    });
    add(v, "C15", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(2), y = g.term(2), z = g.term(2);
        return AxiomInstance{comm(alt(x, y), z), alt(comm(x, z), comm(y, z)), env};
    });
    add(v, "C16", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(2), y = g.term(2), z = g.term(2);
        return AxiomInstance{comm(x, alt(y, z)), alt(comm(x, y), comm(x, z)), env};
    });
    add(v, "C17", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(3);
        return AxiomInstance{comm(delta_term(), x), delta_term(), env};
    });
    add(v, "C18", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(3);
        return AxiomInstance{comm(x, delta_term()), delta_term(), env};
    });

    // --- conflict elimination ---
    add(v, "CE19", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = conflict_env(g);
        ActionLabel e = g.event();
        return AxiomInstance{theta(atom(e)), atom(e), env};
    });
    add(v, "CE20", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = conflict_env(g);
        return AxiomInstance{theta(delta_term()), delta_term(), env};
    });
    add(v, "CE21", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = conflict_env(g);
        Term x = g.term(2);
        Term y = g.term_distinct(2, x);
        return AxiomInstance{theta(alt(x, y)),
                             alt(unless(theta(x), y), unless(theta(y), x)), env};
    });
    add(v, "CE22", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = conflict_env(g);
        Term x = g.term(2), y = g.term(2);
        return AxiomInstance{theta(seq(x, y)), seq(theta(x), theta(y)), env};
    });
    add(v, "CE23", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = conflict_env(g);
        Term x = g.term(2), y = g.term(2);
        return AxiomInstance{theta(par(x, y)),
                             alt(par(unless(theta(x), y), y), par(unless(theta(y), x), x)), env};
    });
    add(v, "CE24", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = conflict_env(g);
        Term x = g.term(2), y = g.term(2);
        return AxiomInstance{theta(comm(x, y)),
                             alt(comm(unless(theta(x), y), y), comm(unless(theta(y), x), x)),
                             env};
    });

    // --- the unless operator; the three atom laws use exactly their stated
    // side conditions ---
    add(v, "U25", S, [](std::mt19937_64& r) {
        Gen g{r};
        int i = g.pick(4), j = (i + 1 + g.pick(3)) % 4;
        ActionLabel e1 = ev(kPool[i]), e2 = ev(kPool[j]);
        Environment env;
        env.add_conflict(e1, e2);
        return AxiomInstance{unless(atom(e1), atom(e2)), tau_term(), env};
    });
    add(v, "U26", S, [](std::mt19937_64& r) {
        Gen g{r};
        int i = g.pick(4), j = (i + 1 + g.pick(3)) % 4;
        int k = (j + 1 + g.pick(2)) % 4;
        if (k == i) k = (k + 1) % 4;
        ActionLabel e1 = ev(kPool[i]), e2 = ev(kPool[j]), e3 = ev(kPool[k]);
        Environment env;
        env.add_conflict(e1, e2);
        env.causality.push_back({e2, e3});
        return AxiomInstance{unless(atom(e1), atom(e3)), atom(e1), env};
    });
    add(v, "U27", S, [](std::mt19937_64& r) {
        Gen g{r};
        int i = g.pick(4), j = (i + 1 + g.pick(3)) % 4;
        int k = (j + 1 + g.pick(2)) % 4;
        if (k == i) k = (k + 1) % 4;
        ActionLabel e1 = ev(kPool[i]), e2 = ev(kPool[j]), e3 = ev(kPool[k]);
        Environment env;
        env.add_conflict(e1, e2);
        env.causality.push_back({e2, e3});
        return AxiomInstance{unless(atom(e3), atom(e1)), tau_term(), env};
    });
    add(v, "U28", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = conflict_env(g);
        Term x = g.term(3);
        return AxiomInstance{unless(x, delta_term()), x, env};
    });
    add(v, "U29", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = conflict_env(g);
        Term y = g.term(3);
        return AxiomInstance{unless(delta_term(), y), delta_term(), env};
    });
    add(v, "U30", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = conflict_env(g);
        Term x = g.term(2), y = g.term(2), z = g.term(2);
        return AxiomInstance{unless(alt(x, y), z), alt(unless(x, z), unless(y, z)), env};
    });
    add(v, "U31", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = conflict_env(g);
        Term x = g.term(2), y = g.term(2), z = g.term(2);
        return AxiomInstance{unless(seq(x, y), z), seq(unless(x, z), unless(y, z)), env};
    });
    // Distributions under the binary parallel split the merged remainder
    // into per-component pieces, so they only hold with communication
    // disabled; their instances draw conflict-only environments.
    add(v, "U32", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = conflict_only_env(g);
        Term x = g.term(2), y = g.term(2), z = g.term(2);
        return AxiomInstance{unless(par(x, y), z), par(unless(x, z), unless(y, z)), env};
    });
    // The communication-merge distribution holds when the guard does not
    // interfere with the communication's constituents, so its instances
    // declare conflicts disjoint from every term alphabet.
    add(v, "U33", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env;
        env.add_gamma(ev("a"), ev("b"), ev("c"));
        env.add_conflict(ev("d"), ev("e"));
        Term x = g.term(2), y = g.term(2), z = g.term(2);
        return AxiomInstance{unless(comm(x, y), z), comm(unless(x, z), unless(y, z)), env};
    });
    // The guard-composition laws range over guards whose combination keeps
    // both alphabets: a deadlocking left factor would truncate its sibling
    // out of the canonical composed guard (delta annihilates under sequence
    // and the parallels), so the pieces are drawn deadlock-free.
    add(v, "U34", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = conflict_env(g);
        Term x = g.term(2), y = g.dfree(2), z = g.dfree(2);
        return AxiomInstance{unless(x, alt(y, z)), unless(unless(x, y), z), env};
    });
    add(v, "U35", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = conflict_env(g);
        Term x = g.term(2), y = g.dfree(2), z = g.dfree(2);
        return AxiomInstance{unless(x, seq(y, z)), unless(unless(x, y), z), env};
    });
    add(v, "U36", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = conflict_env(g);
        Term x = g.term(2), y = g.dfree(2), z = g.dfree(2);
        return AxiomInstance{unless(x, par(y, z)), unless(unless(x, y), z), env};
    });
    add(v, "U37", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = conflict_env(g);
        Term x = g.term(2), y = g.dfree(2), z = g.dfree(2);
        return AxiomInstance{unless(x, comm(y, z)), unless(unless(x, y), z), env};
    });

    // --- encapsulation ---
    add(v, "D1", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e = g.event();
        std::vector<std::string> H;
        for (const std::string& n : kPool)
            if (n != e.name && g.chance(40)) H.push_back(n);
        return AxiomInstance{encaps(H, atom(e)), atom(e), env};
    });
    add(v, "D2", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e = g.event();
        std::vector<std::string> H{e.name};
        for (const std::string& n : kPool)
            if (n != e.name && g.chance(30)) H.push_back(n);
        return AxiomInstance{encaps(H, atom(e)), delta_term(), env};
    });
    add(v, "D3", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        std::vector<std::string> H{g.nm()};
        return AxiomInstance{encaps(H, delta_term()), delta_term(), env};
    });
    add(v, "D4", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        std::vector<std::string> H{g.nm(), g.nm()};
        Term x = g.term(2), y = g.term(2);
        return AxiomInstance{encaps(H, alt(x, y)), alt(encaps(H, x), encaps(H, y)), env};
    });
    add(v, "D5", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        std::vector<std::string> H{g.nm(), g.nm()};
        Term x = g.term(2), y = g.term(2);
        return AxiomInstance{encaps(H, seq(x, y)), seq(encaps(H, x), encaps(H, y)), env};
    });
    add(v, "D6", S, [](std::mt19937_64& r) {
        // under the binary parallel: communication disabled (see U32)
        Gen g{r};
        Environment env;
        std::vector<std::string> H{g.nm(), g.nm()};
        Term x = g.term(2), y = g.term(2);
        return AxiomInstance{encaps(H, par(x, y)), par(encaps(H, x), encaps(H, y)), env};
    });

    // --- silent steps (branching laws) ---
    add(v, "B1", RB, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e = g.event();
        return AxiomInstance{seq(atom(e), tau_term()), atom(e), env};
    });
    add(v, "B2", RB, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e = g.event();
        Term x = g.term(2), y = g.term(2);
        return AxiomInstance{seq(atom(e), alt(seq(tau_term(), alt(x, y)), x)),
                             seq(atom(e), alt(x, y)), env};
    });
    add(v, "B3", RB, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(3);
        return AxiomInstance{par(x, tau_term()), x, env};
    });

    // --- abstraction ---
    add(v, "TI1", RB, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e = g.event();
        std::vector<std::string> I;
        for (const std::string& n : kPool)
            if (n != e.name && g.chance(40)) I.push_back(n);
        return AxiomInstance{abstr(I, atom(e)), atom(e), env};
    });
    add(v, "TI2", RB, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e = g.event();
        std::vector<std::string> I{e.name};
        return AxiomInstance{abstr(I, atom(e)), tau_term(), env};
    });
    add(v, "TI3", RB, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        std::vector<std::string> I{g.nm()};
        return AxiomInstance{abstr(I, delta_term()), delta_term(), env};
    });
    add(v, "TI4", RB, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        std::vector<std::string> I{g.nm(), g.nm()};
        Term x = g.term(2), y = g.term(2);
        return AxiomInstance{abstr(I, alt(x, y)), alt(abstr(I, x), abstr(I, y)), env};
    });
    add(v, "TI5", RB, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        std::vector<std::string> I{g.nm(), g.nm()};
        Term x = g.term(2), y = g.term(2);
        return AxiomInstance{abstr(I, seq(x, y)), seq(abstr(I, x), abstr(I, y)), env};
    });
    add(v, "TI6", RB, [](std::mt19937_64& r) {
        // under the binary parallel: communication disabled (see U32)
        Gen g{r};
        Environment env;
        std::vector<std::string> I{g.nm(), g.nm()};
        Term x = g.term(2), y = g.term(2);
        return AxiomInstance{abstr(I, par(x, y)), par(abstr(I, x), abstr(I, y)), env};
    });

    // --- shadows ---
    add(v, "SC1", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(3);
        return AxiomInstance{seq(atom(ActionLabel::shadow_plain()), x), x, env};
    });
    add(v, "SC2", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        Term x = g.term(3);
        return AxiomInstance{seq(x, atom(ActionLabel::shadow_plain())), x, env};
    });
    add(v, "SC3", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e = g.event();
        Term sh = atom(ActionLabel::shadow(e.name, e.args, 1));
        return AxiomInstance{par(sh, atom(e)), atom(e), env};
    });
    add(v, "SC4", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e = g.event();
        Term sh = atom(ActionLabel::shadow(e.name, e.args, 1));
        Term y = g.term(2);
        return AxiomInstance{par(atom(e), seq(sh, y)), seq(atom(e), y), env};
    });
    add(v, "SC5", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e = g.event();
        Term sh = atom(ActionLabel::shadow(e.name, e.args, 1));
        Term y = g.term(2);
        return AxiomInstance{par(sh, seq(atom(e), y)), seq(atom(e), y), env};
    });
    add(v, "SC6", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e = g.event();
        Term sh = atom(ActionLabel::shadow(e.name, e.args, 1));
        Term x = g.term(2);
        return AxiomInstance{par(seq(atom(e), x), sh), seq(atom(e), x), env};
    });
    add(v, "SC7", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e = g.event();
        Term sh = atom(ActionLabel::shadow(e.name, e.args, 1));
        Term x = g.term(2);
        return AxiomInstance{par(seq(sh, x), atom(e)), seq(atom(e), x), env};
    });
    add(v, "SC8", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e = g.event();
        Term sh = atom(ActionLabel::shadow(e.name, e.args, 1));
        Term x = g.term(2), y = g.term(2);
        return AxiomInstance{par(seq(atom(e), x), seq(sh, y)), seq(atom(e), wpar(x, y)), env};
    });
    add(v, "SC9", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        ActionLabel e = g.event();
        Term sh = atom(ActionLabel::shadow(e.name, e.args, 1));
        Term x = g.term(2), y = g.term(2);
        return AxiomInstance{par(seq(sh, x), seq(atom(e), y)), seq(atom(e), wpar(x, y)), env};
    });

    // --- the state operator ---
    add(v, "SO1", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = state_env(g, true, true);
        ActionLabel e = g.event();
        std::string s = env.state_spec->states[g.pick(2)];
        std::string nm = env.state_spec->apply_action(s, e.name);
        Term rhs = nm == "delta" ? delta_term()
                   : nm == "tau" ? tau_term()
                                 : atom(ev(nm));
        return AxiomInstance{state_op(s, atom(e)), rhs, env};
    });
    add(v, "SO2", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = state_env(g, true, true);
        std::string s = env.state_spec->states[g.pick(2)];
        return AxiomInstance{state_op(s, delta_term()), delta_term(), env};
    });
    add(v, "SO3", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = state_env(g, true, true);
        std::string s = env.state_spec->states[g.pick(2)];
        Term x = g.term(2), y = g.term(2);
        return AxiomInstance{state_op(s, alt(x, y)), alt(state_op(s, x), state_op(s, y)), env};
    });
    add(v, "SO4", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = state_env(g, true, true);
        std::string s = env.state_spec->states[g.pick(2)];
        ActionLabel e = g.event();
        Term y = g.term(2);
        std::string nm = env.state_spec->apply_action(s, e.name);
        std::string s2 = env.state_spec->apply_effect(s, e.name);
        Term rhs = nm == "delta" ? delta_term()
                   : nm == "tau" ? seq(tau_term(), state_op(s2, y))
                                 : seq(atom(ev(nm)), state_op(s2, y));
        return AxiomInstance{state_op(s, seq(atom(e), y)), rhs, env};
    });
    // The parallel distribution holds when actions carry no state effects
    // (with effects the two sides thread the state differently) and when
    // communication is disabled (renaming per component breaks pairings in
    // the merged remainder).
    add(v, "SO5", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = state_env(g, false, false, false);
        std::string s = env.state_spec->states[g.pick(2)];
        Term x = g.term(2), y = g.term(2);
        return AxiomInstance{state_op(s, par(x, y)), par(state_op(s, x), state_op(s, y)), env};
    });

    // --- recursion: a reference and its unfolding are interchangeable ---
    add(v, "RDP", S, [](std::mt19937_64& r) {
        Gen g{r};
        Environment env = plain_env(g);
        std::map<std::string, Term> eqs;
        eqs["X"] = alt(seq(atom(g.event()), var_ref("Y")), atom(g.event()));
        eqs["Y"] = g.chance(50)
                       ? seq(atom(g.event()), var_ref("X"))
                       : alt(seq(atom(g.event()), var_ref("X")), atom(g.event()));
        auto spec = RecursiveSpec::make(std::move(eqs));
        return AxiomInstance{rec_ref("X", spec), unfold("X", spec), env};
    });

    return v;
}

}  // namespace

const std::vector<AxiomSchema>& axiom_schemas() {
    static const std::vector<AxiomSchema> schemas = build_schemas();
    return schemas;
}

}  // namespace aptc
