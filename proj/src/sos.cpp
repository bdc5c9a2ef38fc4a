#include "aptc/sos.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace aptc {

namespace {

// ---------------------------------------------------------------------------
// Termination predicate

bool can_terminate_impl(const Term& t, std::set<std::string>& visiting) {
    switch (t->op) {
        case Op::Empty: return true;
        case Op::Atom:
            // A plain shadow is a pure skip; every other atom must fire.
            return t->atom.is_plain_shadow();
        case Op::Seq:
            return can_terminate_impl(t->kids[0], visiting) &&
                   can_terminate_impl(t->kids[1], visiting);
        case Op::Alt:
            for (const auto& k : t->kids)
                if (can_terminate_impl(k, visiting)) return true;
            return false;
        case Op::Par:
        case Op::Comm:
            return can_terminate_impl(t->kids[0], visiting) &&
                   can_terminate_impl(t->kids[1], visiting);
        case Op::WholePar:
            for (const auto& k : t->kids)
                if (!can_terminate_impl(k, visiting)) return false;
            return true;
        case Op::Theta:
        case Op::Unless:
        case Op::Encaps:
        case Op::Abstract:
        case Op::StateOp:
            return can_terminate_impl(t->kids[0], visiting);
        case Op::Var:
            throw std::logic_error("free variable in closed term: " + t->var);
        case Op::RecRef: {
            std::string tag = t->spec->hash + ":" + t->var;
            if (!visiting.insert(tag).second) return false;  // assume no on a cycle
            bool r = can_terminate_impl(unfold(t->var, t->spec), visiting);
            visiting.erase(tag);
            return r;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Step engine. One engine per environment; memoizes options by term key.

class StepEngine {
  public:
    explicit StepEngine(const Environment& env) : env_(env) {}

    const std::vector<StepOption>& options(const Term& t) {
        auto it = cache_.find(t->key);
        if (it != cache_.end()) return it->second;
        if (++depth_ > kMaxDepth)
            throw std::runtime_error(
                "recursion does not reach an action; specification is unguarded");
        std::vector<StepOption> out = compute(t);
        --depth_;
        dedupe(out);
        return cache_.emplace(t->key, std::move(out)).first->second;
    }

  private:
    static constexpr int kMaxDepth = 4096;

    const Environment& env_;
    std::unordered_map<std::string, std::vector<StepOption>> cache_;
    int depth_ = 0;

    static void dedupe(std::vector<StepOption>& opts) {
        std::set<std::pair<std::string, std::string>> seen;
        std::vector<StepOption> out;
        out.reserve(opts.size());
        for (auto& o : opts) {
            std::string nk = o.next ? o.next->key : "<tick>";
            if (seen.insert({o.label.str(), nk}).second) out.push_back(std::move(o));
        }
        opts = std::move(out);
    }

    std::vector<StepOption> compute(const Term& t) {
        switch (t->op) {
            case Op::Empty: return {};
            case Op::Atom: return atom_steps(t);
            case Op::Seq: return seq_steps(t);
            case Op::Alt: return alt_steps(t);
            case Op::Par: return par_steps(t);
            case Op::Comm: return comm_steps(t);
            case Op::WholePar: return wpar_steps(t);
            case Op::Theta: return theta_steps(t);
            case Op::Unless: return unless_steps(t);
            case Op::Encaps: return encaps_steps(t);
            case Op::Abstract: return abstract_steps(t);
            case Op::StateOp: return state_steps(t);
            case Op::Var:
                throw std::logic_error("free variable in closed term: " + t->var);
            case Op::RecRef: return options(unfold(t->var, t->spec));
        }
        return {};
    }

    std::vector<StepOption> atom_steps(const Term& t) {
        // delta deadlocks; a plain shadow terminates without a step.
        if (t->atom.is_delta() || t->atom.is_plain_shadow()) return {};
        return {{StepLabel({t->atom}), nullptr}};
    }

    std::vector<StepOption> seq_steps(const Term& t) {
        const Term& x = t->kids[0];
        const Term& y = t->kids[1];
        std::vector<StepOption> out;
        for (const auto& o : options(x))
            out.push_back({o.label, o.next ? seq(o.next, y) : y});
        if (can_terminate(x))
            for (const auto& o : options(y)) out.push_back(o);
        return out;
    }

    std::vector<StepOption> alt_steps(const Term& t) {
        std::vector<StepOption> out;
        for (const auto& k : t->kids)
            for (const auto& o : options(k)) out.push_back(o);
        return out;
    }

    // An event of one mover together with its component slot, for pairing.
    struct Ev {
        int comp;
        ActionLabel e;
    };

    // Enumerate every pairing resolution of `evs`: each event either stays,
    // joins a communication pair (two ordinary events of distinct components
    // whose gamma is defined), or resolves a shadow against its base event in
    // another component. gamma pairing is disabled under the strict parallel
    // operator, which only synchronises shadows.
    void enum_pairings(const std::vector<Ev>& evs, std::size_t idx, std::vector<char>& used,
                       std::vector<ActionLabel>& acc, bool allow_gamma,
                       std::vector<StepLabel>& out) {
        while (idx < evs.size() && used[idx]) ++idx;
        if (idx == evs.size()) {
            out.push_back(StepLabel(acc));
            return;
        }
        used[idx] = 1;
        // stay unpaired
        acc.push_back(evs[idx].e);
        enum_pairings(evs, idx + 1, used, acc, allow_gamma, out);
        acc.pop_back();
        // pair with a later event of a different component
        for (std::size_t j = idx + 1; j < evs.size(); ++j) {
            if (used[j] || evs[j].comp == evs[idx].comp) continue;
            const ActionLabel& a = evs[idx].e;
            const ActionLabel& b = evs[j].e;
            std::optional<ActionLabel> result;
            if (allow_gamma && a.is_ordinary() && b.is_ordinary())
                result = env_.gamma_of(a, b);
            if (!result && a.is_shadow() && b.is_ordinary() && a.base() == b)
                result = b;
            if (!result && b.is_shadow() && a.is_ordinary() && b.base() == a)
                result = a;
            if (!result) continue;
            used[j] = 1;
            acc.push_back(*result);
            enum_pairings(evs, idx + 1, used, acc, allow_gamma, out);
            acc.pop_back();
            used[j] = 0;
        }
        used[idx] = 0;
    }

    // Does some first step of `t` contain a shadow whose base is `e`? Such a
    // component insists on witnessing `e`; while it stands still, `e` may not
    // fire unpaired elsewhere.
    bool has_enabled_shadow_for(const Term& t, const ActionLabel& e) {
        for (const auto& o : options(t))
            for (const auto& ev : o.label.events)
                if (ev.is_shadow() && ev.base() == e) return true;
        return false;
    }

    // Shared merge core. `kids` are the components; `strict_joint` demands
    // that every component moves (the binary parallel operator); otherwise
    // any nonempty subset of components moves and the rest stand still.
    std::vector<StepOption> merge_steps(const std::vector<Term>& kids, bool strict_joint,
                                        bool allow_gamma) {
        const int n = static_cast<int>(kids.size());
        std::vector<const std::vector<StepOption>*> opts(n);
        for (int i = 0; i < n; ++i) opts[i] = &options(kids[i]);

        std::vector<StepOption> out;
        for (unsigned mask = 1; mask < (1u << n); ++mask) {
            if (strict_joint && mask != (1u << n) - 1) continue;
            std::vector<int> movers;
            for (int i = 0; i < n; ++i)
                if (mask & (1u << i)) movers.push_back(i);
            if (!strict_joint && movers.empty()) continue;
            bool any_empty = false;
            for (int i : movers)
                if (opts[i]->empty()) any_empty = true;
            if (any_empty) continue;

            // one choice of step per mover
            std::vector<std::size_t> pick(movers.size(), 0);
            while (true) {
                std::vector<Ev> evs;
                for (std::size_t m = 0; m < movers.size(); ++m)
                    for (const auto& e : (*opts[movers[m]])[pick[m]].label.events)
                        evs.push_back({movers[m], e});

                // continuation: movers advance, the rest stand still
                std::vector<Term> rest;
                for (int i = 0; i < n; ++i) {
                    auto mit = std::find(movers.begin(), movers.end(), i);
                    if (mit == movers.end()) {
                        rest.push_back(kids[i]);
                    } else {
                        const auto& o = (*opts[i])[pick[mit - movers.begin()]];
                        if (o.next) rest.push_back(o.next);
                    }
                }
                Term next = rest.empty() ? nullptr : wpar(rest);
                if (next && next->op == Op::Empty) next = nullptr;

                std::vector<StepLabel> labels;
                std::vector<char> used(evs.size(), 0);
                std::vector<ActionLabel> acc;
                enum_pairings(evs, 0, used, acc, allow_gamma, labels);

                for (auto& lab : labels) {
                    // base-blocking: an unpaired ordinary event with a matching
                    // shadow enabled in a standing component may not fire; the
                    // standing component has not given up its claim on it.
                    bool blocked = false;
                    for (const auto& e : lab.events) {
                        if (!e.is_ordinary()) continue;
                        for (int i = 0; i < n && !blocked; ++i) {
                            if (mask & (1u << i)) continue;
                            if (has_enabled_shadow_for(kids[i], e)) blocked = true;
                        }
                        if (blocked) break;
                    }
                    if (!blocked) out.push_back({std::move(lab), next});
                }

                // next combination
                std::size_t m = 0;
                for (; m < movers.size(); ++m) {
                    if (++pick[m] < opts[movers[m]]->size()) break;
                    pick[m] = 0;
                }
                if (m == movers.size()) break;
            }
        }
        return out;
    }

    std::vector<StepOption> par_steps(const Term& t) {
        return merge_steps({t->kids[0], t->kids[1]}, /*strict_joint=*/true,
                           /*allow_gamma=*/false);
    }

    std::vector<StepOption> wpar_steps(const Term& t) {
        return merge_steps(t->kids, /*strict_joint=*/false, /*allow_gamma=*/true);
    }

    // Communication merge: the two first steps must communicate completely —
    // a perfect matching of their events with gamma defined on every pair.
    std::vector<StepOption> comm_steps(const Term& t) {
        std::vector<StepOption> out;
        for (const auto& ox : options(t->kids[0])) {
            for (const auto& oy : options(t->kids[1])) {
                const auto& xs = ox.label.events;
                const auto& ys = oy.label.events;
                if (xs.size() != ys.size()) continue;
                std::vector<char> used(ys.size(), 0);
                std::vector<ActionLabel> acc;
                std::vector<StepLabel> labels;
                match_all(xs, ys, 0, used, acc, labels);
                if (labels.empty()) continue;
                Term next = nullptr;
                if (ox.next && oy.next)
                    next = wpar(ox.next, oy.next);
                else if (ox.next)
                    next = ox.next;
                else if (oy.next)
                    next = oy.next;
                if (next && next->op == Op::Empty) next = nullptr;
                for (auto& lab : labels) out.push_back({std::move(lab), next});
            }
        }
        return out;
    }

    void match_all(const std::vector<ActionLabel>& xs, const std::vector<ActionLabel>& ys,
                   std::size_t i, std::vector<char>& used, std::vector<ActionLabel>& acc,
                   std::vector<StepLabel>& out) {
        if (i == xs.size()) {
            out.push_back(StepLabel(acc));
            return;
        }
        if (!xs[i].is_ordinary()) return;
        for (std::size_t j = 0; j < ys.size(); ++j) {
            if (used[j] || !ys[j].is_ordinary()) continue;
            auto g = env_.gamma_of(xs[i], ys[j]);
            if (!g) continue;
            used[j] = 1;
            acc.push_back(*g);
            match_all(xs, ys, i + 1, used, acc, out);
            acc.pop_back();
            used[j] = 0;
        }
    }

    // Renders one step label as a term: a single event stays an atom, a
    // multi-event label becomes the joint bundle of its atoms.
    Term bundle_of(const StepLabel& l) {
        std::vector<Term> parts;
        for (const auto& e : l.events) parts.push_back(atom(e));
        Term b = parts.back();
        for (std::size_t i = parts.size() - 1; i-- > 0;) b = par(parts[i], std::move(b));
        return b;
    }

    // Conflict elimination. With no conflicts declared it is transparent.
    // On choice, sequence and the binary parallel operators it follows its
    // distribution laws; any other operand is first presented as the sum of
    // its next-step summands and re-dispatched, so a conflicting pair inside
    // one joint step leaves a silent residue (one option per surviving side)
    // rather than a dropped step — the reading the unless laws force.
    std::vector<StepOption> theta_steps(const Term& t) {
        const Term& x = t->kids[0];
        if (env_.conflicts.empty()) return options(x);
        switch (x->op) {
            case Op::Atom:
                // a lone event never carries a conflicting pair
                return options(x);
            case Op::Alt: {
                // theta(x+y) = theta(x) <| y + theta(y) <| x, folded over kids
                std::vector<StepOption> out;
                for (std::size_t i = 0; i < x->kids.size(); ++i) {
                    std::vector<Term> others;
                    for (std::size_t j = 0; j < x->kids.size(); ++j)
                        if (j != i) others.push_back(x->kids[j]);
                    Term guard = others.empty() ? nullptr : alt(others);
                    Term branch = theta(x->kids[i]);
                    if (guard) branch = unless(branch, guard);
                    for (const auto& o : options(branch)) out.push_back(o);
                }
                return out;
            }
            case Op::Seq:
                return options(seq(theta(x->kids[0]), theta(x->kids[1])));
            case Op::Par:
                return options(alt(par(unless(theta(x->kids[0]), x->kids[1]), x->kids[1]),
                                   par(unless(theta(x->kids[1]), x->kids[0]), x->kids[0])));
            case Op::Comm:
                return options(alt(comm(unless(theta(x->kids[0]), x->kids[1]), x->kids[1]),
                                   comm(unless(theta(x->kids[1]), x->kids[0]), x->kids[0])));
            default: {
                std::vector<StepOption> opts = options(x);
                if (opts.empty()) return {};
                std::vector<Term> summands;
                for (const auto& o : opts) {
                    Term head = bundle_of(o.label);
                    summands.push_back(o.next ? seq(std::move(head), o.next) : std::move(head));
                }
                return theta_steps(theta(alt(std::move(summands))));
            }
        }
    }

    // The unless guard persists along the left operand: an event is silenced
    // when the right operand could do a conflicting event, or an event whose
    // conflict partner causally precedes it.  Keeping the guard on the
    // continuation is what makes the guard distribute through sequential
    // composition.
    std::vector<StepOption> unless_steps(const Term& t) {
        const Term& x = t->kids[0];
        const Term& y = t->kids[1];
        std::set<ActionLabel> ybet = alphabet(y);
        auto silenced = [&](const ActionLabel& e) {
            if (!e.is_ordinary()) return false;
            for (const ActionLabel& f : ybet) {
                if (env_.in_conflict(e, f)) return true;
                for (const auto& cp : env_.causality)
                    if (cp.receive == e && env_.in_conflict(f, cp.send)) return true;
            }
            return false;
        };
        std::vector<StepOption> out;
        for (const auto& o : options(x)) {
            std::vector<ActionLabel> ev;
            for (const auto& e : o.label.events)
                ev.push_back(silenced(e) ? ActionLabel::tau() : e);
            out.push_back({StepLabel(std::move(ev)), o.next ? unless(o.next, y) : nullptr});
        }
        return out;
    }

    std::vector<StepOption> encaps_steps(const Term& t) {
        const Term& x = t->kids[0];
        std::vector<StepOption> out;
        for (const auto& o : options(x)) {
            bool blocked = false;
            for (const auto& e : o.label.events)
                if (e.is_ordinary() && std::binary_search(t->label_set.begin(), t->label_set.end(), e.name)) {
                    blocked = true;
                    break;
                }
            if (!blocked)
                out.push_back({o.label, o.next ? encaps(t->label_set, o.next) : nullptr});
        }
        return out;
    }

    std::vector<StepOption> abstract_steps(const Term& t) {
        const Term& x = t->kids[0];
        std::vector<StepOption> out;
        for (const auto& o : options(x)) {
            std::vector<ActionLabel> ev;
            for (const auto& e : o.label.events)
                ev.push_back(e.is_ordinary() && std::binary_search(t->label_set.begin(), t->label_set.end(), e.name) ? ActionLabel::tau()
                                                                           : e);
            out.push_back(
                {StepLabel(std::move(ev)), o.next ? abstr(t->label_set, o.next) : nullptr});
        }
        return out;
    }

    std::vector<StepOption> state_steps(const Term& t) {
        if (!env_.state_spec)
            throw std::logic_error("state operator used without state tables");
        const StateSpec& spec = *env_.state_spec;
        const Term& x = t->kids[0];
        std::vector<StepOption> out;
        for (const auto& o : options(x)) {
            const auto& ev = o.label.events;
            // race filter on the pre-map label
            bool racing = false;
            for (std::size_t i = 0; i < ev.size() && !racing; ++i)
                for (std::size_t j = i + 1; j < ev.size(); ++j)
                    if (env_.in_race(ev[i], ev[j])) {
                        racing = true;
                        break;
                    }
            if (racing) continue;
            // action map, name-level, arguments carried over
            std::vector<ActionLabel> mapped;
            bool killed = false;
            for (const auto& e : ev) {
                if (!e.is_ordinary()) {
                    mapped.push_back(e);
                    continue;
                }
                std::string nm = spec.apply_action(t->state, e.name);
                if (nm == "delta") {
                    killed = true;
                    break;
                }
                if (nm == "tau") {
                    mapped.push_back(ActionLabel::tau());
                    continue;
                }
                ActionLabel m = e;
                m.name = nm;
                mapped.push_back(m);
            }
            if (killed) continue;
            // effects folded over the (sorted) pre-map label
            std::string s2 = t->state;
            std::vector<ActionLabel> sorted_ev = ev;
            std::sort(sorted_ev.begin(), sorted_ev.end());
            for (const auto& e : sorted_ev)
                if (e.is_ordinary()) s2 = spec.apply_effect(s2, e.name);
            out.push_back({StepLabel(std::move(mapped)),
                           o.next ? state_op(s2, o.next) : nullptr});
        }
        return out;
    }
};

}  // namespace

bool can_terminate(const Term& t) {
    std::set<std::string> visiting;
    return can_terminate_impl(t, visiting);
}

std::vector<StepOption> step_outgoing(const Term& t, const Environment& env) {
    StepEngine engine(env);
    return engine.options(t);
}

// ---------------------------------------------------------------------------
// Reachability

namespace {

// Credit counters for the causality constraints, one per declared pair.
using Credits = std::vector<int>;

std::string credit_suffix(const Credits& c) {
    std::string s = "|c";
    for (int v : c) s += ":" + std::to_string(v);
    return s;
}

// Apply a step to the credit vector. Returns false when some receive lacks
// credit: the step cannot happen. Sends earn credit only after the step, so
// a send and its receive can never share a step.
bool apply_credits(const Environment& env, const StepLabel& label, Credits& c) {
    for (std::size_t i = 0; i < env.causality.size(); ++i) {
        int receives = 0, sends = 0;
        for (const auto& e : label.events) {
            if (e == env.causality[i].receive) ++receives;
            if (e == env.causality[i].send) ++sends;
        }
        if (receives > c[i]) return false;
        c[i] += sends - receives;
    }
    return true;
}

}  // namespace

StepLTS build_lts(const Term& t, const Environment& env, const BuildOptions& opts,
                  BuildStats* stats) {
    StepEngine engine(env);
    StepLTS lts;
    const bool credits_on = !env.causality.empty();

    struct Pending {
        Term term;
        Credits credits;
    };
    std::unordered_map<std::string, int> ids;
    std::vector<Pending> work;

    auto intern = [&](const Term& term, const Credits& c) {
        std::string key = term->key;
        if (credits_on) key += credit_suffix(c);
        auto it = ids.find(key);
        if (it != ids.end()) return it->second;
        if (lts.states.size() >= opts.max_states)
            throw ResourceLimitError("state bound exceeded (" +
                                     std::to_string(opts.max_states) + " states)");
        int id = static_cast<int>(lts.states.size());
        ids.emplace(std::move(key), id);
        lts.states.push_back({opts.keep_term_keys ? (credits_on ? term->key + credit_suffix(c)
                                                                : term->key)
                                                  : "",
                              can_terminate(term), false});
        work.push_back({term, c});
        return id;
    };

    Credits c0(env.causality.size(), 0);
    lts.initial = intern(t, c0);

    for (std::size_t next = 0; next < work.size(); ++next) {
        const Pending cur = work[next];  // copy: work may reallocate
        const int src = static_cast<int>(next);
        for (const auto& o : engine.options(cur.term)) {
            if (o.label.contains_shadow()) continue;  // unpaired at the root: discard
            Credits c = cur.credits;
            if (credits_on && !apply_credits(env, o.label, c)) continue;
            int dst = o.next ? intern(o.next, c) : StepLTS::TICK;
            lts.transitions.push_back({src, o.label, dst});
        }
    }
    lts.sort_transitions();
    if (stats) {
        stats->states = lts.states.size();
        stats->transitions = lts.transitions.size();
    }
    return lts;
}

}  // namespace aptc
