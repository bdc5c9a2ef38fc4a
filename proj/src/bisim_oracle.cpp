// Brute-force greatest-fixpoint bisimulation checking, straight off the
// transfer conditions. This file is the testing oracle for the efficient
// checkers: it favours obviousness over speed and is size-capped. Frozen —
// behavioural changes here invalidate the agreement suite.

#include <stdexcept>

#include "aptc/bisim.hpp"

namespace aptc {

namespace {

// One side of the comparison: its states plus a virtual TICK state.
struct Side {
    const StepLTS& l;
    int tick;  // index of the virtual termination state == l.states.size()

    explicit Side(const StepLTS& lts) : l(lts), tick(static_cast<int>(lts.states.size())) {}

    int size() const { return tick + 1; }
    bool terminating(int s) const {
        return s == tick || l.states[static_cast<std::size_t>(s)].terminating;
    }
    // Outgoing transitions; TICK has none. Targets are remapped so TICK is
    // an ordinary state index.
    std::vector<std::pair<StepLabel, int>> out(int s) const {
        std::vector<std::pair<StepLabel, int>> res;
        if (s == tick) return res;
        for (const auto& t : l.outgoing(s))
            res.emplace_back(t.label, t.dst == StepLTS::TICK ? tick : t.dst);
        return res;
    }
    std::vector<int> tau_successors(int s) const {
        std::vector<int> res;
        for (const auto& [lab, dst] : out(s))
            if (lab.is_silent()) res.push_back(dst);
        return res;
    }
};

struct PairRelation {
    int n2;
    std::vector<char> rel;  // rel[p * n2 + q]

    PairRelation(int size1, int size2) : n2(size2), rel(static_cast<std::size_t>(size1) * size2, 1) {}
    bool get(int p, int q) const { return rel[static_cast<std::size_t>(p) * n2 + q] != 0; }
    void clear(int p, int q) { rel[static_cast<std::size_t>(p) * n2 + q] = 0; }
};

// Strong transfer of one step p -L-> p': q must have q -L-> q' with (p',q')
// in R. `forward` distinguishes which component of the pair moves.
bool strong_move_matched(const Side& matcher, const PairRelation& r, bool forward, int q,
                         const StepLabel& label, int p_next) {
    for (const auto& [lab, q_next] : matcher.out(q)) {
        if (lab != label) continue;
        if (forward ? r.get(p_next, q_next) : r.get(q_next, p_next)) return true;
    }
    return false;
}

bool strong_pair_ok(const Side& a, const Side& b, const PairRelation& r, int p, int q) {
    if (a.terminating(p) != b.terminating(q)) return false;
    for (const auto& [lab, p_next] : a.out(p))
        if (!strong_move_matched(b, r, true, q, lab, p_next)) return false;
    for (const auto& [lab, q_next] : b.out(q))
        if (!strong_move_matched(a, r, false, p, lab, q_next)) return false;
    return true;
}

// States reachable from q via tau steps passing only through states q^ with
// (p,q^) in R (in the given orientation). Includes q itself.
std::vector<int> branching_tau_closure(const Side& b, const PairRelation& r, bool forward,
                                       int p, int q) {
    std::vector<int> stack{q};
    std::vector<char> seen(static_cast<std::size_t>(b.size()), 0);
    seen[static_cast<std::size_t>(q)] = 1;
    std::vector<int> result;
    while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        result.push_back(cur);
        for (int next : b.tau_successors(cur)) {
            if (seen[static_cast<std::size_t>(next)]) continue;
            if (!(forward ? r.get(p, next) : r.get(next, p))) continue;
            seen[static_cast<std::size_t>(next)] = 1;
            stack.push_back(next);
        }
    }
    return result;
}

// Branching transfer: p -L-> p' is matched if L is tau and (p',q) in R, or
// some q^ in the R-respecting tau closure of q has q^ -L-> q' with
// (p',q') in R. Termination: p terminating needs a related terminating q^.
bool branching_pair_ok(const Side& a, const Side& b, const PairRelation& r, int p, int q) {
    auto dir_ok = [&](const Side& from, const Side& to, bool forward, int s, int t) {
        for (const auto& [lab, s_next] : from.out(s)) {
            bool matched = false;
            if (lab.is_silent() && (forward ? r.get(s_next, t) : r.get(t, s_next)))
                matched = true;
            if (!matched) {
                for (int th : branching_tau_closure(to, r, forward, s, t)) {
                    for (const auto& [lab2, t_next] : to.out(th)) {
                        if (lab2 != lab) continue;
                        if (forward ? r.get(s_next, t_next) : r.get(t_next, s_next)) {
                            matched = true;
                            break;
                        }
                    }
                    if (matched) break;
                }
            }
            if (!matched) return false;
        }
        if (from.terminating(s)) {
            for (int th : branching_tau_closure(to, r, forward, s, t))
                if (to.terminating(th)) return true;
            return false;
        }
        return true;
    };
    return dir_ok(a, b, true, p, q) && dir_ok(b, a, false, q, p);
}

PairRelation greatest_fixpoint(const Side& a, const Side& b, bool branching) {
    PairRelation r(a.size(), b.size());
    bool changed = true;
    while (changed) {
        changed = false;
        for (int p = 0; p < a.size(); ++p) {
            for (int q = 0; q < b.size(); ++q) {
                if (!r.get(p, q)) continue;
                bool ok = branching ? branching_pair_ok(a, b, r, p, q)
                                    : strong_pair_ok(a, b, r, p, q);
                if (!ok) {
                    r.clear(p, q);
                    changed = true;
                }
            }
        }
    }
    return r;
}

// Root condition: every initial transition is matched by an identical-label
// initial transition into the branching relation; tau is not absorbable here.
bool root_condition(const Side& a, const Side& b, const PairRelation& rb, int p0, int q0) {
    if (a.terminating(p0) != b.terminating(q0)) return false;
    for (const auto& [lab, p_next] : a.out(p0)) {
        bool matched = false;
        for (const auto& [lab2, q_next] : b.out(q0)) {
            if (lab2 == lab && rb.get(p_next, q_next)) {
                matched = true;
                break;
            }
        }
        if (!matched) return false;
    }
    for (const auto& [lab, q_next] : b.out(q0)) {
        bool matched = false;
        for (const auto& [lab2, p_next] : a.out(p0)) {
            if (lab2 == lab && rb.get(p_next, q_next)) {
                matched = true;
                break;
            }
        }
        if (!matched) return false;
    }
    return true;
}

std::vector<std::pair<int, int>> relation_pairs(const Side& a, const Side& b,
                                                const PairRelation& r) {
    std::vector<std::pair<int, int>> pairs;
    for (int p = 0; p < a.size(); ++p)
        for (int q = 0; q < b.size(); ++q)
            if (r.get(p, q))
                pairs.emplace_back(p == a.tick ? StepLTS::TICK : p,
                                   q == b.tick ? StepLTS::TICK : q);
    return pairs;
}

}  // namespace

EquivalenceVerdict brute_force_bisim(const StepLTS& l1, const StepLTS& l2, EquivKind kind) {
    if (l1.states.size() + l2.states.size() > 40)
        throw std::length_error("brute_force_bisim: size cap (40 combined states) exceeded");
    Side a(l1), b(l2);
    const bool branching = kind != EquivKind::StrongStep;
    PairRelation r = greatest_fixpoint(a, b, branching);

    bool equivalent = r.get(l1.initial, l2.initial);
    if (equivalent && kind == EquivKind::RootedBranchingStep)
        equivalent = root_condition(a, b, r, l1.initial, l2.initial);

    EquivalenceVerdict v;
    v.equivalent = equivalent;
    if (equivalent) v.relation = relation_pairs(a, b, r);
    return v;
}

bool verify_witness(const StepLTS& l1, const StepLTS& l2, EquivKind kind,
                    const std::vector<std::pair<int, int>>& relation) {
    Side a(l1), b(l2);
    PairRelation r(a.size(), b.size());
    for (auto& cell : r.rel) cell = 0;
    bool has_initial = false;
    for (const auto& [p, q] : relation) {
        int pi = p == StepLTS::TICK ? a.tick : p;
        int qi = q == StepLTS::TICK ? b.tick : q;
        r.rel[static_cast<std::size_t>(pi) * r.n2 + qi] = 1;
        if (pi == l1.initial && qi == l2.initial) has_initial = true;
    }
    if (!has_initial) return false;
    const bool branching = kind != EquivKind::StrongStep;
    for (int p = 0; p < a.size(); ++p) {
        for (int q = 0; q < b.size(); ++q) {
            if (!r.get(p, q)) continue;
            bool ok = branching ? branching_pair_ok(a, b, r, p, q)
                                : strong_pair_ok(a, b, r, p, q);
            if (!ok) return false;
        }
    }
    if (kind == EquivKind::RootedBranchingStep)
        return root_condition(a, b, r, l1.initial, l2.initial);
    return true;
}

}  // namespace aptc
