#include "aptc/bisim.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <tuple>

#include <json.hpp>

namespace aptc {

namespace {

// ---------------------------------------------------------------------------
// Signature refinement over a generic string-labelled system. One extra
// virtual state (index n-1) is the successful-termination sink.

struct Edge {
    std::string lab;
    bool silent;
    int dst;
};

struct Sys {
    std::vector<std::vector<Edge>> out;
    std::vector<char> term;
    int n() const { return static_cast<int>(term.size()); }
};

int count_blocks(const std::vector<int>& block) {
    std::set<int> s(block.begin(), block.end());
    return static_cast<int>(s.size());
}

// Strong: signature is the set of (label, target block), split initially by
// termination. Branching: the signature collects non-inert moves reachable
// through inert tau paths (tau moves staying in the state's own block), with
// a bit for inert-reachable termination; divergence is deliberately ignored.
std::vector<int> refine(const Sys& sys, bool branching) {
    const int n = sys.n();
    std::vector<int> block(n, 0);
    if (!branching)
        for (int i = 0; i < n; ++i) block[i] = sys.term[i] ? 1 : 0;

    int blocks_before = count_blocks(block);
    while (true) {
        std::map<std::tuple<int, int, std::set<std::pair<std::string, int>>>, int> ids;
        std::vector<int> next(n);
        for (int s = 0; s < n; ++s) {
            std::set<std::pair<std::string, int>> sig;
            int termbit = sys.term[s] ? 1 : 0;
            if (!branching) {
                for (const Edge& e : sys.out[s]) sig.insert({e.lab, block[e.dst]});
            } else {
                std::vector<int> stack{s};
                std::set<int> seen{s};
                while (!stack.empty()) {
                    int u = stack.back();
                    stack.pop_back();
                    if (sys.term[u]) termbit = 1;
                    for (const Edge& e : sys.out[u]) {
                        if (e.silent && block[e.dst] == block[s]) {
                            if (seen.insert(e.dst).second) stack.push_back(e.dst);
                        } else {
                            sig.insert({e.lab, block[e.dst]});
                        }
                    }
                }
            }
            auto key = std::make_tuple(block[s], termbit, std::move(sig));
            auto it = ids.find(key);
            if (it == ids.end())
                it = ids.emplace(std::move(key), static_cast<int>(ids.size())).first;
            next[s] = it->second;
        }
        int blocks_after = count_blocks(next);
        block = std::move(next);
        if (blocks_after == blocks_before) return block;
        blocks_before = blocks_after;
    }
}

// Disjoint-union system of two LTSs plus one shared termination sink.
struct Union {
    Sys sys;
    int n1, n2, tick;

    Union(const StepLTS& l1, const StepLTS& l2) {
        n1 = static_cast<int>(l1.states.size());
        n2 = static_cast<int>(l2.states.size());
        tick = n1 + n2;
        sys.out.resize(tick + 1);
        sys.term.resize(tick + 1, 0);
        for (int i = 0; i < n1; ++i) sys.term[i] = l1.states[i].terminating;
        for (int j = 0; j < n2; ++j) sys.term[n1 + j] = l2.states[j].terminating;
        sys.term[tick] = 1;
        for (const auto& t : l1.transitions)
            sys.out[t.src].push_back({t.label.str(), t.label.is_silent(),
                                      t.dst == StepLTS::TICK ? tick : t.dst});
        for (const auto& t : l2.transitions)
            sys.out[n1 + t.src].push_back({t.label.str(), t.label.is_silent(),
                                           t.dst == StepLTS::TICK ? tick : n1 + t.dst});
    }

    int left(int s) const { return s == StepLTS::TICK ? tick : s; }
    int right(int s) const { return s == StepLTS::TICK ? tick : n1 + s; }
};

// Cross pairs of same-block states, indices mapped back to each side with
// the sink rendered as TICK. Skipped for very large products.
std::vector<std::pair<int, int>> relation_from(const Union& u, const std::vector<int>& block) {
    std::vector<std::pair<int, int>> rel;
    if (static_cast<long long>(u.n1 + 1) * (u.n2 + 1) > 250000) return rel;
    for (int i = 0; i <= u.n1; ++i) {
        int li = (i == u.n1) ? u.tick : i;
        for (int j = 0; j <= u.n2; ++j) {
            int rj = (j == u.n2) ? u.tick : u.n1 + j;
            if (block[li] == block[rj])
                rel.push_back({i == u.n1 ? StepLTS::TICK : i, j == u.n2 ? StepLTS::TICK : j});
        }
    }
    std::sort(rel.begin(), rel.end());
    return rel;
}

// ---------------------------------------------------------------------------
// Counterexample search: determinised label-set runs over pairs of state
// sets. Finds a trace after which one side refuses a label the other offers,
// or a termination mismatch. Branching kinds run tau-abstracted.

std::set<int> tau_closure_set(const StepLTS& l, std::set<int> cur) {
    std::deque<int> work(cur.begin(), cur.end());
    while (!work.empty()) {
        int s = work.front();
        work.pop_front();
        if (s == StepLTS::TICK) continue;
        for (const auto& t : l.outgoing(s))
            if (t.label.is_silent() && cur.insert(t.dst).second) work.push_back(t.dst);
    }
    return cur;
}

bool set_terminates(const StepLTS& l, const std::set<int>& cur) {
    for (int s : cur)
        if (s == StepLTS::TICK || l.states[s].terminating) return true;
    return false;
}

std::set<std::string> offered(const StepLTS& l, const std::set<int>& cur, bool skip_tau) {
    std::set<std::string> labs;
    for (int s : cur) {
        if (s == StepLTS::TICK) continue;
        for (const auto& t : l.outgoing(s))
            if (!(skip_tau && t.label.is_silent())) labs.insert(t.label.str());
    }
    return labs;
}

std::set<int> move(const StepLTS& l, const std::set<int>& cur, const std::string& lab) {
    std::set<int> next;
    for (int s : cur) {
        if (s == StepLTS::TICK) continue;
        for (const auto& t : l.outgoing(s))
            if (t.label.str() == lab) next.insert(t.dst);
    }
    return next;
}

std::optional<Counterexample> find_counterexample(const StepLTS& l1, const StepLTS& l2,
                                                  bool tau_abstract) {
    struct Node {
        std::set<int> a, b;
        std::vector<StepLabel> trace;
    };
    auto norm = [&](const StepLTS& l, std::set<int> s) {
        return tau_abstract ? tau_closure_set(l, std::move(s)) : std::move(s);
    };
    auto render = [](const std::set<int>& a, const std::set<int>& b) {
        std::string k;
        for (int s : a) k += std::to_string(s) + ",";
        k += "|";
        for (int s : b) k += std::to_string(s) + ",";
        return k;
    };
    // recover a StepLabel from one of the transitions carrying this string
    auto label_of = [](const StepLTS& l, const std::set<int>& cur, const std::string& lab) {
        for (int s : cur) {
            if (s == StepLTS::TICK) continue;
            for (const auto& t : l.outgoing(s))
                if (t.label.str() == lab) return t.label;
        }
        return StepLabel{};
    };

    std::deque<Node> work;
    std::set<std::string> seen;
    Node start{norm(l1, {l1.initial}), norm(l2, {l2.initial}), {}};
    seen.insert(render(start.a, start.b));
    work.push_back(std::move(start));
    std::size_t budget = 50000;

    while (!work.empty() && budget-- > 0) {
        Node cur = std::move(work.front());
        work.pop_front();

        auto la = offered(l1, cur.a, tau_abstract);
        auto lb = offered(l2, cur.b, tau_abstract);
        for (const auto& lab : la)
            if (!lb.count(lab)) {
                Counterexample ce;
                ce.trace = cur.trace;
                ce.refused = label_of(l1, cur.a, lab);
                ce.refusing_side = 2;
                return ce;
            }
        for (const auto& lab : lb)
            if (!la.count(lab)) {
                Counterexample ce;
                ce.trace = cur.trace;
                ce.refused = label_of(l2, cur.b, lab);
                ce.refusing_side = 1;
                return ce;
            }
        if (set_terminates(l1, cur.a) != set_terminates(l2, cur.b)) {
            Counterexample ce;
            ce.trace = cur.trace;
            ce.termination_mismatch = true;
            ce.refusing_side = set_terminates(l1, cur.a) ? 2 : 1;
            ce.note = "after the trace one side can terminate and the other cannot";
            return ce;
        }
        for (const auto& lab : la) {
            Node nxt;
            nxt.a = norm(l1, move(l1, cur.a, lab));
            nxt.b = norm(l2, move(l2, cur.b, lab));
            if (!seen.insert(render(nxt.a, nxt.b)).second) continue;
            nxt.trace = cur.trace;
            nxt.trace.push_back(label_of(l1, cur.a, lab));
            work.push_back(std::move(nxt));
        }
    }
    return std::nullopt;
}

Counterexample fallback_counterexample(const StepLTS& l1, const StepLTS& l2) {
    Counterexample ce;
    auto offers = [](const StepLTS& l) {
        std::string s;
        for (const auto& lab : offered(l, {l.initial}, false)) {
            if (!s.empty()) s += " ";
            s += lab;
        }
        return s.empty() ? std::string("(none)") : s;
    };
    ce.note = "no refusal trace exists: the systems agree on label-set runs and differ "
              "only in branching; initial offers left: " +
              offers(l1) + " right: " + offers(l2);
    return ce;
}

EquivalenceVerdict verdict_for(const StepLTS& l1, const StepLTS& l2, bool equivalent,
                               const Union& u, const std::vector<int>& block,
                               bool tau_abstract) {
    EquivalenceVerdict v;
    v.equivalent = equivalent;
    if (equivalent) {
        v.relation = relation_from(u, block);
    } else {
        auto ce = find_counterexample(l1, l2, tau_abstract);
        v.counterexample = ce ? *ce : fallback_counterexample(l1, l2);
    }
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------

EquivalenceVerdict strong_step_bisim(const StepLTS& l1, const StepLTS& l2) {
    Union u(l1, l2);
    std::vector<int> block = refine(u.sys, /*branching=*/false);
    bool eq = block[u.left(l1.initial)] == block[u.right(l2.initial)];
    return verdict_for(l1, l2, eq, u, block, /*tau_abstract=*/false);
}

EquivalenceVerdict rooted_branching_step_bisim(const StepLTS& l1, const StepLTS& l2) {
    Union u(l1, l2);
    std::vector<int> block = refine(u.sys, /*branching=*/true);

    // Root condition: initial moves transfer with exact labels into
    // branching-equivalent targets, and root termination must agree.
    auto root_ok = [&]() {
        int r1 = u.left(l1.initial), r2 = u.right(l2.initial);
        if (u.sys.term[r1] != u.sys.term[r2]) return false;
        auto covers = [&](int from, int to) {
            for (const Edge& e : u.sys.out[from]) {
                bool matched = false;
                for (const Edge& f : u.sys.out[to])
                    if (f.lab == e.lab && block[f.dst] == block[e.dst]) {
                        matched = true;
                        break;
                    }
                if (!matched) return false;
            }
            return true;
        };
        return covers(r1, r2) && covers(r2, r1);
    };
    bool eq = root_ok();
    return verdict_for(l1, l2, eq, u, block, /*tau_abstract=*/true);
}

// ---------------------------------------------------------------------------
// Bounded pomset equivalence: enrich each system with transitions labelled
// by series of steps totalling at most k events, then decide strong
// bisimilarity over the enriched labels.

namespace {

void pomset_paths(const StepLTS& l, int s, int events_left, std::string prefix,
                  std::vector<Edge>& out) {
    for (const auto& t : l.outgoing(s)) {
        int ev = static_cast<int>(t.label.events.size());
        if (ev > events_left) continue;
        std::string lab = prefix.empty() ? t.label.str() : prefix + ";" + t.label.str();
        out.push_back({lab, false, t.dst});
        if (t.dst != StepLTS::TICK && events_left - ev > 0)
            pomset_paths(l, t.dst, events_left - ev, lab, out);
    }
}

Sys pomset_sys(const StepLTS& l1, const StepLTS& l2, int k, Union& u) {
    Sys sys;
    sys.out.resize(u.tick + 1);
    sys.term.resize(u.tick + 1, 0);
    for (int i = 0; i < u.n1; ++i) sys.term[i] = l1.states[i].terminating;
    for (int j = 0; j < u.n2; ++j) sys.term[u.n1 + j] = l2.states[j].terminating;
    sys.term[u.tick] = 1;
    for (int i = 0; i < u.n1; ++i) {
        std::vector<Edge> edges;
        pomset_paths(l1, i, k, "", edges);
        for (Edge& e : edges) e.dst = u.left(e.dst);
        sys.out[i] = std::move(edges);
    }
    for (int j = 0; j < u.n2; ++j) {
        std::vector<Edge> edges;
        pomset_paths(l2, j, k, "", edges);
        for (Edge& e : edges) e.dst = u.right(e.dst);
        sys.out[u.n1 + j] = std::move(edges);
    }
    return sys;
}

}  // namespace

EquivalenceVerdict pomset_bisim_bounded(const StepLTS& l1, const StepLTS& l2, int k) {
    if (k < 1 || k > kMaxPomsetBound)
        throw std::invalid_argument("pomset bound must be between 1 and " +
                                    std::to_string(kMaxPomsetBound));
    Union u(l1, l2);
    Sys sys = pomset_sys(l1, l2, k, u);
    std::vector<int> block = refine(sys, /*branching=*/false);
    bool eq = block[u.left(l1.initial)] == block[u.right(l2.initial)];
    EquivalenceVerdict v;
    v.equivalent = eq;
    if (eq) {
        v.relation = relation_from(u, block);
    } else {
        auto ce = find_counterexample(l1, l2, false);
        v.counterexample = ce ? *ce : fallback_counterexample(l1, l2);
    }
    return v;
}

// ---------------------------------------------------------------------------
// Quotients

std::vector<int> partition_states(const StepLTS& l, QuotientKind kind) {
    const int n = static_cast<int>(l.states.size());
    Sys sys;
    sys.out.resize(n + 1);
    sys.term.resize(n + 1, 0);
    for (int i = 0; i < n; ++i) sys.term[i] = l.states[i].terminating;
    sys.term[n] = 1;
    for (const auto& t : l.transitions)
        sys.out[t.src].push_back(
            {t.label.str(), t.label.is_silent(), t.dst == StepLTS::TICK ? n : t.dst});
    std::vector<int> block = refine(sys, kind == QuotientKind::BranchingStep);
    return block;  // index n is the sink's block
}

StepLTS quotient(const StepLTS& l, QuotientKind kind) {
    const int n = static_cast<int>(l.states.size());
    std::vector<int> block = partition_states(l, kind);
    const int sink_block = block[n];

    // stable renumbering by first occurrence; a real representative for the
    // sink's block, when one exists, absorbs transitions into termination
    std::vector<int> rep_of_block;  // representative state per new id
    std::map<int, int> newid;
    std::vector<int> id_of_state(n, -1);
    for (int i = 0; i < n; ++i) {
        auto it = newid.find(block[i]);
        if (it == newid.end()) {
            it = newid.emplace(block[i], static_cast<int>(rep_of_block.size())).first;
            rep_of_block.push_back(i);
        }
        id_of_state[i] = it->second;
    }

    StepLTS q;
    for (std::size_t b = 0; b < rep_of_block.size(); ++b) {
        int rep = rep_of_block[b];
        bool term = false, div = false;
        for (int i = 0; i < n; ++i)
            if (id_of_state[i] == static_cast<int>(b)) {
                term = term || l.states[i].terminating;
                div = div || l.states[i].divergent;
            }
        q.states.push_back({l.states[rep].key, term, div});
    }
    q.initial = id_of_state[l.initial];

    std::set<std::tuple<int, std::string, int>> seen;
    for (const auto& t : l.transitions) {
        int src = id_of_state[t.src];
        int dst;
        if (t.dst == StepLTS::TICK) {
            dst = newid.count(sink_block) ? newid[sink_block] : StepLTS::TICK;
        } else {
            dst = id_of_state[t.dst];
        }
        if (kind == QuotientKind::BranchingStep && t.label.is_silent() && src == dst)
            continue;  // inert loop
        if (seen.insert({src, t.label.str(), dst}).second)
            q.transitions.push_back({src, t.label, dst});
    }
    q.sort_transitions();
    return q;
}

// ---------------------------------------------------------------------------
// Trace replay

bool trace_replays(const StepLTS& l, const std::vector<StepLabel>& trace,
                   const std::optional<StepLabel>& refused, bool tau_abstract,
                   bool expect_refusal) {
    std::set<int> cur{l.initial};
    if (tau_abstract) cur = tau_closure_set(l, cur);
    for (const auto& lab : trace) {
        cur = move(l, cur, lab.str());
        if (tau_abstract) cur = tau_closure_set(l, cur);
        if (cur.empty()) return false;
    }
    if (refused) {
        bool enabled = false;
        for (int s : cur) {
            if (s == StepLTS::TICK) continue;
            for (const auto& t : l.outgoing(s))
                if (t.label == *refused) enabled = true;
        }
        return expect_refusal ? !enabled : enabled;
    }
    return true;
}

// ---------------------------------------------------------------------------

std::string EquivalenceVerdict::to_json() const {
    nlohmann::ordered_json j;
    j["equivalent"] = equivalent;
    j["relation"] = nlohmann::ordered_json::array();
    for (const auto& [a, b] : relation) j["relation"].push_back({a, b});
    if (counterexample) {
        nlohmann::ordered_json c;
        c["trace"] = nlohmann::ordered_json::array();
        for (const auto& lab : counterexample->trace) c["trace"].push_back(lab.str());
        c["refused"] = counterexample->refused ? nlohmann::ordered_json(counterexample->refused->str())
                                               : nlohmann::ordered_json(nullptr);
        c["refusing_side"] = counterexample->refusing_side;
        c["termination_mismatch"] = counterexample->termination_mismatch;
        c["note"] = counterexample->note;
        j["counterexample"] = std::move(c);
    } else {
        j["counterexample"] = nullptr;
    }
    return j.dump(2) + "\n";
}

}  // namespace aptc
