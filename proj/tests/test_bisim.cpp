#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "aptc/bisim.hpp"
#include "aptc/sos.hpp"

using namespace aptc;

namespace {

StepLabel L(std::initializer_list<const char*> names) {
    std::vector<ActionLabel> ev;
    for (const char* n : names)
        ev.push_back(std::string(n) == "tau" ? ActionLabel::tau() : ActionLabel::ordinary(n));
    return StepLabel(std::move(ev));
}

StepLTS random_lts(std::mt19937& rng) {
    static const std::vector<StepLabel> pool = {L({"a"}), L({"b"}), L({"c"}), L({"tau"}),
                                                L({"a", "b"}), L({"b", "c"})};
    StepLTS l;
    int n = 1 + static_cast<int>(rng() % 10);
    for (int i = 0; i < n; ++i)
        l.states.push_back({"s" + std::to_string(i), rng() % 4 == 0, false});
    int m = static_cast<int>(rng() % (2 * n + 4));
    for (int t = 0; t < m; ++t) {
        int src = static_cast<int>(rng() % n);
        int dst = static_cast<int>(rng() % (n + 1));
        l.transitions.push_back(
            {src, pool[rng() % pool.size()], dst == n ? StepLTS::TICK : dst});
    }
    l.initial = 0;
    l.sort_transitions();
    return l;
}

StepLTS mutate(StepLTS l, std::mt19937& rng) {
    switch (rng() % 4) {
        case 0:
            if (!l.states.empty()) {
                auto& s = l.states[rng() % l.states.size()];
                s.terminating = !s.terminating;
            }
            break;
        case 1:
            if (!l.transitions.empty())
                l.transitions.erase(l.transitions.begin() + rng() % l.transitions.size());
            break;
        case 2: {
            int n = static_cast<int>(l.states.size());
            int dst = static_cast<int>(rng() % (n + 1));
            l.transitions.push_back({static_cast<int>(rng() % n), L({"b"}),
                                     dst == n ? StepLTS::TICK : dst});
            break;
        }
        case 3:
            if (!l.transitions.empty())
                l.transitions[rng() % l.transitions.size()].label = L({"c"});
            break;
    }
    l.sort_transitions();
    return l;
}

}  // namespace

TEST_CASE("refinement agrees with the greatest-fixpoint oracle on random systems") {
    std::mt19937 rng(20260822);
    int eq_strong = 0, eq_rooted = 0;
    for (int i = 0; i < 500; ++i) {
        StepLTS l1 = random_lts(rng);
        StepLTS l2;
        switch (i % 4) {
            case 0: l2 = l1; break;
            case 1: l2 = mutate(l1, rng); break;
            case 2: l2 = random_lts(rng); break;
            case 3: l2 = quotient(l1, QuotientKind::StrongStep); break;
        }

        auto fast_s = strong_step_bisim(l1, l2);
        auto slow_s = brute_force_bisim(l1, l2, EquivKind::StrongStep);
        INFO("pair ", i, " strong fast=", fast_s.equivalent, " oracle=", slow_s.equivalent);
        REQUIRE(fast_s.equivalent == slow_s.equivalent);
        if (fast_s.equivalent) {
            ++eq_strong;
            REQUIRE(verify_witness(l1, l2, EquivKind::StrongStep, fast_s.relation));
        } else if (fast_s.counterexample && fast_s.counterexample->refused) {
            const auto& ce = *fast_s.counterexample;
            const StepLTS& refuser = ce.refusing_side == 1 ? l1 : l2;
            const StepLTS& offerer = ce.refusing_side == 1 ? l2 : l1;
            REQUIRE(trace_replays(refuser, ce.trace, ce.refused, false, true));
            REQUIRE(trace_replays(offerer, ce.trace, ce.refused, false, false));
        }

        auto fast_r = rooted_branching_step_bisim(l1, l2);
        auto slow_r = brute_force_bisim(l1, l2, EquivKind::RootedBranchingStep);
        INFO("pair ", i, " rooted fast=", fast_r.equivalent, " oracle=", slow_r.equivalent);
        REQUIRE(fast_r.equivalent == slow_r.equivalent);
        if (fast_r.equivalent) ++eq_rooted;
    }
    // the mix must exercise both verdicts heavily
    CHECK(eq_strong > 100);
    CHECK(500 - eq_strong > 100);
    CHECK(eq_rooted >= eq_strong);
}

TEST_CASE("hand cases across the kinds") {
    Environment env;
    auto a = atom(ActionLabel::ordinary("a"));
    auto b = atom(ActionLabel::ordinary("b"));
    auto t1 = build_lts(seq(tau_term(), a), env);
    auto t2 = build_lts(a, env);
    CHECK_FALSE(strong_step_bisim(t1, t2).equivalent);
    CHECK_FALSE(rooted_branching_step_bisim(t1, t2).equivalent);

    auto e1 = build_lts(seq(a, tau_term()), env);
    CHECK(rooted_branching_step_bisim(e1, t2).equivalent);
    CHECK_FALSE(strong_step_bisim(e1, t2).equivalent);

    auto b2 = build_lts(seq(a, alt(seq(tau_term(), alt(b, atom(ActionLabel::ordinary("c")))),
                                   b)),
                        env);
    auto b2r = build_lts(seq(a, alt(b, atom(ActionLabel::ordinary("c")))), env);
    CHECK(rooted_branching_step_bisim(b2, b2r).equivalent);
}

TEST_CASE("counterexamples replay") {
    Environment env;
    auto a = atom(ActionLabel::ordinary("a"));
    auto b = atom(ActionLabel::ordinary("b"));
    auto c = atom(ActionLabel::ordinary("c"));
    StepLTS l1 = build_lts(seq(a, b), env);
    StepLTS l2 = build_lts(seq(a, c), env);
    auto v = strong_step_bisim(l1, l2);
    REQUIRE_FALSE(v.equivalent);
    REQUIRE(v.counterexample);
    REQUIRE(v.counterexample->refused);
    CHECK(v.counterexample->trace.size() == 1);
    const auto& ce = *v.counterexample;
    const StepLTS& refuser = ce.refusing_side == 1 ? l1 : l2;
    const StepLTS& offerer = ce.refusing_side == 1 ? l2 : l1;
    CHECK(trace_replays(refuser, ce.trace, ce.refused, false, true));
    CHECK(trace_replays(offerer, ce.trace, ce.refused, false, false));

    // termination mismatch: a vs a.delta
    StepLTS l3 = build_lts(seq(a, delta_term()), env);
    auto v2 = strong_step_bisim(l1, l3);  // a.b vs a.delta
    REQUIRE_FALSE(v2.equivalent);
    REQUIRE(v2.counterexample);

    // purely-branching difference falls back to a note
    StepLTS p1 = build_lts(seq(a, alt(b, c)), env);
    StepLTS p2 = build_lts(alt(seq(a, b), seq(a, c)), env);
    auto v3 = strong_step_bisim(p1, p2);
    REQUIRE_FALSE(v3.equivalent);
    REQUIRE(v3.counterexample);
    CHECK((v3.counterexample->refused.has_value() ||
           !v3.counterexample->note.empty()));
}

TEST_CASE("quotient is sound, minimal and idempotent") {
    std::mt19937 rng(7);
    for (int i = 0; i < 60; ++i) {
        StepLTS l = random_lts(rng);
        for (auto kind : {QuotientKind::StrongStep, QuotientKind::BranchingStep}) {
            StepLTS q = quotient(l, kind);
            CHECK(q.states.size() <= l.states.size());
            if (kind == QuotientKind::StrongStep) {
                CHECK(brute_force_bisim(l, q, EquivKind::StrongStep).equivalent);
            } else {
                CHECK(brute_force_bisim(l, q, EquivKind::BranchingStep).equivalent);
            }
            StepLTS qq = quotient(q, kind);
            CHECK(qq.states.size() == q.states.size());
        }
    }
}

TEST_CASE("branching quotient drops inert tau loops") {
    StepLTS l;
    l.states.push_back({"s0", false, false});
    l.transitions.push_back({0, L({"tau"}), 0});
    l.transitions.push_back({0, L({"a"}), StepLTS::TICK});
    l.initial = 0;
    l.sort_transitions();
    StepLTS q = quotient(l, QuotientKind::BranchingStep);
    CHECK(q.states.size() == 1);
    REQUIRE(q.transitions.size() == 1);
    CHECK(q.transitions[0].label.str() == "{a}");
}

TEST_CASE("bounded pomset equivalence") {
    Environment env;
    auto a = atom(ActionLabel::ordinary("a"));
    auto b = atom(ActionLabel::ordinary("b"));
    StepLTS joint = build_lts(par(a, b), env);
    StepLTS inter = build_lts(alt(seq(a, b), seq(b, a)), env);
    // at bound 1 the two-event step is invisible: the joint system shows
    // nothing at all and so matches deadlock, not the interleaving
    CHECK(pomset_bisim_bounded(joint, build_lts(delta_term(), env), 1).equivalent);
    CHECK_FALSE(pomset_bisim_bounded(joint, inter, 1).equivalent);
    CHECK_FALSE(pomset_bisim_bounded(joint, inter, 2).equivalent);

    StepLTS merge = build_lts(wpar(a, b), env);
    StepLTS expanded = build_lts(alt({seq(a, b), seq(b, a), par(a, b)}), env);
    for (int k = 1; k <= 4; ++k) CHECK(pomset_bisim_bounded(merge, expanded, k).equivalent);

    CHECK_THROWS_AS(pomset_bisim_bounded(joint, inter, 0), std::invalid_argument);
    CHECK_THROWS_AS(pomset_bisim_bounded(joint, inter, 7), std::invalid_argument);
}

TEST_CASE("verdict json is deterministic") {
    Environment env;
    auto a = atom(ActionLabel::ordinary("a"));
    auto b = atom(ActionLabel::ordinary("b"));
    StepLTS l1 = build_lts(wpar(a, b), env);
    StepLTS l2 = build_lts(wpar(b, a), env);
    auto v1 = strong_step_bisim(l1, l2);
    auto v2 = strong_step_bisim(l1, l2);
    CHECK(v1.equivalent);
    CHECK(v1.to_json() == v2.to_json());
    CHECK(v1.to_json().find("\"equivalent\": true") != std::string::npos);
}
