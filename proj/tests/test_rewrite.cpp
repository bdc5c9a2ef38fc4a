#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <random>
#include <set>

#include "aptc/bisim.hpp"
#include "aptc/rewrite.hpp"
#include "aptc/sos.hpp"

using namespace aptc;

namespace {

Term act(const char* n) { return atom(ActionLabel::ordinary(n)); }

bool strong_eq(const Term& x, const Term& y, const Environment& env = {}) {
    return strong_step_bisim(build_lts(x, env), build_lts(y, env)).equivalent;
}

bool rbs_eq(const Term& x, const Term& y, const Environment& env = {}) {
    return rooted_branching_step_bisim(build_lts(x, env), build_lts(y, env)).equivalent;
}

// A random closed term over every recursion-free operator (no shadows, no
// state operator), rich enough to exercise each rewrite rule family.
Term rich_term(std::mt19937_64& rng, int depth) {
    auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); };
    const char* names[] = {"a", "b", "c", "d"};
    auto leaf = [&]() -> Term {
        int r = pick(10);
        if (r == 0) return tau_term();
        if (r == 1) return delta_term();
        return act(names[pick(4)]);
    };
    if (depth <= 0 || pick(100) < 25) return leaf();
    switch (pick(10)) {
        case 0: return seq(rich_term(rng, depth - 1), rich_term(rng, depth - 1));
        case 1: return alt(rich_term(rng, depth - 1), rich_term(rng, depth - 1));
        case 2: return par(rich_term(rng, depth - 1), rich_term(rng, depth - 1));
        case 3: return wpar(rich_term(rng, depth - 1), rich_term(rng, depth - 1));
        case 4: return comm(leaf(), leaf());
        case 5: return theta(rich_term(rng, depth - 1));
        case 6: return unless(rich_term(rng, depth - 1), rich_term(rng, depth - 1));
        case 7: return encaps({names[pick(4)], names[pick(4)]}, rich_term(rng, depth - 1));
        case 8: return abstr({names[pick(4)], names[pick(4)]}, rich_term(rng, depth - 1));
        default: return seq(leaf(), rich_term(rng, depth - 1));
    }
}

Environment rich_env(std::mt19937_64& rng) {
    auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); };
    Environment env;
    if (pick(100) < 60)
        env.add_gamma(ActionLabel::ordinary("a"), ActionLabel::ordinary("b"),
                      ActionLabel::ordinary("c"));
    if (pick(100) < 50)
        env.add_conflict(ActionLabel::ordinary("c"), ActionLabel::ordinary("d"));
    if (pick(100) < 25)
        env.add_conflict(ActionLabel::ordinary("a"), ActionLabel::ordinary("d"));
    return env;
}

}  // namespace

TEST_CASE("axiom id table is closed and queryable") {
    const auto& ids = all_axiom_ids();
    CHECK(ids.size() == 75);
    CHECK(is_axiom_id("A1"));
    CHECK(is_axiom_id("SO5"));
    CHECK(is_axiom_id("CFAR"));
    CHECK_FALSE(is_axiom_id("A0"));
    CHECK_FALSE(is_axiom_id("X1"));
    std::set<std::string> uniq(ids.begin(), ids.end());
    CHECK(uniq.size() == ids.size());
}

TEST_CASE("single rewrite steps fire the expected rules") {
    Environment env;

    SUBCASE("encapsulated event collapses to deadlock") {
        auto step = rewrite_step(encaps({"a"}, act("a")), env);
        REQUIRE(step.has_value());
        CHECK(step->axiom == "D2");
        CHECK(step->term->key == delta_term()->key);
        CHECK(step->path.empty());
    }

    SUBCASE("distribution over choice inside a context records its path") {
        Term t = seq(encaps({"a"}, alt(seq(act("a"), act("b")), act("c"))), act("d"));
        auto step = rewrite_step(t, env);
        REQUIRE(step.has_value());
        CHECK(step->axiom == "D4");
        CHECK(step->path == std::vector<int>{0});
    }

    SUBCASE("trailing silent step erasure is gated to the full rule set") {
        Term t = seq(act("a"), tau_term());
        CHECK_FALSE(rewrite_step(t, env, RuleSet::Strong).has_value());
        auto step = rewrite_step(t, env, RuleSet::Full);
        REQUIRE(step.has_value());
        CHECK(step->axiom == "B1");
        CHECK(step->term->key == act("a")->key);
    }

    SUBCASE("a silenced event becomes silent, by direct conflict") {
        Environment cenv;
        cenv.add_conflict(ActionLabel::ordinary("a"), ActionLabel::ordinary("b"));
        auto step = rewrite_step(unless(act("a"), act("b")), cenv);
        REQUIRE(step.has_value());
        CHECK(step->axiom == "U25");
        CHECK(step->term->key == tau_term()->key);
    }

    SUBCASE("a silenced event becomes silent, through a causal link") {
        Environment cenv;
        cenv.add_conflict(ActionLabel::ordinary("a"), ActionLabel::ordinary("b"));
        cenv.causality.push_back({ActionLabel::ordinary("b"), ActionLabel::ordinary("c")});
        auto step = rewrite_step(unless(act("c"), act("a")), cenv);
        REQUIRE(step.has_value());
        CHECK(step->axiom == "U27");
        CHECK(step->term->key == tau_term()->key);
    }

    SUBCASE("an inert guard disappears") {
        Environment cenv;
        cenv.add_conflict(ActionLabel::ordinary("a"), ActionLabel::ordinary("b"));
        Term x = seq(act("c"), act("d"));
        auto step = rewrite_step(unless(x, act("c")), cenv);
        REQUIRE(step.has_value());
        CHECK(step->axiom == "U26");
        CHECK(step->term->key == x->key);
    }

    SUBCASE("conflict elimination is transparent without conflicts") {
        auto step = rewrite_step(theta(par(act("a"), act("b"))), env);
        REQUIRE(step.has_value());
        CHECK(step->axiom == "CE19");
    }

    SUBCASE("communication of prefixed operands") {
        Environment genv;
        genv.add_gamma(ActionLabel::ordinary("a"), ActionLabel::ordinary("b"),
                       ActionLabel::ordinary("c"));
        Term t = comm(seq(act("a"), act("d")), seq(act("b"), act("d")));
        auto step = rewrite_step(t, genv);
        REQUIRE(step.has_value());
        CHECK(step->axiom == "C14");
        CHECK(step->term->key == seq(act("c"), wpar(act("d"), act("d")))->key);
    }

    SUBCASE("communication with no defined gamma is deadlock") {
        auto step = rewrite_step(comm(act("a"), act("d")), env);
        REQUIRE(step.has_value());
        CHECK(step->axiom == "C11");
        CHECK(step->term->key == delta_term()->key);
    }

    SUBCASE("basic terms are fixpoints") {
        CHECK_FALSE(rewrite_step(act("a"), env).has_value());
        CHECK_FALSE(rewrite_step(alt(seq(act("a"), act("b")), act("c")), env).has_value());
        CHECK_FALSE(rewrite_step(par(act("a"), act("b")), env).has_value());
        CHECK_FALSE(rewrite_step(delta_term(), env).has_value());
    }

    SUBCASE("recursive references are opaque") {
        auto spec = RecursiveSpec::make({{"X", alt(seq(act("a"), var_ref("X")), act("b"))}});
        CHECK_FALSE(rewrite_step(rec_ref("X", spec), env).has_value());
        // an operator stuck on a recursive operand stays put rather than
        // being unfolded forever
        CHECK_FALSE(rewrite_step(par(rec_ref("X", spec), act("a")), env).has_value());
    }
}

TEST_CASE("the whole parallel normalizes to the interleaving-plus-steps sum") {
    Environment env;  // gamma undefined
    Term got = normalize_basic(wpar(act("a"), act("b")), env);
    Term want = alt(alt(seq(act("a"), act("b")), seq(act("b"), act("a"))),
                    par(act("a"), act("b")));
    CHECK(got->key == want->key);

    // and with a defined gamma the communication summand appears as well
    Environment genv;
    genv.add_gamma(ActionLabel::ordinary("a"), ActionLabel::ordinary("b"),
                   ActionLabel::ordinary("c"));
    Term got2 = normalize_basic(wpar(act("a"), act("b")), genv);
    Term want2 = alt({seq(act("a"), act("b")), seq(act("b"), act("a")), par(act("a"), act("b")),
                      act("c")});
    CHECK(got2->key == want2->key);
}

TEST_CASE("normalization produces a basic term and preserves meaning") {
    // Conflict elimination is syntax-directed, so the rewriter never rewrites
    // inside an elimination operand; an operand shape its laws do not cover
    // stays in place.  Such leftovers are exempt from the basic-form check
    // but never from meaning preservation.
    auto stuck_elimination = [](const Term& t) {
        return t->key.find("theta(") != std::string::npos;
    };
    std::mt19937_64 rng(271828);
    int checked = 0, stuck = 0;
    for (int i = 0; i < 300; ++i) {
        Environment env = rich_env(rng);
        Term t = rich_term(rng, 3);
        CAPTURE(t->key);

        Term norm = normalize_basic(t, env);
        if (stuck_elimination(norm))
            ++stuck;
        else
            CHECK(is_basic_term(norm));
        CHECK(strong_eq(t, norm, env));

        Term full = normalize_basic(t, env, 1'000'000, RuleSet::Full);
        if (!stuck_elimination(full)) CHECK(is_basic_term(full));
        CHECK(rbs_eq(t, full, env));
        ++checked;
    }
    CHECK(checked == 300);
    // most draws must still normalize all the way down
    CHECK(stuck < 100);
}

TEST_CASE("basic-form recognizer accepts sums of bundle-prefixed summands") {
    CHECK(is_basic_term(delta_term()));
    CHECK(is_basic_term(empty_term()));
    CHECK(is_basic_term(act("a")));
    CHECK(is_basic_term(tau_term()));
    CHECK(is_basic_term(par(act("a"), act("b"))));
    CHECK(is_basic_term(alt(seq(act("a"), act("b")), act("c"))));
    CHECK(is_basic_term(seq(par(act("a"), act("b")), alt(act("c"), act("d")))));

    CHECK_FALSE(is_basic_term(wpar(act("a"), act("b"))));
    CHECK_FALSE(is_basic_term(comm(act("a"), act("b"))));
    CHECK_FALSE(is_basic_term(seq(alt(act("a"), act("b")), act("c"))));
    CHECK_FALSE(is_basic_term(encaps({"a"}, act("a"))));

    auto spec = RecursiveSpec::make({{"X", alt(seq(act("a"), var_ref("X")), act("b"))}});
    Term guarded = alt(seq(act("a"), rec_ref("X", spec)), act("b"));
    CHECK_FALSE(is_basic_term(guarded));
    CHECK(is_basic_term(guarded, /*allow_rec_refs=*/true));
    CHECK(is_basic_term(rec_ref("X", spec), /*allow_rec_refs=*/true));
}

TEST_CASE("rewrite traces record every applied axiom and are deterministic") {
    Environment env;
    Term t = encaps({"a"}, alt(seq(act("a"), act("b")), act("c")));

    RewriteTrace trace;
    Term norm = normalize_basic(t, env, 1'000'000, RuleSet::Strong, &trace);
    CHECK(norm->key == act("c")->key);
    REQUIRE(!trace.steps.empty());
    bool saw_d4 = false, saw_d2 = false;
    for (const auto& s : trace.steps) {
        CHECK(is_axiom_id(s.axiom));
        if (s.axiom == "D4") saw_d4 = true;
        if (s.axiom == "D2") saw_d2 = true;
    }
    CHECK(saw_d4);
    CHECK(saw_d2);

    RewriteTrace again;
    normalize_basic(t, env, 1'000'000, RuleSet::Strong, &again);
    CHECK(trace.to_json() == again.to_json());
    CHECK(trace.to_json().front() == '[');
}

TEST_CASE("the fuel budget is enforced") {
    Environment env;
    Term t = encaps({"a"}, alt(seq(act("a"), act("b")), act("c")));
    CHECK_THROWS_AS(normalize_basic(t, env, 1), ResourceLimitError);
    // a term already in normal form consumes no fuel at all
    CHECK(normalize_basic(act("a"), env, 0)->key == act("a")->key);
}

TEST_CASE("silent-cluster collapse merges cycles and keeps their exits") {
    StepLTS l;
    l.states = {{"s0", false, false}, {"s1", false, false}};
    l.transitions = {
        {0, StepLabel::single(ActionLabel::tau()), 1},
        {0, StepLabel::single(ActionLabel::ordinary("a")), StepLTS::TICK},
        {1, StepLabel::single(ActionLabel::tau()), 0},
        {1, StepLabel::single(ActionLabel::ordinary("b")), StepLTS::TICK},
    };
    l.sort_transitions();

    StepLTS c = cfar_collapse(l);
    CHECK(c.state_count() == 1);
    CHECK(c.transitions.size() == 2);
    CHECK_FALSE(c.states[0].divergent);

    StepLTS want;
    want.states = {{"s0", false, false}};
    want.transitions = {
        {0, StepLabel::single(ActionLabel::ordinary("a")), StepLTS::TICK},
        {0, StepLabel::single(ActionLabel::ordinary("b")), StepLTS::TICK},
    };
    want.sort_transitions();
    CHECK(rooted_branching_step_bisim(c, want).equivalent);
}

TEST_CASE("a silent cycle with no exit collapses to a divergent state") {
    StepLTS l;
    l.states = {{"s0", false, false}, {"s1", false, false}};
    l.transitions = {
        {0, StepLabel::single(ActionLabel::tau()), 1},
        {1, StepLabel::single(ActionLabel::tau()), 0},
    };
    l.sort_transitions();

    StepLTS c = cfar_collapse(l);
    CHECK(c.state_count() == 1);
    CHECK(c.transitions.empty());
    CHECK(c.states[0].divergent);
    CHECK_FALSE(c.states[0].terminating);
}

TEST_CASE("visible labels named in the hidden set count as silent") {
    StepLTS l;
    l.states = {{"s0", false, false}, {"s1", false, false}};
    l.transitions = {
        {0, StepLabel::single(ActionLabel::ordinary("i")), 1},
        {1, StepLabel::single(ActionLabel::ordinary("i")), 0},
        {0, StepLabel::single(ActionLabel::ordinary("a")), StepLTS::TICK},
    };
    l.sort_transitions();

    StepLTS c = cfar_collapse(l, {"i"});
    CHECK(c.state_count() == 1);
    REQUIRE(c.transitions.size() == 1);
    CHECK(c.transitions[0].label.str() == "{a}");

    // a mixed step with an event outside the hidden set stays visible
    StepLTS m;
    m.states = {{"s0", false, false}, {"s1", false, false}};
    m.transitions = {
        {0, StepLabel({ActionLabel::ordinary("i"), ActionLabel::ordinary("a")}), 1},
        {1, StepLabel::single(ActionLabel::ordinary("b")), StepLTS::TICK},
    };
    m.sort_transitions();
    StepLTS mc = cfar_collapse(m, {"i"});
    CHECK(mc.state_count() == 2);
}

TEST_CASE("collapse of an abstracted recursive loop matches the exit sum") {
    // X = i.Y + a, Y = i.X + b; hiding i leaves a two-state silent cluster
    // whose exits are a and b
    auto spec = RecursiveSpec::make({
        {"X", alt(seq(act("i"), var_ref("Y")), act("a"))},
        {"Y", alt(seq(act("i"), var_ref("X")), act("b"))},
    });
    Environment env;
    Term hidden = abstr({"i"}, rec_ref("X", spec));
    StepLTS l = build_lts(hidden, env);
    StepLTS c = cfar_collapse(l);

    CHECK(c.state_count() == 1);
    CHECK(rooted_branching_step_bisim(c, build_lts(alt(act("a"), act("b")), env)).equivalent);
    // the collapse is idempotent and byte-stable
    CHECK(cfar_collapse(c).to_json() == c.to_json());
    CHECK(cfar_collapse(l).to_json() == c.to_json());
}

TEST_CASE("silent-cluster collapse preserves rooted branching equivalence") {
    std::mt19937_64 rng(6180339);
    for (int i = 0; i < 120; ++i) {
        Environment env = rich_env(rng);
        Term t = abstr({"a", "b"}, rich_term(rng, 3));
        StepLTS l = build_lts(t, env);
        StepLTS c = cfar_collapse(l);
        CAPTURE(t->key);
        CHECK(rooted_branching_step_bisim(l, c).equivalent);
    }
}

TEST_CASE("every axiom schema is sound for its stated equivalence") {
    const auto& schemas = axiom_schemas();
    REQUIRE(schemas.size() == 74);

    auto started = std::chrono::steady_clock::now();
    for (std::size_t s = 0; s < schemas.size(); ++s) {
        const auto& schema = schemas[s];
        std::mt19937_64 rng(1000003ULL * (s + 1));
        for (int draw = 0; draw < 200; ++draw) {
            AxiomInstance inst = schema.instantiate(rng);
            CAPTURE(schema.id);
            CAPTURE(draw);
            CAPTURE(inst.lhs->key);
            CAPTURE(inst.rhs->key);
            StepLTS left = build_lts(inst.lhs, inst.env);
            StepLTS right = build_lts(inst.rhs, inst.env);
            EquivalenceVerdict v = schema.kind == EquivKind::StrongStep
                                       ? strong_step_bisim(left, right)
                                       : rooted_branching_step_bisim(left, right);
            REQUIRE(v.equivalent);
        }
    }
    auto elapsed = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::steady_clock::now() - started)
                       .count();
    CHECK(elapsed < 60);
}
