#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aptc/term.hpp"
#include "aptc/validate.hpp"

using namespace aptc;

namespace {

Term a() { return atom(ActionLabel::ordinary("a")); }
Term b() { return atom(ActionLabel::ordinary("b")); }
Term c() { return atom(ActionLabel::ordinary("c")); }

}  // namespace

TEST_CASE("action label rendering and order") {
    CHECK(ActionLabel::ordinary("a").str() == "a");
    CHECK(ActionLabel::ordinary("r_A", {"v1"}).str() == "r_A(v1)");
    CHECK(ActionLabel::ordinary("s_B", {"v1", "b0"}).str() == "s_B(v1,b0)");
    CHECK(ActionLabel::tau().str() == "tau");
    CHECK(ActionLabel::delta().str() == "delta");
    CHECK(ActionLabel::shadow("r_A", {"v1"}, 2).str() == "@S[r_A(v1),2]");
    CHECK(ActionLabel::ordinary("a") < ActionLabel::ordinary("b"));
}

TEST_CASE("step label normalization") {
    StepLabel mixed({ActionLabel::tau(), ActionLabel::ordinary("a")});
    CHECK(mixed.events.size() == 1);
    CHECK(mixed.events[0].str() == "a");

    StepLabel silent({ActionLabel::tau(), ActionLabel::tau()});
    CHECK(silent.is_silent());
    CHECK(silent.events.size() == 1);

    StepLabel pair({ActionLabel::ordinary("b"), ActionLabel::ordinary("a")});
    CHECK(pair.str() == "{a,b}");
}

TEST_CASE("alternative is commutative, associative, idempotent, delta-unit") {
    CHECK(alt(a(), b())->key == alt(b(), a())->key);
    CHECK(alt(alt(a(), b()), c())->key == alt(a(), alt(b(), c()))->key);
    CHECK(alt(a(), a())->key == a()->key);
    CHECK(alt(a(), delta_term())->key == a()->key);
    CHECK(alt(delta_term(), delta_term())->key == "delta");
}

TEST_CASE("sequence canonicalization") {
    CHECK(seq(seq(a(), b()), c())->key == seq(a(), seq(b(), c()))->key);
    CHECK(seq(delta_term(), a())->key == "delta");
    CHECK(seq(empty_term(), a())->key == "a");
    CHECK(seq(a(), empty_term())->key == "a");
    // a trailing deadlock is kept: a.delta is not a
    CHECK(seq(a(), delta_term())->key != a()->key);
}

TEST_CASE("whole parallel flattening and delta handling") {
    CHECK(wpar(wpar(a(), b()), c())->key == wpar(a(), wpar(b(), c()))->key);
    CHECK(wpar(a(), b())->key == wpar(b(), a())->key);
    CHECK(wpar(a(), empty_term())->key == a()->key);
    // delta components persist (they block termination but not the others)
    CHECK(wpar(a(), delta_term())->key == "(a&delta)");
    CHECK(wpar(wpar(a(), delta_term()), delta_term())->key == "(a&delta)");
    // plain parallel annihilates with delta (both sides must step)
    CHECK(par(a(), delta_term())->key == "delta");
}

TEST_CASE("plain shadow is skip") {
    CHECK(atom(ActionLabel::shadow_plain())->op == Op::Empty);
    CHECK(seq(atom(ActionLabel::shadow_plain()), a())->key == "a");
    CHECK(seq(a(), atom(ActionLabel::shadow_plain()))->key == "a");
}

TEST_CASE("stacked unless guards fold into one") {
    CHECK(unless(unless(a(), b()), c())->key == unless(a(), alt(b(), c()))->key);
    // folding reuses the choice canonicalization, so repeats collapse
    CHECK(unless(unless(a(), b()), b())->key == unless(a(), b())->key);
    CHECK(unless(unless(unless(a(), b()), c()), b())->key ==
          unless(a(), alt(b(), c()))->key);
}

TEST_CASE("unfolding substitutes the closure") {
    auto spec = RecursiveSpec::make({{"X", seq(a(), var_ref("X"))}});
    Term u = unfold("X", spec);
    CHECK(u->op == Op::Seq);
    CHECK(u->kids[0]->key == "a");
    CHECK(u->kids[1]->op == Op::RecRef);
    CHECK(u->kids[1]->var == "X");
    CHECK_THROWS_AS(unfold("Y", spec), std::out_of_range);

    auto chain = RecursiveSpec::make({{"X", var_ref("Y")}, {"Y", a()}});
    CHECK(unfold("X", chain)->op == Op::RecRef);
    CHECK(unfold("Y", chain)->key == "a");
}

TEST_CASE("guardedness detects silent cycles") {
    auto tau_loop = RecursiveSpec::make({{"X", seq(tau_term(), var_ref("X"))}});
    auto v1 = check_guarded_linear(tau_loop);
    CHECK_FALSE(v1.guarded);
    REQUIRE(v1.witness_cycle.size() == 1);
    CHECK(v1.witness_cycle[0] == "X");

    auto ok = RecursiveSpec::make({{"X", alt(seq(a(), var_ref("X")), b())}});
    auto v2 = check_guarded_linear(ok);
    CHECK(v2.guarded);
    CHECK(v2.linear);

    auto shadow_loop = RecursiveSpec::make(
        {{"X", seq(atom(ActionLabel::shadow("a", {}, 1)), var_ref("X"))}});
    CHECK_FALSE(check_guarded_linear(shadow_loop).guarded);

    auto mutual = RecursiveSpec::make({{"X", var_ref("Y")}, {"Y", var_ref("X")}});
    auto v3 = check_guarded_linear(mutual);
    CHECK_FALSE(v3.guarded);
    CHECK(v3.witness_cycle.size() == 2);
}

TEST_CASE("linearity classification") {
    // (a || b) . X + c  : linear
    auto lin = RecursiveSpec::make(
        {{"X", alt(seq(par(a(), b()), var_ref("X")), c())}});
    CHECK(check_guarded_linear(lin).linear);

    // a . b . X : linear (sequence of bundles then variable)
    auto seq2 = RecursiveSpec::make({{"X", seq(a(), seq(b(), var_ref("X")))}});
    CHECK(check_guarded_linear(seq2).linear);

    // (a . b & c) . X : not linear (a component is not an event bundle)
    auto nonlin = RecursiveSpec::make(
        {{"X", seq(wpar(seq(a(), b()), c()), var_ref("X"))}});
    CHECK_FALSE(check_guarded_linear(nonlin).linear);
}

TEST_CASE("validate finds the forced diagnostics") {
    Environment env;
    CHECK(validate(delta_term(), env).empty());

    // tau in an encapsulation set
    auto diags = validate(encaps({"tau"}, a()), env);
    CHECK(has_errors(diags));

    // unbound variable
    CHECK(has_errors(validate(var_ref("X"), env)));

    // bound variable through a specification
    auto spec = RecursiveSpec::make({{"X", seq(a(), var_ref("X"))}});
    CHECK_FALSE(has_errors(validate(rec_ref("X", spec), env)));

    // state operator without tables
    CHECK(has_errors(validate(state_op("s0", a()), env)));
    Environment with_state;
    with_state.state_spec = StateSpec{{"s0"}, {}, {}};
    CHECK_FALSE(has_errors(validate(state_op("s0", a()), with_state)));

    // duplicate shadow indices
    auto dup = wpar(atom(ActionLabel::shadow("a", {}, 1)),
                    atom(ActionLabel::shadow("a", {}, 1)));
    CHECK(has_errors(validate(dup, env)));

    // gamma mentioning a label the term never performs: warning only
    Environment g;
    g.add_gamma(ActionLabel::ordinary("x"), ActionLabel::ordinary("y"),
                ActionLabel::ordinary("z"));
    auto warn = validate(a(), g);
    CHECK_FALSE(has_errors(warn));
    CHECK_FALSE(warn.empty());
}

TEST_CASE("alphabet walks specifications once") {
    auto spec = RecursiveSpec::make({{"X", seq(a(), var_ref("Y"))},
                                     {"Y", seq(b(), var_ref("X"))}});
    auto names = alphabet_names(rec_ref("X", spec));
    CHECK(names == std::set<std::string>{"a", "b"});
}
