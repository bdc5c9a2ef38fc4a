#include "aptc/verify.hpp"

#include <json.hpp>

#include <chrono>

#include "aptc/rewrite.hpp"
#include "aptc/sos.hpp"

namespace aptc {

Term compose(const PatternSpec& spec) {
    Term sys = spec.system;
    if (!sys) return nullptr;
    if (!spec.env.conflicts.empty()) sys = theta(std::move(sys));
    if (!spec.block_set.empty()) sys = encaps(spec.block_set, std::move(sys));
    if (!spec.hide_set.empty()) sys = abstr(spec.hide_set, std::move(sys));
    return sys;
}

namespace {

// The recursion a claim or system hangs on must be guarded for the
// exploration to be a finite-state unfolding.
std::string unguarded_msg(const GuardVerdict& v, const char* what) {
    std::string msg = std::string("unguarded ") + what + " recursion";
    if (!v.witness_cycle.empty()) {
        msg += " through ";
        for (std::size_t i = 0; i < v.witness_cycle.size(); ++i) {
            if (i) msg += " -> ";
            msg += v.witness_cycle[i];
        }
    }
    return msg;
}

}  // namespace

VerificationReport verify(const PatternSpec& spec, const VerifyOptions& opts) {
    VerificationReport report;
    report.pattern = spec.name;
    auto t0 = std::chrono::steady_clock::now();
    auto finish = [&]() -> VerificationReport& {
        report.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return report;
    };
    auto fail_with = [&](std::string msg) -> VerificationReport& {
        report.verdict = Verdict::Error;
        report.error = std::move(msg);
        return finish();
    };

    if (!spec.system)
        return fail_with(
            "no composition: declare `compose = ...;` (a spec with several "
            "processes does not compose by itself)");
    if (!spec.claim) return fail_with("no claim to check: declare `claim = ...;`");

    if (spec.processes && !spec.processes->equations.empty()) {
        GuardVerdict v = check_guarded_linear(spec.processes);
        if (!v.guarded) return fail_with(unguarded_msg(v, "system"));
    }
    if (spec.claim->op == Op::RecRef) {
        GuardVerdict v = check_guarded_linear(spec.claim->spec);
        if (!v.guarded) return fail_with(unguarded_msg(v, "claim"));
    }

    BuildOptions build;
    build.max_states = opts.max_states;

    StepLTS system_lts, claim_lts;
    try {
        system_lts = build_lts(compose(spec), spec.env, build);
    } catch (const ResourceLimitError& e) {
        report.resource_limit = true;
        return fail_with(std::string("system exploration: ") + e.what());
    }
    report.system_states = system_lts.state_count();

    // Hiding already silenced the labels; the collapse removes the silent
    // cycles hiding introduced, realizing fair abstraction.
    StepLTS collapsed = cfar_collapse(system_lts);
    report.collapsed_states = collapsed.state_count();

    try {
        claim_lts = build_lts(spec.claim, Environment{}, build);
    } catch (const ResourceLimitError& e) {
        report.resource_limit = true;
        return fail_with(std::string("claim exploration: ") + e.what());
    }
    report.claim_states = claim_lts.state_count();

    EquivalenceVerdict verdict = rooted_branching_step_bisim(collapsed, claim_lts);
    report.verdict = verdict.equivalent ? Verdict::Holds : Verdict::Fails;
    report.counterexample = std::move(verdict.counterexample);
    return finish();
}

std::string VerificationReport::to_json() const {
    nlohmann::ordered_json j;
    j["pattern"] = pattern;
    j["verdict"] = verdict == Verdict::Holds   ? "holds"
                   : verdict == Verdict::Fails ? "fails"
                                               : "error";
    if (verdict == Verdict::Error) {
        j["error"] = error;
        j["resource_limit"] = resource_limit;
    }
    nlohmann::ordered_json states;
    states["system"] = system_states;
    states["collapsed"] = collapsed_states;
    states["claim"] = claim_states;
    j["states"] = std::move(states);
    if (counterexample) {
        nlohmann::ordered_json c;
        c["trace"] = nlohmann::ordered_json::array();
        for (const auto& lab : counterexample->trace) c["trace"].push_back(lab.str());
        c["refused"] = counterexample->refused
                           ? nlohmann::ordered_json(counterexample->refused->str())
                           : nlohmann::ordered_json(nullptr);
        c["refusing_side"] = counterexample->refusing_side;
        c["termination_mismatch"] = counterexample->termination_mismatch;
        c["note"] = counterexample->note;
        j["counterexample"] = std::move(c);
    }
    j["seconds"] = seconds;
    return j.dump(2) + "\n";
}

}  // namespace aptc
