#include "aptc/validate.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

namespace aptc {

namespace {

struct Validator {
    const Environment& env;
    std::vector<Diagnostic>* diags;
    std::set<std::string> declared_alphabet;  // names occurring in the term
    std::set<std::pair<std::string, int>> shadows_seen;
    bool uses_state_op = false;

    void error(const std::string& path, const std::string& msg) {
        diags->push_back({Severity::Error, path, msg});
    }
    void warn(const std::string& path, const std::string& msg) {
        diags->push_back({Severity::Warning, path, msg});
    }

    void check_label_set(const std::vector<std::string>& names, const std::string& path,
                        const char* which) {
        for (const auto& n : names) {
            if (n == "tau" || n == "delta")
                error(path, std::string(which) + " set may not contain " + n);
        }
    }

    void walk(const Term& t, const std::string& path,
              const std::set<std::string>& bound) {
        switch (t->op) {
            case Op::Empty:
                return;
            case Op::Atom:
                if (t->atom.is_ordinary()) declared_alphabet.insert(t->atom.name);
                if (t->atom.is_shadow()) {
                    declared_alphabet.insert(t->atom.name);
                    auto key = std::make_pair(t->atom.base().str(), t->atom.shadow_index);
                    if (!shadows_seen.insert(key).second)
                        error(path, "duplicate shadow (" + t->atom.base().str() + ", " +
                                        std::to_string(t->atom.shadow_index) + ")");
                }
                return;
            case Op::Var:
                if (!bound.count(t->var))
                    error(path, "unbound recursion variable " + t->var);
                return;
            case Op::RecRef: {
                std::set<std::string> inner = bound;
                for (const auto& [name, rhs] : t->spec->equations) {
                    (void)rhs;
                    inner.insert(name);
                }
                // Equations are validated once per referenced specification;
                // shadow-distinctness is per whole problem, so the walk
                // descends every time a new spec shows up.
                static thread_local std::set<const RecursiveSpec*> visiting;
                if (visiting.insert(t->spec.get()).second) {
                    for (const auto& [name, rhs] : t->spec->equations)
                        walk(rhs, path + ".<" + name + ">", inner);
                    visiting.erase(t->spec.get());
                }
                return;
            }
            case Op::Encaps:
                check_label_set(t->label_set, path, "encapsulation");
                walk(t->kids[0], path + ".encap", bound);
                return;
            case Op::Abstract:
                check_label_set(t->label_set, path, "abstraction");
                walk(t->kids[0], path + ".abs", bound);
                return;
            case Op::StateOp:
                uses_state_op = true;
                if (env.state_spec) {
                    const auto& ss = *env.state_spec;
                    if (std::find(ss.states.begin(), ss.states.end(), t->state) ==
                        ss.states.end())
                        error(path, "unknown state " + t->state);
                }
                walk(t->kids[0], path + ".state", bound);
                return;
            default: {
                int i = 0;
                for (const auto& k : t->kids)
                    walk(k, path + ".kids[" + std::to_string(i++) + "]", bound);
                return;
            }
        }
    }
};

}  // namespace

std::vector<Diagnostic> validate(const Term& t, const Environment& env) {
    std::vector<Diagnostic> diags;
    Validator v{env, &diags, {}, {}, false};
    v.walk(t, "root", {});

    if (v.uses_state_op && !env.state_spec)
        diags.push_back({Severity::Error, "env", "state operator used without state tables"});

    // gamma symmetry holds by construction of add_gamma; check stored keys
    // anyway in case a map was assembled by hand.
    for (const auto& [pair, result] : env.gamma) {
        (void)result;
        if (pair.second < pair.first)
            diags.push_back({Severity::Error, "env.gamma",
                             "gamma key not stored in canonical order: (" + pair.first +
                                 "," + pair.second + ")"});
    }
    for (const auto& [a, b] : env.conflicts) {
        if (a == b)
            diags.push_back({Severity::Error, "env.conflict", "reflexive conflict on " + a});
        if (!env.conflicts.count({b, a}))
            diags.push_back({Severity::Error, "env.conflict",
                             "conflict not symmetric: (" + a + "," + b + ")"});
    }
    for (const auto& [a, b] : env.races) {
        if (a == b)
            diags.push_back({Severity::Error, "env.race", "reflexive race on " + a});
        if (!env.races.count({b, a}))
            diags.push_back(
                {Severity::Error, "env.race", "race not symmetric: (" + a + "," + b + ")"});
    }

    // <= acyclicity over event renderings.
    {
        std::map<std::string, std::vector<std::string>> edges;
        for (const auto& c : env.causality)
            edges[c.send.str()].push_back(c.receive.str());
        std::map<std::string, int> color;
        std::function<bool(const std::string&)> dfs = [&](const std::string& u) -> bool {
            color[u] = 1;
            for (const auto& w : edges[u]) {
                if (color[w] == 1) return true;
                if (color[w] == 0 && dfs(w)) return true;
            }
            color[u] = 2;
            return false;
        };
        for (const auto& [u, vs] : edges) {
            (void)vs;
            if (color[u] == 0 && dfs(u)) {
                diags.push_back({Severity::Error, "env.causal",
                                 "causality relation has a cycle through " + u});
                break;
            }
        }
    }

    // Environment labels never produced by the term: warnings.
    auto mentioned = [&diags, &v](const std::string& name, const std::string& where) {
        if (name == "tau" || name == "delta") return;
        if (!v.declared_alphabet.count(name))
            diags.push_back({Severity::Warning, where,
                             "label " + name + " never occurs in the term alphabet"});
    };
    auto first_name = [](const std::string& rendered) {
        auto p = rendered.find('(');
        return p == std::string::npos ? rendered : rendered.substr(0, p);
    };
    for (const auto& [pair, result] : env.gamma) {
        (void)result;
        mentioned(first_name(pair.first), "env.gamma");
        mentioned(first_name(pair.second), "env.gamma");
    }
    for (const auto& [a, b] : env.conflicts) {
        (void)b;
        mentioned(first_name(a), "env.conflict");
    }
    for (const auto& [a, b] : env.races) {
        (void)b;
        mentioned(first_name(a), "env.race");
    }
    for (const auto& c : env.causality) {
        mentioned(c.send.name, "env.causal");
        mentioned(c.receive.name, "env.causal");
    }
    return diags;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
    return std::any_of(diags.begin(), diags.end(),
                       [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

std::string format_diagnostics(const std::vector<Diagnostic>& diags) {
    std::ostringstream os;
    for (const auto& d : diags) {
        os << (d.severity == Severity::Error ? "error" : "warning") << " at " << d.path
           << ": " << d.message << "\n";
    }
    return os.str();
}

}  // namespace aptc
