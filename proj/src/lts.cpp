#include "aptc/lts.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace aptc {

std::vector<StepLTS::Transition> StepLTS::outgoing(int state) const {
    std::vector<Transition> out;
    // transitions are sorted by src: binary search the range.
    Transition probe;
    probe.src = state;
    probe.label = StepLabel{};
    probe.dst = TICK;
    auto lo = std::lower_bound(transitions.begin(), transitions.end(), state,
                               [](const Transition& t, int s) { return t.src < s; });
    for (auto it = lo; it != transitions.end() && it->src == state; ++it) out.push_back(*it);
    return out;
}

std::vector<StepLabel> StepLTS::alphabet() const {
    std::vector<StepLabel> labels;
    for (const auto& t : transitions) labels.push_back(t.label);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    return labels;
}

void StepLTS::sort_transitions() { std::sort(transitions.begin(), transitions.end()); }

std::string StepLTS::to_json(bool include_keys) const {
    nlohmann::ordered_json j;
    j["format"] = "aptc-lts";
    j["version"] = 1;
    j["initial"] = initial;
    j["states"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < states.size(); ++i) {
        nlohmann::ordered_json s;
        s["id"] = i;
        if (include_keys) s["term"] = states[i].key;
        s["terminating"] = states[i].terminating;
        s["divergent"] = states[i].divergent;
        j["states"].push_back(std::move(s));
    }
    j["transitions"] = nlohmann::ordered_json::array();
    for (const auto& t : transitions) {
        nlohmann::ordered_json tr = nlohmann::ordered_json::array();
        tr.push_back(t.src);
        nlohmann::ordered_json label = nlohmann::ordered_json::array();
        for (const auto& e : t.label.events) label.push_back(e.str());
        tr.push_back(std::move(label));
        if (t.dst == TICK)
            tr.push_back("TICK");
        else
            tr.push_back(t.dst);
        j["transitions"].push_back(std::move(tr));
    }
    return j.dump(2) + "\n";
}

namespace {

ActionLabel parse_event(const std::string& s) {
    if (s == "tau") return ActionLabel::tau();
    if (s == "delta") return ActionLabel::delta();
    if (s == "@S") return ActionLabel::shadow_plain();
    if (s.rfind("@S[", 0) == 0) {
        // @S[name(arg,...),index]
        std::string inner = s.substr(3, s.size() - 4);
        auto comma = inner.rfind(',');
        int index = std::stoi(inner.substr(comma + 1));
        std::string base = inner.substr(0, comma);
        auto paren = base.find('(');
        std::string name = paren == std::string::npos ? base : base.substr(0, paren);
        std::vector<std::string> args;
        if (paren != std::string::npos) {
            std::string list = base.substr(paren + 1, base.size() - paren - 2);
            std::istringstream is(list);
            std::string item;
            while (std::getline(is, item, ',')) args.push_back(item);
        }
        return ActionLabel::shadow(name, args, index);
    }
    auto paren = s.find('(');
    if (paren == std::string::npos) return ActionLabel::ordinary(s);
    std::string name = s.substr(0, paren);
    std::string list = s.substr(paren + 1, s.size() - paren - 2);
    std::vector<std::string> args;
    std::istringstream is(list);
    std::string item;
    while (std::getline(is, item, ',')) args.push_back(item);
    return ActionLabel::ordinary(name, args);
}

}  // namespace

StepLTS StepLTS::from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    if (!j.contains("format") || j["format"] != "aptc-lts")
        throw std::runtime_error("not an aptc-lts document");
    StepLTS l;
    l.initial = j.value("initial", 0);
    for (const auto& s : j["states"]) {
        State st;
        st.key = s.value("term", "");
        st.terminating = s.value("terminating", false);
        st.divergent = s.value("divergent", false);
        l.states.push_back(std::move(st));
    }
    for (const auto& t : j["transitions"]) {
        Transition tr;
        tr.src = t.at(0).get<int>();
        std::vector<ActionLabel> events;
        for (const auto& e : t.at(1)) events.push_back(parse_event(e.get<std::string>()));
        tr.label = StepLabel(std::move(events));
        if (t.at(2).is_string())
            tr.dst = TICK;
        else
            tr.dst = t.at(2).get<int>();
        l.transitions.push_back(std::move(tr));
    }
    l.sort_transitions();
    return l;
}

std::string StepLTS::to_dot() const {
    std::ostringstream os;
    os << "digraph lts {\n  rankdir=LR;\n  node [shape=circle];\n";
    os << "  start [shape=point];\n  start -> s" << initial << ";\n";
    bool any_tick = false;
    for (std::size_t i = 0; i < states.size(); ++i) {
        os << "  s" << i << " [label=\"" << i << "\"";
        if (states[i].terminating) os << ", shape=doublecircle";
        if (states[i].divergent) os << ", style=dashed";
        os << "];\n";
    }
    for (const auto& t : transitions) {
        if (t.dst == TICK) any_tick = true;
    }
    if (any_tick) os << "  tick [label=\"\\u221a\", shape=doublecircle];\n";
    for (const auto& t : transitions) {
        std::string label;
        for (std::size_t i = 0; i < t.label.events.size(); ++i) {
            if (i) label += ", ";
            label += t.label.events[i].str();
        }
        os << "  s" << t.src << " -> ";
        if (t.dst == TICK)
            os << "tick";
        else
            os << "s" << t.dst;
        os << " [label=\"" << label << "\"];\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace aptc
