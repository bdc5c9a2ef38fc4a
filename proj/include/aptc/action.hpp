#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace aptc {

// An atomic event. Ordinary events have a name and zero or more data
// arguments drawn from the finite data domain. The silent step tau and the
// deadlock delta are reserved labels without name or data. A shadow is a
// placeholder that synchronizes with one occurrence of its base event in a
// parallel context; an unindexed ("plain") shadow is a pure skip.
enum class ActionKind : std::uint8_t {
    Ordinary,
    Tau,
    Delta,
    ShadowPlain,
    Shadow,  // indexed shadow of a base event
};

struct ActionLabel {
    ActionKind kind = ActionKind::Ordinary;
    std::string name;                // base event name for Shadow
    std::vector<std::string> args;   // base event args for Shadow
    int shadow_index = 0;            // Shadow only

    ActionLabel() = default;

    static ActionLabel ordinary(std::string n, std::vector<std::string> a = {}) {
        ActionLabel l;
        l.kind = ActionKind::Ordinary;
        l.name = std::move(n);
        l.args = std::move(a);
        return l;
    }
    static ActionLabel tau() {
        ActionLabel l;
        l.kind = ActionKind::Tau;
        return l;
    }
    static ActionLabel delta() {
        ActionLabel l;
        l.kind = ActionKind::Delta;
        return l;
    }
    static ActionLabel shadow_plain() {
        ActionLabel l;
        l.kind = ActionKind::ShadowPlain;
        return l;
    }
    static ActionLabel shadow(std::string base, std::vector<std::string> a, int index) {
        ActionLabel l;
        l.kind = ActionKind::Shadow;
        l.name = std::move(base);
        l.args = std::move(a);
        l.shadow_index = index;
        return l;
    }

    // The base event an indexed shadow pairs with.
    ActionLabel base() const { return ordinary(name, args); }

    bool is_ordinary() const { return kind == ActionKind::Ordinary; }
    bool is_tau() const { return kind == ActionKind::Tau; }
    bool is_delta() const { return kind == ActionKind::Delta; }
    bool is_shadow() const { return kind == ActionKind::Shadow; }
    bool is_plain_shadow() const { return kind == ActionKind::ShadowPlain; }

    // Canonical rendering, also used as ordering/identity key.
    //   a   r_A(v1)   s_B(v1,b0)   tau   delta   @S   @S[r_A(v1),2]
    std::string str() const;

    friend bool operator==(const ActionLabel& a, const ActionLabel& b) {
        return a.kind == b.kind && a.name == b.name && a.args == b.args &&
               a.shadow_index == b.shadow_index;
    }
    friend std::strong_ordering operator<=>(const ActionLabel& a, const ActionLabel& b) {
        if (auto c = a.kind <=> b.kind; c != 0) return c;
        if (auto c = a.name <=> b.name; c != 0) return c;
        if (auto c = a.args <=> b.args; c != 0) return c;
        return a.shadow_index <=> b.shadow_index;
    }
};

// A step: the multiset of events executed together in one transition.
// Invariants (established by normalize()):
//   - delta never appears;
//   - tau appears only as the sole element of the singleton {tau};
//   - events are kept sorted (multiset identity).
// Shadow events may appear transiently while a composition is being
// assembled; a label still carrying a shadow is not fireable and is
// discarded at the root of the transition derivation.
struct StepLabel {
    std::vector<ActionLabel> events;

    StepLabel() = default;
    explicit StepLabel(std::vector<ActionLabel> ev) : events(std::move(ev)) { normalize(); }
    static StepLabel single(ActionLabel e) { return StepLabel({std::move(e)}); }

    // Sort; drop taus when visible events are present; collapse an all-tau
    // label to the singleton {tau}.
    void normalize();

    bool contains_shadow() const;
    bool is_silent() const { return events.size() == 1 && events[0].is_tau(); }

    std::string str() const;  // {a,b}

    friend bool operator==(const StepLabel& a, const StepLabel& b) { return a.events == b.events; }
    friend std::strong_ordering operator<=>(const StepLabel& a, const StepLabel& b) {
        return a.events <=> b.events;
    }
};

}  // namespace aptc
