#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace volclass {

/// Outcome name used when thresholding rejects and the registry has no rest
/// class. Corpus labels equal to it mark members of the miscellaneous group.
inline constexpr std::string_view kRestOutcome = "rest";

struct ClassRegistry {
    std::vector<std::string> classes;
    std::optional<std::size_t> rest_class_index;

    std::size_t size() const { return classes.size(); }
    std::optional<std::size_t> find(std::string_view name) const;
    bool is_rest(std::size_t index) const { return rest_class_index && *rest_class_index == index; }
    /// Throws BadShape for empty or duplicate names or an out-of-range rest index.
    void validate() const;

    friend bool operator==(const ClassRegistry&, const ClassRegistry&) = default;
};

struct DecisionPolicy {
    bool use_rest_class = true;
    std::optional<double> threshold;

    /// Throws BadConfig if the threshold lies outside [0, 1].
    void validate() const;
    std::string describe() const;

    static constexpr double kCombinedThreshold = 0.5;
    static DecisionPolicy combined(double threshold = kCombinedThreshold) { return {true, threshold}; }
};

struct Classification {
    std::vector<double> scores;
    std::string chosen;
    // Registry index of `chosen`; empty for the synthetic rest outcome.
    std::optional<std::size_t> chosen_index;
    double confidence = 0.0;
    bool rejected = false;
};

/// Argmax over all scores (ties go to the lowest index). When a threshold is
/// set and the maximum falls below it, the result is rejected and routed to
/// the registry's rest class if the policy uses one, else to kRestOutcome.
Classification decide(std::span<const double> scores, const ClassRegistry& registry, const DecisionPolicy& policy);

/// True when the decision lands in the rest group (rest class or rejection).
bool is_rest_outcome(const Classification& c, const ClassRegistry& registry);

} // namespace volclass
