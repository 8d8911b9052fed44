#include "volclass/decision.hpp"

#include "volclass/errors.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace volclass {

std::optional<std::size_t> ClassRegistry::find(std::string_view name) const {
    const auto it = std::find(classes.begin(), classes.end(), name);
    if (it == classes.end()) return std::nullopt;
    return static_cast<std::size_t>(it - classes.begin());
}

void ClassRegistry::validate() const {
    std::set<std::string_view> seen;
    for (const auto& name : classes) {
        if (name.empty()) throw Error(Errc::BadShape, "class names must be nonempty");
        if (!seen.insert(name).second) throw Error(Errc::BadShape, "duplicate class name '" + name + "'");
    }
    if (rest_class_index && *rest_class_index >= classes.size())
        throw Error(Errc::BadShape, "rest class index out of range");
}

void DecisionPolicy::validate() const {
    if (threshold && !(*threshold >= 0.0 && *threshold <= 1.0))
        throw Error(Errc::BadConfig, "threshold must be in [0, 1]");
}

std::string DecisionPolicy::describe() const {
    std::ostringstream out;
    out << (use_rest_class ? "rc" : "no-rc") << ",threshold=";
    if (threshold)
        out << *threshold;
    else
        out << "none";
    return out.str();
}

Classification decide(std::span<const double> scores, const ClassRegistry& registry, const DecisionPolicy& policy) {
    policy.validate();
    if (scores.size() != registry.size() || scores.empty())
        throw Error(Errc::ShapeMismatch, "got " + std::to_string(scores.size()) + " scores for " +
                                             std::to_string(registry.size()) + " classes");

    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;

    Classification c;
    c.scores.assign(scores.begin(), scores.end());
    c.confidence = scores[best];
    c.chosen_index = best;
    c.chosen = registry.classes[best];

    if (policy.threshold && c.confidence < *policy.threshold) {
        c.rejected = true;
        if (policy.use_rest_class && registry.rest_class_index) {
            c.chosen_index = registry.rest_class_index;
            c.chosen = registry.classes[*registry.rest_class_index];
        } else {
            c.chosen_index.reset();
            c.chosen = std::string(kRestOutcome);
        }
    }
    return c;
}

bool is_rest_outcome(const Classification& c, const ClassRegistry& registry) {
    return !c.chosen_index || registry.is_rest(*c.chosen_index);
}

} // namespace volclass
