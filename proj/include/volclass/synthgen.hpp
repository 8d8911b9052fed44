#pragma once

#include "volclass/decision.hpp"
#include "volclass/model_store.hpp"
#include "volclass/volume.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace volclass {

enum class Family { Blob, Shell, Ramp, Noise, Checker };

inline constexpr Family kWellDefinedFamilies[] = {Family::Blob, Family::Shell, Family::Ramp};
inline constexpr Family kRestFamilies[] = {Family::Noise, Family::Checker};

std::string_view to_string(Family family);
/// Throws BadConfig for an unknown name.
Family parse_family(std::string_view name);
bool is_rest_family(Family family);

struct FamilySpec {
    Family family = Family::Blob;
    std::size_t size = 64; // cube edge, at least 8
    double jitter = 0.3;   // in [0, 1]; 0 makes every instance identical
    std::uint64_t seed = 0;

    /// Throws BadConfig.
    void validate() const;
};

/// Instance `index` of a family. Depends only on (spec, index).
Volume generate_instance(const FamilySpec& spec, std::size_t index);
/// Instances first_index .. first_index + count - 1.
std::vector<Volume> generate(const FamilySpec& spec, std::size_t count, std::size_t first_index = 0);

struct LabeledVolume {
    std::string source_id;
    std::string label;
    Volume volume;
};

/// `count` instances of each family. Well-defined families are labelled with
/// their name, rest families with kRestOutcome. Source ids are
/// `<family>_<index>`.
std::vector<LabeledVolume> make_corpus(std::span<const Family> families, std::size_t count, std::size_t size,
                                       double jitter, std::uint64_t seed, std::size_t first_index = 0);

/// Writes `<source_id>.raw` (f32, little-endian) plus sidecars and a
/// `manifest.csv` with `file,label` rows.
void write_corpus(const std::filesystem::path& dir, std::span<const LabeledVolume> corpus);
std::vector<LabeledVolume> read_corpus(const std::filesystem::path& dir);

struct PreparedSample {
    std::string source_id;
    std::string label;
    std::vector<float> input;
};

/// Computes every network input once so several policies can be scored cheaply.
std::vector<PreparedSample> prepare_corpus(const ModelState& state, std::span<const LabeledVolume> corpus);

struct ConfusionReport {
    // Well-defined classes in registry order, then the rest group.
    std::vector<std::string> categories;
    // matrix[truth][decided]
    std::vector<std::vector<std::size_t>> matrix;
    std::size_t some_to_rest = 0;
    std::size_t rest_to_some = 0;
    std::size_t some_to_other_some = 0;
    // Mean network output of the true class, over samples that have one
    // (rest-group samples only count when the model has a rest class).
    double mean_correct_output = 0.0;
    double mean_confidence = 0.0;

    std::size_t rest_category() const { return categories.size() - 1; }
    std::size_t total() const;
    std::size_t misclassified() const;
};

/// Throws EmptySampleSet, UnknownLabel or ShapeMismatch.
ConfusionReport evaluate(const ModelState& state, std::span<const PreparedSample> corpus,
                         const DecisionPolicy& policy);
ConfusionReport evaluate(const ModelState& state, std::span<const LabeledVolume> corpus,
                         const DecisionPolicy& policy);

struct PolicyRow {
    DecisionPolicy policy;
    ConfusionReport report;
};

std::vector<PolicyRow> evaluate_grid(const ModelState& state, std::span<const PreparedSample> corpus,
                                     std::span<const DecisionPolicy> policies);

void write_report_table(std::span<const PolicyRow> rows, std::ostream& out);
void write_report_csv(std::span<const PolicyRow> rows, std::ostream& out);
void write_confusion_matrix(const ConfusionReport& report, std::ostream& out);

} // namespace volclass
