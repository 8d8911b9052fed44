#pragma once

#include "volclass/decision.hpp"
#include "volclass/histogram.hpp"
#include "volclass/mlp.hpp"
#include "volclass/volume.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace volclass {

inline constexpr char kModelMagic[4] = {'V', 'C', 'L', 'S'};
inline constexpr std::uint16_t kModelVersion = 1;

/// Everything a classifier needs to be restored and retrained: the network,
/// the class names and every stored training sample.
struct ModelState {
    unsigned reduction_factor = kDefaultReduction;
    Network network;
    ClassRegistry registry;
    std::vector<TrainingSample> samples;

    /// Side length of the histogram the network consumes.
    std::size_t histogram_size() const;
    /// Bin count of the full-resolution histogram before reduction.
    std::size_t source_bins() const { return histogram_size() << reduction_factor; }
};

/// New single-class model whose input layer matches a (256 >> factor)² histogram.
ModelState create_model(const std::string& first_class, unsigned reduction_factor,
                        std::span<const std::size_t> hidden_sizes, std::uint64_t seed, bool first_is_rest = false);

/// Re-draws the network with the same shape, keeping classes and samples.
void reset_network(ModelState& state, std::uint64_t seed);

// VCLS layout, all little-endian:
//   "VCLS" | u16 version | u8 reduction factor
//   u8 layer count | u32 size per layer
//   u32 class count | per class: u32 length, UTF-8 bytes
//   i32 rest class index (-1 = none)
//   per layer pair: f32 weights (row-major), f32 biases
//   u32 sample count | per sample: u32 length, source id bytes, u32 label index, f32 input[input layer]
std::vector<unsigned char> serialize_model(const ModelState& state);
/// Throws BadMagic, UnsupportedVersion or CorruptFile.
ModelState deserialize_model(std::span<const unsigned char> bytes);
void save_model(const ModelState& state, const std::filesystem::path& path);
ModelState load_model(const std::filesystem::path& path);

/// Replaces the sample with the same source id, or appends. Throws
/// UnknownLabel or ShapeMismatch. Does not retrain.
void upsert_sample(ModelState& state, const std::string& source_id, const std::string& label,
                   std::vector<float> input);

/// Registers a class and grows the output layer; stored targets gain a 0.
/// Throws DuplicateClass. Does not retrain.
void add_class(ModelState& state, const std::string& name, std::uint64_t seed, bool is_rest = false);

/// Trains on every stored sample. Throws EmptySampleSet.
TrainingReport retrain(ModelState& state, const TrainingConfig& cfg);

/// Histogram at the model's resolution, flattened. Throws ShapeMismatch if
/// the histogram size disagrees with the input layer.
std::vector<float> model_input(const ModelState& state, const Volume& volume);
/// Throws ShapeMismatch naming expected and actual histogram sizes.
void check_input_size(const ModelState& state, std::size_t input_length);

Classification classify_input(const ModelState& state, std::span<const float> input, const DecisionPolicy& policy);
Classification classify(const ModelState& state, const Volume& volume, const DecisionPolicy& policy);

} // namespace volclass
