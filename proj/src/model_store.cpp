#include "volclass/model_store.hpp"

#include "volclass/errors.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace volclass {

namespace {

class ByteWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
    void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        bytes_.insert(bytes_.end(), b, b + n);
    }
    void str(const std::string& s) {
        u32(checked_u32(s.size()));
        raw(s.data(), s.size());
    }

    static std::uint32_t checked_u32(std::size_t n) {
        if (n > std::numeric_limits<std::uint32_t>::max()) throw Error(Errc::CorruptFile, "field too large");
        return static_cast<std::uint32_t>(n);
    }

    std::vector<unsigned char> take() { return std::move(bytes_); }

private:
    void put(std::uint32_t v, int width) {
        for (int i = 0; i < width; ++i) bytes_.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
    }

    std::vector<unsigned char> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return get(4); }
    std::int32_t i32() { return static_cast<std::int32_t>(get(4)); }
    float f32() { return std::bit_cast<float>(get(4)); }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    void floats(std::vector<float>& out, std::size_t n) {
        need(n * 4);
        out.resize(n);
        for (float& v : out) v = f32();
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (n > remaining()) throw Error(Errc::CorruptFile, "model file is truncated");
    }
    std::uint32_t get(int width) {
        need(static_cast<std::size_t>(width));
        std::uint32_t v = 0;
        for (int i = 0; i < width; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    std::span<const unsigned char> bytes_;
    std::size_t pos_ = 0;
};

std::vector<float> one_hot(std::size_t index, std::size_t n) {
    std::vector<float> t(n, 0.0f);
    t[index] = 1.0f;
    return t;
}

std::size_t isqrt(std::size_t n) {
    auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

} // namespace

std::size_t ModelState::histogram_size() const { return isqrt(network.input_size()); }

ModelState create_model(const std::string& first_class, unsigned reduction_factor,
                        std::span<const std::size_t> hidden_sizes, std::uint64_t seed, bool first_is_rest) {
    if (first_class.empty()) throw Error(Errc::BadShape, "class names must be nonempty");
    if (reduction_factor > 5)
        throw Error(Errc::BadFactor, "reduction factor must be in [0, 5], got " + std::to_string(reduction_factor));
    const std::size_t side = kDefaultBins >> reduction_factor;
    ModelState state{reduction_factor, init_network(side * side, hidden_sizes, 1, seed), {}, {}};
    state.registry.classes.push_back(first_class);
    if (first_is_rest) state.registry.rest_class_index = 0;
    return state;
}

void reset_network(ModelState& state, std::uint64_t seed) {
    const auto& sizes = state.network.layer_sizes();
    const std::vector<std::size_t> hidden(sizes.begin() + 1, sizes.end() - 1);
    state.network = init_network(sizes.front(), hidden, sizes.back(), seed);
}

std::vector<unsigned char> serialize_model(const ModelState& state) {
    const Network& net = state.network;
    ByteWriter w;
    w.raw(kModelMagic, 4);
    w.u16(kModelVersion);
    w.u8(static_cast<std::uint8_t>(state.reduction_factor));
    w.u8(static_cast<std::uint8_t>(net.layer_sizes().size()));
    for (std::size_t n : net.layer_sizes()) w.u32(ByteWriter::checked_u32(n));
    w.u32(ByteWriter::checked_u32(state.registry.size()));
    for (const auto& name : state.registry.classes) w.str(name);
    w.i32(state.registry.rest_class_index ? static_cast<std::int32_t>(*state.registry.rest_class_index) : -1);
    for (std::size_t t = 0; t < net.transition_count(); ++t) {
        for (float v : net.weights()[t]) w.f32(v);
        for (float v : net.biases()[t]) w.f32(v);
    }
    w.u32(ByteWriter::checked_u32(state.samples.size()));
    for (const auto& s : state.samples) {
        const auto label = state.registry.find(s.label);
        if (!label) throw Error(Errc::UnknownLabel, "sample '" + s.source_id + "' has unknown label '" + s.label + "'");
        if (s.input.size() != net.input_size())
            throw Error(Errc::ShapeMismatch, "sample '" + s.source_id + "' does not match the input layer");
        w.str(s.source_id);
        w.u32(static_cast<std::uint32_t>(*label));
        for (float v : s.input) w.f32(v);
    }
    return w.take();
}

ModelState deserialize_model(std::span<const unsigned char> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kModelMagic, 4) != 0)
        throw Error(Errc::BadMagic, "not a VCLS model file");
    ByteReader r(bytes.subspan(4));
    const std::uint16_t version = r.u16();
    if (version != kModelVersion)
        throw Error(Errc::UnsupportedVersion, "model version " + std::to_string(version) + " is not supported");
    const unsigned factor = r.u8();
    if (factor > 5) throw Error(Errc::CorruptFile, "bad reduction factor " + std::to_string(factor));

    const std::uint8_t layer_count = r.u8();
    if (layer_count < 3 || layer_count > 4) throw Error(Errc::CorruptFile, "bad layer count");
    std::vector<std::size_t> sizes(layer_count);
    for (auto& n : sizes) {
        n = r.u32();
        if (n == 0 || n > (std::size_t{1} << 24)) throw Error(Errc::CorruptFile, "bad layer size");
    }

    ClassRegistry registry;
    const std::uint32_t class_count = r.u32();
    if (class_count != sizes.back()) throw Error(Errc::CorruptFile, "class count does not match output layer");
    for (std::uint32_t i = 0; i < class_count; ++i) registry.classes.push_back(r.str());
    const std::int32_t rest = r.i32();
    if (rest >= 0) registry.rest_class_index = static_cast<std::size_t>(rest);
    else if (rest != -1) throw Error(Errc::CorruptFile, "bad rest class index");
    try {
        registry.validate();
    } catch (const Error& e) {
        throw Error(Errc::CorruptFile, e.what());
    }

    std::vector<std::vector<float>> weights(layer_count - 1), biases(layer_count - 1);
    for (std::size_t t = 0; t + 1 < sizes.size(); ++t) {
        r.floats(weights[t], sizes[t + 1] * sizes[t]);
        r.floats(biases[t], sizes[t + 1]);
    }
    ModelState state{factor, Network(sizes, std::move(weights), std::move(biases)), std::move(registry), {}};

    const std::uint32_t sample_count = r.u32();
    for (std::uint32_t i = 0; i < sample_count; ++i) {
        TrainingSample s;
        s.source_id = r.str();
        const std::uint32_t label = r.u32();
        if (label >= class_count) throw Error(Errc::CorruptFile, "sample label index out of range");
        s.label = state.registry.classes[label];
        s.target = one_hot(label, class_count);
        r.floats(s.input, sizes.front());
        state.samples.push_back(std::move(s));
    }
    if (r.remaining() != 0) throw Error(Errc::CorruptFile, "trailing bytes after model data");
    return state;
}

void save_model(const ModelState& state, const std::filesystem::path& path) {
    const auto bytes = serialize_model(state);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

ModelState load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(Errc::IoFailure, "read failed for " + path.string());
    return deserialize_model(bytes);
}

void upsert_sample(ModelState& state, const std::string& source_id, const std::string& label,
                   std::vector<float> input) {
    const auto index = state.registry.find(label);
    if (!index) throw Error(Errc::UnknownLabel, "class '" + label + "' is not registered");
    check_input_size(state, input.size());

    TrainingSample sample{std::move(input), one_hot(*index, state.registry.size()), label, source_id};
    for (auto& s : state.samples) {
        if (s.source_id == source_id) {
            s = std::move(sample);
            return;
        }
    }
    state.samples.push_back(std::move(sample));
}

void add_class(ModelState& state, const std::string& name, std::uint64_t seed, bool is_rest) {
    if (name.empty()) throw Error(Errc::BadShape, "class names must be nonempty");
    if (state.registry.find(name)) throw Error(Errc::DuplicateClass, "class '" + name + "' already exists");
    if (is_rest && state.registry.rest_class_index)
        throw Error(Errc::DuplicateClass,
                    "rest class already set to '" + state.registry.classes[*state.registry.rest_class_index] + "'");

    state.network = add_output(state.network, seed);
    state.registry.classes.push_back(name);
    if (is_rest) state.registry.rest_class_index = state.registry.size() - 1;
    for (auto& s : state.samples) s.target.push_back(0.0f);
}

TrainingReport retrain(ModelState& state, const TrainingConfig& cfg) {
    if (state.samples.empty()) throw Error(Errc::EmptySampleSet, "model has no stored samples");
    return train(state.network, state.samples, cfg);
}

void check_input_size(const ModelState& state, std::size_t input_length) {
    if (input_length != state.network.input_size()) {
        const std::size_t side = state.histogram_size();
        throw Error(Errc::ShapeMismatch, "model expects a " + std::to_string(side) + "x" + std::to_string(side) +
                                             " histogram (" + std::to_string(state.network.input_size()) +
                                             " inputs), got " + std::to_string(input_length) + " inputs");
    }
}

std::vector<float> model_input(const ModelState& state, const Volume& volume) {
    const auto h = downscale(compute_histogram(volume, state.source_bins()), state.reduction_factor);
    auto input = flatten(h);
    check_input_size(state, input.size());
    return input;
}

Classification classify_input(const ModelState& state, std::span<const float> input, const DecisionPolicy& policy) {
    check_input_size(state, input.size());
    const auto scores = state.network.forward(input);
    return decide(scores, state.registry, policy);
}

Classification classify(const ModelState& state, const Volume& volume, const DecisionPolicy& policy) {
    return classify_input(state, model_input(state, volume), policy);
}

} // namespace volclass
