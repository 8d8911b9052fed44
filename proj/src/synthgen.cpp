#include "volclass/synthgen.hpp"

#include "volclass/errors.hpp"
#include "volclass/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace volclass {

namespace {

constexpr double kBaseAmplitude = 1000.0;

struct Vec3 {
    double x, y, z;
};

// Parameter perturbation: base · (1 + jitter · spread · U(-1, 1)).
double perturb(Rng& rng, double base, double jitter, double spread) {
    return base * (1.0 + jitter * spread * rng.uniform(-1.0, 1.0));
}

Vec3 jittered_center(Rng& rng, double jitter) {
    return {0.2 * jitter * rng.uniform(-1, 1), 0.2 * jitter * rng.uniform(-1, 1), 0.2 * jitter * rng.uniform(-1, 1)};
}

template <class Field>
Volume sample_field(std::size_t n, Rng& rng, double noise_floor, Field&& field) {
    VolumeMeta meta;
    meta.dims = {n, n, n};
    meta.voxel_type = VoxelType::F32;
    std::vector<double> voxels(n * n * n);
    const double step = 2.0 / static_cast<double>(n);
    std::size_t i = 0;
    for (std::size_t z = 0; z < n; ++z) {
        const double pz = -1.0 + (static_cast<double>(z) + 0.5) * step;
        for (std::size_t y = 0; y < n; ++y) {
            const double py = -1.0 + (static_cast<double>(y) + 0.5) * step;
            for (std::size_t x = 0; x < n; ++x) {
                const double px = -1.0 + (static_cast<double>(x) + 0.5) * step;
                voxels[i++] = field(Vec3{px, py, pz}) + noise_floor * rng.uniform01();
            }
        }
    }
    return Volume(meta, std::move(voxels));
}

} // namespace

std::string_view to_string(Family family) {
    switch (family) {
    case Family::Blob: return "blob";
    case Family::Shell: return "shell";
    case Family::Ramp: return "ramp";
    case Family::Noise: return "noise";
    case Family::Checker: return "checker";
    }
    return "?";
}

Family parse_family(std::string_view name) {
    for (Family f : {Family::Blob, Family::Shell, Family::Ramp, Family::Noise, Family::Checker})
        if (to_string(f) == name) return f;
    throw Error(Errc::BadConfig, "unknown family '" + std::string(name) + "'");
}

bool is_rest_family(Family family) { return family == Family::Noise || family == Family::Checker; }

void FamilySpec::validate() const {
    if (size < 8) throw Error(Errc::BadConfig, "synthetic volumes need at least 8 voxels per axis");
    if (!(jitter >= 0.0 && jitter <= 1.0)) throw Error(Errc::BadConfig, "jitter must be in [0, 1]");
}

Volume generate_instance(const FamilySpec& spec, std::size_t index) {
    spec.validate();
    const double j = spec.jitter;
    // The noise realization counts as a jittered parameter: with zero jitter
    // every instance is the same volume.
    const std::uint64_t instance = j > 0.0 ? index + 1 : 0;
    Rng rng(mix_seed(mix_seed(spec.seed, static_cast<std::uint64_t>(spec.family)), instance));
    const double amplitude = perturb(rng, kBaseAmplitude, j, 0.5);
    const double noise = amplitude * perturb(rng, 0.01, j, 0.5);
    const std::size_t n = spec.size;

    switch (spec.family) {
    case Family::Blob: {
        const Vec3 c = jittered_center(rng, j);
        const double sigma = perturb(rng, 0.35, j, 0.3);
        return sample_field(n, rng, noise, [&](Vec3 p) {
            const double r2 = (p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y) + (p.z - c.z) * (p.z - c.z);
            return amplitude * std::exp(-r2 / (2.0 * sigma * sigma));
        });
    }
    case Family::Shell: {
        const Vec3 c = jittered_center(rng, j);
        const double radius = perturb(rng, 0.55, j, 0.2);
        const double width = perturb(rng, 0.08, j, 0.3);
        return sample_field(n, rng, noise, [&](Vec3 p) {
            const double r = std::sqrt((p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y) + (p.z - c.z) * (p.z - c.z));
            const double d = r - radius;
            return amplitude * std::exp(-d * d / (2.0 * width * width));
        });
    }
    case Family::Ramp: {
        Vec3 d{1.0, 0.5 * j * rng.uniform(-1, 1), 0.5 * j * rng.uniform(-1, 1)};
        const double len = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
        d = {d.x / len, d.y / len, d.z / len};
        const double offset = perturb(rng, 0.5, j, 0.4);
        return sample_field(n, rng, noise,
                            [&](Vec3 p) { return amplitude * (offset + 0.5 * (d.x * p.x + d.y * p.y + d.z * p.z)); });
    }
    case Family::Noise:
        return sample_field(n, rng, amplitude, [](Vec3) { return 0.0; });
    case Family::Checker: {
        const double block = perturb(rng, 0.25, j, 0.3);
        const double low = perturb(rng, 0.2, j, 0.5) * amplitude;
        const double high = amplitude;
        return sample_field(n, rng, noise, [&](Vec3 p) {
            const auto cell = [&](double v) { return static_cast<long long>(std::floor((v + 1.0) / block)); };
            return ((cell(p.x) + cell(p.y) + cell(p.z)) % 2 == 0) ? high : low;
        });
    }
    }
    throw Error(Errc::BadConfig, "unknown family");
}

std::vector<Volume> generate(const FamilySpec& spec, std::size_t count, std::size_t first_index) {
    std::vector<Volume> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(generate_instance(spec, first_index + i));
    return out;
}

std::vector<LabeledVolume> make_corpus(std::span<const Family> families, std::size_t count, std::size_t size,
                                       double jitter, std::uint64_t seed, std::size_t first_index) {
    std::vector<LabeledVolume> corpus;
    for (Family f : families) {
        const FamilySpec spec{f, size, jitter, seed};
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t index = first_index + i;
            corpus.push_back({std::string(to_string(f)) + "_" + std::to_string(index),
                              is_rest_family(f) ? std::string(kRestOutcome) : std::string(to_string(f)),
                              generate_instance(spec, index)});
        }
    }
    return corpus;
}

void write_corpus(const std::filesystem::path& dir, std::span<const LabeledVolume> corpus) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(Errc::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
    std::ofstream manifest(dir / "manifest.csv");
    if (!manifest) throw Error(Errc::IoFailure, "cannot write manifest in " + dir.string());
    manifest << "file,label\n";
    for (const auto& item : corpus) {
        const std::string file = item.source_id + ".raw";
        save_volume(dir / file, item.volume, VoxelType::F32, Endian::Little);
        manifest << file << ',' << item.label << '\n';
    }
    if (!manifest) throw Error(Errc::IoFailure, "write failed for manifest in " + dir.string());
}

std::vector<LabeledVolume> read_corpus(const std::filesystem::path& dir) {
    std::ifstream manifest(dir / "manifest.csv");
    if (!manifest) throw Error(Errc::IoFailure, "cannot open " + (dir / "manifest.csv").string());
    std::vector<LabeledVolume> corpus;
    std::string line;
    bool header = true;
    while (std::getline(manifest, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line == "file,label") continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw Error(Errc::BadMeta, "bad manifest line '" + line + "'");
        const std::filesystem::path file = dir / line.substr(0, comma);
        const std::string label = line.substr(comma + 1);
        const VolumeMeta meta = read_sidecar(sidecar_path(file)).resolve();
        corpus.push_back({file.stem().string(), label, load_volume(file, meta)});
    }
    return corpus;
}

std::vector<PreparedSample> prepare_corpus(const ModelState& state, std::span<const LabeledVolume> corpus) {
    std::vector<PreparedSample> out;
    out.reserve(corpus.size());
    for (const auto& item : corpus) out.push_back({item.source_id, item.label, model_input(state, item.volume)});
    return out;
}

std::size_t ConfusionReport::total() const {
    std::size_t n = 0;
    for (const auto& row : matrix)
        for (std::size_t c : row) n += c;
    return n;
}

std::size_t ConfusionReport::misclassified() const {
    std::size_t n = total();
    for (std::size_t i = 0; i < matrix.size(); ++i) n -= matrix[i][i];
    return n;
}

ConfusionReport evaluate(const ModelState& state, std::span<const PreparedSample> corpus,
                         const DecisionPolicy& policy) {
    if (corpus.empty()) throw Error(Errc::EmptySampleSet, "evaluation corpus is empty");
    const ClassRegistry& reg = state.registry;

    // Registry index -> category index.
    ConfusionReport report;
    std::vector<std::size_t> category_of(reg.size());
    for (std::size_t i = 0; i < reg.size(); ++i) {
        if (reg.is_rest(i)) continue;
        category_of[i] = report.categories.size();
        report.categories.push_back(reg.classes[i]);
    }
    const std::size_t rest = report.categories.size();
    report.categories.push_back(reg.rest_class_index ? reg.classes[*reg.rest_class_index] : std::string(kRestOutcome));
    if (reg.rest_class_index) category_of[*reg.rest_class_index] = rest;
    report.matrix.assign(report.categories.size(), std::vector<std::size_t>(report.categories.size(), 0));

    double correct_sum = 0.0;
    std::size_t correct_n = 0;
    double confidence_sum = 0.0;
    for (const auto& sample : corpus) {
        std::size_t truth;
        std::optional<std::size_t> truth_output;
        if (const auto idx = reg.find(sample.label)) {
            truth = category_of[*idx];
            truth_output = idx;
        } else if (sample.label == kRestOutcome) {
            truth = rest;
            truth_output = reg.rest_class_index;
        } else {
            throw Error(Errc::UnknownLabel, "corpus label '" + sample.label + "' is not a registered class");
        }

        const Classification c = classify_input(state, sample.input, policy);
        const std::size_t decided = c.chosen_index ? category_of[*c.chosen_index] : rest;
        ++report.matrix[truth][decided];
        confidence_sum += c.confidence;
        if (truth_output) {
            correct_sum += c.scores[*truth_output];
            ++correct_n;
        }
        if (truth != rest && decided == rest) ++report.some_to_rest;
        else if (truth == rest && decided != rest) ++report.rest_to_some;
        else if (truth != decided) ++report.some_to_other_some;
    }
    report.mean_confidence = confidence_sum / static_cast<double>(corpus.size());
    report.mean_correct_output = correct_n ? correct_sum / static_cast<double>(correct_n) : 0.0;
    return report;
}

ConfusionReport evaluate(const ModelState& state, std::span<const LabeledVolume> corpus,
                         const DecisionPolicy& policy) {
    if (corpus.empty()) throw Error(Errc::EmptySampleSet, "evaluation corpus is empty");
    const auto prepared = prepare_corpus(state, corpus);
    return evaluate(state, prepared, policy);
}

std::vector<PolicyRow> evaluate_grid(const ModelState& state, std::span<const PreparedSample> corpus,
                                     std::span<const DecisionPolicy> policies) {
    std::vector<PolicyRow> rows;
    for (const auto& p : policies) rows.push_back({p, evaluate(state, corpus, p)});
    return rows;
}

void write_report_table(std::span<const PolicyRow> rows, std::ostream& out) {
    std::size_t width = std::string_view("policy").size();
    for (const auto& r : rows) width = std::max(width, r.policy.describe().size());
    out << std::left << std::setw(static_cast<int>(width)) << "policy" << std::right << std::setw(8) << "total"
        << std::setw(14) << "some->rest" << std::setw(14) << "rest->some" << std::setw(14) << "some->other"
        << std::setw(12) << "mean_conf" << '\n';
    for (const auto& r : rows) {
        out << std::left << std::setw(static_cast<int>(width)) << r.policy.describe() << std::right << std::setw(8)
            << r.report.total() << std::setw(14) << r.report.some_to_rest << std::setw(14) << r.report.rest_to_some
            << std::setw(14) << r.report.some_to_other_some << std::setw(12) << std::fixed << std::setprecision(4)
            << r.report.mean_confidence << '\n';
        out.unsetf(std::ios::fixed);
    }
}

void write_report_csv(std::span<const PolicyRow> rows, std::ostream& out) {
    out << "rest_class,threshold,total,some_to_rest,rest_to_some,some_to_other_some,mean_confidence,"
           "mean_correct_output\n";
    for (const auto& r : rows) {
        out << (r.policy.use_rest_class ? "yes" : "no") << ',';
        if (r.policy.threshold) out << *r.policy.threshold;
        else out << "none";
        out << ',' << r.report.total() << ',' << r.report.some_to_rest << ',' << r.report.rest_to_some << ','
            << r.report.some_to_other_some << ',' << std::setprecision(9) << r.report.mean_confidence << ','
            << r.report.mean_correct_output << std::setprecision(6) << '\n';
    }
}

void write_confusion_matrix(const ConfusionReport& report, std::ostream& out) {
    std::size_t width = std::string_view("truth\\decided").size();
    for (const auto& c : report.categories) width = std::max(width, c.size());
    const int w = static_cast<int>(width) + 2;
    out << std::left << std::setw(w) << "truth\\decided" << std::right;
    for (const auto& c : report.categories) out << std::setw(w) << c;
    out << '\n';
    for (std::size_t i = 0; i < report.categories.size(); ++i) {
        out << std::left << std::setw(w) << report.categories[i] << std::right;
        for (std::size_t v : report.matrix[i]) out << std::setw(w) << v;
        out << '\n';
    }
}

} // namespace volclass
