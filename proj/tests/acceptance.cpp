// End-to-end acceptance checks. Prints one PASS/FAIL line per check and
// exits non-zero if any check fails.

#include "volclass/histogram.hpp"
#include "volclass/model_store.hpp"
#include "volclass/random.hpp"
#include "volclass/synthgen.hpp"
#include "volclass/volume.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace volclass;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Shared synthetic setup: one training instance per class (blob, shell, ramp
// and a noise-trained rest class), unseen instances 1..10 for testing.
constexpr std::size_t kVolumeSize = 64;
constexpr double kJitter = 0.3;
constexpr std::uint64_t kCorpusSeed = 100;
const Family kTrainFamilies[] = {Family::Blob, Family::Shell, Family::Ramp, Family::Noise};
const std::string kRestClass = "misc";

struct Corpora {
    std::vector<LabeledVolume> train;
    std::vector<LabeledVolume> well_defined;  // unseen well-defined instances
    std::vector<LabeledVolume> mixed;         // well_defined + unseen rest instances
};

const Corpora& corpora() {
    static const Corpora c = [] {
        Corpora c;
        c.train = make_corpus(kTrainFamilies, 1, kVolumeSize, kJitter, kCorpusSeed, 0);
        c.well_defined = make_corpus(kWellDefinedFamilies, 10, kVolumeSize, kJitter, kCorpusSeed, 1);
        c.mixed = c.well_defined;
        auto rest = make_corpus(kRestFamilies, 10, kVolumeSize, kJitter, kCorpusSeed, 1);
        c.mixed.insert(c.mixed.end(), rest.begin(), rest.end());
        return c;
    }();
    return c;
}

struct Trained {
    ModelState state;
    TrainingReport training;
};

Trained train_model(unsigned factor, std::uint64_t seed) {
    const std::size_t hidden[] = {kDefaultHidden};
    ModelState st = create_model("blob", factor, hidden, seed);
    add_class(st, "shell", mix_seed(seed, 1));
    add_class(st, "ramp", mix_seed(seed, 2));
    add_class(st, kRestClass, mix_seed(seed, 3), true);
    for (const auto& lv : corpora().train)
        upsert_sample(st, lv.source_id, lv.label == kRestOutcome ? kRestClass : lv.label, model_input(st, lv.volume));
    TrainingConfig cfg;
    cfg.seed = seed;
    TrainingReport rep = retrain(st, cfg);
    return {std::move(st), rep};
}

std::vector<float> random_input(Rng& rng, std::size_t n) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform01());
    return v;
}

Outcome gradient_check_random_networks() {
    const auto t0 = Clock::now();
    Rng rng(7);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const std::size_t in = 1 + rng.next() % 16;
        const std::size_t out = 1 + rng.next() % 4;
        std::vector<std::size_t> hidden{1 + rng.next() % 8};
        if (i % 2 == 1) hidden.push_back(1 + rng.next() % 8);
        if (i == 0) hidden = {8};
        const Network net = init_network(i == 0 ? 16 : in, hidden, i == 0 ? 4 : out, mix_seed(99, i));
        const auto input = random_input(rng, net.input_size());
        std::vector<double> target(net.output_size());
        for (auto& t : target) t = rng.uniform01();
        worst = std::max(worst, gradient_check(net, input, target));
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-4 && secs < 5.0, fmt("max relative error %.3g (< 1e-4), %.3f s (< 5 s)", worst, secs)};
}

Outcome training_converges() {
    const auto t0 = Clock::now();
    const Trained t = train_model(3, 1);
    const double secs = seconds_since(t0);
    const bool ok = t.training.converged && t.training.final_mse < 0.003 && t.training.epochs_run < 10000 &&
                    secs < 10.0 && t.state.histogram_size() == 32 && t.state.registry.size() == 4;
    return {ok, fmt("4 classes, 32x32, %zu hidden: mse %.5f after %zu epochs, %.2f s (< 10 s)", kDefaultHidden,
                    t.training.final_mse, t.training.epochs_run, secs)};
}

Outcome unseen_accuracy() {
    const Trained t = train_model(3, 1);
    std::string detail;
    bool ok = true;
    for (Family f : kWellDefinedFamilies) {
        std::size_t correct = 0, n = 0;
        for (const auto& lv : corpora().well_defined) {
            if (lv.label != to_string(f)) continue;
            ++n;
            if (classify(t.state, lv.volume, DecisionPolicy{}).chosen == lv.label) ++correct;
        }
        ok = ok && n == 10 && correct * 10 >= n * 9;
        detail += fmt("%s %zu/%zu ", std::string(to_string(f)).c_str(), correct, n);
    }
    return {ok, detail + "(>= 90% each)"};
}

Outcome no_cross_class_errors() {
    std::size_t cross = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Trained t = train_model(3, seed);
        cross += evaluate(t.state, std::span<const LabeledVolume>(corpora().mixed), DecisionPolicy{}).some_to_other_some;
    }
    return {cross == 0, fmt("%zu some->other-some errors over 5 seeds", cross)};
}

Outcome threshold_trend() {
    const Trained t = train_model(3, 1);
    const auto prepared = prepare_corpus(t.state, corpora().mixed);
    std::vector<DecisionPolicy> grid{DecisionPolicy{}};
    for (double th : {0.5, 0.7, 0.9}) grid.push_back(DecisionPolicy{true, th});
    const auto rows = evaluate_grid(t.state, prepared, grid);
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0) {
            ok = ok && rows[i].report.some_to_rest >= rows[i - 1].report.some_to_rest;
            ok = ok && rows[i].report.rest_to_some <= rows[i - 1].report.rest_to_some;
        }
        detail += fmt("[%s s->r %zu r->s %zu] ", rows[i].policy.describe().c_str(), rows[i].report.some_to_rest,
                      rows[i].report.rest_to_some);
    }
    return {ok, detail};
}

Outcome reliability_vs_resolution() {
    // Averaged over init seeds: a single network is too noisy to order.
    constexpr int kSeeds = 10;
    const unsigned factors[] = {5, 4, 3};
    double correct[3] = {}, confidence[3] = {};
    for (int i = 0; i < 3; ++i) {
        for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
            const Trained t = train_model(factors[i], seed);
            const auto r = evaluate(t.state, std::span<const LabeledVolume>(corpora().well_defined), DecisionPolicy{});
            correct[i] += r.mean_correct_output / kSeeds;
            confidence[i] += r.mean_confidence / kSeeds;
        }
    }
    const bool ok = correct[0] <= correct[1] && correct[1] <= correct[2] && confidence[0] <= confidence[2];
    return {ok, fmt("mean correct output 8x8 %.4f <= 16x16 %.4f <= 32x32 %.4f; confidence 8x8 %.4f <= 32x32 %.4f",
                    correct[0], correct[1], correct[2], confidence[0], confidence[2])};
}

Outcome add_output_preserves_existing() {
    const Trained t = train_model(3, 1);
    const Network grown = add_output(t.state.network, 12345);
    Rng rng(3);
    std::size_t mismatches = 0;
    for (int i = 0; i < 100; ++i) {
        const auto input = random_input(rng, grown.input_size());
        const auto before = t.state.network.forward(input);
        const auto after = grown.forward(input);
        if (after.size() != before.size() + 1 || !std::equal(before.begin(), before.end(), after.begin()))
            ++mismatches;
    }
    return {mismatches == 0, fmt("%zu of 100 inputs changed an existing output", mismatches)};
}

Outcome persistence_round_trip() {
    const Trained t = train_model(3, 1);
    const fs::path dir = fs::temp_directory_path() / fmt("volclass_acceptance_%d", static_cast<int>(Clock::now().time_since_epoch().count() % 1000000));
    fs::create_directories(dir);
    save_model(t.state, dir / "a.vcls");
    const ModelState loaded = load_model(dir / "a.vcls");
    save_model(loaded, dir / "b.vcls");
    const bool same_bytes = serialize_model(t.state) == serialize_model(loaded) &&
                            fs::file_size(dir / "a.vcls") == fs::file_size(dir / "b.vcls") &&
                            serialize_model(load_model(dir / "b.vcls")) == serialize_model(t.state);
    fs::remove_all(dir);

    const Family all[] = {Family::Blob, Family::Shell, Family::Ramp, Family::Noise, Family::Checker};
    const auto probe = make_corpus(all, 10, kVolumeSize, kJitter, kCorpusSeed + 1, 0);
    std::size_t differ = 0;
    for (const auto& lv : probe) {
        const auto a = classify(t.state, lv.volume, DecisionPolicy::combined(0.5));
        const auto b = classify(loaded, lv.volume, DecisionPolicy::combined(0.5));
        if (a.chosen != b.chosen || a.scores != b.scores) ++differ;
    }
    return {same_bytes && differ == 0 && probe.size() == 50,
            fmt("save/load/save %s; %zu of %zu probe volumes classified differently",
                same_bytes ? "byte-identical" : "DIFFERS", differ, probe.size())};
}

Outcome seed_stability() {
    std::vector<std::string> reference;
    std::size_t changed = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Trained t = train_model(3, seed);
        for (std::size_t i = 0; i < corpora().well_defined.size(); ++i) {
            const auto c = classify(t.state, corpora().well_defined[i].volume, DecisionPolicy{}).chosen;
            if (seed == 1)
                reference.push_back(c);
            else if (c != reference[i])
                ++changed;
        }
    }
    return {changed == 0, fmt("%zu decisions changed across 5 init seeds (%zu volumes)", changed, reference.size())};
}

Outcome latency() {
    const Trained t = train_model(3, 1);
    const Volume& vol = corpora().well_defined.front().volume;
    const Histogram2D reduced = downscale(compute_histogram(vol), t.state.reduction_factor);
    const DecisionPolicy policy = DecisionPolicy::combined(0.5);

    std::vector<double> times;
    times.reserve(1000);
    std::size_t sink = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto t0 = Clock::now();
        const auto input = flatten(reduced);
        const auto c = classify_input(t.state, input, policy);
        times.push_back(seconds_since(t0));
        sink += c.chosen.size();
    }
    std::nth_element(times.begin(), times.begin() + 500, times.end());
    const double median_ms = times[500] * 1e3;

    const fs::path dir = fs::temp_directory_path() / fmt("volclass_latency_%d", static_cast<int>(sink % 7));
    fs::create_directories(dir);
    save_volume(dir / "v.raw", vol, VoxelType::F32, Endian::Little);
    const auto t0 = Clock::now();
    const Volume loaded = load_volume(dir / "v.raw", read_sidecar(sidecar_path(dir / "v.raw")).resolve());
    const auto full = classify(t.state, loaded, policy);
    const double full_ms = seconds_since(t0) * 1e3;
    fs::remove_all(dir);

    return {median_ms < 1.0 && full_ms < 250.0 && !full.chosen.empty(),
            fmt("median flatten+forward+decide %.4f ms (< 1 ms); load+histogram+classify 64^3 %.1f ms (< 250 ms)",
                median_ms, full_ms)};
}

} // namespace

int main() {
    report(1, "gradient check on random networks", gradient_check_random_networks);
    report(2, "training convergence", training_converges);
    report(3, "unseen instance accuracy", unseen_accuracy);
    report(4, "no cross-class errors", no_cross_class_errors);
    report(5, "threshold trade-off", threshold_trend);
    report(6, "reliability vs histogram resolution", reliability_vs_resolution);
    report(7, "adding an output keeps existing outputs", add_output_preserves_existing);
    report(8, "model persistence round trip", persistence_round_trip);
    report(9, "decision stability across init seeds", seed_stability);
    report(10, "classification latency", latency);
    std::printf("%d of 10 checks failed\n", failures);
    return failures == 0 ? 0 : 1;
}
