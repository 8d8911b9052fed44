#include "test_helpers.hpp"

#include "volclass/errors.hpp"
#include "volclass/random.hpp"
#include "volclass/synthgen.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace volclass;

namespace {

bool same_voxels(const Volume& a, const Volume& b) {
    return a.dims() == b.dims() && std::equal(a.voxels().begin(), a.voxels().end(), b.voxels().begin());
}

Histogram2D hist32(const Volume& v) { return downscale(compute_histogram(v, 256), 3); }

// One instance per family in `train` families, trained on a 16x16 input.
ModelState trained_model(std::uint64_t seed, std::size_t size = 32) {
    const Family fams[] = {Family::Blob, Family::Shell, Family::Ramp, Family::Noise};
    const auto corpus = make_corpus(fams, 1, size, 0.3, 100);
    const std::size_t hidden[] = {32};
    ModelState s = create_model("blob", 4, hidden, seed);
    add_class(s, "shell", mix_seed(seed, 1));
    add_class(s, "ramp", mix_seed(seed, 2));
    add_class(s, "misc", mix_seed(seed, 3), true);
    for (const auto& item : corpus)
        upsert_sample(s, item.source_id, item.label == kRestOutcome ? "misc" : item.label,
                      model_input(s, item.volume));
    retrain(s, TrainingConfig{});
    return s;
}

} // namespace

TEST_CASE("generation is deterministic") {
    for (Family f : {Family::Blob, Family::Shell, Family::Ramp, Family::Noise, Family::Checker}) {
        const FamilySpec spec{f, 16, 0.5, 9};
        CHECK(same_voxels(generate_instance(spec, 3), generate_instance(spec, 3)));
        CHECK_FALSE(same_voxels(generate_instance(spec, 3), generate_instance(spec, 4)));
    }
}

TEST_CASE("zero jitter makes every instance identical") {
    const FamilySpec spec{Family::Blob, 16, 0.0, 1};
    const auto vols = generate(spec, 3);
    REQUIRE(vols.size() == 3);
    CHECK(same_voxels(vols[0], vols[1]));
    CHECK(same_voxels(vols[0], vols[2]));
}

TEST_CASE("blob and shell histograms differ") {
    const Volume blob = generate_instance({Family::Blob, 64, 0.3, 1}, 0);
    const Volume shell = generate_instance({Family::Shell, 64, 0.3, 1}, 0);
    const auto hb = hist32(blob);
    const auto hs = hist32(shell);
    std::size_t differing = 0;
    for (std::size_t i = 0; i < hb.values().size(); ++i)
        if (std::abs(hb.values()[i] - hs.values()[i]) > 0.1f) ++differing;
    CHECK(differing >= hb.values().size() / 10);
}

TEST_CASE("family names and spec validation") {
    CHECK(parse_family("checker") == Family::Checker);
    CHECK(to_string(Family::Shell) == "shell");
    CHECK(is_rest_family(Family::Noise));
    CHECK_FALSE(is_rest_family(Family::Ramp));
    CHECK_THROWS_AS(parse_family("torus"), Error);
    CHECK_THROWS_AS(generate_instance({Family::Blob, 4, 0.3, 1}, 0), Error);
    CHECK_THROWS_AS(generate_instance({Family::Blob, 16, 1.5, 1}, 0), Error);
}

TEST_CASE("corpus labels and ids") {
    const Family fams[] = {Family::Ramp, Family::Checker};
    const auto corpus = make_corpus(fams, 2, 8, 0.3, 5, 10);
    REQUIRE(corpus.size() == 4);
    CHECK(corpus[0].source_id == "ramp_10");
    CHECK(corpus[0].label == "ramp");
    CHECK(corpus[3].source_id == "checker_11");
    CHECK(corpus[3].label == kRestOutcome);
}

TEST_CASE("corpus files round-trip") {
    testing::TempDir dir("corpus");
    const Family fams[] = {Family::Blob, Family::Noise};
    const auto corpus = make_corpus(fams, 2, 8, 0.3, 5);
    write_corpus(dir.path(), corpus);
    CHECK(std::filesystem::exists(dir / "manifest.csv"));
    const auto back = read_corpus(dir.path());
    REQUIRE(back.size() == corpus.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].source_id == corpus[i].source_id);
        CHECK(back[i].label == corpus[i].label);
        // stored as float-32
        for (std::size_t k = 0; k < corpus[i].volume.size(); ++k)
            REQUIRE(back[i].volume.voxels()[k] == double(float(corpus[i].volume.voxels()[k])));
    }
}

TEST_CASE("evaluation on the training volumes is perfect") {
    const ModelState s = trained_model(1);
    const Family fams[] = {Family::Blob, Family::Shell, Family::Ramp, Family::Noise};
    const auto corpus = make_corpus(fams, 1, 32, 0.3, 100);
    const ConfusionReport r = evaluate(s, std::span<const LabeledVolume>(corpus), DecisionPolicy{});
    CHECK(r.categories == std::vector<std::string>{"blob", "shell", "ramp", "misc"});
    CHECK(r.misclassified() == 0);
    CHECK(r.total() == 4);
    CHECK(r.some_to_rest + r.rest_to_some + r.some_to_other_some == 0);
    CHECK(r.mean_confidence > 0.5);
}

TEST_CASE("report bookkeeping over a threshold grid") {
    const ModelState s = trained_model(2);
    auto corpus = make_corpus(kWellDefinedFamilies, 4, 32, 0.3, 100, 1);
    auto rest = make_corpus(kRestFamilies, 4, 32, 0.3, 100, 1);
    corpus.insert(corpus.end(), rest.begin(), rest.end());
    const auto prepared = prepare_corpus(s, corpus);

    const std::vector<DecisionPolicy> grid{{true, std::nullopt}, {true, 0.5}, {true, 0.7}, {true, 0.9}};
    const auto rows = evaluate_grid(s, prepared, grid);
    for (const auto& row : rows) {
        // each truth row holds exactly that category's corpus share
        for (std::size_t i = 0; i < row.report.matrix.size(); ++i) {
            std::size_t sum = 0;
            for (std::size_t c : row.report.matrix[i]) sum += c;
            CHECK(sum == (i == row.report.rest_category() ? 8u : 4u));
        }
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].report.some_to_rest >= rows[i - 1].report.some_to_rest);
        CHECK(rows[i].report.rest_to_some <= rows[i - 1].report.rest_to_some);
    }
    // Same inputs, same answers.
    const auto again = evaluate_grid(s, prepared, grid);
    std::ostringstream a, b;
    write_report_csv(rows, a);
    write_report_csv(again, b);
    CHECK(a.str() == b.str());

    std::ostringstream table, matrix;
    write_report_table(rows, table);
    write_confusion_matrix(rows[0].report, matrix);
    CHECK(table.str().find("rc,threshold=0.9") != std::string::npos);
    CHECK(matrix.str().find("misc") != std::string::npos);
}

TEST_CASE("evaluation errors") {
    const ModelState s = trained_model(3);
    CHECK_THROWS_AS(evaluate(s, std::span<const PreparedSample>(), DecisionPolicy{}), Error);
    const std::vector<PreparedSample> unknown{{"x", "torus", std::vector<float>(256, 0.0f)}};
    try {
        evaluate(s, unknown, DecisionPolicy{});
        FAIL("expected UnknownLabel");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::UnknownLabel);
    }
    const std::vector<PreparedSample> wrong_size{{"x", "blob", std::vector<float>(1024, 0.0f)}};
    try {
        evaluate(s, wrong_size, DecisionPolicy{});
        FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ShapeMismatch);
    }
}
