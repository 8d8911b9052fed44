#include "volclass/cli.hpp"

#include "volclass/errors.hpp"
#include "volclass/histogram.hpp"
#include "volclass/model_store.hpp"
#include "volclass/random.hpp"
#include "volclass/synthgen.hpp"
#include "volclass/volume.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace volclass::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct VolumeArgs {
    std::string path;
    std::string dims;
    std::string type;
    std::string endian;
    std::string spacing;
};

void add_volume_options(CLI::App* cmd, VolumeArgs& args) {
    cmd->add_option("volume", args.path, "Raw voxel file (sidecar <volume>.meta is read when present)")->required();
    cmd->add_option("--dims", args.dims, "Grid size, e.g. 64,64,64");
    cmd->add_option("--type", args.type, "Voxel type: u8, u16, s16, f32");
    cmd->add_option("--endian", args.endian, "little or big");
    cmd->add_option("--spacing", args.spacing, "Voxel spacing, e.g. 1,1,1");
}

Volume load_from_args(const VolumeArgs& args) {
    PartialMeta base;
    const fs::path sidecar = sidecar_path(args.path);
    if (fs::exists(sidecar)) base = read_sidecar(sidecar);
    PartialMeta overrides;
    if (!args.dims.empty()) overrides.dims = parse_dims(args.dims);
    if (!args.type.empty()) overrides.voxel_type = parse_voxel_type(args.type);
    if (!args.endian.empty()) overrides.endian = parse_endian(args.endian);
    if (!args.spacing.empty()) overrides.spacing = parse_spacing(args.spacing);
    const PartialMeta meta = base.merged_with(overrides);
    if (!meta.dims || !meta.voxel_type)
        throw UsageError("volume metadata incomplete for " + args.path + ": pass --dims and --type or provide " +
                         sidecar.string());
    return load_volume(args.path, meta.resolve());
}

struct TrainingArgs {
    TrainingConfig cfg;
    CLI::Option* seed = nullptr;
};

void add_training_options(CLI::App* cmd, TrainingArgs& args) {
    cmd->add_option("--learning-rate", args.cfg.learning_rate, "Back-propagation step size")->capture_default_str();
    cmd->add_option("--momentum", args.cfg.momentum, "Momentum in [0,1)")->capture_default_str();
    cmd->add_option("--max-epochs", args.cfg.max_epochs, "Epoch limit")->capture_default_str();
    cmd->add_option("--mse-target", args.cfg.mse_target, "Stop once MSE falls below this")->capture_default_str();
    args.seed = cmd->add_option("--seed", args.cfg.seed, "Seed for network initialization")->capture_default_str();
}

DecisionPolicy make_policy(bool no_rest_class, const CLI::Option* threshold_opt, double threshold) {
    DecisionPolicy policy;
    policy.use_rest_class = !no_rest_class;
    if (threshold_opt->count() > 0) {
        if (!(threshold >= 0.0 && threshold <= 1.0)) throw UsageError("--threshold must be in [0,1]");
        policy.threshold = threshold;
    }
    return policy;
}

void check_reduction(const ModelState& state, const CLI::Option* opt, unsigned requested) {
    if (opt->count() == 0 || requested == state.reduction_factor) return;
    const std::size_t expected = state.histogram_size();
    const std::size_t got = kDefaultBins >> std::min(requested, 8u);
    throw Error(Errc::ShapeMismatch, "model was trained on " + std::to_string(expected) + "x" +
                                         std::to_string(expected) + " histograms (reduction " +
                                         std::to_string(state.reduction_factor) + "), got reduction " +
                                         std::to_string(requested) + " (" + std::to_string(got) + "x" +
                                         std::to_string(got) + ")");
}

std::string format_double(double v, int precision = 6) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(precision) << v;
    return s.str();
}

int cmd_histogram(const VolumeArgs& vargs, std::size_t bins, unsigned reduce, const std::string& out_path,
                  const std::string& csv_path, std::ostream& out) {
    const Volume volume = load_from_args(vargs);
    const Histogram2D h = downscale(compute_histogram(volume, bins), reduce);
    const fs::path target(out_path);
    if (target.extension() == ".csv")
        export_counts_csv(h, target);
    else
        export_image(h, target);
    if (!csv_path.empty()) export_counts_csv(h, csv_path);
    out << "wrote " << h.size() << "x" << h.size() << " histogram to " << out_path << '\n';
    return kOk;
}

int cmd_train(const std::string& model_path, const VolumeArgs& vargs, const std::string& label,
              const std::string& id_override, bool rest_class, const CLI::Option* reduce_opt, unsigned reduce,
              const std::vector<std::size_t>& hidden, const TrainingArgs& targs, bool as_json, std::ostream& out) {
    targs.cfg.validate();
    const Volume volume = load_from_args(vargs);
    const std::string source_id = id_override.empty() ? fs::path(vargs.path).filename().string() : id_override;

    std::optional<ModelState> loaded;
    bool created = false;
    bool added = false;
    if (fs::exists(model_path)) {
        loaded = load_model(model_path);
        check_reduction(*loaded, reduce_opt, reduce);
    } else {
        loaded = create_model(label, reduce, hidden, targs.cfg.seed, rest_class);
        created = true;
    }
    ModelState& state = *loaded;

    if (const auto idx = state.registry.find(label)) {
        if (rest_class && !state.registry.is_rest(*idx)) {
            if (state.registry.rest_class_index)
                throw Error(Errc::DuplicateClass, "rest class already set to '" +
                                                      state.registry.classes[*state.registry.rest_class_index] + "'");
            state.registry.rest_class_index = *idx;
        }
    } else {
        add_class(state, label, mix_seed(targs.cfg.seed, state.registry.size()), rest_class);
        added = true;
    }

    const std::size_t before = state.samples.size();
    upsert_sample(state, source_id, label, model_input(state, volume));
    const TrainingReport report = retrain(state, targs.cfg);
    save_model(state, model_path);

    if (as_json) {
        json j;
        j["model"] = model_path;
        j["created"] = created;
        j["class_added"] = added;
        j["sample"] = source_id;
        j["label"] = label;
        j["sample_updated"] = state.samples.size() == before;
        j["samples"] = state.samples.size();
        j["classes"] = state.registry.classes;
        j["epochs"] = report.epochs_run;
        j["final_mse"] = report.final_mse;
        j["converged"] = report.converged;
        out << j.dump(2) << '\n';
    } else {
        out << (created ? "created " : "updated ") << model_path << ": " << state.registry.size() << " classes, "
            << state.samples.size() << " samples" << (state.samples.size() == before ? " (sample updated)" : "")
            << '\n'
            << "epochs=" << report.epochs_run << " final_mse=" << format_double(report.final_mse, 6)
            << " converged=" << (report.converged ? "true" : "false") << '\n';
    }
    return kOk;
}

int cmd_classify(const std::string& model_path, const VolumeArgs& vargs, const CLI::Option* reduce_opt,
                 unsigned reduce, const DecisionPolicy& policy, bool as_json, std::ostream& out) {
    const ModelState state = load_model(model_path);
    check_reduction(state, reduce_opt, reduce);
    const Volume volume = load_from_args(vargs);
    const Classification c = classify(state, volume, policy);

    if (as_json) {
        json scores = json::array();
        for (std::size_t i = 0; i < c.scores.size(); ++i)
            scores.push_back({{"class", state.registry.classes[i]}, {"score", c.scores[i]}});
        json j;
        j["volume"] = vargs.path;
        j["scores"] = scores;
        j["chosen"] = c.chosen;
        j["confidence"] = c.confidence;
        j["rejected"] = c.rejected;
        j["rest"] = is_rest_outcome(c, state.registry);
        j["policy"] = {{"rest_class", policy.use_rest_class},
                       {"threshold", policy.threshold ? json(*policy.threshold) : json(nullptr)}};
        out << j.dump(2) << '\n';
        return kOk;
    }

    std::size_t width = 5;
    for (const auto& name : state.registry.classes) width = std::max(width, name.size());
    for (std::size_t i = 0; i < c.scores.size(); ++i) {
        out << "  " << std::left << std::setw(static_cast<int>(width)) << state.registry.classes[i] << std::right
            << "  " << format_double(c.scores[i]) << (state.registry.is_rest(i) ? "  (rest class)" : "") << '\n';
    }
    out << "chosen=" << c.chosen << " confidence=" << format_double(c.confidence)
        << " rejected=" << (c.rejected ? "true" : "false") << '\n';
    return kOk;
}

int cmd_classes(const std::string& model_path, bool as_json, std::ostream& out) {
    const ModelState state = load_model(model_path);
    std::vector<std::size_t> per_class(state.registry.size(), 0);
    for (const auto& s : state.samples)
        if (const auto idx = state.registry.find(s.label)) ++per_class[*idx];

    if (as_json) {
        json classes = json::array();
        for (std::size_t i = 0; i < state.registry.size(); ++i)
            classes.push_back({{"name", state.registry.classes[i]},
                               {"rest", state.registry.is_rest(i)},
                               {"samples", per_class[i]}});
        json j;
        j["reduction_factor"] = state.reduction_factor;
        j["layer_sizes"] = state.network.layer_sizes();
        j["classes"] = classes;
        out << j.dump(2) << '\n';
        return kOk;
    }
    out << "reduction factor " << state.reduction_factor << " (" << state.histogram_size() << "x"
        << state.histogram_size() << "), layers";
    for (std::size_t n : state.network.layer_sizes()) out << ' ' << n;
    out << '\n';
    for (std::size_t i = 0; i < state.registry.size(); ++i)
        out << i << '\t' << state.registry.classes[i] << '\t' << per_class[i] << " samples"
            << (state.registry.is_rest(i) ? "\t(rest class)" : "") << '\n';
    return kOk;
}

std::vector<std::optional<double>> parse_threshold_grid(const std::string& text) {
    std::vector<std::optional<double>> grid;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        if (item == "none") {
            grid.emplace_back();
            continue;
        }
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || !(v >= 0.0 && v <= 1.0)) throw UsageError("bad threshold '" + item + "'");
        grid.emplace_back(v);
    }
    if (grid.empty()) throw UsageError("threshold grid is empty");
    return grid;
}

int cmd_eval(const std::string& model_path, const std::string& corpus_dir, const std::string& thresholds,
             bool no_rest_class, const std::string& csv_path, bool show_matrix, std::ostream& out) {
    const ModelState state = load_model(model_path);
    const auto grid = parse_threshold_grid(thresholds);
    const auto corpus = read_corpus(corpus_dir);
    if (corpus.empty()) throw UsageError("corpus " + corpus_dir + " has no volumes");
    const auto prepared = prepare_corpus(state, corpus);

    std::vector<DecisionPolicy> policies;
    for (const auto& t : grid) policies.push_back({!no_rest_class, t});
    const auto rows = evaluate_grid(state, prepared, policies);

    write_report_table(rows, out);
    if (show_matrix) {
        for (const auto& r : rows) {
            out << '\n' << r.policy.describe() << '\n';
            write_confusion_matrix(r.report, out);
        }
    }
    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) throw Error(Errc::IoFailure, "cannot write " + csv_path);
        write_report_csv(rows, csv);
        if (!csv) throw Error(Errc::IoFailure, "write failed for " + csv_path);
    }
    return kOk;
}

int cmd_synth(const std::string& out_dir, const std::string& families_text, std::size_t count, std::size_t size,
              double jitter, std::uint64_t seed, std::size_t first_index, std::ostream& out) {
    std::vector<Family> families;
    std::string item;
    std::istringstream in(families_text);
    while (std::getline(in, item, ','))
        if (!item.empty()) families.push_back(parse_family(item));
    if (families.empty()) throw UsageError("no families given");
    if (count == 0) throw UsageError("--count must be at least 1");

    const auto corpus = make_corpus(families, count, size, jitter, seed, first_index);
    write_corpus(out_dir, corpus);
    out << "wrote " << corpus.size() << " volumes to " << out_dir << '\n';
    return kOk;
}

} // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Classify 3D scalar volumes from their intensity/gradient histograms", "volclass"};
    app.require_subcommand(1);

    // histogram
    auto* hist = app.add_subcommand("histogram", "Compute a 2D histogram and write it as PGM or CSV");
    VolumeArgs hist_volume;
    std::size_t hist_bins = kDefaultBins;
    unsigned hist_reduce = 0;
    std::string hist_out, hist_csv;
    add_volume_options(hist, hist_volume);
    hist->add_option("--bins", hist_bins, "Bins per axis before reduction")->capture_default_str();
    hist->add_option("--reduce", hist_reduce, "Power-of-two reduction factor")->capture_default_str();
    hist->add_option("--out", hist_out, "Output file (.pgm image, or .csv counts)")->required();
    hist->add_option("--csv", hist_csv, "Also write raw counts as CSV");

    // train
    auto* trn = app.add_subcommand("train", "Add a labelled volume to a model and retrain on all samples");
    std::string trn_model, trn_label, trn_id;
    VolumeArgs trn_volume;
    bool trn_rest = false, trn_json = false;
    unsigned trn_reduce = kDefaultReduction;
    std::vector<std::size_t> trn_hidden{kDefaultHidden};
    TrainingArgs trn_args;
    trn->add_option("--model", trn_model, "Model file (created when missing)")->required();
    add_volume_options(trn, trn_volume);
    trn->add_option("--label", trn_label, "Class name for this volume")->required();
    trn->add_option("--id", trn_id, "Sample identity (default: volume file name)");
    trn->add_flag("--rest-class", trn_rest, "Mark the label as the rest class");
    auto* trn_reduce_opt =
        trn->add_option("--reduce", trn_reduce, "Reduction factor for a new model")->capture_default_str();
    trn->add_option("--hidden", trn_hidden, "Hidden layer sizes for a new model, e.g. 64 or 64,32")
        ->delimiter(',')
        ->capture_default_str();
    add_training_options(trn, trn_args);
    trn->add_flag("--json", trn_json, "Machine-readable output");

    // classify
    auto* cls = app.add_subcommand("classify", "Classify a volume");
    std::string cls_model;
    VolumeArgs cls_volume;
    unsigned cls_reduce = kDefaultReduction;
    double cls_threshold = 0.0;
    bool cls_no_rest = false, cls_json = false;
    cls->add_option("--model", cls_model, "Model file")->required();
    add_volume_options(cls, cls_volume);
    auto* cls_reduce_opt = cls->add_option("--reduce", cls_reduce, "Expected reduction factor");
    auto* cls_threshold_opt = cls->add_option("--threshold", cls_threshold, "Reject when the maximum output is below");
    cls->add_flag("--no-rest-class", cls_no_rest, "Send rejections to the generic rest outcome");
    cls->add_flag("--json", cls_json, "Machine-readable output");

    // classes
    auto* lst = app.add_subcommand("classes", "List the classes of a model");
    std::string lst_model;
    bool lst_json = false;
    lst->add_option("--model", lst_model, "Model file")->required();
    lst->add_flag("--json", lst_json, "Machine-readable output");

    // eval
    auto* ev = app.add_subcommand("eval", "Evaluate a model on a labelled corpus over a threshold grid");
    std::string ev_model, ev_corpus, ev_thresholds = "none,0.5,0.7,0.9", ev_csv;
    bool ev_no_rest = false, ev_matrix = false;
    ev->add_option("--model", ev_model, "Model file")->required();
    ev->add_option("--corpus", ev_corpus, "Directory with manifest.csv")->required();
    ev->add_option("--thresholds", ev_thresholds, "Comma-separated thresholds, 'none' for no threshold")
        ->capture_default_str();
    ev->add_flag("--no-rest-class", ev_no_rest, "Send rejections to the generic rest outcome");
    ev->add_option("--csv", ev_csv, "Write the report as CSV");
    ev->add_flag("--matrix", ev_matrix, "Print the confusion matrix of every policy");

    // synth
    auto* syn = app.add_subcommand("synth", "Generate a synthetic labelled corpus");
    std::string syn_out, syn_families = "blob,shell,ramp,noise,checker";
    std::size_t syn_count = 10, syn_size = 64, syn_first = 0;
    double syn_jitter = 0.3;
    std::uint64_t syn_seed = 1;
    syn->add_option("--out", syn_out, "Output directory")->required();
    syn->add_option("--families", syn_families, "Comma-separated families")->capture_default_str();
    syn->add_option("--count", syn_count, "Instances per family")->capture_default_str();
    syn->add_option("--size", syn_size, "Cube edge length in voxels")->capture_default_str();
    syn->add_option("--jitter", syn_jitter, "Per-instance parameter perturbation in [0,1]")->capture_default_str();
    syn->add_option("--seed", syn_seed, "Corpus seed")->capture_default_str();
    syn->add_option("--first-index", syn_first, "Index of the first instance")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsage;
    }

    try {
        if (hist->parsed()) return cmd_histogram(hist_volume, hist_bins, hist_reduce, hist_out, hist_csv, out);
        if (trn->parsed())
            return cmd_train(trn_model, trn_volume, trn_label, trn_id, trn_rest, trn_reduce_opt, trn_reduce,
                             trn_hidden, trn_args, trn_json, out);
        if (cls->parsed())
            return cmd_classify(cls_model, cls_volume, cls_reduce_opt, cls_reduce,
                                make_policy(cls_no_rest, cls_threshold_opt, cls_threshold), cls_json, out);
        if (lst->parsed()) return cmd_classes(lst_model, lst_json, out);
        if (ev->parsed()) return cmd_eval(ev_model, ev_corpus, ev_thresholds, ev_no_rest, ev_csv, ev_matrix, out);
        if (syn->parsed())
            return cmd_synth(syn_out, syn_families, syn_count, syn_size, syn_jitter, syn_seed, syn_first, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<std::string> copy = args;
    std::vector<char*> argv;
    for (auto& a : copy) argv.push_back(a.data());
    argv.push_back(nullptr);
    return run(static_cast<int>(copy.size()), argv.data(), out, err);
}

} // namespace volclass::cli
