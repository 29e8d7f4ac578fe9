// ascn — adaptive structural convolution networks for 3D point clouds.
//
// Subcommands: datagen, analyze, train, eval, infer, crossdomain.
// Exit codes (uniform across commands):
//   0 success
//   2 bad arguments or configuration
//   3 I/O failure (missing/corrupt files, unwritable outputs)
//   4 numerical failure (training diverged, non-finite values)
//   5 class-count mismatch between model and dataset
//   6 degenerate point cloud (too small to run the network)
// The ASCN_LOG environment variable ({error,warn,info,debug}) controls
// diagnostic verbosity on stderr; stdout carries only command output.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ascn/adaptive.hpp"
#include "ascn/cloud_io.hpp"
#include "ascn/error.hpp"
#include "ascn/experiment.hpp"
#include "ascn/log.hpp"
#include "ascn/model.hpp"
#include "ascn/synthetic.hpp"
#include "ascn/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ascn;

namespace {

constexpr int kExitBadArgs = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitClassMismatch = 5;
constexpr int kExitDegenerate = 6;

// Shortest round-trip form, same convention as the cloud files.
std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in.good()) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return j;
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out.good()) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out.good()) throw IoError("failed to write " + path.string());
}

// ---------------------------------------------------------------------------
// Partial-config handling: config files may state any subset of the model
// fields; everything else keeps its default. Unknown keys are rejected so
// typos fail loudly instead of silently training the wrong architecture.

void apply_model_overrides(ModelConfig& cfg, const json& j) {
    if (!j.is_object()) throw ConfigError("model config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "channels")
            value.get_to(cfg.channels);
        else if (key == "supports")
            value.get_to(cfg.supports);
        else if (key == "pool_rate")
            value.get_to(cfg.pool_rate);
        else if (key == "classifier_hidden")
            value.get_to(cfg.classifier_hidden);
        else if (key == "classes")
            value.get_to(cfg.classes);
        else if (key == "class_names")
            value.get_to(cfg.class_names);
        else if (key == "m_min")
            value.get_to(cfg.adaptive.m_min);
        else if (key == "m_max")
            value.get_to(cfg.adaptive.m_max);
        else if (key == "fixed_m")
            value.get_to(cfg.fixed_m);
        else if (key == "init_seed")
            value.get_to(cfg.init_seed);
        else if (key == "mode") {
            const std::string mode = value.get<std::string>();
            if (mode == "full")
                cfg.mode = ConvMode::full;
            else if (mode == "dir_only")
                cfg.mode = ConvMode::dir_only;
            else
                throw ConfigError("unknown convolution mode: " + mode);
        } else {
            throw ConfigError("unknown model config key: " + key);
        }
    }
}

// Thrown instead of an ascn error so the exit-code mapping can single it out.
struct ClassMismatchSignal {
    int model_classes;
    int data_classes;
};

[[noreturn]] void throw_class_mismatch(int model_classes, int data_classes) {
    throw ClassMismatchSignal{model_classes, data_classes};
}

// Adopt the dataset's class layout when the config leaves it open; an
// explicit but contradictory count is the one error with its own exit code.
void reconcile_classes(ModelConfig& cfg, const Dataset& ds) {
    if (cfg.classes == 0) {
        cfg.classes = ds.num_classes();
        if (cfg.class_names.empty()) cfg.class_names = ds.class_names;
    } else if (cfg.classes != ds.num_classes()) {
        throw_class_mismatch(cfg.classes, ds.num_classes());
    }
}

// ---------------------------------------------------------------------------
// Generator spec: {"classes": [{"name", "kind", "count", "points", "noise",
// "scale"}, ...]} where points/noise/scale are a scalar or a [lo, hi] pair.

template <typename T>
std::pair<T, T> parse_span(const json& j, const char* field) {
    if (j.is_array()) {
        if (j.size() != 2) throw ConfigError(std::string(field) + " range needs [lo, hi]");
        return {j[0].get<T>(), j[1].get<T>()};
    }
    const T v = j.get<T>();
    return {v, v};
}

DatasetSpec parse_dataset_spec(const json& j) {
    if (!j.is_object() || !j.contains("classes"))
        throw ConfigError("generator spec needs a \"classes\" array");
    DatasetSpec spec;
    for (const json& jc : j.at("classes")) {
        ClassSpec c;
        c.name = jc.at("name").get<std::string>();
        c.kind = shape_kind_from_name(jc.contains("kind") ? jc.at("kind").get<std::string>()
                                                          : c.name);
        c.count = jc.value("count", 1);
        if (jc.contains("points")) std::tie(c.points_min, c.points_max) =
            parse_span<int>(jc.at("points"), "points");
        if (jc.contains("noise")) std::tie(c.noise_min, c.noise_max) =
            parse_span<double>(jc.at("noise"), "noise");
        if (jc.contains("scale")) std::tie(c.scale_min, c.scale_max) =
            parse_span<double>(jc.at("scale"), "scale");
        spec.classes.push_back(std::move(c));
    }
    return spec;
}

DatasetSpec default_dataset_spec(int count) {
    DatasetSpec spec;
    spec.classes = {
        ClassSpec{"line", ShapeKind::line, count, 280, 320, 0.01, 0.03, 1.5, 2.5},
        ClassSpec{"plane", ShapeKind::plane, count, 280, 320, 0.01, 0.03, 1.5, 2.5},
        ClassSpec{"sphere", ShapeKind::sphere, count, 280, 320, 0.01, 0.03, 0.8, 1.2},
    };
    return spec;
}

// ---------------------------------------------------------------------------
// Command option bags.

struct CommonOpts {
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::string config;
    std::string out;
    int workers = 1;
    std::string format = "text";

    bool json_out() const { return format == "json"; }
};

struct DatagenOpts {
    CommonOpts common;
    int count = 20;
    int decimate = 0;
    std::uint64_t decimate_seed = 1;
    bool no_rings = false;
};

struct AnalyzeOpts {
    CommonOpts common;
    std::string cloud_path;
    int m_min = 3;
    int m_max = 10;
};

struct TrainOpts {
    CommonOpts common;
    std::string data_dir;
    std::string log_path;
    int epochs = 50;
    double lr = 1e-3;
    std::string mode;
    int fixed_m = -1;
};

struct EvalOpts {
    CommonOpts common;
    std::string model_path;
    std::string data_dir;
    std::uint64_t pool_salt = 0;
};

struct InferOpts {
    CommonOpts common;
    std::string model_path;
    std::string cloud_path;
    std::uint64_t pool_salt = 0;
};

struct CrossOpts {
    CommonOpts common;
};

// ---------------------------------------------------------------------------

int cmd_datagen(const DatagenOpts& opt) {
    if (opt.common.out.empty()) throw ConfigError("datagen needs --out");
    DatasetSpec spec = opt.common.config.empty()
                           ? default_dataset_spec(opt.count)
                           : parse_dataset_spec(read_json_file(opt.common.config));
    Dataset ds = generate_dataset(spec, opt.common.seed);
    if (opt.no_rings)
        for (LabeledCloud& item : ds.items) item.cloud.ring.clear();
    save_dataset(ds, opt.common.out);

    json report;
    report["out"] = opt.common.out;
    report["items"] = ds.items.size();
    report["classes"] = ds.class_names;
    if (opt.decimate > 1) {
        const Dataset thin = decimate_dataset(ds, opt.decimate, opt.decimate_seed);
        const fs::path thin_dir = fs::path(opt.common.out) / ("x" + std::to_string(opt.decimate));
        save_dataset(thin, thin_dir);
        report["decimated_out"] = thin_dir.string();
        report["keep_every"] = opt.decimate;
    }
    if (opt.common.json_out()) {
        std::printf("%s\n", report.dump().c_str());
    } else {
        std::printf("wrote %zu clouds (%zu classes) to %s\n", ds.items.size(),
                    ds.class_names.size(), opt.common.out.c_str());
        if (opt.decimate > 1)
            std::printf("wrote %d-fold decimated companion to %s\n", opt.decimate,
                        report["decimated_out"].get<std::string>().c_str());
    }
    return 0;
}

int cmd_analyze(const AnalyzeOpts& opt) {
    const PointCloud cloud = load_cloud(opt.cloud_path);
    const AdaptiveConfig cfg{opt.m_min, opt.m_max};
    if (cfg.m_min < 2 || cfg.m_min > cfg.m_max)
        throw ConfigError("neighborhood search range is invalid");
    const SpatialIndex index(cloud);

    const int span = cfg.m_max - cfg.m_min + 1;
    std::string csv = "point_index,M_star";
    for (int m = cfg.m_min; m <= cfg.m_max; ++m) csv += ",entropy_M" + std::to_string(m);
    csv += "\n";
    json rows = json::array();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const NeighborhoodChoice pick = optimal_neighborhood(index, static_cast<int>(i), cfg);
        csv += std::to_string(i) + "," + std::to_string(pick.m_star);
        json row;
        row["point_index"] = i;
        row["M_star"] = pick.m_star;
        json ent = json::array();
        for (int k = 0; k < span; ++k) {
            const double e = k < static_cast<int>(pick.entropies.size())
                                 ? pick.entropies[static_cast<std::size_t>(k)]
                                 : std::nan("");
            csv += "," + fmt_double(e);
            if (std::isfinite(e))
                ent.push_back(e);
            else
                ent.push_back(nullptr);
        }
        row["entropies"] = std::move(ent);
        rows.push_back(std::move(row));
        csv += "\n";
    }

    if (!opt.common.out.empty()) write_text_file(opt.common.out, csv);
    if (opt.common.json_out()) {
        json report;
        report["m_min"] = cfg.m_min;
        report["m_max"] = cfg.m_max;
        report["points"] = std::move(rows);
        std::printf("%s\n", report.dump().c_str());
    } else if (opt.common.out.empty()) {
        std::fputs(csv.c_str(), stdout);
    } else {
        std::printf("wrote %zu rows to %s\n", cloud.size(), opt.common.out.c_str());
    }
    return 0;
}

int cmd_train(const TrainOpts& opt) {
    if (opt.common.out.empty()) throw ConfigError("train needs --out (model file path)");
    const Dataset data = load_dataset(opt.data_dir);

    ModelConfig mc;
    mc.classes = 0;  // filled from the dataset unless the config pins it
    if (!opt.common.config.empty()) apply_model_overrides(mc, read_json_file(opt.common.config));
    if (!opt.mode.empty()) {
        if (opt.mode == "full")
            mc.mode = ConvMode::full;
        else if (opt.mode == "dir_only")
            mc.mode = ConvMode::dir_only;
        else
            throw ConfigError("unknown convolution mode: " + opt.mode);
    }
    if (opt.fixed_m >= 0) mc.fixed_m = opt.fixed_m;
    reconcile_classes(mc, data);
    if (opt.common.seed_given) mc.init_seed = opt.common.seed;
    Model model = build_model(mc);

    TrainConfig tc;
    tc.epochs = opt.epochs;
    tc.lr = opt.lr;
    tc.seed = opt.common.seed;
    tc.log_path = opt.log_path.empty() ? opt.common.out + ".log.jsonl" : opt.log_path;

    Adam adam(AdamConfig{opt.lr, 0.9, 0.999, 1e-8});
    const TrainResult result = train_model(model, data, tc, adam);
    if (result.diverged) {
        std::fprintf(stderr, "training diverged (non-finite loss or gradient)\n");
        return kExitNumerical;
    }
    save_model(opt.common.out, model);

    const EpochStats& last = result.history.back();
    if (opt.common.json_out()) {
        json report;
        report["model"] = opt.common.out;
        report["log"] = tc.log_path;
        report["epochs"] = result.history.size();
        report["final_loss"] = last.loss;
        report["final_train_acc"] = last.train_acc;
        report["skipped"] = result.skipped;
        std::printf("%s\n", report.dump().c_str());
    } else {
        std::printf("trained %zu epochs: loss %.6f, train accuracy %.1f%%\n",
                    result.history.size(), last.loss, 100.0 * last.train_acc);
        std::printf("model: %s\nlog: %s\n", opt.common.out.c_str(), tc.log_path.c_str());
    }
    return 0;
}

json eval_report(const EvalResult& r, const std::vector<std::string>& names) {
    json report;
    report["accuracy"] = std::round(r.percent() * 10.0) / 10.0;  // printed precision
    report["correct"] = r.correct;
    report["total"] = r.total;
    report["skipped"] = r.skipped;
    report["class_names"] = names;
    report["confusion"] = r.confusion;
    return report;
}

void print_confusion(const EvalResult& r, const std::vector<std::string>& names) {
    std::printf("confusion (row = truth, column = prediction):\n");
    for (std::size_t t = 0; t < r.confusion.size(); ++t) {
        const std::string label = t < names.size() ? names[t] : std::to_string(t);
        std::printf("  %-10s", label.c_str());
        for (int v : r.confusion[t]) std::printf(" %5d", v);
        std::printf("\n");
    }
}

int cmd_eval(const EvalOpts& opt) {
    const Model model = load_model(opt.model_path);
    const Dataset data = load_dataset(opt.data_dir);
    if (model.config.classes != data.num_classes())
        throw_class_mismatch(model.config.classes, data.num_classes());

    const EvalResult r = evaluate(model, data, opt.pool_salt, opt.common.workers);
    const std::vector<std::string>& names =
        model.config.class_names.empty() ? data.class_names : model.config.class_names;
    const json report = eval_report(r, names);
    if (!opt.common.out.empty()) write_text_file(opt.common.out, report.dump(2) + "\n");

    if (opt.common.json_out()) {
        std::printf("%s\n", report.dump().c_str());
    } else {
        std::printf("Accuracy: %.1f%% (%d/%d", report["accuracy"].get<double>(), r.correct,
                    r.total);
        if (r.skipped > 0) std::printf(", %d skipped", r.skipped);
        std::printf(")\n");
        print_confusion(r, names);
    }
    return 0;
}

int cmd_infer(const InferOpts& opt) {
    const Model model = load_model(opt.model_path);
    const PointCloud cloud = load_cloud(opt.cloud_path);
    const std::vector<double> logits = forward_cloud(model, cloud, opt.pool_salt);
    const std::vector<double> scores = softmax(logits);
    const int pick = argmax_lowest(logits);
    const auto class_name = [&](int c) {
        return model.config.class_names.empty() ? std::to_string(c)
                                                : model.config.class_names[static_cast<std::size_t>(c)];
    };

    if (opt.common.json_out()) {
        json report;
        report["class_index"] = pick;
        report["class_name"] = class_name(pick);
        for (std::size_t c = 0; c < scores.size(); ++c)
            report["scores"][class_name(static_cast<int>(c))] = scores[c];
        std::printf("%s\n", report.dump().c_str());
    } else {
        std::printf("class: %s\n", class_name(pick).c_str());
        for (std::size_t c = 0; c < scores.size(); ++c)
            std::printf("  %-10s %.6f\n", class_name(static_cast<int>(c)).c_str(), scores[c]);
    }
    return 0;
}

// Experiment spec: {"train": dir, "tests": [{"name", "path", "decimate"?,
// "decimate_seed"?}], "model": object-or-path, "epochs", "lr", "seeds"}.
int cmd_crossdomain(const CrossOpts& opt) {
    if (opt.common.config.empty()) throw ConfigError("crossdomain needs --config (experiment spec)");
    const json j = read_json_file(opt.common.config);
    if (!j.contains("train") || !j.contains("tests"))
        throw ConfigError("experiment spec needs \"train\" and \"tests\"");
    if (j.at("tests").empty()) throw ConfigError("experiment spec needs at least one test set");

    // Fail fast: every referenced dataset must be resolvable before the
    // first (expensive) training run starts.
    const fs::path train_dir = j.at("train").get<std::string>();
    std::vector<std::pair<std::string, fs::path>> test_dirs;
    std::vector<int> test_decimate;
    std::vector<std::uint64_t> test_decimate_seed;
    for (const json& jt : j.at("tests")) {
        test_dirs.emplace_back(jt.at("name").get<std::string>(),
                               fs::path(jt.at("path").get<std::string>()));
        test_decimate.push_back(jt.value("decimate", 0));
        test_decimate_seed.push_back(jt.value("decimate_seed", std::uint64_t{1}));
    }
    for (const auto& [name, dir] : test_dirs)
        if (!fs::exists(dir / "manifest.json"))
            throw IoError("test set '" + name + "' not found at " + dir.string());
    if (!fs::exists(train_dir / "manifest.json"))
        throw IoError("train set not found at " + train_dir.string());

    const Dataset train_set = load_dataset(train_dir);
    std::vector<std::pair<std::string, Dataset>> tests;
    for (std::size_t i = 0; i < test_dirs.size(); ++i) {
        Dataset d = load_dataset(test_dirs[i].second);
        if (test_decimate[static_cast<std::size_t>(i)] > 1)
            d = decimate_dataset(d, test_decimate[i], test_decimate_seed[i]);
        if (d.num_classes() != train_set.num_classes())
            throw_class_mismatch(train_set.num_classes(), d.num_classes());
        tests.emplace_back(test_dirs[i].first, std::move(d));
    }

    ExperimentSpec spec;
    spec.base.classes = 0;
    if (j.contains("model")) {
        const json jm = j.at("model").is_string()
                            ? read_json_file(j.at("model").get<std::string>())
                            : j.at("model");
        apply_model_overrides(spec.base, jm);
    }
    reconcile_classes(spec.base, train_set);
    spec.schedule.epochs = j.value("epochs", 20);
    spec.schedule.lr = j.value("lr", 1e-3);
    spec.seeds = j.value("seeds", std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    if (opt.common.seed_given) spec.seeds = {opt.common.seed};

    const ExperimentResult result = run_experiment(spec, train_set, tests);
    const std::string md = experiment_markdown(result);
    const json jr = experiment_json(result);
    if (!opt.common.out.empty()) {
        write_text_file(fs::path(opt.common.out) / "results.md", md);
        write_text_file(fs::path(opt.common.out) / "results.json", jr.dump(2) + "\n");
    }
    if (opt.common.json_out())
        std::printf("%s\n", jr.dump().c_str());
    else
        std::fputs(md.c_str(), stdout);
    return 0;
}

// ---------------------------------------------------------------------------
// Error-to-exit-code mapping, shared by every command.

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ClassMismatchSignal& s) {
        std::fprintf(stderr, "error: model expects %d classes but the dataset has %d\n",
                     s.model_classes, s.data_classes);
        return kExitClassMismatch;
    } catch (const DegenerateCloud& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDegenerate;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const CorruptModel& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const VersionError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const Error& e) {  // ConfigError, InvalidParam, DimensionMismatch, ...
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadArgs;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--seed", c.seed, "Seed for all randomness in this command")
        ->each([&c](const std::string&) { c.seed_given = true; });
    cmd->add_option("--config", c.config, "JSON configuration file");
    cmd->add_option("--out", c.out, "Output path (file or directory, command-specific)");
    cmd->add_option("--workers", c.workers, "Evaluation worker threads")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--format", c.format, "Report format")
        ->check(CLI::IsMember({"text", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive structural convolution networks for 3D point clouds"};
    app.require_subcommand(1);

    DatagenOpts dg;
    CLI::App* datagen = app.add_subcommand(
        "datagen", "Generate a labeled synthetic dataset (and optional decimated companion)");
    add_common(datagen, dg.common);
    datagen->add_option("--count", dg.count, "Clouds per class for the built-in generator");
    datagen->add_option("--decimate", dg.decimate,
                        "Also write a 1-in-K density-reduced companion under <out>/xK");
    datagen->add_option("--decimate-seed", dg.decimate_seed,
                        "Seed for ring-free random decimation");
    datagen->add_flag("--no-rings", dg.no_rings,
                      "Drop the synthetic scan-ring column; density cuts then use a "
                      "seeded random subset instead of a scanline cut");

    AnalyzeOpts an;
    CLI::App* analyze = app.add_subcommand(
        "analyze", "Per-point neighborhood-size selection report (CSV, one row per point)");
    add_common(analyze, an.common);
    analyze->add_option("cloud", an.cloud_path, "Point cloud file (.csv or .ply)")->required();
    analyze->add_option("--m-min", an.m_min, "Smallest neighbor count to consider");
    analyze->add_option("--m-max", an.m_max, "Largest neighbor count to consider");

    TrainOpts tr;
    CLI::App* train = app.add_subcommand("train", "Train a classifier on a dataset directory");
    add_common(train, tr.common);
    train->add_option("data", tr.data_dir, "Dataset directory (manifest.json + clouds)")
        ->required();
    train->add_option("--epochs", tr.epochs, "Training epochs")->check(CLI::PositiveNumber);
    train->add_option("--lr", tr.lr, "Adam learning rate");
    train->add_option("--log", tr.log_path, "JSON-lines progress log (default <out>.log.jsonl)");
    train->add_option("--mode", tr.mode, "Kernel mode override")
        ->check(CLI::IsMember({"full", "dir_only"}));
    train->add_option("--fixed-m", tr.fixed_m,
                      "Pin every neighborhood to this size instead of the adaptive search");

    EvalOpts ev;
    CLI::App* eval = app.add_subcommand("eval", "Score a model against a labeled dataset");
    add_common(eval, ev.common);
    eval->add_option("model", ev.model_path, "Model file")->required();
    eval->add_option("data", ev.data_dir, "Dataset directory")->required();
    eval->add_option("--pool-salt", ev.pool_salt, "Salt for the evaluation pooling schedule");

    InferOpts in;
    CLI::App* infer = app.add_subcommand("infer", "Classify a single point cloud");
    add_common(infer, in.common);
    infer->add_option("model", in.model_path, "Model file")->required();
    infer->add_option("cloud", in.cloud_path, "Point cloud file (.csv or .ply)")->required();
    infer->add_option("--pool-salt", in.pool_salt, "Salt for the evaluation pooling schedule");

    CrossOpts cx;
    CLI::App* cross = app.add_subcommand(
        "crossdomain", "Train per seed and score against several test domains");
    add_common(cross, cx.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitBadArgs;
    }

    if (datagen->parsed()) return guarded([&] { return cmd_datagen(dg); });
    if (analyze->parsed()) return guarded([&] { return cmd_analyze(an); });
    if (train->parsed()) return guarded([&] { return cmd_train(tr); });
    if (eval->parsed()) return guarded([&] { return cmd_eval(ev); });
    if (infer->parsed()) return guarded([&] { return cmd_infer(in); });
    if (cross->parsed()) return guarded([&] { return cmd_crossdomain(cx); });
    return kExitBadArgs;
}
