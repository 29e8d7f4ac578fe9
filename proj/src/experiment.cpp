#include "ascn/experiment.hpp"

#include <cstdio>

#include "ascn/error.hpp"
#include "ascn/log.hpp"

namespace ascn {

namespace {

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const Dataset& train_set,
                                const std::vector<std::pair<std::string, Dataset>>& test_sets) {
    if (spec.seeds.empty()) throw InvalidParam("an experiment needs at least one seed");
    if (test_sets.empty()) throw InvalidParam("an experiment needs at least one test set");

    ExperimentResult result;
    for (const auto& [name, data] : test_sets) {
        (void)data;
        result.test_names.push_back(name);
    }

    for (std::uint64_t seed : spec.seeds) {
        ModelConfig cfg = spec.base;
        cfg.init_seed = seed;
        Model model = build_model(cfg);

        TrainConfig schedule = spec.schedule;
        schedule.seed = seed;
        schedule.log_path.clear();
        Adam opt(AdamConfig{schedule.lr, 0.9, 0.999, 1e-8});
        const TrainResult trained = train_model(model, train_set, schedule, opt);

        ExperimentRun run;
        run.seed = seed;
        run.diverged = trained.diverged;
        if (trained.diverged)
            log::warn("run with seed %llu diverged; scoring the last finite state",
                      static_cast<unsigned long long>(seed));
        for (const auto& [name, data] : test_sets) {
            (void)name;
            run.accuracy.push_back(evaluate(model, data).percent());
        }
        result.runs.push_back(std::move(run));
    }

    result.mean_accuracy.assign(result.test_names.size(), 0.0);
    for (const ExperimentRun& run : result.runs)
        for (std::size_t i = 0; i < run.accuracy.size(); ++i)
            result.mean_accuracy[i] += run.accuracy[i];
    for (double& v : result.mean_accuracy) v /= static_cast<double>(result.runs.size());
    return result;
}

std::string experiment_markdown(const ExperimentResult& r) {
    std::string out = "| seed |";
    for (const std::string& name : r.test_names) out += " " + name + " |";
    out += "\n|---:|";
    for (std::size_t i = 0; i < r.test_names.size(); ++i) out += "---:|";
    out += "\n";
    for (const ExperimentRun& run : r.runs) {
        out += "| " + std::to_string(run.seed);
        if (run.diverged) out += " (diverged)";
        out += " |";
        for (double v : run.accuracy) out += " " + pct(v) + " |";
        out += "\n";
    }
    out += "| mean |";
    for (double v : r.mean_accuracy) out += " " + pct(v) + " |";
    out += "\n";
    return out;
}

nlohmann::json experiment_json(const ExperimentResult& r) {
    nlohmann::json j;
    j["test_sets"] = r.test_names;
    j["runs"] = nlohmann::json::array();
    for (const ExperimentRun& run : r.runs) {
        nlohmann::json jr;
        jr["seed"] = run.seed;
        jr["diverged"] = run.diverged;
        for (std::size_t i = 0; i < run.accuracy.size(); ++i)
            jr["accuracy"][r.test_names[i]] = run.accuracy[i];
        j["runs"].push_back(std::move(jr));
    }
    for (std::size_t i = 0; i < r.test_names.size(); ++i)
        j["mean_accuracy"][r.test_names[i]] = r.mean_accuracy[i];
    return j;
}

}  // namespace ascn
