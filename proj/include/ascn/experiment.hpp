#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ascn/model.hpp"
#include "ascn/train.hpp"

namespace ascn {

// A grid of independent runs: one model per seed, trained on one dataset and
// scored against any number of held-out test sets (typically the source
// domain plus density-shifted variants of it).
struct ExperimentSpec {
    ModelConfig base;       // init_seed is overridden per run
    TrainConfig schedule;   // seed is overridden per run; logging is disabled
    std::vector<std::uint64_t> seeds;
};

struct ExperimentRun {
    std::uint64_t seed = 0;
    bool diverged = false;
    std::vector<double> accuracy;  // percent, aligned with test_names
};

struct ExperimentResult {
    std::vector<std::string> test_names;
    std::vector<ExperimentRun> runs;
    std::vector<double> mean_accuracy;  // percent, aligned with test_names
};

ExperimentResult run_experiment(const ExperimentSpec& spec, const Dataset& train_set,
                                const std::vector<std::pair<std::string, Dataset>>& test_sets);

// Human-readable summary table and its machine-readable twin.
std::string experiment_markdown(const ExperimentResult& r);
nlohmann::json experiment_json(const ExperimentResult& r);

}  // namespace ascn
