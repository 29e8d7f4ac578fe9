#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ascn/cloud.hpp"
#include "ascn/model.hpp"
#include "ascn/param_store.hpp"

namespace ascn {

struct TrainConfig {
    int epochs = 50;
    double lr = 1e-3;
    std::uint64_t seed = 0;      // shuffling and pooling schedules
    int epoch_offset = 0;        // continue counting from an earlier run
    std::string log_path;        // JSON-lines progress log; empty disables it
    bool append_log = false;     // continue an existing log instead of truncating
};

struct EpochStats {
    int epoch = 0;
    double loss = 0.0;
    double train_acc = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    int skipped = 0;      // items dropped because their geometry degenerates
    bool diverged = false;  // loss or gradients left the finite range
};

// One optimization pass over the dataset per epoch: per-item recorded
// forward, backprop, and an optimizer step. The optimizer lives outside so
// training can continue across calls (early stopping, chunked schedules).
TrainResult train_model(Model& m, const Dataset& data, const TrainConfig& cfg, Adam& opt);

struct EvalResult {
    int correct = 0;
    int total = 0;
    int skipped = 0;
    std::vector<std::vector<int>> confusion;  // row: true class, column: prediction

    double percent() const { return total > 0 ? 100.0 * correct / total : 0.0; }
};

// Deterministic scoring with the fixed evaluation pooling schedule. Items
// whose geometry degenerates are skipped and counted. `workers` > 1 splits
// the items across threads; results do not depend on the split.
EvalResult evaluate(const Model& m, const Dataset& data, std::uint64_t pool_salt = 0,
                    int workers = 1);

}  // namespace ascn
