#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ascn/param_store.hpp"
#include "ascn/pipeline.hpp"
#include "ascn/structconv.hpp"
#include "ascn/tape.hpp"

namespace ascn {

// Everything needed to rebuild a classifier from scratch: the channel plan,
// kernel shape, neighborhood policy, classifier head and the seed that
// determined the initial weights.
struct ModelConfig {
    std::vector<int> channels{16, 32, 64, 128, 128};  // kernels per stage
    int supports = 4;                                  // branches per kernel
    int pool_rate = 4;
    int classifier_hidden = 128;
    int classes = 0;
    std::vector<std::string> class_names;              // empty or one per class
    AdaptiveConfig adaptive{};
    int fixed_m = 0;                                   // > 0 pins neighborhoods
    ConvMode mode = ConvMode::full;
    std::uint64_t init_seed = 1;

    GeometryConfig geometry() const { return GeometryConfig{adaptive, fixed_m, pool_rate}; }
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// Rejects configurations the fixed five-stage architecture cannot express.
void validate_config(const ModelConfig& cfg);

struct Model {
    ModelConfig config;
    int pools = 0;  // pooling follows this many leading stages
    ParamStore params;

    int stages() const { return static_cast<int>(config.channels.size()); }
    int in_dim(int stage) const {
        return stage == 0 ? 1 : config.channels[static_cast<std::size_t>(stage - 1)];
    }
};

// The production architecture: five convolution stages with pooling after
// the first three. Validates, registers and seeds every parameter.
Model build_model(const ModelConfig& cfg);

namespace detail {
// Same registration and seeding, but with caller-chosen depth; small stacks
// keep gradient probes and unit experiments cheap.
Model make_model(ModelConfig cfg, int pools);
}  // namespace detail

// Scalar-path view of one stage's parameters, for the per-point kernels.
StrConvLayer layer_view(const Model& m, int stage);

// Logits for a cloud whose geometry plan is already built (plain path).
std::vector<double> forward_logits(const Model& m, const GeometryPlan& plan);

// Convenience wrapper: plans geometry with the evaluation pooling schedule
// derived from `pool_salt`, then runs the plain path.
std::vector<double> forward_cloud(const Model& m, const PointCloud& cloud,
                                  std::uint64_t pool_salt = 0);

// Differentiable path: records the same computation on the tape and returns
// the scalar loss node along with the logits node.
struct TapeForward {
    NodeId loss;
    NodeId logits;
};
TapeForward forward_tape(Tape& t, Model& m, const GeometryPlan& plan, int label);

std::vector<double> softmax(std::span<const double> logits);
int argmax_lowest(std::span<const double> values);

// Binary round-trip of config plus parameters, guarded by a checksum.
void save_model(const std::filesystem::path& path, const Model& m);
Model load_model(const std::filesystem::path& path);

}  // namespace ascn
