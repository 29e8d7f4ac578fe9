#pragma once

#include <cstdint>
#include <vector>

#include "ascn/adaptive.hpp"
#include "ascn/cloud.hpp"
#include "ascn/feature_map.hpp"
#include "ascn/receptive_field.hpp"

namespace ascn {

// Everything geometry-related that a convolution stage needs, independent of
// any learnable parameter: per-point neighborhoods, padded to a fixed slot
// count, plus the same data packed for batched evaluation.
struct GeometryConfig {
    AdaptiveConfig adaptive{};
    int fixed_m = 0;    // > 0 bypasses the adaptive search with this count
    int pool_rate = 4;  // pooled stages keep ceil(n / pool_rate) points
};

struct StageGeometry {
    int n = 0;
    int slots = 0;
    std::vector<int> valid;              // chosen neighbor count per point
    std::vector<ReceptiveField> fields;  // per-point view
    std::vector<int> nbr_flat;           // n*slots ids; padding repeats the center
    FeatureMap unit_dirs;                // (n*slots) x 3 unit directions, 0 when padded
    FeatureMap far_dist;                 // n x 1 farthest valid neighbor distance
    std::vector<int> origin;             // stage row -> row in the original cloud
};

struct GeometryPlan {
    std::vector<StageGeometry> stages;   // one per convolution stage
    std::vector<std::vector<int>> keeps; // one per pooled stage: surviving rows
};

struct PlanOptions {
    // Seed per pooled stage; required unless a forced plan covers that stage.
    std::vector<std::uint64_t> pool_seeds;
    // When set: per pooled stage, the original-cloud rows that must survive.
    // Lets two differently-ordered copies of a cloud pool identically.
    const std::vector<std::vector<int>>* forced_origins = nullptr;
    // Reuse of the (expensive) first-stage geometry across epochs.
    const StageGeometry* cached_stage0 = nullptr;
};

// Neighborhoods for one stage: adaptive or fixed neighbor counts, receptive
// fields padded to the slot count, and the packed tables. `origin` maps the
// stage's rows back to the cloud the plan was started from.
StageGeometry build_stage_geometry(const PointCloud& cloud, const GeometryConfig& cfg,
                                   std::vector<int> origin);

// Full multi-stage plan: geometry for every convolution stage and the pooled
// survivor sets between them. Pooling follows the first `pools` stages.
GeometryPlan plan_geometry(const PointCloud& cloud, const GeometryConfig& cfg,
                           int stages, int pools, const PlanOptions& opt);

// Channel-wise neighborhood max followed by row selection; the evaluation
// core of pooling once the survivor set is already decided.
FeatureMap pool_features(const FeatureMap& features,
                         const std::vector<ReceptiveField>& fields,
                         const std::vector<int>& keep);

// Seed schedules. Training re-draws pooling every epoch; evaluation pins one
// schedule so repeated scoring of a cloud is reproducible.
std::vector<std::uint64_t> train_pool_seeds(std::uint64_t seed, int pools, int epoch);
std::vector<std::uint64_t> eval_pool_seeds(std::uint64_t salt, int pools);

}  // namespace ascn
