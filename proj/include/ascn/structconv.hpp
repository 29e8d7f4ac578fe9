#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ascn/cloud.hpp"
#include "ascn/feature_map.hpp"
#include "ascn/receptive_field.hpp"

namespace ascn {

// cos of the angle between two vectors; 0 whenever either norm falls below
// 1e-12 (padded slots, duplicate points, collapsed kernel directions).
double cosine_similarity(const Vec3& a, const Vec3& b);

// Trainable direction kernel: a bias-like weight vector for the central
// point plus S support branches, each a world-frame direction with its own
// feature weight vector.
struct DirectionKernel {
    std::vector<double> center_weight;               // length D
    std::vector<Vec3> support_dirs;                  // length S
    std::vector<std::vector<double>> support_weights;  // S entries of length D

    int supports() const { return static_cast<int>(support_dirs.size()); }
    int dim() const { return static_cast<int>(center_weight.size()); }
};

// Trainable distance kernel: scalar weights over the farthest-neighbor
// distance, one per support branch, plus an additive bias.
struct DistanceKernel {
    std::vector<double> support_weights;  // length S
    double bias = 0.0;

    int supports() const { return static_cast<int>(support_weights.size()); }
};

// Feature inner product scaled by direction agreement: how strongly one
// neighbor activates one support branch.
double sim(std::span<const double> feature, std::span<const double> weight,
           const Vec3& direction, const Vec3& kernel_dir);

// Direction response of one kernel at one receptive field: central inner
// product plus, per support branch, the best sim over all slots. Padded
// slots score exactly 0, so each branch max is >= 0 whenever padding exists.
double conv_dir(const ReceptiveField& rf, const FeatureMap& features,
                const DirectionKernel& kernel);

// Distance response of one kernel: bias + farthest-neighbor distance times
// the summed support weights. Padded slots never count as the farthest.
double conv_dist(const ReceptiveField& rf, const DistanceKernel& kernel);

enum class ConvMode { full, dir_only };

// One structural convolution layer: J paired direction/distance kernels
// whose responses are concatenated [dir_1..dir_J, dist_1..dist_J] and fused
// by a one-hidden-layer MLP (rectified hidden, linear output).
struct StrConvLayer {
    std::vector<DirectionKernel> dir_kernels;    // J entries
    std::vector<DistanceKernel> dist_kernels;    // J entries (ignored in dir_only)
    FeatureMap w1;               // fused_in x fused_in
    std::vector<double> b1;      // fused_in
    FeatureMap w2;               // fused_in x out_dim
    std::vector<double> b2;      // out_dim
    ConvMode mode = ConvMode::full;

    int kernels() const { return static_cast<int>(dir_kernels.size()); }
    int in_dim() const { return dir_kernels.empty() ? 0 : dir_kernels[0].dim(); }
    int fused_dim() const { return mode == ConvMode::full ? 2 * kernels() : kernels(); }
    int out_dim() const { return static_cast<int>(b2.size()); }
};

// Applies the layer independently to every point; output is N x out_dim.
FeatureMap str_conv_layer(const FeatureMap& features,
                          const std::vector<ReceptiveField>& fields,
                          const StrConvLayer& layer);

struct PoolConfig {
    int rate = 4;             // keep ceil(N/rate) points
    std::uint64_t seed = 0;   // drives the random subset
};

struct PoolResult {
    PointCloud cloud;          // surviving points, original relative order
    FeatureMap features;       // their pooled feature rows
    std::vector<int> kept;     // indices into the input cloud, ascending
};

// Channel-wise max over each point's neighborhood, then a seeded uniform
// subsample keeping ceil(N/rate) points.
PoolResult graph_max_pool(const PointCloud& cloud, const FeatureMap& features,
                          const std::vector<ReceptiveField>& fields,
                          const PoolConfig& cfg);

// The seeded subsample underlying graph_max_pool: ceil(n/rate) distinct row
// ids in ascending order. Exposed so every pooling consumer draws the same
// subset for the same seed.
std::vector<int> pool_keep_ids(std::size_t n, int rate, std::uint64_t seed);

// Channel-wise max over all points: the cloud's global feature.
std::vector<double> global_max_aggregate(const FeatureMap& features);

// Fresh layer with unit support directions on the sphere and fan-scaled
// uniform weights; fully determined by the seed.
StrConvLayer init_layer(int kernels, int supports, int in_dim, int out_dim,
                        std::uint64_t seed, ConvMode mode = ConvMode::full);

}  // namespace ascn
