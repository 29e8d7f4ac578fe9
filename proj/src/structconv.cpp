#include "ascn/structconv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ascn/error.hpp"
#include "ascn/rng.hpp"

namespace ascn {

namespace {

constexpr double kNormFloor = 1e-12;

double dot_span(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace

double cosine_similarity(const Vec3& a, const Vec3& b) {
    const double na = a.norm(), nb = b.norm();
    if (na < kNormFloor || nb < kNormFloor) return 0.0;
    // Normalize first, then take the dot product; keeps this path identical
    // to the batched unit-vector formulation used during training.
    const double c = (a.x / na) * (b.x / nb) + (a.y / na) * (b.y / nb) +
                     (a.z / na) * (b.z / nb);
    return std::clamp(c, -1.0, 1.0);
}

double sim(std::span<const double> feature, std::span<const double> weight,
           const Vec3& direction, const Vec3& kernel_dir) {
    if (feature.size() != weight.size())
        throw DimensionMismatch("feature/weight dimensions differ");
    return dot_span(feature, weight) * cosine_similarity(direction, kernel_dir);
}

double conv_dir(const ReceptiveField& rf, const FeatureMap& features,
                const DirectionKernel& kernel) {
    const int d = kernel.dim();
    if (static_cast<std::size_t>(d) != features.cols())
        throw DimensionMismatch("kernel dimension does not match feature map");
    if (rf.valid_count < 1) throw DegenerateCloud("receptive field has no neighbors");

    const double center_term =
        dot_span(features.row(static_cast<std::size_t>(rf.center)), kernel.center_weight);

    double branch_sum = 0.0;
    for (int s = 0; s < kernel.supports(); ++s) {
        const auto& ks = kernel.support_dirs[static_cast<std::size_t>(s)];
        const auto& ws = kernel.support_weights[static_cast<std::size_t>(s)];
        double best = 0.0;
        for (int m = 0; m < rf.slot_count(); ++m) {
            // Padded slots sit at the central location: their score is 0.
            const double v =
                m < rf.valid_count
                    ? sim(features.row(static_cast<std::size_t>(rf.neighbors[static_cast<std::size_t>(m)])),
                          ws, rf.directions[static_cast<std::size_t>(m)], ks)
                    : 0.0;
            if (m == 0 || v > best) best = v;
        }
        branch_sum += best;
    }
    return center_term + branch_sum;
}

double conv_dist(const ReceptiveField& rf, const DistanceKernel& kernel) {
    if (rf.valid_count < 1) throw DegenerateCloud("receptive field has no neighbors");
    double wsum = 0.0;
    for (double w : kernel.support_weights) wsum += w;
    return rf.max_distance() * wsum + kernel.bias;
}

FeatureMap str_conv_layer(const FeatureMap& features,
                          const std::vector<ReceptiveField>& fields,
                          const StrConvLayer& layer) {
    const std::size_t n = features.rows();
    if (fields.size() != n)
        throw DimensionMismatch("one receptive field per point required");
    const int j_count = layer.kernels();
    const int fused = layer.fused_dim();
    if (layer.mode == ConvMode::full &&
        layer.dist_kernels.size() != static_cast<std::size_t>(j_count))
        throw DimensionMismatch("direction/distance kernel counts differ");
    if (layer.w1.rows() != static_cast<std::size_t>(fused) ||
        layer.w1.cols() != static_cast<std::size_t>(fused) ||
        layer.b1.size() != static_cast<std::size_t>(fused) ||
        layer.w2.rows() != static_cast<std::size_t>(fused))
        throw DimensionMismatch("fusion weights do not match kernel count");
    if (layer.w2.cols() != layer.b2.size())
        throw DimensionMismatch("fusion output weights/bias differ");

    const int out_dim = layer.out_dim();
    FeatureMap out(n, static_cast<std::size_t>(out_dim));
    std::vector<double> x(static_cast<std::size_t>(fused));
    std::vector<double> hidden(static_cast<std::size_t>(fused));

    for (std::size_t p = 0; p < n; ++p) {
        const ReceptiveField& rf = fields[p];
        for (int j = 0; j < j_count; ++j)
            x[static_cast<std::size_t>(j)] =
                conv_dir(rf, features, layer.dir_kernels[static_cast<std::size_t>(j)]);
        if (layer.mode == ConvMode::full)
            for (int j = 0; j < j_count; ++j)
                x[static_cast<std::size_t>(j_count + j)] =
                    conv_dist(rf, layer.dist_kernels[static_cast<std::size_t>(j)]);

        for (int k = 0; k < fused; ++k) {
            double acc = 0.0;
            for (int i = 0; i < fused; ++i)
                acc += x[static_cast<std::size_t>(i)] *
                       layer.w1(static_cast<std::size_t>(i), static_cast<std::size_t>(k));
            acc += layer.b1[static_cast<std::size_t>(k)];
            hidden[static_cast<std::size_t>(k)] = acc > 0.0 ? acc : 0.0;
        }
        for (int d = 0; d < out_dim; ++d) {
            double acc = 0.0;
            for (int k = 0; k < fused; ++k)
                acc += hidden[static_cast<std::size_t>(k)] *
                       layer.w2(static_cast<std::size_t>(k), static_cast<std::size_t>(d));
            out(p, static_cast<std::size_t>(d)) = acc + layer.b2[static_cast<std::size_t>(d)];
        }
    }
    return out;
}

PoolResult graph_max_pool(const PointCloud& cloud, const FeatureMap& features,
                          const std::vector<ReceptiveField>& fields,
                          const PoolConfig& cfg) {
    if (cfg.rate < 1) throw InvalidParam("pool rate must be >= 1");
    const std::size_t n = features.rows();
    if (n == 0) throw InvalidParam("cannot pool an empty feature map");
    if (fields.size() != n || cloud.size() != n)
        throw DimensionMismatch("cloud, features and fields must align");

    const std::size_t channels = features.cols();
    FeatureMap pooled(n, channels);
    for (std::size_t p = 0; p < n; ++p) {
        const ReceptiveField& rf = fields[p];
        for (std::size_t c = 0; c < channels; ++c) {
            double best = features(p, c);  // the point itself always counts
            for (int m = 0; m < rf.valid_count; ++m) {
                const double v =
                    features(static_cast<std::size_t>(rf.neighbors[static_cast<std::size_t>(m)]), c);
                if (v > best) best = v;
            }
            pooled(p, c) = best;
        }
    }

    const std::vector<int> ids = pool_keep_ids(n, cfg.rate, cfg.seed);

    PoolResult out;
    out.kept = ids;
    out.cloud.points.reserve(ids.size());
    if (cloud.has_ring()) out.cloud.ring.reserve(ids.size());
    for (int id : ids) {
        out.cloud.points.push_back(cloud.points[static_cast<std::size_t>(id)]);
        if (cloud.has_ring()) out.cloud.ring.push_back(cloud.ring[static_cast<std::size_t>(id)]);
    }
    out.features = pooled.select_rows(ids);
    return out;
}

std::vector<int> pool_keep_ids(std::size_t n, int rate, std::uint64_t seed) {
    if (rate < 1) throw InvalidParam("pool rate must be >= 1");
    if (n == 0) throw InvalidParam("cannot pool an empty set");
    // Uniform subset of ceil(n/rate) points: shuffle a prefix, then restore
    // original relative order so downstream indices stay monotone.
    const std::size_t keep =
        (n + static_cast<std::size_t>(rate) - 1) / static_cast<std::size_t>(rate);
    std::vector<int> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i);
    Rng rng(seed);
    for (std::size_t i = 0; i < keep; ++i) {
        const std::size_t j =
            i + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(ids[i], ids[j]);
    }
    ids.resize(keep);
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<double> global_max_aggregate(const FeatureMap& features) {
    if (features.rows() == 0) throw InvalidParam("cannot aggregate an empty feature map");
    std::vector<double> out(features.cols());
    for (std::size_t c = 0; c < features.cols(); ++c) {
        double best = features(0, c);
        for (std::size_t r = 1; r < features.rows(); ++r)
            if (features(r, c) > best) best = features(r, c);
        out[c] = best;
    }
    return out;
}

StrConvLayer init_layer(int kernels, int supports, int in_dim, int out_dim,
                        std::uint64_t seed, ConvMode mode) {
    if (kernels < 1 || supports < 1 || in_dim < 1 || out_dim < 1)
        throw InvalidParam("layer shape counts must all be >= 1");

    Rng rng(seed);
    const double a_dir = std::sqrt(6.0 / static_cast<double>(in_dim + kernels));
    const double a_dist = std::sqrt(6.0 / static_cast<double>(supports + 1));

    StrConvLayer layer;
    layer.mode = mode;
    layer.dir_kernels.resize(static_cast<std::size_t>(kernels));
    for (auto& k : layer.dir_kernels) {
        k.center_weight.resize(static_cast<std::size_t>(in_dim));
        for (double& w : k.center_weight) w = rng.uniform(-a_dir, a_dir);
        k.support_dirs.resize(static_cast<std::size_t>(supports));
        k.support_weights.resize(static_cast<std::size_t>(supports));
        for (int s = 0; s < supports; ++s) {
            // Uniform on the unit sphere: z uniform, azimuth uniform.
            const double z = rng.uniform(-1.0, 1.0);
            const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            k.support_dirs[static_cast<std::size_t>(s)] =
                Vec3{r * std::cos(phi), r * std::sin(phi), z};
            auto& w = k.support_weights[static_cast<std::size_t>(s)];
            w.resize(static_cast<std::size_t>(in_dim));
            for (double& v : w) v = rng.uniform(-a_dir, a_dir);
        }
    }
    if (mode == ConvMode::full) {
        layer.dist_kernels.resize(static_cast<std::size_t>(kernels));
        for (auto& k : layer.dist_kernels) {
            k.support_weights.resize(static_cast<std::size_t>(supports));
            for (double& w : k.support_weights) w = rng.uniform(-a_dist, a_dist);
            k.bias = rng.uniform(-a_dist, a_dist);
        }
    }

    const int fused = mode == ConvMode::full ? 2 * kernels : kernels;
    const double a1 = std::sqrt(6.0 / static_cast<double>(fused + fused));
    const double a2 = std::sqrt(6.0 / static_cast<double>(fused + out_dim));
    layer.w1 = FeatureMap(static_cast<std::size_t>(fused), static_cast<std::size_t>(fused));
    for (double& v : layer.w1.data()) v = rng.uniform(-a1, a1);
    layer.b1.resize(static_cast<std::size_t>(fused));
    for (double& v : layer.b1) v = rng.uniform(-a1, a1);
    layer.w2 = FeatureMap(static_cast<std::size_t>(fused), static_cast<std::size_t>(out_dim));
    for (double& v : layer.w2.data()) v = rng.uniform(-a2, a2);
    layer.b2.resize(static_cast<std::size_t>(out_dim));
    for (double& v : layer.b2) v = rng.uniform(-a2, a2);
    return layer;
}

}  // namespace ascn
