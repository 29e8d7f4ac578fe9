#include "ascn/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "ascn/error.hpp"
#include "ascn/kdtree.hpp"
#include "ascn/rng.hpp"
#include "ascn/structconv.hpp"

namespace ascn {

namespace {

constexpr double kNormFloor = 1e-12;
constexpr std::uint64_t kTrainPoolSalt = 0x706F6F6C;  // "pool"
constexpr std::uint64_t kEvalPoolSalt = 0x6576616C;   // "eval"

}  // namespace

StageGeometry build_stage_geometry(const PointCloud& cloud, const GeometryConfig& cfg,
                                   std::vector<int> origin) {
    const int n = static_cast<int>(cloud.size());
    if (n < 2) throw DegenerateCloud("a convolution stage needs at least two points");
    if (origin.size() != cloud.size())
        throw DimensionMismatch("origin map must cover the stage cloud");
    if (cfg.fixed_m < 0) throw InvalidParam("fixed neighbor count cannot be negative");

    StageGeometry g;
    g.n = n;
    g.slots = cfg.fixed_m > 0 ? cfg.fixed_m : cfg.adaptive.m_max;
    g.origin = std::move(origin);

    const SpatialIndex index(cloud);
    if (cfg.fixed_m > 0)
        g.valid.assign(static_cast<std::size_t>(n), std::min(cfg.fixed_m, n - 1));
    else
        g.valid = optimal_neighborhoods_all(index, cfg.adaptive);

    g.fields.reserve(static_cast<std::size_t>(n));
    g.nbr_flat.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(g.slots), 0);
    g.unit_dirs = FeatureMap(static_cast<std::size_t>(n) * static_cast<std::size_t>(g.slots), 3);
    g.far_dist = FeatureMap(static_cast<std::size_t>(n), 1);

    for (int i = 0; i < n; ++i) {
        ReceptiveField rf = build_receptive_field(index, i, g.valid[static_cast<std::size_t>(i)],
                                                  g.slots);
        const std::size_t base = static_cast<std::size_t>(i) * static_cast<std::size_t>(g.slots);
        for (int s = 0; s < g.slots; ++s) {
            const std::size_t row = base + static_cast<std::size_t>(s);
            if (s < rf.valid_count) {
                g.nbr_flat[row] = rf.neighbors[static_cast<std::size_t>(s)];
                const Vec3& d = rf.directions[static_cast<std::size_t>(s)];
                const double norm = d.norm();
                if (norm >= kNormFloor) {
                    g.unit_dirs(row, 0) = d.x / norm;
                    g.unit_dirs(row, 1) = d.y / norm;
                    g.unit_dirs(row, 2) = d.z / norm;
                }
            } else {
                g.nbr_flat[row] = i;  // padding points back at the center
            }
        }
        g.far_dist(static_cast<std::size_t>(i), 0) = rf.max_distance();
        g.fields.push_back(std::move(rf));
    }
    return g;
}

GeometryPlan plan_geometry(const PointCloud& cloud, const GeometryConfig& cfg,
                           int stages, int pools, const PlanOptions& opt) {
    if (stages < 1) throw InvalidParam("a plan needs at least one stage");
    if (pools < 0 || pools >= stages)
        throw InvalidParam("pooled stage count must stay below the stage count");
    if (opt.forced_origins != nullptr &&
        opt.forced_origins->size() != static_cast<std::size_t>(pools))
        throw InvalidParam("forced pool plan must cover every pooled stage");
    if (opt.forced_origins == nullptr &&
        opt.pool_seeds.size() < static_cast<std::size_t>(pools))
        throw InvalidParam("one pool seed per pooled stage required");

    GeometryPlan plan;
    plan.stages.reserve(static_cast<std::size_t>(stages));

    PointCloud current = cloud;
    std::vector<int> origin(cloud.size());
    for (std::size_t i = 0; i < origin.size(); ++i) origin[i] = static_cast<int>(i);

    for (int s = 0; s < stages; ++s) {
        if (s == 0 && opt.cached_stage0 != nullptr) {
            if (opt.cached_stage0->n != static_cast<int>(cloud.size()))
                throw DimensionMismatch("cached stage geometry built for another cloud");
            plan.stages.push_back(*opt.cached_stage0);
        } else {
            plan.stages.push_back(build_stage_geometry(current, cfg, origin));
        }
        if (s >= pools) continue;

        const StageGeometry& g = plan.stages.back();
        std::vector<int> keep;
        if (opt.forced_origins != nullptr) {
            const std::vector<int>& want = (*opt.forced_origins)[static_cast<std::size_t>(s)];
            for (int r = 0; r < g.n; ++r)
                if (std::binary_search(want.begin(), want.end(),
                                       g.origin[static_cast<std::size_t>(r)]))
                    keep.push_back(r);
            if (keep.size() != want.size())
                throw InvalidParam("forced pool plan names rows absent from this stage");
        } else {
            keep = pool_keep_ids(static_cast<std::size_t>(g.n), cfg.pool_rate,
                                 opt.pool_seeds[static_cast<std::size_t>(s)]);
        }

        PointCloud next;
        next.points.reserve(keep.size());
        if (current.has_ring()) next.ring.reserve(keep.size());
        std::vector<int> next_origin;
        next_origin.reserve(keep.size());
        for (int r : keep) {
            next.points.push_back(current.points[static_cast<std::size_t>(r)]);
            if (current.has_ring()) next.ring.push_back(current.ring[static_cast<std::size_t>(r)]);
            next_origin.push_back(origin[static_cast<std::size_t>(r)]);
        }
        plan.keeps.push_back(std::move(keep));
        current = std::move(next);
        origin = std::move(next_origin);
    }
    return plan;
}

FeatureMap pool_features(const FeatureMap& features,
                         const std::vector<ReceptiveField>& fields,
                         const std::vector<int>& keep) {
    if (fields.size() != features.rows())
        throw DimensionMismatch("one receptive field per feature row required");
    FeatureMap pooled(features.rows(), features.cols());
    for (std::size_t p = 0; p < features.rows(); ++p) {
        const ReceptiveField& rf = fields[p];
        for (std::size_t c = 0; c < features.cols(); ++c) {
            double best = features(p, c);  // the point itself always counts
            for (int m = 0; m < rf.valid_count; ++m) {
                const double v =
                    features(static_cast<std::size_t>(rf.neighbors[static_cast<std::size_t>(m)]), c);
                if (v > best) best = v;
            }
            pooled(p, c) = best;
        }
    }
    return pooled.select_rows(keep);
}

std::vector<std::uint64_t> train_pool_seeds(std::uint64_t seed, int pools, int epoch) {
    std::vector<std::uint64_t> out;
    out.reserve(static_cast<std::size_t>(pools));
    for (int s = 0; s < pools; ++s)
        out.push_back(mix64(seed, kTrainPoolSalt, static_cast<std::uint64_t>(s),
                            static_cast<std::uint64_t>(epoch)));
    return out;
}

std::vector<std::uint64_t> eval_pool_seeds(std::uint64_t salt, int pools) {
    std::vector<std::uint64_t> out;
    out.reserve(static_cast<std::size_t>(pools));
    for (int s = 0; s < pools; ++s)
        out.push_back(mix64(salt, kEvalPoolSalt, static_cast<std::uint64_t>(s)));
    return out;
}

}  // namespace ascn
