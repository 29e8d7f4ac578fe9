#include "ascn/adaptive.hpp"

#include <cmath>
#include <limits>

#include "ascn/eigen3.hpp"
#include "ascn/error.hpp"
#include "ascn/log.hpp"

namespace ascn {

double eigenentropy(const std::array<double, 3>& lambda) {
    double sum = 0.0;
    for (double l : lambda) {
        if (!std::isfinite(l)) throw NumericalError("non-finite eigenvalue");
        // Covariance spectra are non-negative up to round-off; fold the
        // round-off back to zero rather than feeding log a negative.
        if (l > 0.0) sum += l;
    }
    if (sum <= 0.0) return std::numeric_limits<double>::infinity();

    double h = 0.0;
    for (double l : lambda) {
        if (l <= 0.0) continue;
        const double e = l / sum;
        h -= e * std::log(e);
    }
    return h;
}

EigenAnalysis eigen_analysis(const Mat3& c) {
    double scale = 0.0;
    for (int r = 0; r < 3; ++r)
        for (int col = 0; col < 3; ++col) scale = std::max(scale, std::abs(c(r, col)));
    const double skew = std::max({std::abs(c(0, 1) - c(1, 0)), std::abs(c(0, 2) - c(2, 0)),
                                  std::abs(c(1, 2) - c(2, 1))});
    if (skew > 1e-9 * std::max(1.0, scale))
        throw NumericalError("structure tensor is not symmetric");

    const EigenSym3 eig = eig_sym3(c);
    EigenAnalysis out;
    double sum = 0.0;
    for (int j = 0; j < 3; ++j) {
        out.lambda[static_cast<std::size_t>(j)] =
            std::max(0.0, eig.values[static_cast<std::size_t>(j)]);
        sum += out.lambda[static_cast<std::size_t>(j)];
    }
    if (sum > 0.0)
        for (int j = 0; j < 3; ++j)
            out.e[static_cast<std::size_t>(j)] = out.lambda[static_cast<std::size_t>(j)] / sum;
    out.entropy = eigenentropy(out.lambda);
    return out;
}

namespace {

NeighborhoodChoice choose(const SpatialIndex& index, int point,
                          const AdaptiveConfig& cfg, bool quiet) {
    if (cfg.m_min < 2 || cfg.m_max < cfg.m_min)
        throw InvalidParam("neighborhood search range must satisfy 2 <= m_min <= m_max");

    const int avail = static_cast<int>(index.size()) - 1;
    const int span = cfg.m_max - cfg.m_min + 1;
    NeighborhoodChoice out;
    out.entropies.assign(static_cast<std::size_t>(span),
                         std::numeric_limits<double>::quiet_NaN());

    if (avail < cfg.m_min) {
        if (!quiet)
            log::warn("cloud of %zu points cannot support %d neighbors; using %d",
                      index.size(), cfg.m_min, avail < 0 ? 0 : avail);
        out.m_star = avail < 0 ? 0 : avail;
        return out;
    }

    const int top = std::min(cfg.m_max, avail);
    const std::vector<int> nbrs = index.k_nearest(point, top);

    // One growing point set: the center plus the m nearest neighbors, all
    // expressed relative to the center. Differences of coordinates make the
    // whole selection translation-invariant at the bit level whenever the
    // subtractions are exact.
    const Point3 origin = index.point(point);
    std::vector<Point3> pts;
    pts.reserve(static_cast<std::size_t>(top) + 1);
    pts.push_back(Point3{0.0, 0.0, 0.0});
    for (int i = 0; i < cfg.m_min - 1; ++i)
        pts.push_back(index.point(nbrs[static_cast<std::size_t>(i)]) - origin);

    double best = std::numeric_limits<double>::infinity();
    out.m_star = cfg.m_min;
    for (int m = cfg.m_min; m <= top; ++m) {
        pts.push_back(index.point(nbrs[static_cast<std::size_t>(m - 1)]) - origin);
        const EigenSym3 eig = eig_sym3(covariance3(pts));
        const double h = eigenentropy(eig.values);
        out.entropies[static_cast<std::size_t>(m - cfg.m_min)] = h;
        if (h < best) {  // strict: ties keep the smaller neighborhood
            best = h;
            out.m_star = m;
        }
    }
    return out;
}

}  // namespace

NeighborhoodChoice optimal_neighborhood(const SpatialIndex& index, int point,
                                        const AdaptiveConfig& cfg) {
    return choose(index, point, cfg, /*quiet=*/false);
}

std::vector<int> optimal_neighborhoods_all(const SpatialIndex& index,
                                           const AdaptiveConfig& cfg) {
    const int avail = static_cast<int>(index.size()) - 1;
    if (avail < cfg.m_min)
        log::warn("cloud of %zu points cannot support %d neighbors; using %d for all",
                  index.size(), cfg.m_min, avail < 0 ? 0 : avail);
    std::vector<int> ms(index.size());
    for (std::size_t i = 0; i < index.size(); ++i)
        ms[i] = choose(index, static_cast<int>(i), cfg, /*quiet=*/true).m_star;
    return ms;
}

std::vector<int> optimal_neighborhoods_all(const PointCloud& cloud,
                                           const AdaptiveConfig& cfg) {
    return optimal_neighborhoods_all(SpatialIndex(cloud), cfg);
}

}  // namespace ascn
