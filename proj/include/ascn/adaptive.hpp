#pragma once

#include <array>
#include <vector>

#include "ascn/cloud.hpp"
#include "ascn/eigen3.hpp"
#include "ascn/kdtree.hpp"

namespace ascn {

// Shannon entropy of the normalized eigenvalue spectrum. Zero components
// contribute nothing; an all-zero spectrum (fully degenerate neighborhood)
// maps to +infinity so that any structured neighborhood beats it.
double eigenentropy(const std::array<double, 3>& lambda);

// Spectrum of a local structure tensor, cleaned up for shape analysis:
// eigenvalues sorted descending with round-off negatives clamped to zero,
// their normalized shares, and the resulting entropy.
struct EigenAnalysis {
    std::array<double, 3> lambda{};  // descending, >= 0
    std::array<double, 3> e{};       // lambda / sum, or 0 when sum == 0
    double entropy = 0.0;
};

// Decomposes a symmetric matrix (checked to 1e-9 relative asymmetry;
// NumericalError otherwise) and derives the entropy summary above.
EigenAnalysis eigen_analysis(const Mat3& c);

// Search range for the per-point neighborhood size.
struct AdaptiveConfig {
    int m_min = 3;
    int m_max = 10;
};

struct NeighborhoodChoice {
    int m_star = 0;                  // chosen neighbor count
    std::vector<double> entropies;   // indexed m - m_min; NaN where skipped
};

// Picks the neighbor count in [m_min, m_max] whose covariance spectrum has
// minimal eigenentropy; ties go to the smaller count. Clouds too small for
// the search range fall back to all available neighbors.
NeighborhoodChoice optimal_neighborhood(const SpatialIndex& index, int point,
                                        const AdaptiveConfig& cfg = {});

// Chosen neighbor count for every point of the cloud.
std::vector<int> optimal_neighborhoods_all(const SpatialIndex& index,
                                           const AdaptiveConfig& cfg = {});
std::vector<int> optimal_neighborhoods_all(const PointCloud& cloud,
                                           const AdaptiveConfig& cfg = {});

}  // namespace ascn
