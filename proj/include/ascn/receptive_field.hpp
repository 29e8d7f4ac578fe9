#pragma once

#include <vector>

#include "ascn/cloud.hpp"
#include "ascn/kdtree.hpp"

namespace ascn {

// Local neighborhood of one point, laid out with a fixed slot count so that
// downstream kernels can iterate uniformly. Slots beyond `valid_count` are
// padded as if the neighbor sat at the central position itself: zero
// direction and zero distance.
struct ReceptiveField {
    int center = -1;
    int valid_count = 0;              // number of real neighbors (M)
    std::vector<int> neighbors;       // size valid_count, original point ids
    std::vector<Vec3> directions;     // size slot_count, neighbor - center
    std::vector<double> distances;    // size slot_count, Euclidean norms

    int slot_count() const { return static_cast<int>(directions.size()); }

    // Largest distance among the real neighbors; padded slots never count.
    double max_distance() const {
        double far = 0.0;
        for (int m = 0; m < valid_count; ++m)
            if (distances[static_cast<std::size_t>(m)] > far)
                far = distances[static_cast<std::size_t>(m)];
        return far;
    }
};

// Field around point `center` using its `m` nearest neighbors, padded out to
// `slot_count` slots (slot_count >= m).
ReceptiveField build_receptive_field(const SpatialIndex& index, int center, int m,
                                     int slot_count);

// Same, but reusing an already-fetched neighbor list (first `m` entries used).
ReceptiveField build_receptive_field(const PointCloud& cloud,
                                     const std::vector<int>& neighbor_ids, int center,
                                     int m, int slot_count);

// One field per point, all with the same slot count. `m_per_point` may be a
// single value (applied to every point) or one entry per point.
std::vector<ReceptiveField> build_receptive_fields(const PointCloud& cloud,
                                                   const std::vector<int>& m_per_point,
                                                   int slot_count);

}  // namespace ascn
