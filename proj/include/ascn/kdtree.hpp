#pragma once

#include <vector>

#include "ascn/cloud.hpp"

namespace ascn {

// Immutable kd-tree over a point cloud. Queries are exact; ties on distance
// are broken toward the lower original point index so results are fully
// deterministic and reproducible against a brute-force scan.
class SpatialIndex {
public:
    explicit SpatialIndex(const PointCloud& cloud);

    std::size_t size() const { return points_.size(); }
    const Point3& point(int i) const { return points_[static_cast<std::size_t>(i)]; }

    // Up to min(k, N-1) neighbor indices of the stored point `query_index`,
    // ascending by distance, the query point itself excluded.
    std::vector<int> k_nearest(int query_index, int k) const;

    // Same search for an arbitrary query location; `exclude` (if >= 0) is a
    // stored point index to leave out.
    std::vector<int> k_nearest(const Point3& query, int k, int exclude = -1) const;

private:
    struct Node {
        int axis = -1;       // -1 marks a leaf
        double split = 0.0;
        int left = -1, right = -1;
        int begin = 0, end = 0;  // leaf range into order_
    };

    int build(int begin, int end);

    std::vector<Point3> points_;  // original storage order
    std::vector<int> order_;      // permutation grouped by leaf
    std::vector<Node> nodes_;
    int root_ = -1;
};

// Convenience wrapper matching the index method.
inline std::vector<int> k_nearest(const SpatialIndex& index, int query_index, int k) {
    return index.k_nearest(query_index, k);
}

}  // namespace ascn
