#include "ascn/kdtree.hpp"

#include <algorithm>
#include <cmath>

namespace ascn {

namespace {

constexpr int kLeafSize = 16;

inline double coord(const Point3& p, int axis) {
    return axis == 0 ? p.x : (axis == 1 ? p.y : p.z);
}

inline double dist2(const Point3& a, const Point3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

// Candidate ordering: distance first, original index breaks ties.
struct Cand {
    double d2;
    int idx;
    bool operator<(const Cand& o) const {
        return d2 != o.d2 ? d2 < o.d2 : idx < o.idx;
    }
};

}  // namespace

SpatialIndex::SpatialIndex(const PointCloud& cloud) : points_(cloud.points) {
    cloud.validate();
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
    nodes_.reserve(2 * points_.size() / kLeafSize + 4);
    root_ = build(0, static_cast<int>(points_.size()));
}

int SpatialIndex::build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    if (end - begin <= kLeafSize) {
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }

    // Split the widest axis at the median.
    Vec3 lo{points_[order_[begin]].x, points_[order_[begin]].y, points_[order_[begin]].z};
    Vec3 hi = lo;
    for (int i = begin + 1; i < end; ++i) {
        const Point3& p = points_[order_[i]];
        lo.x = std::min(lo.x, p.x); hi.x = std::max(hi.x, p.x);
        lo.y = std::min(lo.y, p.y); hi.y = std::max(hi.y, p.y);
        lo.z = std::min(lo.z, p.z); hi.z = std::max(hi.z, p.z);
    }
    const Vec3 extent = hi - lo;
    int axis = 0;
    if (extent.y > extent.x) axis = 1;
    if (coord(extent, 2) > coord(extent, axis)) axis = 2;

    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         const double ca = coord(points_[a], axis), cb = coord(points_[b], axis);
                         return ca != cb ? ca < cb : a < b;
                     });

    nodes_[id].axis = axis;
    nodes_[id].split = coord(points_[order_[mid]], axis);
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

std::vector<int> SpatialIndex::k_nearest(int query_index, int k) const {
    return k_nearest(points_[static_cast<std::size_t>(query_index)], k, query_index);
}

std::vector<int> SpatialIndex::k_nearest(const Point3& query, int k, int exclude) const {
    if (k < 1) throw InvalidParam("k must be >= 1");
    const int avail = static_cast<int>(points_.size()) - (exclude >= 0 ? 1 : 0);
    const int want = std::min(k, std::max(avail, 0));
    if (want == 0) return {};

    // Bounded max-heap of the best `want` candidates under (d2, idx).
    std::vector<Cand> heap;
    heap.reserve(static_cast<std::size_t>(want));

    auto consider = [&](int idx) {
        if (idx == exclude) return;
        const Cand c{dist2(points_[idx], query), idx};
        if (static_cast<int>(heap.size()) < want) {
            heap.push_back(c);
            std::push_heap(heap.begin(), heap.end());
        } else if (c < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = c;
            std::push_heap(heap.begin(), heap.end());
        }
    };

    auto visit = [&](auto&& self, int node_id) -> void {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (int i = node.begin; i < node.end; ++i) consider(order_[i]);
            return;
        }
        const double diff = coord(query, node.axis) - node.split;
        const int near = diff < 0.0 ? node.left : node.right;
        const int far = diff < 0.0 ? node.right : node.left;
        self(self, near);
        // The far side can still hold an equal-distance lower-index winner,
        // so prune only on a strictly larger plane distance.
        if (static_cast<int>(heap.size()) < want || diff * diff <= heap.front().d2)
            self(self, far);
    };
    visit(visit, root_);

    std::sort(heap.begin(), heap.end());
    std::vector<int> out(heap.size());
    for (std::size_t i = 0; i < heap.size(); ++i) out[i] = heap[i].idx;
    return out;
}

}  // namespace ascn
