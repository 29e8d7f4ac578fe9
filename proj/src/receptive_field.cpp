#include "ascn/receptive_field.hpp"

#include <cmath>

#include "ascn/error.hpp"

namespace ascn {

ReceptiveField build_receptive_field(const PointCloud& cloud,
                                     const std::vector<int>& neighbor_ids, int center,
                                     int m, int slot_count) {
    if (m < 1) throw DegenerateCloud("receptive field needs at least one real neighbor");
    if (slot_count < m) throw InvalidParam("slot count smaller than neighbor count");
    if (static_cast<std::size_t>(m) > neighbor_ids.size())
        throw InvalidParam("neighbor list shorter than requested count");

    ReceptiveField rf;
    rf.center = center;
    rf.valid_count = m;
    rf.neighbors.assign(neighbor_ids.begin(), neighbor_ids.begin() + m);
    rf.directions.assign(static_cast<std::size_t>(slot_count), Vec3{0.0, 0.0, 0.0});
    rf.distances.assign(static_cast<std::size_t>(slot_count), 0.0);

    const Point3& c = cloud.points[static_cast<std::size_t>(center)];
    for (int i = 0; i < m; ++i) {
        const Point3& p = cloud.points[static_cast<std::size_t>(rf.neighbors[i])];
        const Vec3 d = p - c;
        rf.directions[static_cast<std::size_t>(i)] = d;
        rf.distances[static_cast<std::size_t>(i)] = d.norm();
    }
    return rf;
}

ReceptiveField build_receptive_field(const SpatialIndex& index, int center, int m,
                                     int slot_count) {
    if (m < 1) throw InvalidParam("neighbor count must be at least 1");
    const std::vector<int> ids = index.k_nearest(center, m);
    if (ids.empty())
        throw DegenerateCloud("cloud has no neighbors to form a receptive field");
    const int got = static_cast<int>(ids.size());
    if (slot_count < got) throw InvalidParam("slot count smaller than neighbor count");

    ReceptiveField rf;
    rf.center = center;
    rf.valid_count = got;
    rf.neighbors = ids;
    rf.directions.assign(static_cast<std::size_t>(slot_count), Vec3{0.0, 0.0, 0.0});
    rf.distances.assign(static_cast<std::size_t>(slot_count), 0.0);

    const Point3& c = index.point(center);
    for (int i = 0; i < got; ++i) {
        const Vec3 d = index.point(ids[static_cast<std::size_t>(i)]) - c;
        rf.directions[static_cast<std::size_t>(i)] = d;
        rf.distances[static_cast<std::size_t>(i)] = d.norm();
    }
    return rf;
}

std::vector<ReceptiveField> build_receptive_fields(const PointCloud& cloud,
                                                   const std::vector<int>& m_per_point,
                                                   int slot_count) {
    const std::size_t n = cloud.size();
    if (m_per_point.size() != 1 && m_per_point.size() != n)
        throw InvalidParam("need one neighbor count total or one per point");

    const SpatialIndex index(cloud);
    std::vector<ReceptiveField> fields;
    fields.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int m = m_per_point.size() == 1 ? m_per_point[0] : m_per_point[i];
        const std::vector<int> ids = index.k_nearest(static_cast<int>(i), m);
        fields.push_back(build_receptive_field(cloud, ids, static_cast<int>(i),
                                               static_cast<int>(ids.size()), slot_count));
    }
    return fields;
}

}  // namespace ascn
