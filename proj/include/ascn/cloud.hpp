#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "ascn/error.hpp"

namespace ascn {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm2() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm2()); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

// A 3D coordinate in meters.
using Point3 = Vec3;

// Ordered point list with an optional per-point scan-ring index.
struct PointCloud {
    std::vector<Point3> points;
    std::vector<int> ring;  // empty, or same length as points

    std::size_t size() const { return points.size(); }
    bool has_ring() const { return !ring.empty(); }

    Point3 centroid() const {
        Vec3 sum{};
        for (const auto& p : points) sum += p;
        const double inv = points.empty() ? 0.0 : 1.0 / static_cast<double>(points.size());
        return sum * inv;
    }

    // Enforces the structural invariants (nonempty, finite, ring arity/sign).
    void validate() const {
        if (points.empty()) throw DegenerateCloud("point cloud is empty");
        if (!ring.empty() && ring.size() != points.size())
            throw InvalidParam("ring column length does not match point count");
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!points[i].finite())
                throw InvalidParam("non-finite coordinate at point " + std::to_string(i));
        }
        for (int r : ring) {
            if (r < 0) throw InvalidParam("negative ring index");
        }
    }
};

struct LabeledCloud {
    PointCloud cloud;
    int label = 0;
};

struct Dataset {
    std::vector<LabeledCloud> items;
    std::vector<std::string> class_names;
    std::map<std::string, std::string> metadata;

    int num_classes() const { return static_cast<int>(class_names.size()); }

    void validate() const {
        if (class_names.size() < 2) throw InvalidParam("dataset needs at least 2 classes");
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (items[i].label < 0 || items[i].label >= num_classes())
                throw InvalidParam("item " + std::to_string(i) + " label out of range");
        }
    }
};

}  // namespace ascn
