#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ascn/cloud.hpp"

namespace ascn {

enum class ShapeKind { plane, sphere, line, box, cylinder };

ShapeKind shape_kind_from_name(const std::string& name);
const char* shape_kind_name(ShapeKind kind);

// Points sampled uniformly on the ideal surface, then perturbed by isotropic
// Gaussian noise. Deterministic per seed. Every generated cloud carries a
// synthetic scan-ring index: the elevation angle seen from the centroid,
// quantized into 32 bins, so scanline decimation behaves like a channel cut.
PointCloud generate_shape(ShapeKind kind, int n_points, double noise_sigma, double scale,
                          std::uint64_t seed);

struct ClassSpec {
    std::string name;
    ShapeKind kind = ShapeKind::sphere;
    int count = 1;
    int points_min = 256, points_max = 256;
    double noise_min = 0.0, noise_max = 0.0;
    double scale_min = 1.0, scale_max = 1.0;
};

struct DatasetSpec {
    std::vector<ClassSpec> classes;
};

Dataset generate_dataset(const DatasetSpec& spec, std::uint64_t seed);

// Density-shift simulation. With a ring column, keeps rings == 0 (mod
// keep_every) — a scanline cut. Without one, keeps a seeded random
// ceil(N/keep_every)-subset in original point order.
PointCloud decimate_density(const PointCloud& cloud, int keep_every, std::uint64_t seed);

Dataset decimate_dataset(const Dataset& ds, int keep_every, std::uint64_t seed);

// Translates the cloud so its centroid lands on the origin. No rescaling:
// absolute distances are part of the signal downstream.
PointCloud center_cloud(const PointCloud& cloud);

// 32-bin elevation-angle ring assignment (used by generate_shape; exposed for
// clouds loaded without a ring column).
std::vector<int> assign_elevation_rings(const PointCloud& cloud, int bins = 32);

}  // namespace ascn
