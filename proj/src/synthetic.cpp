#include "ascn/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "ascn/rng.hpp"

namespace ascn {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec3 yaw_rotate(const Vec3& p, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * p.x - s * p.y, s * p.x + c * p.y, p.z};
}

// Uniform direction on the unit sphere.
Vec3 unit_sphere_dir(Rng& rng) {
    while (true) {
        Vec3 v{rng.normal(), rng.normal(), rng.normal()};
        const double n = v.norm();
        if (n > 1e-12) return v * (1.0 / n);
    }
}

}  // namespace

ShapeKind shape_kind_from_name(const std::string& name) {
    if (name == "plane") return ShapeKind::plane;
    if (name == "sphere") return ShapeKind::sphere;
    if (name == "line") return ShapeKind::line;
    if (name == "box") return ShapeKind::box;
    if (name == "cylinder") return ShapeKind::cylinder;
    throw InvalidParam("unknown shape kind: " + name);
}

const char* shape_kind_name(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::plane: return "plane";
        case ShapeKind::sphere: return "sphere";
        case ShapeKind::line: return "line";
        case ShapeKind::box: return "box";
        case ShapeKind::cylinder: return "cylinder";
    }
    return "?";
}

std::vector<int> assign_elevation_rings(const PointCloud& cloud, int bins) {
    const Point3 c = cloud.centroid();
    std::vector<int> rings(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3 d = cloud.points[i] - c;
        const double horiz = std::sqrt(d.x * d.x + d.y * d.y);
        const double elev = std::atan2(d.z, horiz);  // [-pi/2, pi/2]
        int bin = static_cast<int>(std::floor((elev + kPi / 2.0) / kPi * bins));
        rings[i] = std::clamp(bin, 0, bins - 1);
    }
    return rings;
}

PointCloud generate_shape(ShapeKind kind, int n_points, double noise_sigma, double scale,
                          std::uint64_t seed) {
    if (n_points < 8) throw InvalidParam("n_points must be >= 8");
    if (noise_sigma < 0.0) throw InvalidParam("noise_sigma must be >= 0");
    if (!(scale > 0.0)) throw InvalidParam("scale must be > 0");

    Rng rng(mix64(seed, 0x5348u));
    PointCloud cloud;
    cloud.points.reserve(static_cast<std::size_t>(n_points));

    // Shapes sit upright (z is the LiDAR vertical) with a random yaw, like
    // objects seen by a spinning scanner.
    const double yaw = rng.uniform(0.0, 2.0 * kPi);

    switch (kind) {
        case ShapeKind::plane:
            // Horizontal square panel of side `scale` in z = 0; the yaw spin
            // never touches z, so noise-free panels stay exactly planar.
            for (int i = 0; i < n_points; ++i) {
                Vec3 p{rng.uniform(-0.5, 0.5) * scale, rng.uniform(-0.5, 0.5) * scale, 0.0};
                cloud.points.push_back(yaw_rotate(p, yaw));
            }
            break;
        case ShapeKind::sphere:
            // Antithetic pairs keep the centroid exactly at the origin for
            // even counts (the +p / -p coordinate sums cancel bitwise).
            for (int i = 0; i < n_points; i += 2) {
                const Vec3 u = unit_sphere_dir(rng) * scale;
                cloud.points.push_back(u);
                if (i + 1 < n_points) cloud.points.push_back(u * -1.0);
            }
            break;
        case ShapeKind::line:
            // Vertical segment of length `scale`.
            for (int i = 0; i < n_points; ++i)
                cloud.points.push_back({0.0, 0.0, rng.uniform(-0.5, 0.5) * scale});
            break;
        case ShapeKind::box: {
            // Surface of an upright box, faces weighted by area.
            const double w = scale, d = 0.6 * scale, h = 0.8 * scale;
            const double area_xy = w * d, area_xz = w * h, area_yz = d * h;
            const double total = 2.0 * (area_xy + area_xz + area_yz);
            for (int i = 0; i < n_points; ++i) {
                const double pick = rng.uniform(0.0, total);
                const double sign = rng.uniform() < 0.5 ? -0.5 : 0.5;
                Vec3 p;
                if (pick < 2.0 * area_xy) {
                    p = {rng.uniform(-0.5, 0.5) * w, rng.uniform(-0.5, 0.5) * d, sign * h};
                } else if (pick < 2.0 * (area_xy + area_xz)) {
                    p = {rng.uniform(-0.5, 0.5) * w, sign * d, rng.uniform(-0.5, 0.5) * h};
                } else {
                    p = {sign * w, rng.uniform(-0.5, 0.5) * d, rng.uniform(-0.5, 0.5) * h};
                }
                cloud.points.push_back(yaw_rotate(p, yaw));
            }
            break;
        }
        case ShapeKind::cylinder: {
            // Lateral surface, radius scale/2, height scale.
            const double r = 0.5 * scale;
            for (int i = 0; i < n_points; ++i) {
                const double a = rng.uniform(0.0, 2.0 * kPi);
                cloud.points.push_back(
                    {r * std::cos(a), r * std::sin(a), rng.uniform(-0.5, 0.5) * scale});
            }
            break;
        }
    }

    if (noise_sigma > 0.0) {
        for (auto& p : cloud.points) {
            p.x += rng.normal(noise_sigma);
            p.y += rng.normal(noise_sigma);
            p.z += rng.normal(noise_sigma);
        }
    }

    cloud.ring = assign_elevation_rings(cloud);
    return cloud;
}

Dataset generate_dataset(const DatasetSpec& spec, std::uint64_t seed) {
    if (spec.classes.size() < 2) throw InvalidParam("dataset spec needs at least 2 classes");

    Dataset ds;
    nlohmann::json spec_json = nlohmann::json::array();
    for (std::size_t ci = 0; ci < spec.classes.size(); ++ci) {
        const ClassSpec& cs = spec.classes[ci];
        if (cs.count < 1) throw InvalidParam("class count must be >= 1");
        if (cs.points_min < 8 || cs.points_max < cs.points_min)
            throw InvalidParam("bad point count range");
        if (cs.noise_min < 0.0 || cs.noise_max < cs.noise_min)
            throw InvalidParam("bad noise range");
        if (!(cs.scale_min > 0.0) || cs.scale_max < cs.scale_min)
            throw InvalidParam("bad scale range");

        ds.class_names.push_back(cs.name);
        spec_json.push_back({{"name", cs.name},
                             {"kind", shape_kind_name(cs.kind)},
                             {"count", cs.count},
                             {"points", {cs.points_min, cs.points_max}},
                             {"noise", {cs.noise_min, cs.noise_max}},
                             {"scale", {cs.scale_min, cs.scale_max}}});

        for (int item = 0; item < cs.count; ++item) {
            Rng rng(mix64(seed, ci, static_cast<std::uint64_t>(item)));
            const int n = cs.points_min +
                          (cs.points_max > cs.points_min ? rng.below_int(cs.points_max - cs.points_min + 1) : 0);
            const double noise = rng.uniform(cs.noise_min, cs.noise_max);
            const double scale = rng.uniform(cs.scale_min, cs.scale_max);
            LabeledCloud lc;
            lc.label = static_cast<int>(ci);
            lc.cloud = generate_shape(cs.kind, n, noise, scale,
                                      mix64(seed, ci, static_cast<std::uint64_t>(item), 0x47u));
            ds.items.push_back(std::move(lc));
        }
    }
    ds.metadata["generator"] = "synthetic";
    ds.metadata["seed"] = std::to_string(seed);
    ds.metadata["spec"] = spec_json.dump();
    ds.validate();
    return ds;
}

PointCloud decimate_density(const PointCloud& cloud, int keep_every, std::uint64_t seed) {
    if (keep_every < 1) throw InvalidParam("keep_every must be >= 1");
    cloud.validate();
    if (keep_every == 1) return cloud;

    PointCloud out;
    if (cloud.has_ring()) {
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            if (cloud.ring[i] % keep_every == 0) {
                out.points.push_back(cloud.points[i]);
                out.ring.push_back(cloud.ring[i]);
            }
        }
        if (out.points.empty())
            throw DegenerateCloud("scanline decimation removed every point");
    } else {
        const std::size_t n = cloud.size();
        const std::size_t keep = (n + static_cast<std::size_t>(keep_every) - 1) /
                                 static_cast<std::size_t>(keep_every);
        // Seeded Fisher-Yates prefix, then restore original point order.
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        Rng rng(mix64(seed, 0xDEC1u));
        for (std::size_t i = 0; i < keep; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(keep);
        std::sort(idx.begin(), idx.end());
        for (std::size_t i : idx) out.points.push_back(cloud.points[i]);
    }
    return out;
}

Dataset decimate_dataset(const Dataset& ds, int keep_every, std::uint64_t seed) {
    Dataset out;
    out.class_names = ds.class_names;
    out.metadata = ds.metadata;
    out.metadata["density"] = "decimated_x" + std::to_string(keep_every);
    for (std::size_t i = 0; i < ds.items.size(); ++i) {
        LabeledCloud lc;
        lc.label = ds.items[i].label;
        lc.cloud = decimate_density(ds.items[i].cloud, keep_every, mix64(seed, i));
        out.items.push_back(std::move(lc));
    }
    return out;
}

PointCloud center_cloud(const PointCloud& cloud) {
    cloud.validate();
    const Point3 c = cloud.centroid();
    PointCloud out = cloud;
    for (auto& p : out.points) p = p - c;
    return out;
}

}  // namespace ascn
