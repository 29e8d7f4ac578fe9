#include "ascn/eigen3.hpp"

#include <algorithm>
#include <cmath>

#include "ascn/error.hpp"

namespace ascn {

Mat3 covariance3(const std::vector<Point3>& points, const std::vector<int>& ids) {
    if (ids.empty()) throw InvalidParam("covariance of an empty point set");

    double mx = 0.0, my = 0.0, mz = 0.0;
    for (int id : ids) {
        const Point3& p = points[static_cast<std::size_t>(id)];
        mx += p.x; my += p.y; mz += p.z;
    }
    const double inv = 1.0 / static_cast<double>(ids.size());
    mx *= inv; my *= inv; mz *= inv;

    Mat3 c = Mat3::zero();
    for (int id : ids) {
        const Point3& p = points[static_cast<std::size_t>(id)];
        const double dx = p.x - mx, dy = p.y - my, dz = p.z - mz;
        c(0, 0) += dx * dx; c(0, 1) += dx * dy; c(0, 2) += dx * dz;
        c(1, 1) += dy * dy; c(1, 2) += dy * dz;
        c(2, 2) += dz * dz;
    }
    for (int r = 0; r < 3; ++r)
        for (int col = r; col < 3; ++col) c(r, col) *= inv;
    c(1, 0) = c(0, 1);
    c(2, 0) = c(0, 2);
    c(2, 1) = c(1, 2);
    return c;
}

Mat3 covariance3(const std::vector<Point3>& points) {
    std::vector<int> ids(points.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    return covariance3(points, ids);
}

EigenSym3 eig_sym3(const Mat3& m) {
    // Cyclic Jacobi: sweep the three off-diagonal entries, rotating each to
    // zero, until the off-diagonal mass is negligible against the diagonal.
    Mat3 a = m;
    Mat3 v = Mat3::zero();
    v(0, 0) = v(1, 1) = v(2, 2) = 1.0;

    auto off2 = [&]() {
        return a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    };
    const double scale = std::abs(a(0, 0)) + std::abs(a(1, 1)) + std::abs(a(2, 2)) +
                         2.0 * (std::abs(a(0, 1)) + std::abs(a(0, 2)) + std::abs(a(1, 2)));
    const double tol = scale > 0.0 ? 1e-30 * scale * scale : 0.0;

    for (int sweep = 0; sweep < 64 && off2() > tol; ++sweep) {
        static constexpr int kPairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
        for (const auto& pq : kPairs) {
            const int p = pq[0], q = pq[1];
            const double apq = a(p, q);
            if (apq == 0.0) continue;

            const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
            // Smaller-angle root, stable form.
            const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                             (std::abs(theta) + std::sqrt(theta * theta + 1.0));
            const double c = 1.0 / std::sqrt(t * t + 1.0);
            const double s = t * c;

            const double app = a(p, p), aqq = a(q, q);
            a(p, p) = c * c * app - 2.0 * s * c * apq + s * s * aqq;
            a(q, q) = s * s * app + 2.0 * s * c * apq + c * c * aqq;
            a(p, q) = a(q, p) = 0.0;
            const int r = 3 - p - q;  // the remaining axis
            const double arp = a(r, p), arq = a(r, q);
            a(r, p) = a(p, r) = c * arp - s * arq;
            a(r, q) = a(q, r) = s * arp + c * arq;

            for (int i = 0; i < 3; ++i) {
                const double vip = v(i, p), viq = v(i, q);
                v(i, p) = c * vip - s * viq;
                v(i, q) = s * vip + c * viq;
            }
        }
    }

    // Sort descending, keeping vectors aligned.
    std::array<int, 3> ord{0, 1, 2};
    std::sort(ord.begin(), ord.end(),
              [&](int x, int y) { return a(x, x) > a(y, y); });

    EigenSym3 out;
    for (int j = 0; j < 3; ++j) {
        out.values[static_cast<std::size_t>(j)] = a(ord[static_cast<std::size_t>(j)], ord[static_cast<std::size_t>(j)]);
        for (int i = 0; i < 3; ++i) out.vectors(i, j) = v(i, ord[static_cast<std::size_t>(j)]);
    }
    return out;
}

}  // namespace ascn
