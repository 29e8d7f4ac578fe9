#pragma once

#include <array>
#include <vector>

#include "ascn/cloud.hpp"

namespace ascn {

// Dense 3x3 matrix, row-major. Only symmetric matrices are meaningful for
// the solver below.
struct Mat3 {
    std::array<std::array<double, 3>, 3> a{};

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]; }

    static Mat3 zero() { return Mat3{}; }
};

// Sample covariance of a set of points (1/K normalization, K = ids.size()),
// centered on the set's own mean.
Mat3 covariance3(const std::vector<Point3>& points, const std::vector<int>& ids);

// Covariance of the whole list.
Mat3 covariance3(const std::vector<Point3>& points);

// Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
// Eigenvalues come back sorted descending; columns of `vectors` line up with
// them. Accurate to ~1e-14 relative for well-scaled inputs.
struct EigenSym3 {
    std::array<double, 3> values{};   // descending
    Mat3 vectors;                     // column j pairs with values[j]
};
EigenSym3 eig_sym3(const Mat3& m);

}  // namespace ascn
