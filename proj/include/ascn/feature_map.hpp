#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ascn/error.hpp"

namespace ascn {

// Row-major matrix of per-point features: one row per point, one column per
// channel. Deliberately minimal; heavy lifting lives in the kernels.
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    // Keeps only the listed rows, in the order given.
    FeatureMap select_rows(const std::vector<int>& ids) const {
        FeatureMap out(ids.size(), cols_);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= rows_)
                throw DimensionMismatch("row selection out of range");
            const auto src = row(static_cast<std::size_t>(ids[i]));
            std::copy(src.begin(), src.end(), out.row(i).begin());
        }
        return out;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

}  // namespace ascn
