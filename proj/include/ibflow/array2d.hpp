#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ibflow/errors.hpp"

namespace ibflow {

/// Dense row-major 2D array of doubles. Rows index y (j), columns index x (i).
class Array2D {
public:
    Array2D() = default;
    Array2D(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return data_.size(); }

    double& operator()(int j, int i) { return data_[static_cast<size_t>(j) * cols_ + i]; }
    double operator()(int j, int i) const { return data_[static_cast<size_t>(j) * cols_ + i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Array2D& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    bool operator==(const Array2D& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

} // namespace ibflow
