#pragma once

#include <vector>

#include "ibflow/array2d.hpp"

namespace ibflow {

/// Dense (batch, channel, height, width) tensor of doubles.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, double fill = 0.0)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<size_t>(n_) * c_ * h_ * w_, fill) {}

    static Tensor scalar(double v) {
        Tensor t(1, 1, 1, 1);
        t.data[0] = v;
        return t;
    }

    static Tensor from_array(const Array2D& a) {
        Tensor t(1, 1, a.rows(), a.cols());
        t.data = a.raw();
        return t;
    }

    Array2D to_array() const {
        Array2D a(h, w);
        a.raw() = data;
        return a;
    }

    size_t size() const { return data.size(); }

    double& at(int in, int ic, int ih, int iw) {
        return data[((static_cast<size_t>(in) * c + ic) * h + ih) * w + iw];
    }
    double at(int in, int ic, int ih, int iw) const {
        return data[((static_cast<size_t>(in) * c + ic) * h + ih) * w + iw];
    }

    double* plane(int in, int ic) { return data.data() + (static_cast<size_t>(in) * c + ic) * h * w; }
    const double* plane(int in, int ic) const {
        return data.data() + (static_cast<size_t>(in) * c + ic) * h * w;
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

} // namespace ibflow
