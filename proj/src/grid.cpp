#include "ibflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ibflow {

Grid::Grid(std::vector<double> dx, std::vector<double> dy, double x0, double y0, DomainTag tag)
    : dx_(std::move(dx)), dy_(std::move(dy)), x0_(x0), y0_(y0), tag_(tag) {
    require(!dx_.empty() && !dy_.empty(), "grid needs at least one cell per axis");
    for (double h : dx_) require(h > 0.0, "grid spacing must be positive");
    for (double h : dy_) require(h > 0.0, "grid spacing must be positive");

    xf_.resize(dx_.size() + 1);
    xf_[0] = x0_;
    for (size_t i = 0; i < dx_.size(); ++i) xf_[i + 1] = xf_[i] + dx_[i];
    yf_.resize(dy_.size() + 1);
    yf_[0] = y0_;
    for (size_t j = 0; j < dy_.size(); ++j) yf_[j + 1] = yf_[j] + dy_[j];

    xc_.resize(dx_.size());
    for (size_t i = 0; i < dx_.size(); ++i) xc_[i] = 0.5 * (xf_[i] + xf_[i + 1]);
    yc_.resize(dy_.size());
    for (size_t j = 0; j < dy_.size(); ++j) yc_[j] = 0.5 * (yf_[j] + yf_[j + 1]);
}

Grid Grid::uniform(int nx, int ny, double x0, double y0, double hx, double hy, DomainTag tag) {
    return Grid(std::vector<double>(nx, hx), std::vector<double>(ny, hy), x0, y0, tag);
}

double Grid::min_spacing() const {
    double m = std::numeric_limits<double>::max();
    for (double h : dx_) m = std::min(m, h);
    for (double h : dy_) m = std::min(m, h);
    return m;
}

double Grid::max_spacing() const {
    double m = 0.0;
    for (double h : dx_) m = std::max(m, h);
    for (double h : dy_) m = std::max(m, h);
    return m;
}

bool Grid::is_uniform(double rel_tol) const {
    const double lo = min_spacing();
    const double hi = max_spacing();
    return (hi - lo) <= rel_tol * hi;
}

namespace {

// Geometric ramp of n cells growing from h_start by factor g, capped at h_cap.
double ramp_length(double h_start, double g, double h_cap, int n) {
    double len = 0.0, h = h_start;
    for (int k = 0; k < n; ++k) {
        h = std::min(h * g, h_cap);
        len += h;
    }
    return len;
}

std::vector<double> ramp_cells(double h_start, double g, double h_cap, int n) {
    std::vector<double> out;
    out.reserve(n);
    double h = h_start;
    for (int k = 0; k < n; ++k) {
        h = std::min(h * g, h_cap);
        out.push_back(h);
    }
    return out;
}

// Fills a gap of length len adjacent to a band with spacing h_start, growing
// outward. Exact fill is found by bisecting the growth factor for a fixed cell
// count; falls back to a uniform split when no geometric profile fits.
std::vector<double> fill_gap(double len, double h_start, double ratio, double h_cap) {
    if (len <= 0.0) return {};
    const double h0 = std::min(h_start, h_cap);
    if (len <= h0 * (1.0 + 1e-12)) return {len};

    // Minimal cell count at maximal growth.
    int n_min = 0;
    {
        double acc = 0.0, h = h0;
        while (acc < len && n_min < 100000) {
            h = std::min(h * ratio, h_cap);
            acc += h;
            ++n_min;
        }
    }
    for (int n = n_min; n <= n_min + 3; ++n) {
        const double lo_len = ramp_length(h0, 1.0, h_cap, n);
        const double hi_len = ramp_length(h0, ratio, h_cap, n);
        if (lo_len > len || hi_len < len) continue;
        double lo = 1.0, hi = ratio;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (ramp_length(h0, mid, h_cap, n) < len)
                lo = mid;
            else
                hi = mid;
        }
        std::vector<double> cells = ramp_cells(h0, 0.5 * (lo + hi), h_cap, n);
        const double total = std::accumulate(cells.begin(), cells.end(), 0.0);
        const double scale = len / total;
        for (double& c : cells) c *= scale;
        return cells;
    }
    // Uniform fallback, never growing past the neighbor spacing.
    const int n = static_cast<int>(std::ceil(len / h0 - 1e-12));
    return std::vector<double>(std::max(n, 1), len / std::max(n, 1));
}

} // namespace

std::vector<double> build_axis_spacings(const AxisSpec& spec) {
    if (spec.x1 <= spec.x0) throw ConfigError("axis extent must be positive");
    if (spec.stretch_ratio < 1.0) throw ConfigError("stretch ratio must be >= 1");

    // Elementary intervals: band edges partition the covered part of the axis;
    // the finest overlapping band wins.
    std::vector<double> edges;
    for (const auto& b : spec.bands) {
        if (b.h <= 0.0) throw ConfigError("band spacing must be positive");
        if (b.a < spec.x0 - 1e-12 || b.b > spec.x1 + 1e-12 || b.b <= b.a)
            throw ConfigError("band outside axis or empty");
        edges.push_back(b.a);
        edges.push_back(b.b);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                edges.end());

    struct Piece {
        double a, b, h;  // h == 0 marks a gap
    };
    std::vector<Piece> pieces;
    double cursor = spec.x0;
    auto target_h = [&](double xm) {
        double h = 0.0;
        for (const auto& b : spec.bands)
            if (xm > b.a - 1e-12 && xm < b.b + 1e-12) h = (h == 0.0) ? b.h : std::min(h, b.h);
        return h;
    };
    std::vector<double> cuts = edges;
    cuts.push_back(spec.x1);
    for (double e : cuts) {
        if (e <= cursor + 1e-12) continue;
        const double mid = 0.5 * (cursor + e);
        pieces.push_back({cursor, e, target_h(mid)});
        cursor = e;
    }
    if (pieces.empty()) pieces.push_back({spec.x0, spec.x1, 0.0});

    std::vector<double> spacings;
    for (size_t p = 0; p < pieces.size(); ++p) {
        const Piece& pc = pieces[p];
        const double len = pc.b - pc.a;
        if (pc.h > 0.0) {
            const double n_real = len / pc.h;
            const int n = static_cast<int>(std::llround(n_real));
            if (n < 1 || std::abs(n_real - n) > 1e-6)
                throw ConfigError("uniform band extent is not a multiple of its spacing");
            for (int k = 0; k < n; ++k) spacings.push_back(len / n);
        } else {
            // Gap: ramp outward from the adjacent band. Interior gaps between
            // two bands ramp from the finer side; edge gaps ramp away from the
            // single neighbor.
            const bool has_left = p > 0 && pieces[p - 1].h > 0.0;
            const bool has_right = p + 1 < pieces.size() && pieces[p + 1].h > 0.0;
            double h_from;
            bool reverse = false;
            if (has_left && has_right) {
                h_from = std::min(pieces[p - 1].h, pieces[p + 1].h);
            } else if (has_left) {
                h_from = pieces[p - 1].h;
            } else if (has_right) {
                h_from = pieces[p + 1].h;
                reverse = true;
            } else {
                h_from = std::min(len, spec.h_cap);
            }
            std::vector<double> cells = fill_gap(len, h_from, spec.stretch_ratio, spec.h_cap);
            if (reverse) std::reverse(cells.begin(), cells.end());
            spacings.insert(spacings.end(), cells.begin(), cells.end());
        }
    }

    // Pin the cumulative extent exactly.
    const double total = std::accumulate(spacings.begin(), spacings.end(), 0.0);
    const double want = spec.x1 - spec.x0;
    const double scale = want / total;
    for (double& c : spacings) c *= scale;
    return spacings;
}

} // namespace ibflow
