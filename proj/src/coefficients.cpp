#include "ibflow/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace ibflow {

ForceStats compute_coefficients(const std::vector<ForceSample>& history, const FluidParams& fp,
                                double transient_cutoff, double min_window) {
    const double t_scale = fp.u_inf / fp.diameter;  // t* = t * U / D
    const double c_scale = 2.0 / (fp.rho * fp.u_inf * fp.u_inf * fp.diameter);

    std::vector<double> t_star, cd, cl;
    for (const ForceSample& s : history) {
        const double ts = s.t * t_scale;
        if (ts < transient_cutoff) continue;
        t_star.push_back(ts);
        cd.push_back(s.fx * c_scale);
        cl.push_back(s.fy * c_scale);
    }
    if (t_star.size() < 16 || t_star.back() - t_star.front() < min_window)
        throw InsufficientDataError("force history window too short for coefficient statistics");

    ForceStats st;
    st.n_samples = static_cast<int>(t_star.size());
    st.window_t0 = t_star.front();
    st.window_t1 = t_star.back();

    double cd_sum = 0.0;
    double cl_min = cl.front(), cl_max = cl.front();
    for (size_t i = 0; i < cd.size(); ++i) {
        cd_sum += cd[i];
        cl_min = std::min(cl_min, cl[i]);
        cl_max = std::max(cl_max, cl[i]);
    }
    st.cd_mean = cd_sum / cd.size();
    st.cl_amp = 0.5 * (cl_max - cl_min);

    // Spectral peak of the demeaned lift at the window's native resolution.
    const size_t n = cl.size();
    const double T = t_star.back() - t_star.front();
    double cl_mean = 0.0;
    for (double v : cl) cl_mean += v;
    cl_mean /= n;

    const double f_lo = 0.03, f_hi = 0.6;
    const int m_lo = std::max(1, static_cast<int>(std::ceil(f_lo * T)));
    const int m_hi = std::min(static_cast<int>(n / 2), static_cast<int>(std::floor(f_hi * T)));
    int m_best = -1;
    double best_mag = 0.0;
    std::vector<double> mags(std::max(m_hi + 2, 0), 0.0);
    for (int m = std::max(1, m_lo - 1); m <= m_hi + 1 && m <= static_cast<int>(n / 2); ++m) {
        std::complex<double> acc = 0.0;
        const double w = 2.0 * M_PI * m / T;
        for (size_t i = 0; i < n; ++i)
            acc += (cl[i] - cl_mean) * std::polar(1.0, -w * (t_star[i] - t_star.front()));
        mags[m] = std::abs(acc);
        if (m >= m_lo && m <= m_hi && mags[m] > best_mag) {
            best_mag = mags[m];
            m_best = m;
        }
    }

    const double flat_threshold = 1e-9 * n * std::max(1.0, std::abs(cl_mean)) + 1e-12;
    if (m_best > 0 && best_mag > flat_threshold && st.cl_amp > 1e-12) {
        double refined = m_best;
        if (m_best - 1 >= 1 && m_best + 1 < static_cast<int>(mags.size())) {
            const double a = mags[m_best - 1], b = mags[m_best], c = mags[m_best + 1];
            const double denom = a - 2.0 * b + c;
            if (std::abs(denom) > 1e-300) refined += 0.5 * (a - c) / denom;
        }
        st.strouhal = refined / T;
    }
    return st;
}

double require_strouhal(const ForceStats& stats) {
    if (!stats.strouhal)
        throw InsufficientDataError("lift signal has no usable spectral peak; St undefined");
    return *stats.strouhal;
}

} // namespace ibflow
