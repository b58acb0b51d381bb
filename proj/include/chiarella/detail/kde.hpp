#pragma once

// Binned Gaussian KDE on a regular grid, smoothed in the frequency domain
// (linear binning, zero-padded FFT, multiplication by the Gaussian
// characteristic function), plus mode counting.

#include <algorithm>
#include <complex>
#include <cstddef>
#include <vector>

#include "chiarella/detail/fft.hpp"

namespace chiarella::detail {

struct KdeGrid {
    double lo = 0.0;
    double dx = 0.0;
    std::vector<double> density;
};

inline KdeGrid binned_kde(const std::vector<double>& sample, double h, std::size_t grid_n) {
    const auto [mn_it, mx_it] = std::minmax_element(sample.begin(), sample.end());
    const double lo = *mn_it - 3.0 * h;
    const double hi = *mx_it + 3.0 * h;
    const double dx = (hi - lo) / static_cast<double>(grid_n - 1);

    const std::size_t padded = 2 * grid_n;
    std::vector<std::complex<double>> buf(padded, 0.0);
    for (double x : sample) {
        const double pos = (x - lo) / dx;
        auto i0 = static_cast<std::size_t>(pos);
        if (i0 >= grid_n - 1) i0 = grid_n - 2;
        const double w = pos - static_cast<double>(i0);
        buf[i0] += 1.0 - w;
        buf[i0 + 1] += w;
    }
    fft_radix2(buf, false);
    constexpr double two_pi = 6.283185307179586476925286766559005768;
    for (std::size_t j = 0; j < padded; ++j) {
        // frequency in cycles per unit length, aliased to [-N/2, N/2)
        const double fj = (j <= padded / 2) ? static_cast<double>(j)
                                            : static_cast<double>(j) - static_cast<double>(padded);
        const double w = two_pi * fj / (static_cast<double>(padded) * dx);
        buf[j] *= std::exp(-0.5 * h * h * w * w);
    }
    fft_radix2(buf, true);

    KdeGrid out;
    out.lo = lo;
    out.dx = dx;
    out.density.resize(grid_n);
    const double norm = 1.0 / (static_cast<double>(sample.size()) * dx);
    for (std::size_t i = 0; i < grid_n; ++i) out.density[i] = buf[i].real() * norm;
    return out;
}

// Local maxima of the gridded density, ignoring float-noise bumps below
// 1e-10 of the peak and the grid boundary.
inline int count_modes(const std::vector<double>& dens) {
    double peak = 0.0;
    for (double d : dens) peak = std::max(peak, d);
    const double floor = peak * 1e-10;
    int cnt = 0;
    for (std::size_t i = 1; i + 1 < dens.size(); ++i)
        if (dens[i] > floor && dens[i - 1] < dens[i] && dens[i] >= dens[i + 1]) ++cnt;
    return cnt;
}

} // namespace chiarella::detail
