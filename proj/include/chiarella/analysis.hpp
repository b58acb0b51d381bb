#pragma once

// Trend/value regressions, mispricing-distribution statistics, the Silverman
// bimodality test with Hall-York calibration, and the discounted-dividend
// benchmark value.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "chiarella/detail/kde.hpp"
#include "chiarella/detail/linalg.hpp"
#include "chiarella/detail/parallel.hpp"
#include "chiarella/detail/special.hpp"
#include "chiarella/rng.hpp"
#include "chiarella/series.hpp"

namespace chiarella {

struct RegressionReport {
    std::vector<std::string> terms;
    std::map<std::string, double> coefficients;
    std::map<std::string, double> pvalues;
    double adj_r2 = 0.0;
    std::size_t n = 0;
};

// OLS of y on a subset of {const, m, m2, m3, d, d3}, all series aligned on
// the same index. Homoskedastic t-test p-values, adjusted R^2. An intercept
// is always fitted; if `terms` omits "const" it is prepended.
inline RegressionReport regress_effects(const std::vector<double>& y, const std::vector<double>& m,
                                        const std::vector<double>& d,
                                        std::vector<std::string> terms) {
    if (terms.empty()) throw std::invalid_argument("regress_effects: empty term list");
    if (std::find(terms.begin(), terms.end(), "const") == terms.end())
        terms.insert(terms.begin(), "const");
    const std::size_t n = y.size();

    auto column = [&](const std::string& t, std::size_t i) -> double {
        if (t == "const") return 1.0;
        if (t == "m") return m[i];
        if (t == "m2") return m[i] * m[i];
        if (t == "m3") return m[i] * m[i] * m[i];
        if (t == "d") return d[i];
        if (t == "d3") return d[i] * d[i] * d[i];
        throw std::invalid_argument("regress_effects: unknown term " + t);
    };
    for (const auto& t : terms)
        if (t != "const" && t != "m" && t != "m2" && t != "m3" && t != "d" && t != "d3")
            throw std::invalid_argument("regress_effects: unknown term " + t);
    const std::size_t k = terms.size();
    if (n <= k + 1) throw std::invalid_argument("regress_effects: not enough observations");
    if ((std::find(terms.begin(), terms.end(), "m") != terms.end() ||
         std::find(terms.begin(), terms.end(), "m2") != terms.end() ||
         std::find(terms.begin(), terms.end(), "m3") != terms.end()) &&
        m.size() != n)
        throw std::invalid_argument("regress_effects: m series misaligned");
    if ((std::find(terms.begin(), terms.end(), "d") != terms.end() ||
         std::find(terms.begin(), terms.end(), "d3") != terms.end()) &&
        d.size() != n)
        throw std::invalid_argument("regress_effects: d series misaligned");

    // normal equations
    std::vector<double> xtx(k * k, 0.0), xty(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < k; ++a) {
            const double xa = column(terms[a], i);
            xty[a] += xa * y[i];
            for (std::size_t b = a; b < k; ++b) xtx[a * k + b] += xa * column(terms[b], i);
        }
    }
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < a; ++b) xtx[a * k + b] = xtx[b * k + a];

    std::vector<double> xtx_inv = detail::invert_spd(xtx, k);
    if (xtx_inv.empty()) throw std::runtime_error("regress_effects: rank-deficient design");
    std::vector<double> beta(k, 0.0);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) beta[a] += xtx_inv[a * k + b] * xty[b];

    double ss_res = 0.0, ss_tot = 0.0, ybar = 0.0;
    for (double v : y) ybar += v;
    ybar /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t a = 0; a < k; ++a) fit += beta[a] * column(terms[a], i);
        ss_res += (y[i] - fit) * (y[i] - fit);
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
    }
    const double dof = static_cast<double>(n - k);
    const double sigma2 = ss_res / dof;
    const double r2 = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;

    RegressionReport rep;
    rep.terms = terms;
    rep.n = n;
    rep.adj_r2 = 1.0 - (1.0 - r2) * static_cast<double>(n - 1) / dof;
    for (std::size_t a = 0; a < k; ++a) {
        rep.coefficients[terms[a]] = beta[a];
        const double se = std::sqrt(std::max(sigma2 * xtx_inv[a * k + a], 0.0));
        double p;
        if (se == 0.0)
            p = (beta[a] == 0.0) ? 1.0 : 0.0;
        else
            p = detail::student_t_two_sided_p(beta[a] / se, dof);
        rep.pvalues[terms[a]] = p;
    }
    return rep;
}

struct DistortionStats {
    double variance = 0.0;
    double rms = 0.0; // sqrt(variance)
    std::vector<double> hist_edges;
    std::vector<std::size_t> hist_counts;
    std::map<int, double> silverman; // k -> p-value, filled by the caller
};

inline DistortionStats distortion_stats(const std::vector<double>& p, const std::vector<double>& v,
                                        std::size_t bins = 50) {
    if (p.size() != v.size() || p.empty())
        throw std::invalid_argument("distortion_stats: misaligned series");
    if (bins == 0) throw std::invalid_argument("distortion_stats: bins must be > 0");
    std::vector<double> delta(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) delta[i] = p[i] - v[i];

    double mean = 0.0;
    for (double d : delta) mean += d;
    mean /= static_cast<double>(delta.size());
    double var = 0.0;
    for (double d : delta) var += (d - mean) * (d - mean);
    var /= static_cast<double>(delta.size());

    DistortionStats out;
    out.variance = var;
    out.rms = std::sqrt(var);

    auto [mn, mx] = std::minmax_element(delta.begin(), delta.end());
    double lo = *mn, hi = *mx;
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    out.hist_edges.resize(bins + 1);
    out.hist_counts.assign(bins, 0);
    const double w = (hi - lo) / static_cast<double>(bins);
    for (std::size_t b = 0; b <= bins; ++b) out.hist_edges[b] = lo + w * static_cast<double>(b);
    for (double d : delta) {
        auto b = static_cast<std::size_t>((d - lo) / w);
        if (b >= bins) b = bins - 1;
        ++out.hist_counts[b];
    }
    return out;
}

struct SilvermanOptions {
    std::size_t grid = 2048;
    double bisect_rel_tol = 1e-4;
    bool hall_york = true;  // applied at k = 1 only
    double hall_york_level = 0.05;
    unsigned workers = 1;
};

namespace detail {

// Hall-York calibration factor lambda(alpha) (rational fit; 1.1294 at 5%).
inline double hall_york_lambda(double alpha) {
    const double num = 0.94029 * alpha * alpha * alpha - 1.59914 * alpha * alpha +
                       0.17695 * alpha + 0.48971;
    const double den = alpha * alpha * alpha - 1.77793 * alpha * alpha + 0.36162 * alpha + 0.42423;
    return num / den;
}

inline int modes_at(const std::vector<double>& sample, double h, std::size_t grid) {
    return count_modes(binned_kde(sample, h, grid).density);
}

} // namespace detail

// Smallest Gaussian-KDE bandwidth with at most k modes (bisection; mode
// count is monotone in the bandwidth for a Gaussian kernel).
inline double critical_bandwidth(const std::vector<double>& sample, int k,
                                 const SilvermanOptions& opts = {}) {
    double mean = 0.0;
    for (double x : sample) mean += x;
    mean /= static_cast<double>(sample.size());
    double sd = 0.0;
    for (double x : sample) sd += (x - mean) * (x - mean);
    sd = std::sqrt(sd / static_cast<double>(sample.size()));
    if (!(sd > 0.0)) throw std::invalid_argument("critical_bandwidth: degenerate sample");

    double hi = sd;
    while (detail::modes_at(sample, hi, opts.grid) > k) hi *= 2.0;
    double lo = 0.5 * hi;
    while (detail::modes_at(sample, lo, opts.grid) <= k) {
        lo *= 0.5;
        if (lo < 1e-9 * sd) return lo;
    }
    while (hi - lo > opts.bisect_rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (detail::modes_at(sample, mid, opts.grid) <= k)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

// Silverman bootstrap test of "at most k modes". The smoothed bootstrap
// resamples with Gaussian noise at the critical bandwidth and rescales to
// preserve the sample variance; at k = 1 the Hall-York factor widens the
// bootstrap noise bandwidth (the asymptotic-threshold form of the
// correction measures anti-conservative at n ~ 1000).
inline double silverman_test(const std::vector<double>& sample, int k, int B, std::uint64_t seed,
                             const SilvermanOptions& opts = {}) {
    if (k < 1) throw std::invalid_argument("silverman_test: k must be >= 1");
    if (sample.size() < 50) throw std::invalid_argument("silverman_test: sample size must be >= 50");
    if (B < 200) throw std::invalid_argument("silverman_test: B must be >= 200");

    const double h = critical_bandwidth(sample, k, opts);
    const double h_noise =
        (opts.hall_york && k == 1) ? detail::hall_york_lambda(opts.hall_york_level) * h : h;

    const std::size_t n = sample.size();
    double mean = 0.0;
    for (double x : sample) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : sample) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n);
    const double shrink = 1.0 / std::sqrt(1.0 + h_noise * h_noise / var);

    std::vector<int> exceed(static_cast<std::size_t>(B), 0);
    detail::parallel_for(static_cast<std::size_t>(B), opts.workers, [&](std::size_t b) {
        Rng rng = Rng::substream(seed, b);
        std::vector<double> y(n);
        double ybar = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = sample[rng.below(n)] + h_noise * rng.gaussian();
            ybar += y[i];
        }
        ybar /= static_cast<double>(n);
        for (auto& v : y) v = ybar + (v - ybar) * shrink;
        exceed[b] = detail::modes_at(y, h, opts.grid) > k;
    });
    int total = 0;
    for (int e : exceed) total += e;
    return static_cast<double>(total) / static_cast<double>(B);
}

// Lag at which the sample autocorrelation first drops below `thresh`
// (capped); used to decorrelate simulated series before the mode test.
inline std::size_t decorrelation_stride(const std::vector<double>& x, double thresh = 0.1,
                                        std::size_t cap = 100) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    if (!(var > 0.0)) return 1;
    for (std::size_t lag = 1; lag <= cap && lag < n; ++lag) {
        double c = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) c += (x[i] - mean) * (x[i + lag] - mean);
        if (c / var < thresh) return lag;
    }
    return cap;
}

inline std::vector<double> subsample(const std::vector<double>& x, std::size_t stride) {
    std::vector<double> out;
    out.reserve(x.size() / stride + 1);
    for (std::size_t i = 0; i < x.size(); i += stride) out.push_back(x[i]);
    return out;
}

// Log of the discounted value of strictly-future dividends plus a terminal
// growing-perpetuity block:
//   value_t = log( sum_{s=t+1..T} D_s/(1+r)^{s-t} + D_T(1+g)/((r-g)(1+r)^{T-t}) ).
// Rates are per period of the supplied series. When dividends grow exactly
// at g the result telescopes to the plain growing-perpetuity value at every t.
inline std::vector<double> gordon_value(const std::vector<double>& dividends, double discount,
                                        double terminal_growth, bool terminal_block = true) {
    if (dividends.empty()) throw std::invalid_argument("gordon_value: empty dividend series");
    if (discount <= 0.0) throw std::invalid_argument("gordon_value: discount must be > 0");
    if (terminal_block && discount <= terminal_growth)
        throw std::invalid_argument("gordon_value: discount must exceed terminal growth");
    for (double d : dividends)
        if (!(d > 0.0)) throw std::invalid_argument("gordon_value: dividends must be positive");

    const std::size_t T = dividends.size();
    const double q = 1.0 / (1.0 + discount);
    std::vector<double> value(T);
    double tail = terminal_block
                      ? dividends.back() * (1.0 + terminal_growth) / (discount - terminal_growth)
                      : 0.0; // discounted future dividends seen from t, initialized at t = T-1
    value[T - 1] = std::log(tail);
    for (std::size_t t = T - 1; t-- > 0;) {
        tail = (tail + dividends[t + 1]) * q;
        value[t] = std::log(tail);
    }
    return value;
}

// z-scores m and d per asset and concatenates, for pooled regressions.
inline void pool_standardized(const std::vector<double>& y, const std::vector<double>& m,
                              const std::vector<double>& d, std::vector<double>& y_out,
                              std::vector<double>& m_out, std::vector<double>& d_out) {
    auto zscore = [](const std::vector<double>& x) {
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= static_cast<double>(x.size());
        double sd = 0.0;
        for (double v : x) sd += (v - mean) * (v - mean);
        sd = std::sqrt(sd / static_cast<double>(x.size()));
        std::vector<double> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            out[i] = sd > 0.0 ? (x[i] - mean) / sd : 0.0;
        return out;
    };
    const auto mz = zscore(m);
    const auto dz = zscore(d);
    y_out.insert(y_out.end(), y.begin(), y.end());
    m_out.insert(m_out.end(), mz.begin(), mz.end());
    d_out.insert(d_out.end(), dz.begin(), dz.end());
}

} // namespace chiarella
