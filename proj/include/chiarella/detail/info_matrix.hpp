#pragma once

// Observed-information t-statistics: central-difference Hessian of a
// log-likelihood at the estimate, standard errors from the inverse
// information. Parameters whose information is unusable are reported absent
// with a diagnostic rather than silently dropped.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "chiarella/detail/linalg.hpp"

namespace chiarella::detail {

using VecFn = std::function<double(const std::vector<double>&)>;

inline std::vector<double> hessian(const VecFn& f, const std::vector<double>& x,
                                   double rel_step = 1e-4) {
    const std::size_t n = x.size();
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = rel_step * std::max(std::abs(x[i]), 1e-3);
    std::vector<double> H(n * n, 0.0);
    const double f0 = f(x);
    std::vector<double> xp = x;
    for (std::size_t i = 0; i < n; ++i) {
        xp = x;
        xp[i] = x[i] + h[i];
        const double fp = f(xp);
        xp[i] = x[i] - h[i];
        const double fm = f(xp);
        H[i * n + i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            xp = x;
            xp[i] = x[i] + h[i];
            xp[j] = x[j] + h[j];
            const double fpp = f(xp);
            xp[j] = x[j] - h[j];
            const double fpm = f(xp);
            xp[i] = x[i] - h[i];
            const double fmm = f(xp);
            xp[j] = x[j] + h[j];
            const double fmp = f(xp);
            H[i * n + j] = H[j * n + i] = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
        }
    }
    return H;
}

struct TstatReport {
    std::map<std::string, double> tstats;
    std::map<std::string, double> std_errors;
    std::vector<std::string> diagnostics;
};

inline TstatReport tstats_from_loglik(const VecFn& loglik, const std::vector<std::string>& names,
                                      const std::vector<double>& estimate, double rel_step = 1e-4) {
    const std::size_t n = estimate.size();
    std::vector<double> info = hessian(loglik, estimate, rel_step);
    for (auto& v : info) v = -v;

    TstatReport rep;
    // drop directions with no curvature at all (flat likelihood) so the rest
    // stays invertible
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (std::isfinite(info[i * n + i])) max_diag = std::max(max_diag, std::abs(info[i * n + i]));
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isfinite(info[i * n + i]) && std::abs(info[i * n + i]) > 1e-12 * std::max(max_diag, 1.0)) {
            keep.push_back(i);
        } else {
            rep.diagnostics.push_back("flat or invalid likelihood curvature for " + names[i] +
                                      "; t-stat not reported");
        }
    }
    if (keep.empty()) {
        rep.diagnostics.push_back("no usable information matrix; all t-stats absent");
        return rep;
    }
    const std::size_t m = keep.size();
    std::vector<double> sub(m * m);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) sub[a * m + b] = info[keep[a] * n + keep[b]];
    const std::vector<double> inv = invert_general(sub, m);
    if (inv.empty()) {
        rep.diagnostics.push_back("observed information singular; all t-stats absent");
        return rep;
    }
    for (std::size_t a = 0; a < m; ++a) {
        const double var = inv[a * m + a];
        if (var > 0.0 && std::isfinite(var)) {
            const double se = std::sqrt(var);
            rep.std_errors[names[keep[a]]] = se;
            rep.tstats[names[keep[a]]] = estimate[keep[a]] / se;
        } else {
            rep.diagnostics.push_back("nonpositive variance estimate for " + names[keep[a]] +
                                      "; t-stat not reported");
        }
    }
    return rep;
}

} // namespace chiarella::detail
