#pragma once

// Quasi-Newton (BFGS) minimizer with central-difference gradients and a
// Wolfe line search. Deterministic given the starting point; non-convergence
// is reported through the result flag, never an exception.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace chiarella::optim {

using Objective = std::function<double(const std::vector<double>&)>;

struct Options {
    int max_evals = 2000;
    double grad_tol = 1e-6;
    double grad_rel_step = 1e-5;
};

struct Result {
    std::vector<double> x;
    double value = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    int evals = 0;
    int iterations = 0;
    std::string message;
};

inline std::vector<double> numerical_gradient(const Objective& f, const std::vector<double>& x,
                                              double rel_step, int& evals) {
    const std::size_t n = x.size();
    std::vector<double> g(n), xp = x;
    for (std::size_t i = 0; i < n; ++i) {
        const double h = rel_step * std::max(std::abs(x[i]), 1e-8);
        xp[i] = x[i] + h;
        const double fp = f(xp);
        xp[i] = x[i] - h;
        const double fm = f(xp);
        xp[i] = x[i];
        evals += 2;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline Result minimize(const Objective& f, const std::vector<double>& x0, const Options& opts = {}) {
    const std::size_t n = x0.size();
    Result res;
    res.x = x0;
    res.value = f(x0);
    res.evals = 1;
    if (!std::isfinite(res.value)) {
        res.message = "objective not finite at start";
        return res;
    }

    std::vector<double> g = numerical_gradient(f, res.x, opts.grad_rel_step, res.evals);
    std::vector<double> H(n * n, 0.0); // inverse Hessian approximation
    for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;

    auto norm = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    };

    constexpr double c1 = 1e-4;
    constexpr double c2 = 0.9;
    int stall = 0;

    while (res.evals < opts.max_evals) {
        ++res.iterations;
        if (norm(g) < opts.grad_tol) {
            res.converged = true;
            res.message = "gradient norm below tolerance";
            return res;
        }

        std::vector<double> d(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) d[i] -= H[i * n + j] * g[j];
        double dg = 0.0;
        for (std::size_t i = 0; i < n; ++i) dg += d[i] * g[i];
        if (!(dg < 0.0)) { // not a descent direction: reset to steepest descent
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) H[i * n + j] = (i == j) ? 1.0 : 0.0;
                d[i] = -g[i];
            }
            dg = -norm(g) * norm(g);
        }

        // Wolfe line search with backtracking/expansion
        double step = 1.0;
        double f_new = res.value;
        std::vector<double> x_new = res.x, g_new = g;
        bool accepted = false;
        double lo = 0.0, hi = std::numeric_limits<double>::infinity();
        for (int ls = 0; ls < 40 && res.evals < opts.max_evals; ++ls) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = res.x[i] + step * d[i];
            f_new = f(x_new);
            ++res.evals;
            if (!std::isfinite(f_new) || f_new > res.value + c1 * step * dg) {
                hi = step;
                step = 0.5 * (lo + hi);
                continue;
            }
            g_new = numerical_gradient(f, x_new, opts.grad_rel_step, res.evals);
            double dg_new = 0.0;
            for (std::size_t i = 0; i < n; ++i) dg_new += d[i] * g_new[i];
            if (dg_new < c2 * dg) {
                lo = step;
                step = std::isinf(hi) ? 2.0 * step : 0.5 * (lo + hi);
                continue;
            }
            accepted = true;
            break;
        }
        if (!accepted) {
            // salvage whatever decrease the last probe found
            if (std::isfinite(f_new) && f_new < res.value) {
                res.x = x_new;
                res.value = f_new;
                g = g_new;
            }
            res.message = "line search failed";
            return res;
        }

        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - res.x[i];
            y[i] = g_new[i] - g[i];
        }
        const double improvement = res.value - f_new;
        res.x = x_new;
        res.value = f_new;
        g = g_new;

        double sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) sy += s[i] * y[i];
        if (sy > 1e-12) {
            // H <- (I - s y^T / sy) H (I - y s^T / sy) + s s^T / sy
            std::vector<double> Hy(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) Hy[i] += H[i * n + j] * y[j];
            double yHy = 0.0;
            for (std::size_t i = 0; i < n; ++i) yHy += y[i] * Hy[i];
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    H[i * n + j] += (sy + yHy) * s[i] * s[j] / (sy * sy) -
                                    (Hy[i] * s[j] + s[i] * Hy[j]) / sy;
        }

        if (improvement < 1e-14 * (std::abs(res.value) + 1.0)) {
            if (++stall >= 3) {
                res.message = "progress stalled";
                res.converged = norm(g) < 1e-3;
                return res;
            }
        } else {
            stall = 0;
        }
    }
    res.message = "evaluation budget exhausted";
    return res;
}

} // namespace chiarella::optim
