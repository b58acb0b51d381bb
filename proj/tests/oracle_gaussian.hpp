#pragma once

// Test-only oracle: exact joint-Gaussian treatment of the linear state-space
// model. The random-walk prior over the hidden values is built densely and
// conditioned on the pseudo-observations y_t = r_t + kappa p_{t-1} - beta u_t
// = kappa vtilde_t + eps_t by direct linear algebra, independently of the
// recursive filter implementation it checks.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "chiarella/core.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline std::vector<double> ge_solve(Mat a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        if (a[c][c] == 0.0) throw std::runtime_error("oracle: singular system");
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * b[k];
        b[r] = s / a[r][r];
    }
    return b;
}

inline Mat ge_invert(const Mat& a) {
    const std::size_t n = a.size();
    Mat inv(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0);
        e[j] = 1.0;
        const auto col = ge_solve(a, e);
        for (std::size_t i = 0; i < n; ++i) inv[i][j] = col[i];
    }
    return inv;
}

inline double logdet(Mat a) {
    const std::size_t n = a.size();
    double ld = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        if (a[c][c] <= 0.0) throw std::runtime_error("oracle: non-positive pivot in logdet");
        ld += std::log(a[c][c]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
        }
    }
    return ld;
}

struct Posterior {
    std::vector<double> mean;
    Mat cov;
};

struct DenseModel {
    std::vector<double> prior_mean; // E[vtilde_t], t = 1..T
    Mat prior_cov;
    std::vector<double> y; // pseudo-observations
    double kappa = 0.0;
    double sigma_N = 0.0;

    DenseModel(const std::vector<double>& prices, const std::vector<double>& u,
               const chiarella::ModelParams& prm) {
        const std::size_t T = prices.size() - 1;
        kappa = prm.kappa;
        sigma_N = prm.sigma_N;
        prior_mean.resize(T);
        prior_cov.assign(T, std::vector<double>(T, 0.0));
        for (std::size_t i = 0; i < T; ++i) {
            prior_mean[i] = prm.v0 + static_cast<double>(i) * prm.g;
            for (std::size_t j = 0; j < T; ++j)
                prior_cov[i][j] = prm.sigma0 * prm.sigma0 +
                                  static_cast<double>(std::min(i, j)) * prm.sigma_V * prm.sigma_V;
        }
        y.resize(T);
        for (std::size_t i = 0; i < T; ++i)
            y[i] = prices[i + 1] - prices[i] + prm.kappa * prices[i] - prm.beta * u[i];
    }

    // posterior over vtilde_{1..m} given y_{1..m}
    Posterior condition(std::size_t m) const {
        Mat sig(m, std::vector<double>(m));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) sig[i][j] = prior_cov[i][j];
        const Mat sig_inv = ge_invert(sig);
        Mat prec = sig_inv;
        const double w = kappa * kappa / (sigma_N * sigma_N);
        for (std::size_t i = 0; i < m; ++i) prec[i][i] += w;
        Posterior post;
        post.cov = ge_invert(prec);
        std::vector<double> rhs(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) rhs[i] += sig_inv[i][j] * prior_mean[j];
            rhs[i] += kappa * y[i] / (sigma_N * sigma_N);
        }
        post.mean.assign(m, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) post.mean[i] += post.cov[i][j] * rhs[j];
        return post;
    }

    // exact marginal log density of the observations
    double marginal_loglik() const {
        const std::size_t T = y.size();
        Mat c(T, std::vector<double>(T));
        for (std::size_t i = 0; i < T; ++i)
            for (std::size_t j = 0; j < T; ++j) c[i][j] = kappa * kappa * prior_cov[i][j];
        for (std::size_t i = 0; i < T; ++i) c[i][i] += sigma_N * sigma_N;
        std::vector<double> r(T);
        for (std::size_t i = 0; i < T; ++i) r[i] = y[i] - kappa * prior_mean[i];
        const auto cr = ge_solve(c, r);
        double quad = 0.0;
        for (std::size_t i = 0; i < T; ++i) quad += r[i] * cr[i];
        constexpr double log2pi = 1.8378770664093454835606594728112353;
        return -0.5 * (static_cast<double>(T) * log2pi + logdet(c) + quad);
    }
};

} // namespace oracle
