#pragma once

// Scalar Unscented Kalman Filter for the cubic-demand model. The value
// dynamics stay linear, so the prediction step matches the Kalman filter;
// only the observation step pushes sigma points through the nonlinear
// demand. The gain is K = C/S, which reduces exactly to the Kalman gain
// when kappa3 = 0 (the linear-consistency suite pins this).

#include <array>
#include <cmath>
#include <stdexcept>

#include "chiarella/kalman.hpp"

namespace chiarella {

struct UtConfig {
    double a = 1.0;
    double k = 2.0;
    double b = 0.0;

    double lambda() const { return a * a * (1.0 + k) - 1.0; }

    void validate() const {
        if (a <= 0.0) throw std::invalid_argument("UtConfig: a must be > 0");
        if (1.0 + lambda() <= 0.0)
            throw std::invalid_argument("UtConfig: 1 + lambda must be > 0");
    }
};

struct UtWeights {
    double w0_m, w0_c, wi_m, wi_c;
};

inline UtWeights ut_weights(const UtConfig& cfg) {
    cfg.validate();
    const double lam = cfg.lambda();
    UtWeights w;
    w.w0_m = lam / (lam + 1.0);
    w.w0_c = lam / (lam + 1.0) + (1.0 - cfg.a * cfg.a + cfg.b);
    w.wi_m = 1.0 / (2.0 * (lam + 1.0));
    w.wi_c = w.wi_m;
    return w;
}

inline std::array<double, 3> sigma_points(double mean, double var, const UtConfig& cfg) {
    cfg.validate();
    if (var <= 0.0) throw std::invalid_argument("sigma_points: var must be > 0");
    const double spread = std::sqrt(1.0 + cfg.lambda()) * std::sqrt(var);
    return {mean, mean + spread, mean - spread};
}

inline FilterOutput ukf_forward(const std::vector<double>& prices, const std::vector<double>& u,
                                const ModelParams& prm, const UtConfig& cfg = {}) {
    detail::check_filter_inputs(prices, u, prm);
    const UtWeights w = ut_weights(cfg);

    const std::size_t T = prices.size() - 1;
    FilterOutput out;
    out.v_pred.resize(T);
    out.var_pred.resize(T);
    out.v_filt.resize(T);
    out.var_filt.resize(T);
    out.gain.resize(T);
    out.innovation.resize(T);
    out.innovation_var.resize(T);
    out.loglik_terms.resize(T);

    const double sN2 = prm.sigma_N * prm.sigma_N;
    const double sV2 = prm.sigma_V * prm.sigma_V;
    constexpr double log2pi = 1.8378770664093454835606594728112353;

    for (std::size_t i = 0; i < T; ++i) {
        const double mean = (i == 0) ? prm.v0 : out.v_filt[i - 1] + prm.g;
        const double var = (i == 0) ? prm.sigma0 * prm.sigma0 : out.var_filt[i - 1] + sV2;
        out.v_pred[i] = mean;
        out.var_pred[i] = var;

        const auto sig = sigma_points(mean, var, cfg);
        std::array<double, 3> pp;
        for (int j = 0; j < 3; ++j)
            pp[j] = prices[i] + fundamentalist_demand(sig[j] - prices[i], prm) + prm.beta * u[i];

        const double phat = w.w0_m * pp[0] + w.wi_m * (pp[1] + pp[2]);
        double S = w.w0_c * (pp[0] - phat) * (pp[0] - phat) +
                   w.wi_c * ((pp[1] - phat) * (pp[1] - phat) + (pp[2] - phat) * (pp[2] - phat)) +
                   sN2;
        const double C = w.w0_c * (pp[0] - phat) * (sig[0] - mean) +
                         w.wi_c * ((pp[1] - phat) * (sig[1] - mean) + (pp[2] - phat) * (sig[2] - mean));
        if (!(S > 0.0)) throw std::runtime_error("ukf_forward: nonpositive innovation variance");

        const double K = C / S;
        const double e = prices[i + 1] - phat;
        out.gain[i] = K;
        out.innovation[i] = e;
        out.innovation_var[i] = S;
        out.v_filt[i] = mean + K * e;
        double vf = var - K * K * S;
        if (vf < detail::kVarianceFloor) {
            vf = detail::kVarianceFloor;
            ++out.clamp_events;
        }
        out.var_filt[i] = vf;
        out.loglik_terms[i] = -0.5 * (log2pi + std::log(S) + e * e / S);
    }
    return out;
}

// Gaussian-approximate smoothing: identical backward recursions to the
// linear RTS smoother.
inline SmoothOutput ukf_smooth(const FilterOutput& f, const ModelParams& prm) {
    return rts_smooth(f, prm);
}

inline double ukf_predictive_loglik(const FilterOutput& f) { return kf_predictive_loglik(f); }

} // namespace chiarella
