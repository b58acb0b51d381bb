#pragma once

// Exact scalar Kalman filter, RTS smoother and lag-one covariance for the
// linear model in state-space form, plus the predictive log-likelihood.
//
// Conventions: observations are returns r_t = p_t - p_{t-1} for t = 1..T
// (prices carry T+1 points); the hidden state vtilde_t is the fundamental
// value one month before t; the control is u_t = tanh(gamma * m_{t-1}) with
// m the trend signal of the observed prices. All output series are indexed
// t = 1..T (stored 0-based).

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "chiarella/core.hpp"

namespace chiarella {

struct FilterOutput {
    std::vector<double> v_pred, var_pred;   // vtilde_t^{t-1}, V_t^{t-1}
    std::vector<double> v_filt, var_filt;   // vtilde_t^t, V_t^t
    std::vector<double> gain;               // K_t
    std::vector<double> innovation;         // observed minus predicted return
    std::vector<double> innovation_var;     // S_t
    std::vector<double> loglik_terms;       // per-step Gaussian log density
    int clamp_events = 0;                   // variance floor activations (diagnostic)

    std::size_t size() const { return v_pred.size(); }
};

struct SmoothOutput {
    std::vector<double> v_smooth, var_smooth; // vtilde_t^T, V_t^T
    std::vector<double> lag1_cov;             // C_{t,t+1}^T for t = 1..T-1
    std::vector<double> gains_j;              // J_t (J_T = 0)
};

namespace detail {
constexpr double kVarianceFloor = 1e-14;

inline void check_filter_inputs(const std::vector<double>& prices, const std::vector<double>& u,
                                const ModelParams& prm) {
    prm.validate();
    if (prices.size() < 3) throw std::invalid_argument("filter: need at least 3 prices");
    if (u.size() != prices.size() - 1)
        throw std::invalid_argument("filter: control series must have one entry per return");
}
} // namespace detail

inline FilterOutput kf_forward(const std::vector<double>& prices, const std::vector<double>& u,
                               const ModelParams& prm) {
    detail::check_filter_inputs(prices, u, prm);
    if (!prm.is_linear()) throw std::invalid_argument("kf_forward: requires kappa3 = 0");

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

    const double k = prm.kappa;
    const double sN2 = prm.sigma_N * prm.sigma_N;
    const double sV2 = prm.sigma_V * prm.sigma_V;
    constexpr double log2pi = 1.8378770664093454835606594728112353;

    for (std::size_t i = 0; i < T; ++i) {
        const double mean = (i == 0) ? prm.v0 : out.v_filt[i - 1] + prm.g;
        const double var = (i == 0) ? prm.sigma0 * prm.sigma0 : out.var_filt[i - 1] + sV2;
        const double S = k * k * var + sN2;
        const double K = k * var / S;
        const double r = prices[i + 1] - prices[i];
        const double e = r - k * (mean - prices[i]) - prm.beta * u[i];
        out.v_pred[i] = mean;
        out.var_pred[i] = var;
        out.gain[i] = K;
        out.innovation[i] = e;
        out.innovation_var[i] = S;
        out.v_filt[i] = mean + K * e;
        double vf = var - k * K * var;
        if (vf < detail::kVarianceFloor) {
            vf = detail::kVarianceFloor;
            ++out.clamp_events;
        }
        out.var_filt[i] = vf;
        out.loglik_terms[i] = -0.5 * (log2pi + std::log(S) + e * e / S);
    }
    return out;
}

// Backward RTS recursions; terminal condition: smoothed = filtered at T.
// The mean recursion subtracts the predicted mean v_pred[t] (= v_filt[t-1]+g).
inline SmoothOutput rts_smooth(const FilterOutput& f, const ModelParams& prm) {
    (void)prm;
    const std::size_t T = f.size();
    if (T == 0) throw std::invalid_argument("rts_smooth: empty filter output");
    SmoothOutput out;
    out.v_smooth = f.v_filt;
    out.var_smooth = f.var_filt;
    out.gains_j.assign(T, 0.0);
    for (std::size_t t = T - 1; t-- > 0;) {
        const double J = f.var_filt[t] / f.var_pred[t + 1];
        out.gains_j[t] = J;
        out.v_smooth[t] = f.v_filt[t] + J * (out.v_smooth[t + 1] - f.v_pred[t + 1]);
        out.var_smooth[t] = f.var_filt[t] + J * J * (out.var_smooth[t + 1] - f.var_pred[t + 1]);
    }
    return out;
}

// Posterior covariances Cov(vtilde_t, vtilde_{t+1} | p_{1:T}) for t = 1..T-1,
// initialized at C_{T-1,T} = (1 - kappa K_T) V_{T-1}^{T-1}.
inline std::vector<double> lag_one_cov(const FilterOutput& f, const SmoothOutput& s,
                                       const ModelParams& prm) {
    const std::size_t T = f.size();
    if (T < 2) throw std::invalid_argument("lag_one_cov: need T >= 2");
    std::vector<double> C(T - 1);
    C[T - 2] = (1.0 - prm.kappa * f.gain[T - 1]) * f.var_filt[T - 2];
    for (std::size_t t = T - 1; t-- > 1;) {
        // pair (t, t+1) in 1-based terms: C[t-1]
        C[t - 1] = f.var_filt[t] * s.gains_j[t - 1] +
                   s.gains_j[t] * (C[t] - f.var_filt[t]) * s.gains_j[t - 1];
    }
    return C;
}

inline double kf_predictive_loglik(const FilterOutput& f) {
    double sum = 0.0;
    for (double term : f.loglik_terms) sum += term;
    return sum;
}

} // namespace chiarella
