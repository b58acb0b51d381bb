#pragma once

// Extended Chiarella market model: parameter vector, agent demand functions,
// one-month discrete transition and the deterministic damping diagnostics.
// All prices and values are natural logarithms; demand outputs are monthly
// log-return contributions.

#include <cmath>
#include <stdexcept>
#include <string>

namespace chiarella {

struct ModelParams {
    double kappa = 0.0;       // linear fundamentalist weight (per month)
    double kappa3 = 0.0;      // cubic fundamentalist weight; 0 = linear model
    double beta = 0.0;        // trend-follower weight, >= 0
    double gamma = 1.0;       // demand-saturation inverse scale, > 0
    double alpha = 1.0 / 7.0; // trend EWMA decay, in (0, 1]
    double sigma_N = 0.0;     // noise-trader monthly volatility, > 0
    double sigma_V = 0.0;     // fundamental monthly volatility, > 0
    double g = 0.0;           // fundamental monthly drift
    double v0 = 0.0;          // initial log fundamental value
    double sigma0 = 0.0;      // initial value uncertainty, > 0

    bool is_linear() const { return kappa3 == 0.0; }

    void validate() const {
        auto fail = [](const std::string& msg) { throw std::invalid_argument("ModelParams: " + msg); };
        if (!std::isfinite(kappa) || !std::isfinite(kappa3) || !std::isfinite(beta) ||
            !std::isfinite(gamma) || !std::isfinite(alpha) || !std::isfinite(sigma_N) ||
            !std::isfinite(sigma_V) || !std::isfinite(g) || !std::isfinite(v0) ||
            !std::isfinite(sigma0))
            fail("non-finite field");
        if (beta < 0.0) fail("beta must be >= 0");
        if (gamma <= 0.0) fail("gamma must be > 0");
        if (alpha <= 0.0 || alpha > 1.0) fail("alpha must be in (0, 1]");
        if (sigma_N <= 0.0) fail("sigma_N must be > 0");
        if (sigma_V <= 0.0) fail("sigma_V must be > 0");
        if (sigma0 <= 0.0) fail("sigma0 must be > 0");
    }
};

struct MarketState {
    double p = 0.0; // log price
    double m = 0.0; // trend signal (EWMA of monthly log returns)
    double v = 0.0; // log fundamental value
};

// f(x) = kappa*x + kappa3*x^3, x = v - p mispricing.
inline double fundamentalist_demand(double x, const ModelParams& prm) {
    return prm.kappa * x + prm.kappa3 * x * x * x;
}

// beta * tanh(gamma * m); odd, bounded in (-beta, beta).
inline double trend_demand(double m, const ModelParams& prm) {
    return prm.beta * std::tanh(prm.gamma * m);
}

// Damping force of the Lienard form of the linear model:
// G(x) = alpha + kappa - alpha*gamma*beta*(1 - tanh^2(gamma*x)).
inline double damping(double x, const ModelParams& prm) {
    if (prm.kappa3 != 0.0)
        throw std::invalid_argument("damping: defined for the linear model only (kappa3 = 0)");
    const double th = std::tanh(prm.gamma * x);
    return prm.alpha + prm.kappa - prm.alpha * prm.gamma * prm.beta * (1.0 - th * th);
}

// alpha + kappa - alpha*gamma*beta. Negative: limit-cycle / crater-density
// regime; nonnegative: relaxation regime.
inline double bifurcation_margin(const ModelParams& prm) {
    return prm.alpha + prm.kappa - prm.alpha * prm.gamma * prm.beta;
}

// One month of the discrete dynamics with externally supplied shocks.
// The trend update consumes the return realized in this step, keeping the
// simulated dynamics aligned with the state-space observation equation
// (the return from t to t+1 is driven by the trend signal through t).
inline MarketState step_discrete(const MarketState& s, const ModelParams& prm,
                                 double eps, double eta) {
    MarketState n;
    const double ret = fundamentalist_demand(s.v - s.p, prm) + trend_demand(s.m, prm) + eps;
    n.p = s.p + ret;
    n.m = (1.0 - prm.alpha) * s.m + prm.alpha * ret;
    n.v = s.v + prm.g + eta;
    return n;
}

} // namespace chiarella
