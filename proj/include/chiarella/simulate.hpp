#pragma once

// Stochastic forward simulation of the discrete model and fixed-step RK4
// integration of the deterministic (noise-free) dynamics, with limit-cycle
// detection on the integrated trajectory.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "chiarella/core.hpp"
#include "chiarella/rng.hpp"

namespace chiarella {

struct SimPath {
    std::vector<double> p, m, v;
    std::uint64_t seed = 0;

    std::vector<double> delta() const {
        std::vector<double> d(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) d[i] = p[i] - v[i];
        return d;
    }
};

// Iterates step_discrete with eps ~ N(0, sigma_N^2), eta ~ N(0, sigma_V^2),
// starting from p0 = v0, m0 = 0. Bit-identical for identical (params, length,
// seed). Per step the draw order is eps first, then eta.
inline SimPath simulate_path(const ModelParams& prm, std::size_t length, std::uint64_t seed) {
    prm.validate();
    if (length < 2) throw std::invalid_argument("simulate_path: length must be >= 2");
    SimPath out;
    out.seed = seed;
    out.p.resize(length);
    out.m.resize(length);
    out.v.resize(length);
    Rng rng(seed);
    MarketState s{prm.v0, 0.0, prm.v0};
    out.p[0] = s.p;
    out.m[0] = s.m;
    out.v[0] = s.v;
    for (std::size_t t = 1; t < length; ++t) {
        const double eps = prm.sigma_N * rng.gaussian();
        const double eta = prm.sigma_V * rng.gaussian();
        s = step_discrete(s, prm, eps, eta);
        out.p[t] = s.p;
        out.m[t] = s.m;
        out.v[t] = s.v;
    }
    return out;
}

struct Trajectory {
    double dt = 0.0;
    std::vector<MarketState> states;
};

// Classical RK4 on the zero-noise continuous dynamics
//   p' = f(v - p) + beta tanh(gamma m),  m' = alpha (p' - m),  v' = 0.
// Noise and drift are ignored (sigma_N = sigma_V = g = 0 semantics).
inline Trajectory integrate_deterministic(const ModelParams& prm, const MarketState& s0,
                                          double dt, double horizon) {
    prm.validate();
    if (dt <= 0.0) throw std::invalid_argument("integrate_deterministic: dt must be > 0");
    if (dt > 0.05) throw std::invalid_argument("integrate_deterministic: dt must be <= 0.05 months");
    if (horizon <= 0.0) throw std::invalid_argument("integrate_deterministic: horizon must be > 0");

    auto deriv = [&prm](const MarketState& s) {
        MarketState d;
        d.p = fundamentalist_demand(s.v - s.p, prm) + trend_demand(s.m, prm);
        d.m = prm.alpha * (d.p - s.m);
        d.v = 0.0;
        return d;
    };
    auto axpy = [](const MarketState& s, double h, const MarketState& d) {
        return MarketState{s.p + h * d.p, s.m + h * d.m, s.v + h * d.v};
    };

    const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt));
    Trajectory traj;
    traj.dt = dt;
    traj.states.reserve(steps + 1);
    traj.states.push_back(s0);
    MarketState s = s0;
    for (std::size_t i = 0; i < steps; ++i) {
        const MarketState k1 = deriv(s);
        const MarketState k2 = deriv(axpy(s, 0.5 * dt, k1));
        const MarketState k3 = deriv(axpy(s, 0.5 * dt, k2));
        const MarketState k4 = deriv(axpy(s, dt, k3));
        s.p += dt / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
        s.m += dt / 6.0 * (k1.m + 2.0 * k2.m + 2.0 * k3.m + k4.m);
        traj.states.push_back(s);
    }
    return traj;
}

struct CycleReport {
    bool converged_to_fixed_point = false;
    double period = 0.0;          // months, when cycling
    double amplitude_m = 0.0;     // tail max |m|
    double amplitude_delta = 0.0; // tail max |p - v|
    double period_spread = 0.0;   // max relative deviation of successive period estimates
};

// Classifies the post-transient tail as fixed point (sup|m| < tol_fp) or limit
// cycle; the period comes from successive upward zero crossings of m, refined
// by linear interpolation.
inline CycleReport detect_limit_cycle(const Trajectory& traj, double transient_fraction,
                                      double tol_fp = 1e-6) {
    if (transient_fraction < 0.0 || transient_fraction >= 1.0)
        throw std::invalid_argument("detect_limit_cycle: transient_fraction must be in [0, 1)");
    const std::size_t n = traj.states.size();
    const auto start = static_cast<std::size_t>(transient_fraction * static_cast<double>(n));
    if (n < 16 || start + 8 > n)
        throw std::invalid_argument("detect_limit_cycle: trajectory too short to classify");

    CycleReport rep;
    double sup_m = 0.0;
    for (std::size_t i = start; i < n; ++i) {
        const auto& s = traj.states[i];
        sup_m = std::max(sup_m, std::abs(s.m));
        rep.amplitude_m = std::max(rep.amplitude_m, std::abs(s.m));
        rep.amplitude_delta = std::max(rep.amplitude_delta, std::abs(s.p - s.v));
    }
    if (sup_m < tol_fp) {
        rep.converged_to_fixed_point = true;
        rep.amplitude_m = 0.0;
        rep.amplitude_delta = 0.0;
        return rep;
    }

    // upward zero crossings of m
    std::vector<double> crossings;
    for (std::size_t i = start + 1; i < n; ++i) {
        const double a = traj.states[i - 1].m;
        const double b = traj.states[i].m;
        if (a < 0.0 && b >= 0.0) {
            const double frac = (b > a) ? (-a) / (b - a) : 0.0;
            crossings.push_back((static_cast<double>(i - 1) + frac) * traj.dt);
        }
    }
    if (crossings.size() < 4)
        throw std::invalid_argument("detect_limit_cycle: trajectory too short to classify");

    double sum = 0.0;
    std::vector<double> periods;
    for (std::size_t i = 1; i < crossings.size(); ++i) {
        periods.push_back(crossings[i] - crossings[i - 1]);
        sum += periods.back();
    }
    rep.period = sum / static_cast<double>(periods.size());
    for (double p : periods)
        rep.period_spread = std::max(rep.period_spread, std::abs(p - rep.period) / rep.period);
    return rep;
}

} // namespace chiarella
