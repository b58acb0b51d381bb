#pragma once

// Expectation-Maximization calibration of the linear model with the
// closed-form M-step. gamma and alpha are never touched. The E/M pair is
// kept exactly consistent with the filter's generative model (prior
// vtilde_1 ~ N(v0, sigma0^2)), which makes the predictive log-likelihood
// trace monotone up to rounding.
//
// Everything is written over a list of price segments so that series with
// exclusion windows fit with summed M-step moments; the single-series entry
// points wrap the one-segment case. Segment 0 owns the v0/sigma0 prior;
// later segments are re-primed at their first price.

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "chiarella/detail/info_matrix.hpp"
#include "chiarella/kalman.hpp"
#include "chiarella/series.hpp"

namespace chiarella {

struct SufficientStats {
    std::vector<double> E_v;  // E[vtilde_t]
    std::vector<double> E_v2; // E[vtilde_t^2]
    std::vector<double> E_vv; // E[vtilde_t vtilde_{t+1}], length T-1
};

struct CalibrationResult {
    ModelParams params;
    double loglik = 0.0;
    std::vector<double> loglik_trace;
    int iterations = 0;
    bool converged = false;
    std::map<std::string, double> tstats;
    std::vector<std::string> diagnostics;
};

namespace detail {

struct EmSegment {
    std::vector<double> prices;
    std::vector<double> u;
    bool owns_prior = false; // prior mean is params.v0 (else first price)
};

inline ModelParams segment_params(const ModelParams& prm, const EmSegment& seg) {
    ModelParams p = prm;
    if (!seg.owns_prior) p.v0 = seg.prices.front();
    return p;
}

inline std::vector<EmSegment> one_segment(const std::vector<double>& prices,
                                          const ModelParams& prm) {
    EmSegment seg;
    seg.prices = prices;
    seg.u = control_series(prices, prm.gamma, prm.alpha);
    seg.owns_prior = true;
    return {seg};
}

inline double segments_loglik(const std::vector<EmSegment>& segs, const ModelParams& prm) {
    double ll = 0.0;
    for (const auto& seg : segs) ll += kf_predictive_loglik(kf_forward(seg.prices, seg.u, segment_params(prm, seg)));
    return ll;
}

inline SufficientStats e_step_segment(const EmSegment& seg, const ModelParams& prm) {
    const ModelParams sp = segment_params(prm, seg);
    const FilterOutput f = kf_forward(seg.prices, seg.u, sp);
    const SmoothOutput s = rts_smooth(f, sp);
    const std::vector<double> c = lag_one_cov(f, s, sp);
    SufficientStats st;
    const std::size_t T = f.size();
    st.E_v = s.v_smooth;
    st.E_v2.resize(T);
    st.E_vv.resize(T - 1);
    for (std::size_t t = 0; t < T; ++t)
        st.E_v2[t] = s.var_smooth[t] + s.v_smooth[t] * s.v_smooth[t];
    for (std::size_t t = 0; t + 1 < T; ++t)
        st.E_vv[t] = c[t] + s.v_smooth[t] * s.v_smooth[t + 1];
    return st;
}

inline ModelParams m_step_segments(const std::vector<SufficientStats>& stats,
                                   const std::vector<EmSegment>& segs, const ModelParams& prior) {
    double A11 = 0.0, A12 = 0.0, A22 = 0.0, b1 = 0.0, b2 = 0.0;
    std::size_t T_total = 0, pairs_total = 0;
    for (std::size_t s = 0; s < segs.size(); ++s) {
        const auto& seg = segs[s];
        const auto& st = stats[s];
        const std::size_t T = st.E_v.size();
        T_total += T;
        pairs_total += T - 1;
        for (std::size_t t = 0; t < T; ++t) {
            const double pl = seg.prices[t];
            const double r = seg.prices[t + 1] - pl;
            const double ex = st.E_v[t] - pl;
            const double ex2 = st.E_v2[t] - 2.0 * pl * st.E_v[t] + pl * pl;
            A11 += ex2;
            A12 += ex * seg.u[t];
            A22 += seg.u[t] * seg.u[t];
            b1 += ex * r;
            b2 += seg.u[t] * r;
        }
    }

    ModelParams next = prior;
    // degeneracy threshold relative to the observation-noise scale
    const double tiny = 1e-10 * std::max(static_cast<double>(T_total) * prior.sigma_N * prior.sigma_N, 1e-30);
    if (A22 <= tiny && A11 <= tiny)
        throw std::runtime_error("m_step: degenerate regressors (no mispricing or trend variation)");
    if (A22 <= tiny) {
        next.beta = 0.0;
        next.kappa = b1 / A11;
    } else if (A11 <= tiny) {
        next.kappa = 0.0;
        next.beta = b2 / A22;
    } else {
        const double det = A11 * A22 - A12 * A12;
        if (std::abs(det) <= 1e-14 * A11 * A22)
            throw std::runtime_error("m_step: degenerate regressors (singular normal equations)");
        next.kappa = (A22 * b1 - A12 * b2) / det;
        next.beta = (A11 * b2 - A12 * b1) / det;
        if (next.beta < 0.0) {
            // constrained maximizer on the admissible boundary beta = 0
            next.beta = 0.0;
            next.kappa = b1 / A11;
        }
    }

    double sse = 0.0;
    double dsum = 0.0, vv = 0.0;
    for (std::size_t s = 0; s < segs.size(); ++s) {
        const auto& seg = segs[s];
        const auto& st = stats[s];
        const std::size_t T = st.E_v.size();
        for (std::size_t t = 0; t < T; ++t) {
            const double pl = seg.prices[t];
            const double r = seg.prices[t + 1] - pl;
            const double rb = r - next.beta * seg.u[t];
            const double ex = st.E_v[t] - pl;
            const double ex2 = st.E_v2[t] - 2.0 * pl * st.E_v[t] + pl * pl;
            sse += rb * rb - 2.0 * next.kappa * rb * ex + next.kappa * next.kappa * ex2;
        }
        dsum += st.E_v[T - 1] - st.E_v[0];
        for (std::size_t t = 0; t + 1 < T; ++t)
            vv += st.E_v2[t] + st.E_v2[t + 1] - 2.0 * st.E_vv[t];
    }
    next.sigma_N = std::sqrt(sse / static_cast<double>(T_total));
    next.g = dsum / static_cast<double>(pairs_total);
    next.sigma_V = std::sqrt(std::max(vv / static_cast<double>(pairs_total) - next.g * next.g, 1e-16));

    // prior update from the segment owning it; consistent with the filter's
    // vtilde_1 ~ N(v0, sigma0^2), so v0 = E[vtilde_1] and sigma0^2 = Var[vtilde_1]
    for (std::size_t s = 0; s < segs.size(); ++s) {
        if (!segs[s].owns_prior) continue;
        next.v0 = stats[s].E_v[0];
        next.sigma0 = std::sqrt(std::max(stats[s].E_v2[0] - next.v0 * next.v0, 1e-8));
    }
    return next;
}

// Expected joint log density under the posterior (additive constants
// dropped); the M-step output is its stationary point.
inline double em_g_function(const std::vector<SufficientStats>& stats,
                            const std::vector<EmSegment>& segs, const ModelParams& prm) {
    double g = 0.0;
    const double sN2 = prm.sigma_N * prm.sigma_N;
    const double sV2 = prm.sigma_V * prm.sigma_V;
    for (std::size_t s = 0; s < segs.size(); ++s) {
        const auto& seg = segs[s];
        const auto& st = stats[s];
        const std::size_t T = st.E_v.size();
        for (std::size_t t = 0; t < T; ++t) {
            const double pl = seg.prices[t];
            const double r = seg.prices[t + 1] - pl;
            const double rb = r - prm.beta * seg.u[t];
            const double ex = st.E_v[t] - pl;
            const double ex2 = st.E_v2[t] - 2.0 * pl * st.E_v[t] + pl * pl;
            g -= (rb * rb - 2.0 * prm.kappa * rb * ex + prm.kappa * prm.kappa * ex2) / (2.0 * sN2);
        }
        g -= static_cast<double>(T) * std::log(prm.sigma_N);
        for (std::size_t t = 0; t + 1 < T; ++t) {
            const double q = st.E_v2[t] + st.E_v2[t + 1] - 2.0 * st.E_vv[t] -
                             2.0 * prm.g * (st.E_v[t + 1] - st.E_v[t]) + prm.g * prm.g;
            g -= q / (2.0 * sV2);
        }
        g -= static_cast<double>(T - 1) * std::log(prm.sigma_V);
        const double prior_mean = segs[s].owns_prior ? prm.v0 : seg.prices.front();
        const double q0 = st.E_v2[0] - 2.0 * prior_mean * st.E_v[0] + prior_mean * prior_mean;
        g -= q0 / (2.0 * prm.sigma0 * prm.sigma0) + std::log(prm.sigma0);
    }
    return g;
}

inline CalibrationResult em_fit_segments(const std::vector<EmSegment>& segs,
                                         const ModelParams& params0, int max_iter, double tol) {
    params0.validate();
    CalibrationResult res;
    res.params = params0;
    res.loglik = segments_loglik(segs, params0);
    res.loglik_trace.push_back(res.loglik);
    constexpr double mono_slack = 1e-8;

    for (int it = 0; it < max_iter; ++it) {
        std::vector<SufficientStats> stats;
        stats.reserve(segs.size());
        for (const auto& seg : segs) stats.push_back(e_step_segment(seg, res.params));

        ModelParams next;
        try {
            next = m_step_segments(stats, segs, res.params);
            next.validate();
        } catch (const std::exception& e) {
            res.diagnostics.push_back(std::string("EM stopped: ") + e.what());
            return res;
        }

        const double ll = segments_loglik(segs, next);
        if (!std::isfinite(ll)) {
            res.diagnostics.push_back("EM stopped: non-finite log-likelihood after M-step");
            return res;
        }
        res.params = next;
        res.iterations = it + 1;
        const double prev = res.loglik;
        res.loglik = ll;
        res.loglik_trace.push_back(ll);
        if (ll < prev - mono_slack) {
            res.diagnostics.push_back("EM monotonicity violated at iteration " +
                                      std::to_string(it + 1) + " (delta " +
                                      std::to_string(ll - prev) + ")");
            return res;
        }
        if (std::abs(ll - prev) < tol) {
            res.converged = true;
            return res;
        }
    }
    return res;
}

} // namespace detail

inline SufficientStats e_step(const std::vector<double>& prices, const std::vector<double>& u,
                              const ModelParams& prm) {
    if (!prm.is_linear()) throw std::invalid_argument("e_step: requires kappa3 = 0");
    detail::EmSegment seg;
    seg.prices = prices;
    seg.u = u;
    seg.owns_prior = true;
    return detail::e_step_segment(seg, prm);
}

inline ModelParams m_step(const SufficientStats& stats, const std::vector<double>& prices,
                          const std::vector<double>& u, const ModelParams& prior) {
    detail::EmSegment seg;
    seg.prices = prices;
    seg.u = u;
    seg.owns_prior = true;
    return detail::m_step_segments({stats}, {seg}, prior);
}

inline CalibrationResult em_fit(const std::vector<double>& prices, const ModelParams& params0,
                                int max_iter = 500, double tol = 1e-6) {
    if (!params0.is_linear()) throw std::invalid_argument("em_fit: requires kappa3 = 0");
    return detail::em_fit_segments(detail::one_segment(prices, params0), params0, max_iter, tol);
}

// T-statistics from the observed information of the predictive
// log-likelihood, central differences with relative step 1e-4.
inline std::map<std::string, double> em_tstats(CalibrationResult& result,
                                               const std::vector<double>& prices,
                                               const std::vector<double>& u) {
    const std::vector<std::string> names = {"kappa", "beta", "sigma_N", "sigma_V", "g", "v0"};
    const ModelParams base = result.params;
    auto loglik = [&](const std::vector<double>& th) {
        ModelParams p = base;
        p.kappa = th[0];
        p.beta = th[1];
        p.sigma_N = th[2];
        p.sigma_V = th[3];
        p.g = th[4];
        p.v0 = th[5];
        try {
            return kf_predictive_loglik(kf_forward(prices, u, p));
        } catch (const std::exception&) {
            return -std::numeric_limits<double>::infinity();
        }
    };
    const std::vector<double> est = {base.kappa, base.beta, base.sigma_N,
                                     base.sigma_V, base.g, base.v0};
    detail::TstatReport rep = detail::tstats_from_loglik(loglik, names, est, 1e-4);
    result.tstats = rep.tstats;
    for (auto& d : rep.diagnostics) result.diagnostics.push_back(d);
    return rep.tstats;
}

} // namespace chiarella
