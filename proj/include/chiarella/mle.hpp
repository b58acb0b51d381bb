#pragma once

// Direct maximum-likelihood calibration through the filter predictive
// likelihood (Kalman for the linear model, UKF for the cubic one), the
// two-step per-asset / per-class protocol, and observed-information
// t-statistics. Positive parameters are optimized in log space.

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chiarella/data.hpp"
#include "chiarella/detail/info_matrix.hpp"
#include "chiarella/detail/parallel.hpp"
#include "chiarella/em.hpp"
#include "chiarella/optim.hpp"
#include "chiarella/rng.hpp"
#include "chiarella/ukf.hpp"

namespace chiarella {

enum class ModelKind { linear, nonlinear };

struct FitConfig {
    double alpha = 1.0 / 7.0;
    UtConfig ut{};
    int em_max_iter = 500;
    double em_tol = 1e-6;
    optim::Options opt{};
    int multistart = 5;
    int alternations = 1;
    std::uint64_t seed = 0;
    double sigma0_init = 0.25;
    double kappa3_init_scale = 0.1; // kappa3 seed as a fraction of |kappa|
    unsigned workers = 1;
};

struct FreeParam {
    std::string name;
    bool log_scale = false;
};

namespace detail {

inline double get_param(const ModelParams& p, const std::string& name) {
    if (name == "kappa") return p.kappa;
    if (name == "kappa3") return p.kappa3;
    if (name == "beta") return p.beta;
    if (name == "gamma") return p.gamma;
    if (name == "sigma_N") return p.sigma_N;
    if (name == "sigma_V") return p.sigma_V;
    if (name == "g") return p.g;
    if (name == "v0") return p.v0;
    if (name == "sigma0") return p.sigma0;
    throw std::invalid_argument("unknown parameter: " + name);
}

inline void set_param(ModelParams& p, const std::string& name, double v) {
    if (name == "kappa") p.kappa = v;
    else if (name == "kappa3") p.kappa3 = v;
    else if (name == "beta") p.beta = v;
    else if (name == "gamma") p.gamma = v;
    else if (name == "sigma_N") p.sigma_N = v;
    else if (name == "sigma_V") p.sigma_V = v;
    else if (name == "g") p.g = v;
    else if (name == "v0") p.v0 = v;
    else if (name == "sigma0") p.sigma0 = v;
    else throw std::invalid_argument("unknown parameter: " + name);
}

// Segments of an asset prepared for likelihood work: per-segment log prices
// and control series; segment 0 owns the v0/sigma0 prior.
struct LikSegment {
    std::vector<double> prices;
    std::vector<double> u;
    bool owns_prior = false;
};

inline std::vector<LikSegment> make_segments(const AssetSeries& s, double gamma, double alpha) {
    std::vector<LikSegment> out;
    const auto segs = s.segments();
    if (segs.empty()) throw std::runtime_error("asset " + s.name + ": no usable segments");
    for (std::size_t i = 0; i < segs.size(); ++i) {
        LikSegment ls;
        ls.prices = s.segment_log_prices(segs[i]);
        ls.u = control_series(ls.prices, gamma, alpha);
        ls.owns_prior = (i == 0);
        out.push_back(std::move(ls));
    }
    return out;
}

inline std::vector<EmSegment> to_em_segments(const std::vector<LikSegment>& in) {
    std::vector<EmSegment> out;
    out.reserve(in.size());
    for (const auto& ls : in) out.push_back(EmSegment{ls.prices, ls.u, ls.owns_prior});
    return out;
}

inline double segments_loglik_kind(const std::vector<LikSegment>& segs, const ModelParams& prm,
                                   ModelKind kind, const UtConfig& ut) {
    double ll = 0.0;
    for (const auto& seg : segs) {
        ModelParams p = prm;
        if (!seg.owns_prior) p.v0 = seg.prices.front();
        ll += (kind == ModelKind::linear)
                  ? kf_predictive_loglik(kf_forward(seg.prices, seg.u, p))
                  : ukf_predictive_loglik(ukf_forward(seg.prices, seg.u, p, ut));
    }
    return ll;
}

} // namespace detail

inline std::vector<double> pack_params(const ModelParams& p, const std::vector<FreeParam>& free) {
    std::vector<double> th(free.size());
    for (std::size_t i = 0; i < free.size(); ++i) {
        const double v = detail::get_param(p, free[i].name);
        th[i] = free[i].log_scale ? std::log(v) : v;
    }
    return th;
}

inline ModelParams unpack_params(const std::vector<double>& th, const ModelParams& base,
                                 const std::vector<FreeParam>& free) {
    ModelParams p = base;
    for (std::size_t i = 0; i < free.size(); ++i)
        detail::set_param(p, free[i].name, free[i].log_scale ? std::exp(th[i]) : th[i]);
    return p;
}

// Negative predictive log-likelihood of a free-parameter vector; +inf
// sentinel whenever the parameters are inadmissible or the filter fails.
inline double neg_loglik(const std::vector<double>& theta, const std::vector<FreeParam>& free,
                         const ModelParams& base, const std::vector<detail::LikSegment>& segs,
                         ModelKind kind, const UtConfig& ut = {}) {
    try {
        const ModelParams p = unpack_params(theta, base, free);
        p.validate();
        const double ll = detail::segments_loglik_kind(segs, p, kind, ut);
        if (!std::isfinite(ll)) return std::numeric_limits<double>::infinity();
        return -ll;
    } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();
    }
}

inline double neg_loglik(const std::vector<double>& theta, const std::vector<FreeParam>& free,
                         const ModelParams& base, const std::vector<double>& prices,
                         ModelKind kind, const UtConfig& ut = {}) {
    detail::LikSegment seg;
    seg.prices = prices;
    seg.owns_prior = true;
    const ModelParams probe = unpack_params(theta, base, free);
    seg.u = control_series(prices, probe.gamma, probe.alpha);
    return neg_loglik(theta, free, base, {seg}, kind, ut);
}

// gamma^{-1} = 2 * std(trend signal), computed per asset before any fit and
// then frozen. Multi-segment series pool the per-segment trend signals.
inline double gamma_fixing_rule(const AssetSeries& s, double alpha) {
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (const auto& seg : s.segments()) {
        const auto m = trend_signal(s.segment_log_prices(seg), alpha);
        for (double x : m) {
            sum += x;
            sum2 += x * x;
            ++n;
        }
    }
    if (n < 2) throw std::runtime_error("gamma_fixing_rule: series too short");
    const double mean = sum / static_cast<double>(n);
    const double var = sum2 / static_cast<double>(n) - mean * mean;
    if (!(var > 0.0)) throw std::runtime_error("gamma_fixing_rule: trend signal has no variation");
    return 1.0 / (2.0 * std::sqrt(var));
}

namespace detail {

inline std::map<std::string, double> model_tstats(CalibrationResult& result,
                                                  const std::vector<LikSegment>& segs,
                                                  ModelKind kind, const UtConfig& ut) {
    std::vector<std::string> names = (kind == ModelKind::linear)
        ? std::vector<std::string>{"kappa", "beta", "sigma_N", "sigma_V", "g", "v0"}
        : std::vector<std::string>{"kappa", "kappa3", "beta", "sigma_N", "g", "v0"};
    const ModelParams base = result.params;
    std::vector<double> est(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) est[i] = get_param(base, names[i]);
    auto loglik = [&](const std::vector<double>& th) {
        ModelParams p = base;
        for (std::size_t i = 0; i < names.size(); ++i) set_param(p, names[i], th[i]);
        try {
            return segments_loglik_kind(segs, p, kind, ut);
        } catch (const std::exception&) {
            return -std::numeric_limits<double>::infinity();
        }
    };
    TstatReport rep = tstats_from_loglik(loglik, names, est, 1e-4);
    result.tstats = rep.tstats;
    for (auto& d : rep.diagnostics) result.diagnostics.push_back(d);
    return rep.tstats;
}

} // namespace detail

// Deterministic quasi-Newton fit of the free set with multi-start jitter.
inline CalibrationResult optimize_fit(const std::vector<detail::LikSegment>& segs,
                                      const ModelParams& start,
                                      const std::vector<FreeParam>& free, ModelKind kind,
                                      const FitConfig& cfg) {
    auto objective = [&](const std::vector<double>& th) {
        return neg_loglik(th, free, start, segs, kind, cfg.ut);
    };
    const std::vector<double> th0 = pack_params(start, free);

    optim::Result best;
    best.value = std::numeric_limits<double>::infinity();
    const int starts = std::max(1, cfg.multistart);
    for (int s = 0; s < starts; ++s) {
        std::vector<double> th = th0;
        if (s > 0) {
            Rng rng = Rng::substream(cfg.seed, 0x5EED0000ULL + static_cast<std::uint64_t>(s));
            for (auto& x : th) x += 0.1 * std::max(std::abs(x), 0.05) * rng.gaussian();
        }
        if (!std::isfinite(objective(th))) continue;
        optim::Result r = optim::minimize(objective, th, cfg.opt);
        if (r.value < best.value) best = r;
    }

    CalibrationResult res;
    if (!std::isfinite(best.value)) {
        res.params = start;
        res.loglik = -std::numeric_limits<double>::infinity();
        res.diagnostics.push_back("optimization failed from every start");
        return res;
    }
    res.params = unpack_params(best.x, start, free);
    res.loglik = -best.value;
    res.loglik_trace = {-objective(th0), res.loglik};
    res.iterations = best.iterations;
    res.converged = best.converged;
    if (!best.message.empty() && !best.converged) res.diagnostics.push_back("optimizer: " + best.message);
    return res;
}

// Step 1 of the two-step protocol. Linear: EM over the asset's segments.
// Nonlinear: direct likelihood maximization over {sigma_N, g, v0} with
// kappa, kappa3, beta, sigma_V taken from `seed` (sigma_V stays frozen).
inline CalibrationResult fit_asset(const AssetSeries& series, ModelKind kind, const FitConfig& cfg,
                                   const ModelParams& seed) {
    ModelParams start = seed;
    start.alpha = cfg.alpha;
    start.gamma = gamma_fixing_rule(series, cfg.alpha);
    if (start.sigma0 <= 0.0) start.sigma0 = cfg.sigma0_init;
    const auto segs = detail::make_segments(series, start.gamma, cfg.alpha);
    if (start.v0 == 0.0) start.v0 = segs.front().prices.front();

    CalibrationResult res;
    if (kind == ModelKind::linear) {
        start.kappa3 = 0.0;
        res = detail::em_fit_segments(detail::to_em_segments(segs), start, cfg.em_max_iter, cfg.em_tol);
    } else {
        const std::vector<FreeParam> free = {{"sigma_N", true}, {"g", false}, {"v0", false}};
        res = optimize_fit(segs, start, free, kind, cfg);
    }
    detail::model_tstats(res, segs, kind, cfg.ut);
    return res;
}

struct ClassFitSpec {
    std::vector<AssetSeries> assets;
    ModelKind model = ModelKind::linear;
    std::vector<FreeParam> shared;    // defaults depend on model
    std::vector<std::string> per_asset{"sigma_N", "g", "v0", "sigma0", "gamma"};

    std::vector<FreeParam> shared_or_default() const {
        if (!shared.empty()) return shared;
        if (model == ModelKind::linear)
            return {{"kappa", false}, {"beta", true}, {"sigma_V", true}};
        return {{"kappa", false}, {"kappa3", false}, {"beta", true}};
    }

    // shared and per-asset subsets must not overlap; alpha is never free and
    // gamma is fixed per asset by the dispersion rule, so neither may be shared
    void validate() const {
        for (const auto& f : shared_or_default()) {
            if (f.name == "alpha" || f.name == "gamma")
                throw std::invalid_argument("ClassFitSpec: " + f.name + " is never optimized");
            for (const auto& p : per_asset)
                if (p == f.name)
                    throw std::invalid_argument("ClassFitSpec: " + f.name +
                                                " cannot be both shared and per-asset");
        }
        for (const auto& p : per_asset)
            if (p == "alpha")
                throw std::invalid_argument("ClassFitSpec: alpha is never optimized");
    }
};

struct ClassFitResult {
    std::map<std::string, double> shared;
    std::vector<CalibrationResult> per_asset; // step-1 params with shared overrides, refreshed logliks
    double total_loglik = 0.0;
    bool converged = false;
    std::vector<std::string> diagnostics;
};

// Step 2: maximizes the summed predictive log-likelihood over the shared
// subset, holding every per-asset parameter at its step-1 value.
inline ClassFitResult fit_class(const ClassFitSpec& spec,
                                const std::vector<CalibrationResult>& step1,
                                const FitConfig& cfg) {
    if (spec.assets.size() != step1.size())
        throw std::invalid_argument("fit_class: one step-1 result per asset required");
    spec.validate();
    const auto shared = spec.shared_or_default();

    ClassFitResult out;
    if (spec.assets.empty()) throw std::invalid_argument("fit_class: empty asset list");
    if (spec.assets.size() < 2)
        out.diagnostics.push_back("fewer than 2 assets: class fit degenerates to the single-asset fit");

    std::vector<std::vector<detail::LikSegment>> segs(spec.assets.size());
    for (std::size_t i = 0; i < spec.assets.size(); ++i)
        segs[i] = detail::make_segments(spec.assets[i], step1[i].params.gamma, cfg.alpha);

    // initialize the shared subset at the mean of the step-1 estimates
    ModelParams shared_init = step1.front().params;
    for (const auto& f : shared) {
        double acc = 0.0;
        for (const auto& r : step1) acc += detail::get_param(r.params, f.name);
        detail::set_param(shared_init, f.name, acc / static_cast<double>(step1.size()));
    }

    auto class_objective = [&](const std::vector<double>& th) {
        double total = 0.0;
        for (std::size_t i = 0; i < spec.assets.size(); ++i) {
            ModelParams p = step1[i].params;
            for (std::size_t j = 0; j < shared.size(); ++j)
                detail::set_param(p, shared[j].name,
                                  shared[j].log_scale ? std::exp(th[j]) : th[j]);
            try {
                p.validate();
                const double ll = detail::segments_loglik_kind(segs[i], p, spec.model, cfg.ut);
                if (!std::isfinite(ll)) return std::numeric_limits<double>::infinity();
                total += ll;
            } catch (const std::exception&) {
                return std::numeric_limits<double>::infinity();
            }
        }
        return -total;
    };

    std::vector<double> th0 = pack_params(shared_init, shared);
    optim::Result best;
    best.value = std::numeric_limits<double>::infinity();
    const int starts = std::max(1, cfg.multistart);
    for (int s = 0; s < starts; ++s) {
        std::vector<double> th = th0;
        if (s > 0) {
            Rng rng = Rng::substream(cfg.seed, 0xC1A5500ULL + static_cast<std::uint64_t>(s));
            for (auto& x : th) x += 0.1 * std::max(std::abs(x), 0.05) * rng.gaussian();
        }
        if (!std::isfinite(class_objective(th))) continue;
        optim::Result r = optim::minimize(class_objective, th, cfg.opt);
        if (r.value < best.value) best = r;
    }
    if (!std::isfinite(best.value)) {
        out.diagnostics.push_back("class optimization failed from every start");
        out.per_asset = step1;
        return out;
    }

    out.converged = best.converged;
    out.total_loglik = -best.value;
    for (std::size_t j = 0; j < shared.size(); ++j)
        out.shared[shared[j].name] = shared[j].log_scale ? std::exp(best.x[j]) : best.x[j];

    out.per_asset = step1;
    for (std::size_t i = 0; i < spec.assets.size(); ++i) {
        for (const auto& [name, value] : out.shared) detail::set_param(out.per_asset[i].params, name, value);
        out.per_asset[i].loglik =
            detail::segments_loglik_kind(segs[i], out.per_asset[i].params, spec.model, cfg.ut);
        detail::model_tstats(out.per_asset[i], segs[i], spec.model, cfg.ut);
    }
    return out;
}

// UKF-likelihood t-statistics for a nonlinear fit (sigma_V held fixed).
inline std::map<std::string, double> mle_tstats(CalibrationResult& result,
                                                const std::vector<double>& prices,
                                                const FitConfig& cfg = {}) {
    detail::LikSegment seg;
    seg.prices = prices;
    seg.u = control_series(prices, result.params.gamma, result.params.alpha);
    seg.owns_prior = true;
    return detail::model_tstats(result, {seg}, ModelKind::nonlinear, cfg.ut);
}

struct TwoStepResult {
    std::vector<CalibrationResult> step1;
    ClassFitResult class_fit;
    std::optional<ClassFitResult> linear_baseline; // populated for nonlinear runs
};

// Full two-step protocol for one asset class. The nonlinear branch first
// runs the linear protocol to obtain sigma_V (frozen afterwards) and the
// kappa/beta seeds; kappa3 starts at kappa3_init_scale * |kappa|.
// `alternations` > 1 repeats step 1 / step 2 with shared values frozen
// into the per-asset refits.
inline TwoStepResult two_step_fit(const std::vector<AssetSeries>& assets, ModelKind kind,
                                  const FitConfig& cfg) {
    if (assets.empty()) throw std::invalid_argument("two_step_fit: empty asset list");
    TwoStepResult out;

    ModelParams seed;
    seed.kappa = 0.05;
    seed.beta = 0.01;
    seed.sigma_N = 0.05;
    seed.sigma_V = 0.02;
    seed.sigma0 = cfg.sigma0_init;
    seed.alpha = cfg.alpha;

    auto run_protocol = [&](ModelKind k, const ModelParams& s0) {
        TwoStepResult r;
        r.step1.resize(assets.size());
        detail::parallel_for(assets.size(), cfg.workers, [&](std::size_t i) {
            r.step1[i] = fit_asset(assets[i], k, cfg, s0);
        });
        ClassFitSpec spec;
        spec.assets = assets;
        spec.model = k;
        r.class_fit = fit_class(spec, r.step1, cfg);
        for (int a = 1; a < cfg.alternations; ++a) {
            // coordinate descent: refresh the per-asset subset with the shared
            // values frozen, then redo the class fit
            std::vector<CalibrationResult> refit = r.class_fit.per_asset;
            detail::parallel_for(assets.size(), cfg.workers, [&](std::size_t i) {
                auto segs = detail::make_segments(assets[i], refit[i].params.gamma, cfg.alpha);
                const std::vector<FreeParam> free = {{"sigma_N", true}, {"g", false}, {"v0", false}};
                refit[i] = optimize_fit(segs, refit[i].params, free, k, cfg);
            });
            r.class_fit = fit_class(spec, refit, cfg);
        }
        return r;
    };

    if (kind == ModelKind::linear) {
        out = run_protocol(ModelKind::linear, seed);
        return out;
    }

    TwoStepResult lin = run_protocol(ModelKind::linear, seed);
    out.linear_baseline = lin.class_fit;

    out.step1.resize(assets.size());
    detail::parallel_for(assets.size(), cfg.workers, [&](std::size_t i) {
        ModelParams s = lin.class_fit.per_asset[i].params;
        s.kappa3 = cfg.kappa3_init_scale * std::abs(s.kappa);
        out.step1[i] = fit_asset(assets[i], ModelKind::nonlinear, cfg, s);
    });
    ClassFitSpec spec;
    spec.assets = assets;
    spec.model = ModelKind::nonlinear;
    out.class_fit = fit_class(spec, out.step1, cfg);
    for (int a = 1; a < cfg.alternations; ++a) {
        std::vector<CalibrationResult> refit = out.class_fit.per_asset;
        detail::parallel_for(assets.size(), cfg.workers, [&](std::size_t i) {
            auto segs = detail::make_segments(assets[i], refit[i].params.gamma, cfg.alpha);
            const std::vector<FreeParam> free = {{"sigma_N", true}, {"g", false}, {"v0", false}};
            refit[i] = optimize_fit(segs, refit[i].params, free, ModelKind::nonlinear, cfg);
        });
        out.class_fit = fit_class(spec, refit, cfg);
    }
    return out;
}

} // namespace chiarella
