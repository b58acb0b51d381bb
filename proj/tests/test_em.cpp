#include <catch2/catch_amalgamated.hpp>

#include "chiarella/em.hpp"
#include "chiarella/mle.hpp"
#include "chiarella/simulate.hpp"
#include "oracle_gaussian.hpp"

using namespace chiarella;

namespace {

ModelParams us_like() {
    ModelParams p;
    p.kappa = 0.015;
    p.beta = 0.015;
    p.gamma = 36.7;
    p.alpha = 1.0 / 7.0;
    p.sigma_N = 0.043;
    p.sigma_V = 0.018;
    p.g = 0.0011;
    p.v0 = 4.42;
    p.sigma0 = 0.1;
    return p;
}

ModelParams perturbed_start(const ModelParams& truth) {
    ModelParams p = truth;
    p.kappa = 0.01;
    p.beta = 0.01;
    p.sigma_N = 0.06;
    p.sigma_V = 0.03;
    p.g = 0.0;
    p.sigma0 = 0.3;
    return p;
}

} // namespace

TEST_CASE("e_step moments") {
    ModelParams p = us_like();
    const SimPath path = simulate_path(p, 8, 21);
    const auto u = control_series(path.p, p.gamma, p.alpha);

    SECTION("matches the dense oracle") {
        Rng rng(101);
        for (int rep = 0; rep < 50; ++rep) {
            ModelParams q = us_like();
            q.kappa = 0.05 + 0.4 * rng.uniform();
            q.sigma_N = 0.02 + 0.1 * rng.uniform();
            q.sigma_V = 0.01 + 0.05 * rng.uniform();
            q.sigma0 = 0.05 + 0.3 * rng.uniform();
            const SufficientStats st = e_step(path.p, u, q);
            const oracle::DenseModel dm(path.p, u, q);
            const auto post = dm.condition(st.E_v.size());
            for (std::size_t t = 0; t < st.E_v.size(); ++t) {
                CHECK_THAT(st.E_v[t], Catch::Matchers::WithinRel(post.mean[t], 1e-9));
                CHECK_THAT(st.E_v2[t],
                           Catch::Matchers::WithinRel(post.cov[t][t] + post.mean[t] * post.mean[t], 1e-9));
            }
            for (std::size_t t = 0; t + 1 < st.E_v.size(); ++t)
                CHECK_THAT(st.E_vv[t],
                           Catch::Matchers::WithinRel(post.cov[t][t + 1] + post.mean[t] * post.mean[t + 1], 1e-9));
        }
    }
    SECTION("E_v2 - E_v^2 equals the smoothed variance") {
        const SufficientStats st = e_step(path.p, u, p);
        const FilterOutput f = kf_forward(path.p, u, p);
        const SmoothOutput s = rts_smooth(f, p);
        for (std::size_t t = 0; t < st.E_v.size(); ++t)
            CHECK_THAT(st.E_v2[t] - st.E_v[t] * st.E_v[t],
                       Catch::Matchers::WithinRel(s.var_smooth[t], 1e-10));
    }
    SECTION("kappa = 0 with near-zero value noise follows the prior drift") {
        ModelParams q = p;
        q.kappa = 0.0;
        q.sigma_V = 1e-7;
        q.sigma0 = 1e-6;
        const SufficientStats st = e_step(path.p, u, q);
        for (std::size_t t = 0; t < st.E_v.size(); ++t)
            CHECK_THAT(st.E_v[t],
                       Catch::Matchers::WithinAbs(q.v0 + static_cast<double>(t) * q.g, 1e-6));
    }
}

TEST_CASE("m_step") {
    ModelParams p = us_like();
    const SimPath path = simulate_path(p, 400, 5);
    const auto u = control_series(path.p, p.gamma, p.alpha);
    const SufficientStats st = e_step(path.p, u, p);

    SECTION("g update is the mean smoothed-value increment") {
        const ModelParams next = m_step(st, path.p, u, p);
        const double expect = (st.E_v.back() - st.E_v.front()) / static_cast<double>(st.E_v.size() - 1);
        CHECK_THAT(next.g, Catch::Matchers::WithinRel(expect, 1e-12));
    }
    SECTION("u = 0 reduces to the kappa-only system") {
        const std::vector<double> u0(u.size(), 0.0);
        const SufficientStats st0 = e_step(path.p, u0, p);
        const ModelParams next = m_step(st0, path.p, u0, p);
        CHECK(next.beta == 0.0);
        double a11 = 0.0, b1 = 0.0;
        for (std::size_t t = 0; t < st0.E_v.size(); ++t) {
            const double pl = path.p[t];
            const double r = path.p[t + 1] - pl;
            a11 += st0.E_v2[t] - 2.0 * pl * st0.E_v[t] + pl * pl;
            b1 += (st0.E_v[t] - pl) * r;
        }
        CHECK_THAT(next.kappa, Catch::Matchers::WithinRel(b1 / a11, 1e-12));
    }
    SECTION("fully degenerate regressors are rejected") {
        // constant prices pinned to the prior make both regressors vanish
        ModelParams q = p;
        q.kappa = 0.0;
        q.g = 0.0;
        q.v0 = 1.0;
        q.sigma_V = 1e-9;
        q.sigma0 = 1e-9;
        const std::vector<double> flat(50, 1.0);
        const std::vector<double> uf(49, 0.0);
        const SufficientStats stf = e_step(flat, uf, q);
        CHECK_THROWS_AS(m_step(stf, flat, uf, q), std::runtime_error);
    }
    SECTION("one EM iteration from a perturbed start increases the loglik") {
        int improved = 0;
        for (int seed = 0; seed < 100; ++seed) {
            const SimPath sp = simulate_path(p, 400, 700 + static_cast<std::uint64_t>(seed));
            const auto uu = control_series(sp.p, p.gamma, p.alpha);
            const ModelParams start = perturbed_start(p);
            const double ll0 = kf_predictive_loglik(kf_forward(sp.p, uu, start));
            const SufficientStats ss = e_step(sp.p, uu, start);
            const ModelParams next = m_step(ss, sp.p, uu, start);
            const double ll1 = kf_predictive_loglik(kf_forward(sp.p, uu, next));
            improved += ll1 > ll0;
        }
        CHECK(improved == 100);
    }
    SECTION("M-step output is a stationary point of the expected joint density") {
        const ModelParams next = m_step(st, path.p, u, p);
        detail::EmSegment seg{path.p, u, true};
        const double g0 = detail::em_g_function({st}, {seg}, next);
        for (const std::string name : {"kappa", "beta", "sigma_N", "sigma_V", "g", "v0", "sigma0"}) {
            for (double mult : {0.99, 1.01}) {
                ModelParams probe = next;
                detail::set_param(probe, name, detail::get_param(next, name) * mult);
                CHECK(detail::em_g_function({st}, {seg}, probe) <= g0 + 1e-10);
            }
        }
    }
}

TEST_CASE("em_fit") {
    ModelParams truth = us_like();

    SECTION("max_iter = 0 is a no-op") {
        const SimPath path = simulate_path(truth, 200, 9);
        const CalibrationResult r = em_fit(path.p, truth, 0, 1e-6);
        CHECK(r.iterations == 0);
        CHECK(r.params.kappa == truth.kappa);
        CHECK(r.loglik_trace.size() == 1);
        const auto u = control_series(path.p, truth.gamma, truth.alpha);
        CHECK_THAT(r.loglik,
                   Catch::Matchers::WithinRel(kf_predictive_loglik(kf_forward(path.p, u, truth)), 1e-12));
    }
    SECTION("trace is nondecreasing and alpha/gamma never move") {
        for (int seed = 0; seed < 20; ++seed) {
            const SimPath path = simulate_path(truth, 600, 40 + static_cast<std::uint64_t>(seed));
            const CalibrationResult r = em_fit(path.p, perturbed_start(truth), 200, 1e-8);
            for (std::size_t i = 1; i < r.loglik_trace.size(); ++i)
                CHECK(r.loglik_trace[i] >= r.loglik_trace[i - 1] - 1e-8);
            CHECK(r.params.alpha == truth.alpha);
            CHECK(r.params.gamma == truth.gamma);
        }
    }
    SECTION("starting at the truth moves parameters little") {
        const SimPath path = simulate_path(truth, 2400, 77);
        const CalibrationResult r = em_fit(path.p, truth, 300, 1e-8);
        for (std::size_t i = 1; i < r.loglik_trace.size(); ++i)
            CHECK(r.loglik_trace[i] >= r.loglik_trace[i - 1] - 1e-8);
        CHECK(std::abs(r.params.kappa - truth.kappa) < 0.1 * std::abs(truth.kappa) + 0.01);
        CHECK(std::abs(r.params.sigma_N - truth.sigma_N) < 0.1 * truth.sigma_N);
    }
}

TEST_CASE("em_tstats") {
    ModelParams truth = us_like();

    SECTION("flat direction is reported absent with a diagnostic") {
        // beta multiplies a control identically equal to zero: no curvature.
        // Evaluate at a converged fit of the remaining parameters.
        ModelParams strong = truth;
        strong.kappa = 0.094;
        strong.beta = 0.0;
        const SimPath path = simulate_path(strong, 1200, 3);
        const std::vector<double> u0(path.p.size() - 1, 0.0);
        detail::EmSegment seg{path.p, u0, true};
        CalibrationResult r = detail::em_fit_segments({seg}, strong, 500, 1e-9);
        em_tstats(r, path.p, u0);
        CHECK_FALSE(r.tstats.contains("beta"));
        CHECK_FALSE(r.diagnostics.empty());
        CHECK(r.tstats.contains("kappa"));
    }
    SECTION("kappa is significant in most recovery runs") {
        // commodity-like row: the linear pull is strong enough to identify
        ModelParams strong = truth;
        strong.kappa = 0.094;
        strong.beta = 0.020;
        strong.gamma = 24.1;
        strong.sigma_N = 0.074;
        strong.sigma_V = 0.036;
        strong.g = -0.0007;
        int significant = 0;
        for (int seed = 0; seed < 20; ++seed) {
            const SimPath path = simulate_path(strong, 2400, 3000 + static_cast<std::uint64_t>(seed));
            CalibrationResult r = em_fit(path.p, perturbed_start(strong), 500, 1e-8);
            const auto u = control_series(path.p, strong.gamma, strong.alpha);
            em_tstats(r, path.p, u);
            if (r.tstats.contains("kappa") && std::abs(r.tstats.at("kappa")) > 2.0) ++significant;
        }
        CHECK(significant >= 18);
    }
    SECTION("t grows roughly with sqrt(T)") {
        ModelParams strong = truth;
        strong.kappa = 0.094;
        strong.beta = 0.020;
        strong.gamma = 24.1;
        strong.sigma_N = 0.074;
        strong.sigma_V = 0.036;
        const SimPath path = simulate_path(strong, 9600, 4242);
        auto fit_t = [&](std::size_t n) {
            std::vector<double> prices(path.p.begin(), path.p.begin() + static_cast<std::ptrdiff_t>(n));
            CalibrationResult r = em_fit(prices, perturbed_start(strong), 500, 1e-8);
            const auto u = control_series(prices, strong.gamma, strong.alpha);
            em_tstats(r, prices, u);
            return std::abs(r.tstats.at("kappa"));
        };
        const double t1 = fit_t(2400);
        const double t4 = fit_t(9600);
        CHECK(t4 / t1 > 1.4);
        CHECK(t4 / t1 < 2.6);
    }
}
