#include <catch2/catch_amalgamated.hpp>

#include "chiarella/kalman.hpp"
#include "chiarella/rng.hpp"
#include "chiarella/series.hpp"
#include "chiarella/simulate.hpp"
#include "oracle_gaussian.hpp"

using namespace chiarella;

namespace {

ModelParams random_admissible(Rng& rng) {
    ModelParams p;
    p.kappa = 0.02 + 0.6 * rng.uniform();
    p.beta = 0.08 * rng.uniform();
    p.gamma = 5.0 + 50.0 * rng.uniform();
    p.alpha = 0.1 + 0.4 * rng.uniform();
    p.sigma_N = 0.01 + 0.15 * rng.uniform();
    p.sigma_V = 0.005 + 0.08 * rng.uniform();
    p.g = -0.004 + 0.008 * rng.uniform();
    p.v0 = 4.0 + rng.uniform();
    p.sigma0 = 0.05 + 0.4 * rng.uniform();
    return p;
}

std::vector<double> random_prices(Rng& rng, const ModelParams& p, std::size_t n) {
    std::vector<double> prices(n);
    prices[0] = p.v0 + 0.2 * rng.gaussian();
    for (std::size_t i = 1; i < n; ++i) prices[i] = prices[i - 1] + 0.05 * rng.gaussian();
    return prices;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3}); }

} // namespace

TEST_CASE("kf input validation") {
    ModelParams p;
    p.kappa = 0.1;
    p.sigma_N = 0.05;
    p.sigma_V = 0.02;
    p.sigma0 = 0.1;
    p.gamma = 30.0;
    const std::vector<double> prices{1.0, 1.1, 1.05, 1.2};
    const std::vector<double> u{0.0, 0.01, -0.02};
    CHECK_NOTHROW(kf_forward(prices, u, p));
    SECTION("short series") {
        CHECK_THROWS_AS(kf_forward({1.0, 1.1}, {0.0}, p), std::invalid_argument);
    }
    SECTION("cubic model rejected") {
        ModelParams q = p;
        q.kappa3 = 0.1;
        CHECK_THROWS_AS(kf_forward(prices, u, q), std::invalid_argument);
    }
    SECTION("nonpositive sigmas rejected") {
        ModelParams q = p;
        q.sigma_N = 0.0;
        CHECK_THROWS_AS(kf_forward(prices, u, q), std::invalid_argument);
        q = p;
        q.sigma0 = -1.0;
        CHECK_THROWS_AS(kf_forward(prices, u, q), std::invalid_argument);
    }
    SECTION("misaligned control series") {
        CHECK_THROWS_AS(kf_forward(prices, {0.0, 0.0}, p), std::invalid_argument);
    }
}

TEST_CASE("kf hand-checked single step") {
    // V_pred = 0.01, kappa = 0.1, sigma_N = 0.05
    ModelParams p;
    p.kappa = 0.1;
    p.sigma_N = 0.05;
    p.sigma_V = 1e-8; // keep later steps harmless
    p.sigma0 = 0.1;   // V_1^0 = 0.01
    p.gamma = 30.0;
    p.v0 = 1.0;
    const std::vector<double> prices{1.0, 1.02, 1.01, 1.03};
    const std::vector<double> u{0.0, 0.0, 0.0};
    const FilterOutput f = kf_forward(prices, u, p);
    CHECK_THAT(f.gain[0], Catch::Matchers::WithinAbs(0.001 / 0.0026, 1e-12));
    CHECK_THAT(f.gain[0], Catch::Matchers::WithinAbs(0.38462, 1e-5));
    CHECK_THAT(f.var_filt[0], Catch::Matchers::WithinAbs(0.01 * (1.0 - 0.1 * 0.38462), 1e-7));
    CHECK_THAT(f.var_filt[0], Catch::Matchers::WithinAbs(0.0096154, 1e-7));
}

TEST_CASE("kf with kappa = 0 ignores observations") {
    ModelParams p;
    p.kappa = 0.0;
    p.sigma_N = 0.05;
    p.sigma_V = 0.02;
    p.sigma0 = 0.1;
    p.gamma = 30.0;
    p.v0 = 2.0;
    Rng rng(3);
    const auto prices = random_prices(rng, p, 20);
    const auto u = control_series(prices, p.gamma, p.alpha);
    const FilterOutput f = kf_forward(prices, u, p);
    for (std::size_t i = 0; i < f.size(); ++i) {
        CHECK(f.gain[i] == 0.0);
        CHECK(f.v_filt[i] == f.v_pred[i]);
        CHECK(f.var_filt[i] == f.var_pred[i]);
    }
}

TEST_CASE("Riccati fixed point collapses when the value noise vanishes") {
    ModelParams p;
    p.kappa = 0.2;
    p.sigma_N = 0.05;
    p.sigma_V = 1e-9;
    p.sigma0 = 0.3;
    p.gamma = 30.0;
    p.v0 = 2.0;
    Rng rng(5);
    const auto prices = random_prices(rng, p, 3000);
    const auto u = control_series(prices, p.gamma, p.alpha);
    const FilterOutput f = kf_forward(prices, u, p);
    // V* = V* sigma_N^2/(kappa^2 V* + sigma_N^2) has the unique fixed point 0
    CHECK(f.var_pred.back() < 5e-5);
    CHECK(f.var_pred.back() < f.var_pred.front());
}

TEST_CASE("smoother terminal condition and variance dominance") {
    Rng rng(11);
    for (int rep = 0; rep < 100; ++rep) {
        const ModelParams p = random_admissible(rng);
        const auto prices = random_prices(rng, p, 12);
        const auto u = control_series(prices, p.gamma, p.alpha);
        const FilterOutput f = kf_forward(prices, u, p);
        const SmoothOutput s = rts_smooth(f, p);
        const std::size_t T = f.size();
        CHECK(s.v_smooth[T - 1] == f.v_filt[T - 1]);
        CHECK(s.var_smooth[T - 1] == f.var_filt[T - 1]);
        CHECK(s.gains_j[T - 1] == 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            CHECK(s.var_smooth[t] <= f.var_filt[t] + 1e-12);
            CHECK(s.var_smooth[t] > 0.0);
            CHECK(f.var_filt[t] > 0.0);
        }
    }
}

TEST_CASE("lag-one covariance initialization at T = 2") {
    ModelParams p;
    p.kappa = 0.3;
    p.sigma_N = 0.05;
    p.sigma_V = 0.02;
    p.sigma0 = 0.2;
    p.gamma = 30.0;
    p.v0 = 1.0;
    const std::vector<double> prices{1.0, 1.05, 1.02};
    const std::vector<double> u{0.0, 0.01};
    const FilterOutput f = kf_forward(prices, u, p);
    const SmoothOutput s = rts_smooth(f, p);
    const auto c = lag_one_cov(f, s, p);
    REQUIRE(c.size() == 1);
    CHECK_THAT(c[0], Catch::Matchers::WithinRel((1.0 - p.kappa * f.gain[1]) * f.var_filt[0], 1e-14));
}

TEST_CASE("dense-Gaussian oracle equivalence") {
    Rng rng(2024);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        ModelParams p = random_admissible(rng);
        const std::size_t n = 4 + static_cast<std::size_t>(rng.below(6)); // prices: 4..9, T: 3..8
        const auto prices = random_prices(rng, p, n);
        const auto u = control_series(prices, p.gamma, p.alpha);
        const std::size_t T = n - 1;

        const FilterOutput f = kf_forward(prices, u, p);
        const SmoothOutput s = rts_smooth(f, p);
        const auto c = lag_one_cov(f, s, p);
        const oracle::DenseModel dm(prices, u, p);

        // filtered moments: condition on y_{1..t}
        for (std::size_t t = 1; t <= T; ++t) {
            const auto post = dm.condition(t);
            worst = std::max(worst, rel_err(f.v_filt[t - 1], post.mean[t - 1]));
            worst = std::max(worst, rel_err(f.var_filt[t - 1], post.cov[t - 1][t - 1]));
        }
        // smoothed moments and lag-one covariances: condition on everything
        const auto post = dm.condition(T);
        for (std::size_t t = 0; t < T; ++t) {
            worst = std::max(worst, rel_err(s.v_smooth[t], post.mean[t]));
            worst = std::max(worst, rel_err(s.var_smooth[t], post.cov[t][t]));
        }
        for (std::size_t t = 0; t + 1 < T; ++t)
            worst = std::max(worst, rel_err(c[t], post.cov[t][t + 1]));
        // predictive log-likelihood equals the exact marginal
        worst = std::max(worst, rel_err(kf_predictive_loglik(f), dm.marginal_loglik()));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("smoothing is a pure post-processor") {
    ModelParams p;
    p.kappa = 0.1;
    p.beta = 0.02;
    p.gamma = 30.0;
    p.sigma_N = 0.05;
    p.sigma_V = 0.02;
    p.sigma0 = 0.2;
    p.v0 = 2.0;
    Rng rng(23);
    const auto prices = random_prices(rng, p, 40);
    const auto u = control_series(prices, p.gamma, p.alpha);
    const FilterOutput f = kf_forward(prices, u, p);
    const FilterOutput before = f;
    (void)rts_smooth(f, p);
    CHECK(f.v_filt == before.v_filt);
    CHECK(f.var_filt == before.var_filt);
    const FilterOutput again = kf_forward(prices, u, p);
    CHECK(again.v_filt == f.v_filt);
    CHECK(again.loglik_terms == f.loglik_terms);
}

TEST_CASE("predictive log-likelihood matches an independent density sum") {
    ModelParams p;
    p.kappa = 0.12;
    p.beta = 0.02;
    p.sigma_N = 0.05;
    p.sigma_V = 0.02;
    p.sigma0 = 0.2;
    p.gamma = 30.0;
    p.v0 = 3.0;
    Rng rng(17);
    const auto prices = random_prices(rng, p, 50);
    const auto u = control_series(prices, p.gamma, p.alpha);
    const FilterOutput f = kf_forward(prices, u, p);
    double expected = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double z = f.innovation[i];
        const double s2 = f.innovation_var[i];
        expected += -0.5 * std::log(2.0 * M_PI * s2) - z * z / (2.0 * s2);
    }
    CHECK_THAT(kf_predictive_loglik(f), Catch::Matchers::WithinAbs(expected, 1e-12));
}

TEST_CASE("unit-density innovation contributes a zero term") {
    // choose sigma_N so that S = 1/(2pi); with kappa = 0 the innovation is
    // fully controlled through the prices
    ModelParams p;
    p.kappa = 0.0;
    p.beta = 0.0;
    p.sigma_N = std::sqrt(1.0 / (2.0 * M_PI));
    p.sigma_V = 1e-6;
    p.sigma0 = 1e-6;
    p.gamma = 30.0;
    p.v0 = 1.0;
    const std::vector<double> prices{1.0, 1.0, 1.0};
    const std::vector<double> u{0.0, 0.0};
    const FilterOutput f = kf_forward(prices, u, p);
    CHECK_THAT(f.loglik_terms[0], Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("loglik at the generating parameters beats an inflated noise scale") {
    ModelParams p;
    p.kappa = 0.05;
    p.beta = 0.015;
    p.gamma = 36.7;
    p.sigma_N = 0.043;
    p.sigma_V = 0.018;
    p.g = 0.001;
    p.v0 = 4.4;
    p.sigma0 = 0.1;
    int wins = 0;
    for (int seed = 0; seed < 100; ++seed) {
        const SimPath path = simulate_path(p, 600, 9000 + static_cast<std::uint64_t>(seed));
        const auto u = control_series(path.p, p.gamma, p.alpha);
        ModelParams bad = p;
        bad.sigma_N *= 2.0;
        const double ll_true = kf_predictive_loglik(kf_forward(path.p, u, p));
        const double ll_bad = kf_predictive_loglik(kf_forward(path.p, u, bad));
        wins += ll_true > ll_bad;
    }
    CHECK(wins >= 95);
}
