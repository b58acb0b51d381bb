#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "chiarella/data.hpp"
#include "chiarella/mle.hpp"
#include "chiarella/simulate.hpp"

using namespace chiarella;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("chiarella_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

} // namespace

TEST_CASE("load_series") {
    TempDir tmp;
    const LoadSpec spec{"TEST", AssetClass::index};

    SECTION("two-row file loads") {
        write_file(tmp.file("a.csv"), "date,price\n1900-01,100.0\n1900-02,101.5\n");
        const AssetSeries s = load_series(tmp.file("a.csv"), spec);
        REQUIRE(s.size() == 2);
        CHECK(s.dates[0].str() == "1900-01");
        CHECK(s.price[1] == 101.5);
        CHECK_THAT(s.log_price[0], Catch::Matchers::WithinRel(std::log(100.0), 1e-15));
    }
    SECTION("full ISO dates are accepted, day ignored") {
        write_file(tmp.file("iso.csv"), "date,price\n1900-01-31,100\n1900-02-28,101\n");
        const AssetSeries s = load_series(tmp.file("iso.csv"), spec);
        CHECK(s.dates[1].month == 2);
    }
    SECTION("non-positive price names the row") {
        write_file(tmp.file("bad.csv"), "date,price\n1900-01,100\n1900-02,0\n");
        CHECK_THROWS_WITH(load_series(tmp.file("bad.csv"), spec),
                          Catch::Matchers::ContainsSubstring(":3"));
    }
    SECTION("duplicate and non-monthly dates name the row") {
        write_file(tmp.file("dup.csv"), "date,price\n1900-01,1\n1900-01,2\n");
        CHECK_THROWS_WITH(load_series(tmp.file("dup.csv"), spec),
                          Catch::Matchers::ContainsSubstring("duplicate"));
        write_file(tmp.file("gap.csv"), "date,price\n1900-01,1\n1900-03,2\n");
        CHECK_THROWS_WITH(load_series(tmp.file("gap.csv"), spec),
                          Catch::Matchers::ContainsSubstring("non-monthly"));
    }
    SECTION("malformed rows name the row") {
        write_file(tmp.file("mal.csv"), "date,price\n1900-01,1\n1900-02\n");
        CHECK_THROWS_WITH(load_series(tmp.file("mal.csv"), spec),
                          Catch::Matchers::ContainsSubstring(":3"));
        write_file(tmp.file("mal2.csv"), "date,price\n1900-01,abc\n");
        CHECK_THROWS_WITH(load_series(tmp.file("mal2.csv"), spec),
                          Catch::Matchers::ContainsSubstring("malformed"));
    }
    SECTION("missing file") {
        CHECK_THROWS_AS(load_series(tmp.file("nope.csv"), spec), std::runtime_error);
    }
    SECTION("export then load reproduces the series bitwise") {
        ModelParams prm;
        prm.kappa = 0.05;
        prm.beta = 0.01;
        prm.gamma = 30.0;
        prm.sigma_N = 0.05;
        prm.sigma_V = 0.02;
        prm.v0 = 4.0;
        prm.sigma0 = 0.1;
        const SimPath path = simulate_path(prm, 120, 7);
        AssetSeries s;
        s.name = "RT";
        s.cls = AssetClass::commodity;
        s.dates.resize(path.p.size());
        s.price.resize(path.p.size());
        s.log_price = path.p;
        for (std::size_t i = 0; i < path.p.size(); ++i) {
            s.dates[i] = MonthDate{1950 + static_cast<int>(i / 12), 1 + static_cast<int>(i % 12)};
            s.price[i] = std::exp(path.p[i]);
            s.log_price[i] = std::log(s.price[i]);
        }
        write_series_csv(s, tmp.file("rt.csv"));
        const AssetSeries back = load_series(tmp.file("rt.csv"), {"RT", AssetClass::commodity});
        REQUIRE(back.size() == s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(back.price[i] == s.price[i]);
            CHECK(back.log_price[i] == s.log_price[i]);
            CHECK(back.dates[i] == s.dates[i]);
        }
    }
}

TEST_CASE("deflation") {
    TempDir tmp;
    write_file(tmp.file("p.csv"), "date,price\n2000-01,100\n2000-02,100\n2000-03,100\n2000-04,100\n");
    const AssetSeries s = load_series(tmp.file("p.csv"), {"X", AssetClass::index});

    SECTION("constant CPI changes nothing") {
        CpiSeries cpi{s.dates, {50.0, 50.0, 50.0, 50.0}};
        const AssetSeries d = deflate(s, cpi);
        for (std::size_t i = 0; i < s.size(); ++i)
            CHECK_THAT(d.log_price[i], Catch::Matchers::WithinAbs(s.log_price[i], 1e-15));
    }
    SECTION("rising CPI with flat nominal prices lowers early real prices") {
        CpiSeries cpi{s.dates, {100.0, 110.0, 120.0, 130.0}};
        const AssetSeries d = deflate(s, cpi);
        // log p_real = log p + log(CPI_last/CPI_t), decreasing adjustment over time
        for (std::size_t i = 0; i < s.size(); ++i)
            CHECK_THAT(d.log_price[i],
                       Catch::Matchers::WithinAbs(s.log_price[i] + std::log(130.0 / cpi.value[i]), 1e-12));
    }
    SECTION("deflation then inverse deflation restores the series") {
        CpiSeries cpi{s.dates, {100.0, 104.0, 97.0, 115.0}};
        CpiSeries inv{s.dates, {1.0 / 100.0, 1.0 / 104.0, 1.0 / 97.0, 1.0 / 115.0}};
        const AssetSeries once = deflate(s, cpi);
        const AssetSeries back = deflate(once, inv);
        for (std::size_t i = 0; i < s.size(); ++i)
            CHECK_THAT(back.log_price[i], Catch::Matchers::WithinAbs(s.log_price[i], 1e-12));
    }
    SECTION("CPI must cover the series") {
        CpiSeries cpi{{MonthDate{2000, 2}, MonthDate{2000, 3}}, {100.0, 101.0}};
        CHECK_THROWS_WITH(deflate(s, cpi), Catch::Matchers::ContainsSubstring("cover"));
    }
    SECTION("inline cpi column deflates on load") {
        write_file(tmp.file("pc.csv"),
                   "date,price,cpi\n2000-01,100,100\n2000-02,100,110\n2000-03,100,121\n");
        const AssetSeries d = load_series(tmp.file("pc.csv"), {"Y", AssetClass::index});
        CHECK_THAT(d.log_price[0], Catch::Matchers::WithinAbs(std::log(100.0) + std::log(1.21), 1e-12));
        CHECK_THAT(d.log_price[2], Catch::Matchers::WithinAbs(std::log(100.0), 1e-12));
    }
}

TEST_CASE("exclusion windows") {
    ModelParams prm;
    prm.kappa = 0.05;
    prm.beta = 0.015;
    prm.gamma = 30.0;
    prm.alpha = 1.0 / 7.0;
    prm.sigma_N = 0.05;
    prm.sigma_V = 0.02;
    prm.g = 0.001;
    prm.v0 = 4.0;
    prm.sigma0 = 0.15;
    const SimPath path = simulate_path(prm, 240, 11);
    AssetSeries s;
    s.name = "EX";
    s.cls = AssetClass::index;
    s.dates.resize(240);
    s.price.resize(240);
    s.log_price = path.p;
    for (std::size_t i = 0; i < 240; ++i) {
        s.dates[i] = MonthDate{1980 + static_cast<int>(i / 12), 1 + static_cast<int>(i % 12)};
        s.price[i] = std::exp(path.p[i]);
    }

    SECTION("no windows leave the series intact") {
        const AssetSeries e = apply_exclusions(s, {});
        REQUIRE(e.segments().size() == 1);
        CHECK(e.segments()[0] == std::pair<std::size_t, std::size_t>{0, 240});
    }
    SECTION("covering everything is an error") {
        CHECK_THROWS_WITH(apply_exclusions(s, {{MonthDate{1980, 1}, MonthDate{2005, 12}}}),
                          Catch::Matchers::ContainsSubstring("no usable data"));
    }
    SECTION("a mid-series window splits the series and the likelihood adds up") {
        // exclude 1990-01 .. 1991-12 (indices 120..143)
        const AssetSeries e = apply_exclusions(s, {{MonthDate{1990, 1}, MonthDate{1991, 12}}});
        const auto segs = e.segments();
        REQUIRE(segs.size() == 2);
        CHECK(segs[0] == std::pair<std::size_t, std::size_t>{0, 120});
        CHECK(segs[1] == std::pair<std::size_t, std::size_t>{144, 240});

        const auto lik_segs = detail::make_segments(e, prm.gamma, prm.alpha);
        const double total = detail::segments_loglik_kind(lik_segs, prm, ModelKind::linear, {});

        // manual per-segment filtering with re-primed priors
        double manual = 0.0;
        for (std::size_t k = 0; k < segs.size(); ++k) {
            const auto prices = e.segment_log_prices(segs[k]);
            const auto u = control_series(prices, prm.gamma, prm.alpha);
            ModelParams q = prm;
            if (k > 0) q.v0 = prices.front();
            manual += kf_predictive_loglik(kf_forward(prices, u, q));
        }
        CHECK_THAT(total, Catch::Matchers::WithinRel(manual, 1e-14));
    }
    SECTION("fragments shorter than three observations are dropped") {
        // leave a 2-point fragment at the start
        const AssetSeries e = apply_exclusions(s, {{MonthDate{1980, 3}, MonthDate{1981, 12}}});
        const auto segs = e.segments();
        REQUIRE(segs.size() == 1);
        CHECK(segs[0].first == 24);
    }
}
