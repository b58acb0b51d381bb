// Batch front end: simulate | fit | analyze | report | rerun.
// Every run writes a run_manifest.json capturing command, inputs and options
// (but not the output directory), so `chiarella rerun <manifest> --out DIR`
// byte-reproduces the outputs.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chiarella/chiarella.hpp"
#include "chiarella/json_io.hpp"

namespace fs = std::filesystem;
using namespace chiarella;
using chiarella::io::json;

namespace {

struct AssetSpecEntry {
    std::string name;
    AssetClass cls = AssetClass::index;
    std::string path;
    std::string cpi;       // optional CPI csv
    std::string dividends; // optional dividends csv (for the gordon benchmark)
    std::vector<DateRange> exclude;
};

struct DatasetManifest {
    double alpha = 1.0 / 7.0;
    std::vector<AssetSpecEntry> assets;
    double gordon_discount = 0.068;
    double gordon_growth = 0.022;
    // fit-option defaults; CLI flags take precedence when given
    std::optional<double> em_tol;
    std::optional<int> em_max_iter;
    std::optional<int> multistart;
    std::optional<int> alternations;
};

DateRange parse_range(const json& j) {
    const auto from = MonthDate::parse(j.at(0).get<std::string>());
    const auto to = MonthDate::parse(j.at(1).get<std::string>());
    if (!from || !to) throw std::runtime_error("manifest: bad exclusion window");
    return DateRange{*from, *to};
}

DatasetManifest load_dataset_manifest(const std::string& path) {
    const json j = io::read_json(path);
    DatasetManifest m;
    if (j.contains("alpha"))
        m.alpha = j.at("alpha").get<double>();
    else if (j.contains("tau"))
        m.alpha = 1.0 / (1.0 + j.at("tau").get<double>());
    const fs::path base = fs::path(path).parent_path();
    for (const auto& a : j.at("assets")) {
        AssetSpecEntry e;
        e.name = a.at("name").get<std::string>();
        e.cls = parse_asset_class(a.value("class", std::string("index")));
        e.path = (base / a.at("path").get<std::string>()).string();
        if (a.contains("cpi")) e.cpi = (base / a.at("cpi").get<std::string>()).string();
        if (a.contains("dividends"))
            e.dividends = (base / a.at("dividends").get<std::string>()).string();
        if (a.contains("exclude"))
            for (const auto& w : a.at("exclude")) e.exclude.push_back(parse_range(w));
        m.assets.push_back(std::move(e));
    }
    if (j.contains("gordon")) {
        m.gordon_discount = j.at("gordon").value("discount", 0.068);
        m.gordon_growth = j.at("gordon").value("terminal_growth", 0.022);
    }
    if (j.contains("fit")) {
        const json& f = j.at("fit");
        if (f.contains("em_tol")) m.em_tol = f.at("em_tol").get<double>();
        if (f.contains("em_max_iter")) m.em_max_iter = f.at("em_max_iter").get<int>();
        if (f.contains("multistart")) m.multistart = f.at("multistart").get<int>();
        if (f.contains("alternations")) m.alternations = f.at("alternations").get<int>();
    }
    if (m.assets.empty()) throw std::runtime_error("manifest: empty asset list");
    return m;
}

AssetSeries load_prepared(const AssetSpecEntry& e) {
    AssetSeries s = load_series(e.path, {e.name, e.cls});
    if (!e.cpi.empty()) s = deflate(s, load_cpi(e.cpi));
    s = apply_exclusions(s, e.exclude);
    return s;
}

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

void write_manifest(const json& manifest, const std::string& out_dir) {
    io::write_json(manifest, (fs::path(out_dir) / "run_manifest.json").string());
}

ModelParams preset_params(const std::string& name) {
    ModelParams p;
    p.alpha = 1.0 / 7.0;
    p.sigma0 = 0.1;
    if (name == "bimodal") {
        p.kappa = 0.0;
        p.kappa3 = 0.4;
        p.beta = 0.03;
        p.gamma = 50.0;
        p.sigma_N = 0.04;
        p.sigma_V = 0.02;
        p.g = 0.001;
        p.v0 = 5.0;
    } else if (name == "unimodal") {
        p.kappa = 0.015;
        p.beta = 0.015;
        p.gamma = 36.7;
        p.sigma_N = 0.043;
        p.sigma_V = 0.018;
        p.g = 0.0011;
        p.v0 = 4.42;
    } else if (name == "noiseless") {
        p.kappa = 0.08;
        p.beta = 0.1;
        p.gamma = 50.0;
        p.sigma_N = 1e-12;
        p.sigma_V = 1e-12;
        p.g = 0.0;
        p.v0 = 5.0;
    } else {
        throw std::runtime_error("unknown preset: " + name);
    }
    return p;
}

// ------------------------------------------------------------------ simulate

struct SimulateOptions {
    std::string preset;
    std::string params_file;
    std::size_t length = 100000;
    std::uint64_t seed = 1;
    std::size_t bins = 60;
    double cycle_horizon = 4000.0;
    double cycle_dt = 0.01;
    double transient_fraction = 0.5;
    std::string out;
};

json simulate_manifest(const SimulateOptions& o) {
    return json{{"command", "simulate"},
                {"preset", o.preset},
                {"params_file", o.params_file.empty() ? "" : fs::absolute(o.params_file).string()},
                {"length", o.length},
                {"seed", o.seed},
                {"bins", o.bins},
                {"cycle_horizon", o.cycle_horizon},
                {"cycle_dt", o.cycle_dt},
                {"transient_fraction", o.transient_fraction}};
}

int cmd_simulate(const SimulateOptions& o) {
    ModelParams prm = o.params_file.empty()
                          ? preset_params(o.preset.empty() ? "unimodal" : o.preset)
                          : io::params_from_json(io::read_json(o.params_file));
    ensure_dir(o.out);

    const SimPath path = simulate_path(prm, o.length, o.seed);
    io::write_sim_path_csv(path, (fs::path(o.out) / "path.csv").string());

    const DistortionStats ds = distortion_stats(path.p, path.v, o.bins);
    io::write_histogram_csv(ds.hist_edges, ds.hist_counts,
                            (fs::path(o.out) / "histogram_delta.csv").string());
    const std::vector<double> zero(path.m.size(), 0.0);
    const DistortionStats ms = distortion_stats(path.m, zero, o.bins);
    io::write_histogram_csv(ms.hist_edges, ms.hist_counts,
                            (fs::path(o.out) / "histogram_m.csv").string());

    // deterministic skeleton of the same parameters
    const Trajectory traj =
        integrate_deterministic(prm, {prm.v0 + 0.1, 0.0, prm.v0}, o.cycle_dt, o.cycle_horizon);
    const CycleReport rep = detect_limit_cycle(traj, o.transient_fraction);
    io::write_json(io::to_json(rep), (fs::path(o.out) / "cycle_report.json").string());

    write_manifest(simulate_manifest(o), o.out);
    return 0;
}

// ----------------------------------------------------------------------- fit

struct FitCmdOptions {
    std::string manifest_path;
    std::string model = "linear";
    std::string only_class; // restrict to one asset class when nonempty
    double em_tol = 1e-6;
    int em_max_iter = 500;
    int multistart = 5;
    int alternations = 1;
    bool em_tol_given = false;
    bool em_max_iter_given = false;
    bool multistart_given = false;
    bool alternations_given = false;
    std::uint64_t seed = 1;
    unsigned workers = 0;
    std::string out;
};

json fit_manifest(const FitCmdOptions& o) {
    return json{{"command", "fit"},
                {"manifest", fs::absolute(o.manifest_path).string()},
                {"model", o.model},
                {"class", o.only_class},
                {"em_tol", o.em_tol},
                {"em_max_iter", o.em_max_iter},
                {"multistart", o.multistart},
                {"alternations", o.alternations},
                {"seed", o.seed}};
}

int cmd_fit(FitCmdOptions o) {
    const DatasetManifest m = load_dataset_manifest(o.manifest_path);
    const ModelKind kind = o.model == "nonlinear" ? ModelKind::nonlinear : ModelKind::linear;
    if (!o.em_tol_given && m.em_tol) o.em_tol = *m.em_tol;
    if (!o.em_max_iter_given && m.em_max_iter) o.em_max_iter = *m.em_max_iter;
    if (!o.multistart_given && m.multistart) o.multistart = *m.multistart;
    if (!o.alternations_given && m.alternations) o.alternations = *m.alternations;
    ensure_dir(o.out);

    FitConfig cfg;
    cfg.alpha = m.alpha;
    cfg.em_tol = o.em_tol;
    cfg.em_max_iter = o.em_max_iter;
    cfg.multistart = o.multistart;
    cfg.alternations = o.alternations;
    cfg.seed = o.seed;
    cfg.workers = detail::resolve_workers(o.workers);

    // group by class, preserving first-appearance order
    std::vector<AssetClass> class_order;
    std::map<AssetClass, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < m.assets.size(); ++i) {
        if (!o.only_class.empty() && m.assets[i].cls != parse_asset_class(o.only_class)) continue;
        if (!by_class.count(m.assets[i].cls)) class_order.push_back(m.assets[i].cls);
        by_class[m.assets[i].cls].push_back(i);
    }
    if (class_order.empty()) throw std::runtime_error("fit: no assets selected");

    int failures = 0;
    for (AssetClass cls : class_order) {
        std::vector<AssetSeries> assets;
        std::vector<std::string> names;
        for (std::size_t idx : by_class[cls]) {
            try {
                assets.push_back(load_prepared(m.assets[idx]));
                names.push_back(m.assets[idx].name);
            } catch (const std::exception& e) {
                std::cerr << "asset " << m.assets[idx].name << " failed: " << e.what() << "\n";
                ++failures;
            }
        }
        if (assets.empty()) continue;
        try {
            const TwoStepResult r = two_step_fit(assets, kind, cfg);
            json cls_json = io::to_json(r.class_fit);
            if (r.linear_baseline) cls_json["linear_baseline"] = io::to_json(*r.linear_baseline);
            json names_json = json::array();
            for (const auto& n : names) names_json.push_back(n);
            cls_json["assets"] = names_json;
            io::write_json(cls_json,
                           (fs::path(o.out) /
                            ("class_" + std::string(asset_class_name(cls)) + ".json"))
                               .string());

            for (std::size_t i = 0; i < assets.size(); ++i) {
                const CalibrationResult& res = r.class_fit.per_asset[i];
                io::write_json(io::to_json(res),
                               (fs::path(o.out) / (names[i] + "_fit.json")).string());
                // smoothed-value band over the asset's segments
                const auto segs = assets[i].segments();
                std::vector<std::string> labels;
                std::vector<double> logp;
                SmoothOutput all;
                for (std::size_t k = 0; k < segs.size(); ++k) {
                    const auto prices = assets[i].segment_log_prices(segs[k]);
                    const auto u = control_series(prices, res.params.gamma, res.params.alpha);
                    ModelParams p = res.params;
                    if (k > 0) p.v0 = prices.front();
                    const FilterOutput f = (kind == ModelKind::linear)
                                               ? kf_forward(prices, u, p)
                                               : ukf_forward(prices, u, p, cfg.ut);
                    const SmoothOutput s =
                        (kind == ModelKind::linear) ? rts_smooth(f, p) : ukf_smooth(f, p);
                    for (std::size_t t = 0; t < s.v_smooth.size(); ++t) {
                        labels.push_back(assets[i].dates[segs[k].first + t].str());
                        logp.push_back(prices[t]);
                        all.v_smooth.push_back(s.v_smooth[t]);
                        all.var_smooth.push_back(s.var_smooth[t]);
                    }
                }
                io::write_value_band_csv(labels, logp, all,
                                         (fs::path(o.out) / (names[i] + "_smooth.csv")).string());
            }
        } catch (const std::exception& e) {
            std::cerr << "class " << asset_class_name(cls) << " failed: " << e.what() << "\n";
            ++failures;
        }
    }

    write_manifest(fit_manifest(o), o.out);
    return failures == 0 ? 0 : 1;
}

// ------------------------------------------------------------------- analyze

struct AnalyzeCmdOptions {
    std::string manifest_path;
    std::string fit_dir;
    std::uint64_t seed = 1;
    std::size_t bins = 60;
    int silverman_b = 500;
    unsigned workers = 0;
    std::string out;
};

json analyze_manifest(const AnalyzeCmdOptions& o) {
    return json{{"command", "analyze"},
                {"manifest", fs::absolute(o.manifest_path).string()},
                {"fit_dir", fs::absolute(o.fit_dir).string()},
                {"seed", o.seed},
                {"bins", o.bins},
                {"silverman_b", o.silverman_b}};
}

int cmd_analyze(const AnalyzeCmdOptions& o) {
    const DatasetManifest m = load_dataset_manifest(o.manifest_path);
    ensure_dir(o.out);
    int failures = 0;

    std::vector<double> pooled_y, pooled_m, pooled_d, pooled_delta;
    json per_asset = json::object();

    for (const auto& entry : m.assets) {
        try {
            const AssetSeries s = load_prepared(entry);
            const json fit =
                io::read_json((fs::path(o.fit_dir) / (entry.name + "_fit.json")).string());
            const ModelParams prm = io::params_from_json(fit.at("params"));
            const ModelKind kind = prm.kappa3 == 0.0 ? ModelKind::linear : ModelKind::nonlinear;

            std::vector<double> y, mm, dd, delta;
            const auto segs = s.segments();
            for (std::size_t k = 0; k < segs.size(); ++k) {
                const auto prices = s.segment_log_prices(segs[k]);
                const auto u = control_series(prices, prm.gamma, prm.alpha);
                const auto mt = trend_signal(prices, prm.alpha);
                ModelParams p = prm;
                if (k > 0) p.v0 = prices.front();
                const FilterOutput f = (kind == ModelKind::linear) ? kf_forward(prices, u, p)
                                                                   : ukf_forward(prices, u, p);
                const SmoothOutput sm =
                    (kind == ModelKind::linear) ? rts_smooth(f, p) : ukf_smooth(f, p);
                // v_smooth[t] estimates the value at segment time t
                for (std::size_t t = 0; t + 1 < prices.size(); ++t) {
                    y.push_back(prices[t + 1] - prices[t]);
                    mm.push_back(mt[t]);
                    dd.push_back(sm.v_smooth[t] - prices[t]); // value signal
                    delta.push_back(prices[t] - sm.v_smooth[t]);
                }
            }
            pool_standardized(y, mm, dd, pooled_y, pooled_m, pooled_d);
            pooled_delta.insert(pooled_delta.end(), delta.begin(), delta.end());

            DistortionStats ds =
                distortion_stats(delta, std::vector<double>(delta.size(), 0.0), o.bins);
            if (delta.size() >= 50) {
                SilvermanOptions sopt;
                sopt.workers = detail::resolve_workers(o.workers);
                ds.silverman[1] = silverman_test(delta, 1, o.silverman_b, o.seed, sopt);
                ds.silverman[2] = silverman_test(delta, 2, o.silverman_b, o.seed + 1, sopt);
            }
            per_asset[entry.name] = io::to_json(ds);
            io::write_histogram_csv(ds.hist_edges, ds.hist_counts,
                                    (fs::path(o.out) / (entry.name + "_histogram.csv")).string());

            if (!entry.dividends.empty()) {
                const CpiSeries divs = load_cpi(entry.dividends); // same date,value schema
                std::vector<std::string> labels;
                for (const auto& d : divs.dates) labels.push_back(d.str());
                const auto gv = gordon_value(divs.value, m.gordon_discount, m.gordon_growth, true);
                io::write_gordon_csv(labels, gv,
                                     (fs::path(o.out) / (entry.name + "_gordon.csv")).string());
            }
        } catch (const std::exception& e) {
            std::cerr << "asset " << entry.name << " failed: " << e.what() << "\n";
            ++failures;
        }
    }

    // the seven regression rows of the tables
    json regressions = json::array();
    const std::vector<std::vector<std::string>> configs = {
        {"const", "m"},
        {"const", "m", "m2", "m3"},
        {"const", "d"},
        {"const", "d", "d3"},
        {"const", "m", "d"},
        {"const", "m", "m2", "m3", "d"},
        {"const", "m", "m2", "m3", "d", "d3"}};
    for (const auto& terms : configs) {
        try {
            regressions.push_back(
                io::to_json(regress_effects(pooled_y, pooled_m, pooled_d, terms)));
        } catch (const std::exception& e) {
            std::cerr << "regression failed: " << e.what() << "\n";
            ++failures;
        }
    }
    io::write_json(json{{"pooled", true}, {"rows", regressions}},
                   (fs::path(o.out) / "regressions.json").string());

    json dist = json::object();
    dist["per_asset"] = per_asset;
    if (pooled_delta.size() >= 50) {
        DistortionStats pooled =
            distortion_stats(pooled_delta, std::vector<double>(pooled_delta.size(), 0.0), o.bins);
        SilvermanOptions sopt;
        sopt.workers = detail::resolve_workers(o.workers);
        pooled.silverman[1] = silverman_test(pooled_delta, 1, o.silverman_b, o.seed + 2, sopt);
        pooled.silverman[2] = silverman_test(pooled_delta, 2, o.silverman_b, o.seed + 3, sopt);
        dist["pooled"] = io::to_json(pooled);
        io::write_histogram_csv(pooled.hist_edges, pooled.hist_counts,
                                (fs::path(o.out) / "pooled_histogram.csv").string());
    }
    io::write_json(dist, (fs::path(o.out) / "distortion.json").string());

    write_manifest(analyze_manifest(o), o.out);
    return failures == 0 ? 0 : 1;
}

// -------------------------------------------------------------------- report

struct ReportCmdOptions {
    std::string run_dir;
    std::string out;
};

int cmd_report(const ReportCmdOptions& o) {
    ensure_dir(o.out);
    json table = json::array();
    std::vector<fs::path> fit_files;
    for (const auto& e : fs::directory_iterator(o.run_dir))
        if (e.path().filename().string().ends_with("_fit.json")) fit_files.push_back(e.path());
    std::sort(fit_files.begin(), fit_files.end());
    if (fit_files.empty()) throw std::runtime_error("report: no *_fit.json in " + o.run_dir);

    std::ofstream csv((fs::path(o.out) / "params_table.csv").string(), std::ios::binary);
    csv << "asset,kappa,kappa3,beta,gamma,sigma_N,sigma_V,g,v0,loglik\n";
    for (const auto& f : fit_files) {
        const json j = io::read_json(f.string());
        const std::string name = f.filename().string().substr(
            0, f.filename().string().size() - std::string("_fit.json").size());
        const json& p = j.at("params");
        table.push_back(json{{"asset", name},
                             {"params", p},
                             {"loglik", j.at("loglik")},
                             {"converged", j.at("converged")},
                             {"tstats", j.value("tstats", json::object())}});
        csv << name << ',' << io::fmt(p.at("kappa").get<double>()) << ','
            << io::fmt(p.at("kappa3").get<double>()) << ',' << io::fmt(p.at("beta").get<double>())
            << ',' << io::fmt(p.at("gamma").get<double>()) << ','
            << io::fmt(p.at("sigma_N").get<double>()) << ','
            << io::fmt(p.at("sigma_V").get<double>()) << ',' << io::fmt(p.at("g").get<double>())
            << ',' << io::fmt(p.at("v0").get<double>()) << ','
            << io::fmt(j.at("loglik").get<double>()) << '\n';
    }
    io::write_json(json{{"assets", table}}, (fs::path(o.out) / "report.json").string());
    io::write_json(json{{"command", "report"}, {"run_dir", fs::absolute(o.run_dir).string()}},
                   (fs::path(o.out) / "run_manifest.json").string());
    return 0;
}

// --------------------------------------------------------------------- rerun

int cmd_rerun(const std::string& manifest_path, const std::string& out) {
    const json j = io::read_json(manifest_path);
    const std::string command = j.at("command").get<std::string>();
    if (command == "simulate") {
        SimulateOptions o;
        o.preset = j.value("preset", std::string());
        o.params_file = j.value("params_file", std::string());
        o.length = j.at("length").get<std::size_t>();
        o.seed = j.at("seed").get<std::uint64_t>();
        o.bins = j.at("bins").get<std::size_t>();
        o.cycle_horizon = j.at("cycle_horizon").get<double>();
        o.cycle_dt = j.at("cycle_dt").get<double>();
        o.transient_fraction = j.at("transient_fraction").get<double>();
        o.out = out;
        return cmd_simulate(o);
    }
    if (command == "fit") {
        FitCmdOptions o;
        o.manifest_path = j.at("manifest").get<std::string>();
        o.model = j.at("model").get<std::string>();
        o.only_class = j.value("class", std::string());
        o.em_tol = j.at("em_tol").get<double>();
        o.em_max_iter = j.at("em_max_iter").get<int>();
        o.multistart = j.at("multistart").get<int>();
        o.alternations = j.at("alternations").get<int>();
        o.em_tol_given = o.em_max_iter_given = o.multistart_given = o.alternations_given = true;
        o.seed = j.at("seed").get<std::uint64_t>();
        o.out = out;
        return cmd_fit(o);
    }
    if (command == "analyze") {
        AnalyzeCmdOptions o;
        o.manifest_path = j.at("manifest").get<std::string>();
        o.fit_dir = j.at("fit_dir").get<std::string>();
        o.seed = j.at("seed").get<std::uint64_t>();
        o.bins = j.at("bins").get<std::size_t>();
        o.silverman_b = j.at("silverman_b").get<int>();
        o.out = out;
        return cmd_analyze(o);
    }
    if (command == "report") {
        ReportCmdOptions o;
        o.run_dir = j.at("run_dir").get<std::string>();
        o.out = out;
        return cmd_report(o);
    }
    throw std::runtime_error("rerun: unknown command " + command);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Extended Chiarella market-model toolkit"};
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* c_sim =
        app.add_subcommand("simulate", "simulate a stochastic path and the deterministic skeleton");
    c_sim->add_option("--preset", sim.preset, "bimodal | unimodal | noiseless");
    c_sim->add_option("--params", sim.params_file, "model parameters JSON");
    c_sim->add_option("--length", sim.length, "path length in months");
    c_sim->add_option("--seed", sim.seed, "RNG seed");
    c_sim->add_option("--bins", sim.bins, "histogram bins");
    c_sim->add_option("--cycle-horizon", sim.cycle_horizon, "deterministic horizon (months)");
    c_sim->add_option("--cycle-dt", sim.cycle_dt, "integration step (months)");
    c_sim->add_option("--transient", sim.transient_fraction, "transient fraction to discard");
    c_sim->add_option("--out", sim.out, "output directory")->required();

    FitCmdOptions fit;
    auto* c_fit = app.add_subcommand("fit", "two-step calibration of a dataset manifest");
    c_fit->add_option("--manifest", fit.manifest_path, "dataset manifest JSON")->required();
    c_fit->add_option("--model", fit.model, "linear | nonlinear");
    c_fit->add_option("--class", fit.only_class, "restrict to one asset class");
    auto* opt_tol = c_fit->add_option("--em-tol", fit.em_tol, "EM loglik tolerance");
    auto* opt_iter = c_fit->add_option("--em-max-iter", fit.em_max_iter, "EM iteration cap");
    auto* opt_ms = c_fit->add_option("--multistart", fit.multistart, "optimizer starts");
    auto* opt_alt = c_fit->add_option("--alternations", fit.alternations, "step-1/step-2 alternations");
    c_fit->add_option("--seed", fit.seed, "RNG seed for start jitter");
    c_fit->add_option("--workers", fit.workers, "worker threads (env CHIARELLA_WORKERS overrides)");
    c_fit->add_option("--out", fit.out, "output directory")->required();

    AnalyzeCmdOptions an;
    auto* c_an = app.add_subcommand("analyze", "trend/value regressions and mispricing statistics");
    c_an->add_option("--manifest", an.manifest_path, "dataset manifest JSON")->required();
    c_an->add_option("--fit", an.fit_dir, "directory produced by `fit`")->required();
    c_an->add_option("--seed", an.seed, "bootstrap seed");
    c_an->add_option("--bins", an.bins, "histogram bins");
    c_an->add_option("--silverman-b", an.silverman_b, "bootstrap replications");
    c_an->add_option("--workers", an.workers, "worker threads (env CHIARELLA_WORKERS overrides)");
    c_an->add_option("--out", an.out, "output directory")->required();

    ReportCmdOptions rep;
    auto* c_rep = app.add_subcommand("report", "consolidate a fit run into a parameter table");
    c_rep->add_option("--run", rep.run_dir, "fit output directory")->required();
    c_rep->add_option("--out", rep.out, "output directory")->required();

    std::string rerun_manifest, rerun_out;
    auto* c_rerun = app.add_subcommand("rerun", "replay a run manifest");
    c_rerun->add_option("manifest", rerun_manifest, "run_manifest.json from a previous run")
        ->required();
    c_rerun->add_option("--out", rerun_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);
    fit.em_tol_given = opt_tol->count() > 0;
    fit.em_max_iter_given = opt_iter->count() > 0;
    fit.multistart_given = opt_ms->count() > 0;
    fit.alternations_given = opt_alt->count() > 0;

    try {
        if (*c_sim) return cmd_simulate(sim);
        if (*c_fit) return cmd_fit(fit);
        if (*c_an) return cmd_analyze(an);
        if (*c_rep) return cmd_report(rep);
        if (*c_rerun) return cmd_rerun(rerun_manifest, rerun_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
