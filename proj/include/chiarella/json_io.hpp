#pragma once

// JSON serialization of results and run manifests (nlohmann/json, vendored).
// Keys are emitted in sorted order, so identical results are byte-identical.

#include <string>
#include <vector>

#include <json.hpp>

#include "chiarella/analysis.hpp"
#include "chiarella/em.hpp"
#include "chiarella/mle.hpp"
#include "chiarella/simulate.hpp"

namespace chiarella::io {

using json = nlohmann::json;

inline json to_json(const ModelParams& p) {
    return json{{"kappa", p.kappa},     {"kappa3", p.kappa3}, {"beta", p.beta},
                {"gamma", p.gamma},     {"alpha", p.alpha},   {"sigma_N", p.sigma_N},
                {"sigma_V", p.sigma_V}, {"g", p.g},           {"v0", p.v0},
                {"sigma0", p.sigma0}};
}

inline ModelParams params_from_json(const json& j) {
    ModelParams p;
    p.kappa = j.value("kappa", 0.0);
    p.kappa3 = j.value("kappa3", 0.0);
    p.beta = j.value("beta", 0.0);
    p.gamma = j.value("gamma", 1.0);
    p.alpha = j.value("alpha", 1.0 / 7.0);
    p.sigma_N = j.value("sigma_N", 0.0);
    p.sigma_V = j.value("sigma_V", 0.0);
    p.g = j.value("g", 0.0);
    p.v0 = j.value("v0", 0.0);
    p.sigma0 = j.value("sigma0", 0.0);
    return p;
}

inline json to_json(const CalibrationResult& r) {
    return json{{"params", to_json(r.params)},
                {"loglik", r.loglik},
                {"loglik_trace", r.loglik_trace},
                {"iterations", r.iterations},
                {"converged", r.converged},
                {"tstats", r.tstats},
                {"diagnostics", r.diagnostics}};
}

inline json to_json(const ClassFitResult& r) {
    json per = json::array();
    for (const auto& a : r.per_asset) per.push_back(to_json(a));
    return json{{"shared", r.shared},
                {"per_asset", per},
                {"total_loglik", r.total_loglik},
                {"converged", r.converged},
                {"diagnostics", r.diagnostics}};
}

inline json to_json(const CycleReport& r) {
    return json{{"converged_to_fixed_point", r.converged_to_fixed_point},
                {"period", r.period},
                {"amplitude_m", r.amplitude_m},
                {"amplitude_delta", r.amplitude_delta},
                {"period_spread", r.period_spread}};
}

inline json to_json(const RegressionReport& r) {
    return json{{"terms", r.terms},
                {"coefficients", r.coefficients},
                {"pvalues", r.pvalues},
                {"adj_r2", r.adj_r2},
                {"n", r.n}};
}

inline json to_json(const DistortionStats& s) {
    json silver = json::object();
    for (const auto& [k, p] : s.silverman) silver[std::to_string(k)] = p;
    return json{{"variance", s.variance},
                {"rms", s.rms},
                {"hist_edges", s.hist_edges},
                {"hist_counts", s.hist_counts},
                {"silverman", silver}};
}

inline void write_json(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

inline json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

} // namespace chiarella::io
