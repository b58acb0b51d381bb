#pragma once

// CSV writers for the library's output types. Numbers are printed with
// std::to_chars (shortest round-trip), so identical values produce identical
// bytes.

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chiarella/analysis.hpp"
#include "chiarella/kalman.hpp"
#include "chiarella/simulate.hpp"

namespace chiarella::io {

inline std::string fmt(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
    return std::string(buf, p);
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

inline void write_sim_path_csv(const SimPath& path, const std::string& file) {
    auto out = open_out(file);
    out << "t,p,m,v,delta\n";
    for (std::size_t t = 0; t < path.p.size(); ++t)
        out << t << ',' << fmt(path.p[t]) << ',' << fmt(path.m[t]) << ',' << fmt(path.v[t]) << ','
            << fmt(path.p[t] - path.v[t]) << '\n';
}

inline void write_filter_csv(const FilterOutput& f, const std::string& file) {
    auto out = open_out(file);
    out << "t,v_pred,V_pred,v_filt,V_filt,gain,innovation,innovation_var,loglik_terms\n";
    for (std::size_t i = 0; i < f.size(); ++i)
        out << (i + 1) << ',' << fmt(f.v_pred[i]) << ',' << fmt(f.var_pred[i]) << ','
            << fmt(f.v_filt[i]) << ',' << fmt(f.var_filt[i]) << ',' << fmt(f.gain[i]) << ','
            << fmt(f.innovation[i]) << ',' << fmt(f.innovation_var[i]) << ','
            << fmt(f.loglik_terms[i]) << '\n';
}

inline void write_smooth_csv(const SmoothOutput& s, const std::string& file) {
    auto out = open_out(file);
    out << "t,v_smooth,V_smooth,J,lag1_cov\n";
    for (std::size_t i = 0; i < s.v_smooth.size(); ++i) {
        out << (i + 1) << ',' << fmt(s.v_smooth[i]) << ',' << fmt(s.var_smooth[i]) << ','
            << fmt(s.gains_j[i]) << ',';
        if (i < s.lag1_cov.size()) out << fmt(s.lag1_cov[i]);
        out << '\n';
    }
}

inline void write_histogram_csv(const std::vector<double>& edges,
                                const std::vector<std::size_t>& counts, const std::string& file) {
    auto out = open_out(file);
    out << "bin_left,bin_right,count\n";
    for (std::size_t b = 0; b < counts.size(); ++b)
        out << fmt(edges[b]) << ',' << fmt(edges[b + 1]) << ',' << counts[b] << '\n';
}

// Smoothed value with a one-standard-deviation band.
inline void write_value_band_csv(const std::vector<std::string>& labels,
                                 const std::vector<double>& log_price, const SmoothOutput& s,
                                 const std::string& file) {
    auto out = open_out(file);
    out << "date,p,v_smooth,v_lo,v_hi\n";
    for (std::size_t i = 0; i < s.v_smooth.size(); ++i) {
        const double sd = std::sqrt(s.var_smooth[i]);
        out << labels[i] << ',' << fmt(log_price[i]) << ',' << fmt(s.v_smooth[i]) << ','
            << fmt(s.v_smooth[i] - sd) << ',' << fmt(s.v_smooth[i] + sd) << '\n';
    }
}

inline void write_gordon_csv(const std::vector<std::string>& labels,
                             const std::vector<double>& value, const std::string& file) {
    auto out = open_out(file);
    out << "date,gordon_log_value\n";
    for (std::size_t i = 0; i < value.size(); ++i)
        out << labels[i] << ',' << fmt(value[i]) << '\n';
}

} // namespace chiarella::io
