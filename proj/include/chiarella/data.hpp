#pragma once

// Monthly price series ingestion: CSV parsing, CPI deflation, exclusion
// windows. A series with exclusions splits into contiguous segments; returns
// are never computed across a gap and downstream filters re-prime at each
// segment start.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace chiarella {

struct MonthDate {
    int year = 0;
    int month = 0; // 1..12

    int index() const { return year * 12 + (month - 1); }
    auto operator<=>(const MonthDate&) const = default;

    std::string str() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
        return buf;
    }

    // Accepts YYYY-MM or YYYY-MM-DD (the day is ignored).
    static std::optional<MonthDate> parse(const std::string& s) {
        if (s.size() < 7 || s[4] != '-') return std::nullopt;
        int y = 0, m = 0;
        auto [p1, e1] = std::from_chars(s.data(), s.data() + 4, y);
        auto [p2, e2] = std::from_chars(s.data() + 5, s.data() + 7, m);
        if (e1 != std::errc{} || e2 != std::errc{} || p1 != s.data() + 4 || p2 != s.data() + 7)
            return std::nullopt;
        if (s.size() > 7 && s[7] != '-') return std::nullopt;
        if (m < 1 || m > 12) return std::nullopt;
        return MonthDate{y, m};
    }
};

struct DateRange {
    MonthDate from, to; // inclusive
};

enum class AssetClass { index, commodity, fx, bond };

inline const char* asset_class_name(AssetClass c) {
    switch (c) {
        case AssetClass::index: return "index";
        case AssetClass::commodity: return "commodity";
        case AssetClass::fx: return "fx";
        case AssetClass::bond: return "bond";
    }
    return "index";
}

inline AssetClass parse_asset_class(const std::string& s) {
    if (s == "index") return AssetClass::index;
    if (s == "commodity") return AssetClass::commodity;
    if (s == "fx") return AssetClass::fx;
    if (s == "bond") return AssetClass::bond;
    throw std::invalid_argument("unknown asset class: " + s);
}

struct AssetSeries {
    std::string name;
    AssetClass cls = AssetClass::index;
    std::vector<MonthDate> dates;
    std::vector<double> price;     // as loaded (or deflated)
    std::vector<double> log_price; // log(price), deflation shifts it exactly
    std::vector<bool> excluded_mask;
    std::vector<DateRange> excluded;

    std::size_t size() const { return dates.size(); }

    // Contiguous non-excluded index ranges [first, last) with at least 3
    // observations (shorter fragments cannot be filtered).
    std::vector<std::pair<std::size_t, std::size_t>> segments() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        std::size_t i = 0;
        const std::size_t n = size();
        while (i < n) {
            while (i < n && !included(i)) ++i;
            std::size_t j = i;
            while (j < n && included(j)) ++j;
            if (j - i >= 3) out.emplace_back(i, j);
            i = j;
        }
        return out;
    }

    bool included(std::size_t i) const { return excluded_mask.empty() || !excluded_mask[i]; }

    std::vector<double> segment_log_prices(std::pair<std::size_t, std::size_t> seg) const {
        return {log_price.begin() + static_cast<std::ptrdiff_t>(seg.first),
                log_price.begin() + static_cast<std::ptrdiff_t>(seg.second)};
    }
};

struct LoadSpec {
    std::string name;
    AssetClass cls = AssetClass::index;
};

struct CpiSeries {
    std::vector<MonthDate> dates;
    std::vector<double> value;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        std::size_t b = 0;
        while (b < field.size() && field[b] == ' ') ++b;
        out.push_back(field.substr(b));
    }
    return out;
}

inline double parse_number(const std::string& s, const std::string& path, std::size_t line_no) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed number '" + s + "'");
    return v;
}

struct RawTable {
    std::vector<MonthDate> dates;
    std::vector<double> col1;
    std::vector<double> col2;
    bool has_col2 = false;
};

inline RawTable load_monthly_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    RawTable tab;
    std::string line;
    std::size_t line_no = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (header) {
            header = false;
            tab.has_col2 = fields.size() >= 3;
            continue;
        }
        if (fields.size() < 2)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed row");
        const auto date = MonthDate::parse(fields[0]);
        if (!date)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad date '" + fields[0] + "'");
        if (!tab.dates.empty()) {
            const int gap = date->index() - tab.dates.back().index();
            if (gap == 0)
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": duplicate month " + date->str());
            if (gap != 1)
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": non-monthly step to " + date->str());
        }
        tab.dates.push_back(*date);
        tab.col1.push_back(parse_number(fields[1], path, line_no));
        if (tab.has_col2) {
            if (fields.size() < 3)
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": missing cpi column");
            tab.col2.push_back(parse_number(fields[2], path, line_no));
        }
    }
    return tab;
}

} // namespace detail

// CSV schema: header row, then date,price[,cpi] with ISO dates and positive
// prices. Errors carry path:line.
inline AssetSeries load_series(const std::string& path, const LoadSpec& spec) {
    const auto tab = detail::load_monthly_csv(path);
    if (tab.dates.size() < 2) throw std::runtime_error(path + ": need at least 2 rows");
    AssetSeries s;
    s.name = spec.name;
    s.cls = spec.cls;
    s.dates = tab.dates;
    s.price = tab.col1;
    s.log_price.resize(s.price.size());
    for (std::size_t i = 0; i < s.price.size(); ++i) {
        if (!(s.price[i] > 0.0))
            throw std::runtime_error(path + ":" + std::to_string(i + 2) + ": non-positive price");
        s.log_price[i] = std::log(s.price[i]);
    }
    if (tab.has_col2) {
        // inline CPI column: deflate immediately
        CpiSeries cpi{tab.dates, tab.col2};
        const double last = cpi.value.back();
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!(cpi.value[i] > 0.0))
                throw std::runtime_error(path + ":" + std::to_string(i + 2) + ": non-positive cpi");
            s.log_price[i] += std::log(last / cpi.value[i]);
            s.price[i] = std::exp(s.log_price[i]);
        }
    }
    return s;
}

inline CpiSeries load_cpi(const std::string& path) {
    const auto tab = detail::load_monthly_csv(path);
    CpiSeries cpi{tab.dates, tab.col1};
    for (std::size_t i = 0; i < cpi.value.size(); ++i)
        if (!(cpi.value[i] > 0.0))
            throw std::runtime_error(path + ":" + std::to_string(i + 2) + ": non-positive cpi");
    return cpi;
}

// Real prices: log p <- log p + log(CPI_last / CPI_t). Exact affine shift in
// log space; the price column is kept consistent for export.
inline AssetSeries deflate(AssetSeries s, const CpiSeries& cpi) {
    if (cpi.dates.empty()) throw std::invalid_argument("deflate: empty CPI series");
    const int base = cpi.dates.front().index();
    const double last = cpi.value.back();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const int k = s.dates[i].index() - base;
        if (k < 0 || k >= static_cast<int>(cpi.value.size()))
            throw std::runtime_error("deflate: CPI does not cover " + s.dates[i].str());
        s.log_price[i] += std::log(last / cpi.value[static_cast<std::size_t>(k)]);
        s.price[i] = std::exp(s.log_price[i]);
    }
    return s;
}

inline AssetSeries apply_exclusions(AssetSeries s, const std::vector<DateRange>& windows) {
    s.excluded_mask.assign(s.size(), false);
    s.excluded = windows;
    for (const auto& w : windows) {
        if (w.to < w.from) throw std::invalid_argument("apply_exclusions: window end before start");
        for (std::size_t i = 0; i < s.size(); ++i)
            if (!(s.dates[i] < w.from) && !(w.to < s.dates[i])) s.excluded_mask[i] = true;
    }
    if (s.segments().empty())
        throw std::runtime_error("apply_exclusions: no usable data remains for " + s.name);
    return s;
}

inline void write_series_csv(const AssetSeries& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "date,price\n";
    char buf[64];
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), s.price[i]);
        (void)ec;
        out << s.dates[i].str() << ',' << std::string_view(buf, static_cast<std::size_t>(p - buf))
            << '\n';
    }
}

} // namespace chiarella
