#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphdyn/util.hpp"

namespace graphdyn {

// ---------------------------------------------------------------------------
// Calendar arithmetic on epoch seconds. Timestamps are treated as local,
// timezone-free instants; day boundaries fall on multiples of 86400.
// ---------------------------------------------------------------------------

struct CivilDate {
    int year = 1970;
    int month = 1;
    int day = 1;
};

namespace detail {

/// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

inline std::int64_t day_of_epoch(std::int64_t ts) {
    return ts >= 0 ? ts / 86400 : (ts - 86399) / 86400;
}

}  // namespace detail

inline CivilDate civil_from_epoch(std::int64_t ts) {
    return detail::civil_from_days(detail::day_of_epoch(ts));
}

/// ISO weekday, 0 = Monday .. 6 = Sunday. Day 0 (1970-01-01) was a Thursday.
inline int weekday_from_epoch(std::int64_t ts) {
    const std::int64_t d = detail::day_of_epoch(ts);
    return static_cast<int>(((d % 7) + 7 + 3) % 7);
}

inline bool is_weekend(std::int64_t ts) { return weekday_from_epoch(ts) >= 5; }

inline int hour_of_day(std::int64_t ts) {
    const std::int64_t sec = ts - detail::day_of_epoch(ts) * 86400;
    return static_cast<int>(sec / 3600);
}

struct IsoWeek {
    int year = 1970;
    int week = 1;
    friend bool operator==(const IsoWeek&, const IsoWeek&) = default;
};

/// Monday 00:00 of the given ISO week. Week 1 is the week containing Jan 4.
inline std::int64_t epoch_from_iso_week(IsoWeek w) {
    const std::int64_t jan4 = detail::days_from_civil(w.year, 1, 4);
    const int jan4_wd = static_cast<int>(((jan4 % 7) + 7 + 3) % 7);
    const std::int64_t week1_monday = jan4 - jan4_wd;
    return (week1_monday + 7 * static_cast<std::int64_t>(w.week - 1)) * 86400;
}

inline IsoWeek iso_week_from_epoch(std::int64_t ts) {
    const std::int64_t d = detail::day_of_epoch(ts);
    const int wd = static_cast<int>(((d % 7) + 7 + 3) % 7);
    const std::int64_t thursday = d + (3 - wd);
    const CivilDate cd = detail::civil_from_days(thursday);
    const std::int64_t year_start = detail::days_from_civil(cd.year, 1, 1);
    const int week = static_cast<int>((thursday - year_start) / 7) + 1;
    return {cd.year, week};
}

inline std::string format_iso_week(IsoWeek w) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-W%02d", w.year, w.week);
    return buf;
}

inline IsoWeek parse_iso_week(const std::string& s) {
    // Accepts YYYY-Www, e.g. 2014-W03.
    const auto dash = s.find("-W");
    if (dash == std::string::npos || dash == 0)
        throw std::runtime_error("series csv: bad ISO week label '" + s + "'");
    IsoWeek w;
    try {
        w.year = std::stoi(s.substr(0, dash));
        w.week = std::stoi(s.substr(dash + 2));
    } catch (const std::exception&) {
        throw std::runtime_error("series csv: bad ISO week label '" + s + "'");
    }
    if (w.week < 1 || w.week > 53)
        throw std::runtime_error("series csv: ISO week out of range in '" + s + "'");
    return w;
}

// ---------------------------------------------------------------------------
// TimeSeriesTable
// ---------------------------------------------------------------------------

/// Timestamped per-vertex feature matrix with an observation mask.
/// Zeros in loaded files are treated as missing values.
struct TimeSeriesTable {
    std::vector<std::int64_t> timestamps;  // epoch seconds, strictly increasing, uniform
    std::vector<std::string> columns;      // per-vertex column names
    DenseMatrix values;                    // time x vertex
    MaskVector mask;                       // time x vertex, 1 = observed
    std::int64_t resolution_seconds = 0;
    bool weekly_labels = false;            // write ISO week labels instead of epoch

    std::size_t step_count() const { return values.rows; }
    std::size_t vertex_count() const { return values.cols; }

    double value(std::size_t t, std::size_t i) const { return values.at(t, i); }
    bool observed(std::size_t t, std::size_t i) const { return mask[t * values.cols + i] != 0; }

    std::span<const std::uint8_t> mask_row(std::size_t t) const {
        return {mask.data() + t * values.cols, values.cols};
    }
};

/// One training pair (x(t), x(t+1)) with both observation masks. A vertex
/// counts toward the loss only when its input and target are both observed;
/// missing inputs also drop out of neighbor sums.
struct StepSample {
    std::vector<double> x;
    std::vector<double> y;
    MaskVector x_mask;
    MaskVector y_mask;
};

inline StepSample make_step_sample(const TimeSeriesTable& table, std::size_t t) {
    if (t + 1 >= table.step_count())
        throw std::invalid_argument("make_step_sample: pair index out of range");
    StepSample s;
    s.x.assign(table.values.row(t).begin(), table.values.row(t).end());
    s.y.assign(table.values.row(t + 1).begin(), table.values.row(t + 1).end());
    s.x_mask.assign(table.mask_row(t).begin(), table.mask_row(t).end());
    s.y_mask.assign(table.mask_row(t + 1).begin(), table.mask_row(t + 1).end());
    return s;
}

inline std::vector<StepSample> make_step_samples(const TimeSeriesTable& table,
                                                 std::span<const std::size_t> pair_indices) {
    std::vector<StepSample> out;
    out.reserve(pair_indices.size());
    for (std::size_t t : pair_indices) out.push_back(make_step_sample(table, t));
    return out;
}

// ---------------------------------------------------------------------------
// Series CSV: header `timestamp,v0,...` (or `week,region_0,...`); timestamps
// are integer epoch seconds or ISO week labels. Cell value 0 means missing.
// ---------------------------------------------------------------------------

namespace detail {

inline double parse_double(const std::string& tok) {
    double value = 0.0;
    const auto* first = tok.data();
    const auto* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw std::runtime_error("series csv: malformed value '" + tok + "'");
    return value;
}

inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(strip(line.substr(start)));
            break;
        }
        out.push_back(strip(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

}  // namespace detail

inline TimeSeriesTable load_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open series file: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("series csv: empty file " + path);
    auto header = detail::split_csv_row(detail::strip(line));
    if (header.size() < 2)
        throw std::runtime_error("series csv: header needs a time column and one vertex column");

    TimeSeriesTable table;
    table.columns.assign(header.begin() + 1, header.end());
    const std::size_t n = table.columns.size();
    std::vector<double> flat;
    MaskVector mask;
    while (std::getline(in, line)) {
        const std::string row = detail::strip(line);
        if (row.empty()) continue;
        auto cells = detail::split_csv_row(row);
        if (cells.size() != n + 1)
            throw std::runtime_error("series csv: ragged row '" + row + "'");
        std::int64_t ts = 0;
        const std::string& tcell = cells[0];
        const auto* first = tcell.data();
        const auto* last = tcell.data() + tcell.size();
        auto [ptr, ec] = std::from_chars(first, last, ts);
        if (ec == std::errc{} && ptr == last) {
            // integer epoch seconds
        } else {
            ts = epoch_from_iso_week(parse_iso_week(tcell));
            table.weekly_labels = true;
        }
        table.timestamps.push_back(ts);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = detail::parse_double(cells[1 + i]);
            if (!std::isfinite(v))
                throw std::runtime_error("series csv: non-finite value in row '" + row + "'");
            flat.push_back(v);
            mask.push_back(v == 0.0 ? 0 : 1);  // zeros are missing values
        }
    }
    const std::size_t rows = table.timestamps.size();
    table.values.rows = rows;
    table.values.cols = n;
    table.values.data = std::move(flat);
    table.mask = std::move(mask);
    for (std::size_t t = 1; t < rows; ++t) {
        const std::int64_t dt = table.timestamps[t] - table.timestamps[t - 1];
        if (dt <= 0)
            throw std::runtime_error("series csv: timestamps not strictly increasing");
        if (t == 1)
            table.resolution_seconds = dt;
        else if (dt != table.resolution_seconds)
            throw std::runtime_error("series csv: timestamps not uniformly spaced");
    }
    return table;
}

inline void save_series(const TimeSeriesTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write series file: " + path);
    out << (table.weekly_labels ? "week" : "timestamp");
    for (const auto& c : table.columns) out << ',' << c;
    out << '\n';
    for (std::size_t t = 0; t < table.step_count(); ++t) {
        if (table.weekly_labels)
            out << format_iso_week(iso_week_from_epoch(table.timestamps[t]));
        else
            out << table.timestamps[t];
        for (std::size_t i = 0; i < table.vertex_count(); ++i) {
            // Masked cells are written as 0, the format's missing marker.
            const double v = table.observed(t, i) ? table.value(t, i) : 0.0;
            out << ',' << detail::format_double(v);
        }
        out << '\n';
    }
}

}  // namespace graphdyn
