#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphdyn/series.hpp"
#include "graphdyn/util.hpp"

namespace graphdyn {

enum class SplitMode {
    kPlainRatio,             // no calendar structure; ratio split, empty test set
    kTrafficWeekdayWeekend,  // train on weekday clock windows, test on weekends
    kIliSeason               // train on Winter+Summer weeks, test on Spring+Fall
};

inline std::string to_string(SplitMode m) {
    switch (m) {
        case SplitMode::kPlainRatio: return "plain";
        case SplitMode::kTrafficWeekdayWeekend: return "traffic";
        case SplitMode::kIliSeason: return "ili";
    }
    return "?";
}

inline SplitMode split_mode_from_string(const std::string& s) {
    if (s == "plain") return SplitMode::kPlainRatio;
    if (s == "traffic") return SplitMode::kTrafficWeekdayWeekend;
    if (s == "ili") return SplitMode::kIliSeason;
    throw std::invalid_argument("unknown split mode: " + s);
}

/// Mismatched-split specification. Hour windows are half-open clock ranges;
/// `train_days` of 0 means every available weekday, otherwise one seeded
/// block of that many consecutive weekdays.
struct SplitSpec {
    SplitMode mode = SplitMode::kPlainRatio;
    int train_hour_begin = 8;
    int train_hour_end = 12;
    int test_hour_begin = 13;
    int test_hour_end = 14;
    std::size_t train_days = 0;
    int ratio_train = 3;
    int ratio_val = 1;
    std::uint64_t seed = 0;
};

/// Pair indices into the table: entry t stands for the sample
/// (x(t), x(t+1)). Train/val are drawn from the training regime only and
/// test from the disjoint regime, so no pair can appear on both sides.
struct SplitResult {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

namespace detail {

inline bool in_hour_window(std::int64_t ts, int begin_hour, int end_hour) {
    const int h = hour_of_day(ts);
    return h >= begin_hour && h < end_hour;
}

inline bool is_winter_summer(std::int64_t ts) {
    const int m = civil_from_epoch(ts).month;
    return m == 12 || m <= 2 || (m >= 6 && m <= 8);
}

/// True when the pair has at least one vertex with both endpoints observed;
/// fully missing pairs carry no usable target and are excluded.
inline bool pair_usable(const TimeSeriesTable& table, std::size_t t) {
    for (std::size_t i = 0; i < table.vertex_count(); ++i)
        if (table.observed(t, i) && table.observed(t + 1, i)) return true;
    return false;
}

inline void ratio_split(std::vector<std::size_t> pool, int ratio_train, int ratio_val,
                        std::uint64_t seed, std::vector<std::size_t>& train,
                        std::vector<std::size_t>& val) {
    if (ratio_train < 1 || ratio_val < 1)
        throw std::invalid_argument("build_split: ratios must be positive");
    Rng rng(derive_seed(seed, "split-ratio"));
    shuffle(pool, rng);
    const std::size_t n_train =
        pool.size() * static_cast<std::size_t>(ratio_train) /
        static_cast<std::size_t>(ratio_train + ratio_val);
    train.assign(pool.begin(), pool.begin() + n_train);
    val.assign(pool.begin() + n_train, pool.end());
    if (train.empty() || val.empty())
        throw std::invalid_argument("build_split: not enough samples to split train/val");
}

}  // namespace detail

inline SplitResult build_split(const TimeSeriesTable& table, const SplitSpec& spec) {
    if (table.step_count() < 2) throw std::invalid_argument("build_split: table too short");
    SplitResult result;
    std::vector<std::size_t> train_pool;

    switch (spec.mode) {
        case SplitMode::kPlainRatio: {
            for (std::size_t t = 0; t + 1 < table.step_count(); ++t)
                if (detail::pair_usable(table, t)) train_pool.push_back(t);
            break;
        }
        case SplitMode::kTrafficWeekdayWeekend: {
            for (std::size_t t = 0; t + 1 < table.step_count(); ++t) {
                const std::int64_t a = table.timestamps[t];
                const std::int64_t b = table.timestamps[t + 1];
                if (!detail::pair_usable(table, t)) continue;
                if (!is_weekend(a) && !is_weekend(b) &&
                    detail::in_hour_window(a, spec.train_hour_begin, spec.train_hour_end) &&
                    detail::in_hour_window(b, spec.train_hour_begin, spec.train_hour_end)) {
                    train_pool.push_back(t);
                } else if (is_weekend(a) && is_weekend(b) &&
                           detail::in_hour_window(a, spec.test_hour_begin, spec.test_hour_end) &&
                           detail::in_hour_window(b, spec.test_hour_begin, spec.test_hour_end)) {
                    result.test.push_back(t);
                }
            }
            if (spec.train_days > 0) {
                // The ordered list of weekday day-indices covered by the
                // table; one seeded run of `train_days` of them is kept.
                std::vector<std::int64_t> weekdays;
                const std::int64_t first = detail::day_of_epoch(table.timestamps.front());
                const std::int64_t last = detail::day_of_epoch(table.timestamps.back());
                for (std::int64_t d = first; d <= last; ++d)
                    if (((d % 7) + 7 + 3) % 7 < 5) weekdays.push_back(d);
                if (weekdays.size() < spec.train_days)
                    throw std::invalid_argument(
                        "build_split: table spans fewer weekdays than train_days");
                Rng rng(derive_seed(spec.seed, "split-block"));
                const std::size_t start = static_cast<std::size_t>(
                    rng() % (weekdays.size() - spec.train_days + 1));
                std::vector<std::size_t> kept;
                for (std::size_t t : train_pool) {
                    const std::int64_t d = detail::day_of_epoch(table.timestamps[t]);
                    for (std::size_t k = 0; k < spec.train_days; ++k)
                        if (weekdays[start + k] == d) {
                            kept.push_back(t);
                            break;
                        }
                }
                train_pool = std::move(kept);
            }
            break;
        }
        case SplitMode::kIliSeason: {
            for (std::size_t t = 0; t + 1 < table.step_count(); ++t) {
                const std::int64_t a = table.timestamps[t];
                const std::int64_t b = table.timestamps[t + 1];
                if (!detail::pair_usable(table, t)) continue;
                if (detail::is_winter_summer(a) && detail::is_winter_summer(b))
                    train_pool.push_back(t);
                else if (!detail::is_winter_summer(a) && !detail::is_winter_summer(b))
                    result.test.push_back(t);
            }
            break;
        }
    }

    if (train_pool.empty())
        throw std::invalid_argument("build_split: no training pairs match the spec");
    detail::ratio_split(std::move(train_pool), spec.ratio_train, spec.ratio_val, spec.seed,
                        result.train, result.val);
    return result;
}

}  // namespace graphdyn
