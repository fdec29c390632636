#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

#include "graphdyn/util.hpp"

namespace graphdyn {

/// Evaluation summary under the missing-value rule: `count` predictions
/// entered the metrics, `dropped` were removed because the target or its
/// predecessor was missing. mae <= rmse always holds.
struct MetricsReport {
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t count = 0;
    std::size_t dropped = 0;
};

namespace detail {

inline void check_metric_args(std::span<const double> pred, std::span<const double> target,
                              std::span<const std::uint8_t> mask) {
    if (pred.size() != target.size())
        throw std::invalid_argument("metrics: prediction/target length mismatch");
    if (!mask.empty() && mask.size() != pred.size())
        throw std::invalid_argument("metrics: mask length mismatch");
}

}  // namespace detail

/// Masked mean absolute error. An empty mask means fully observed.
inline double mae(std::span<const double> pred, std::span<const double> target,
                  std::span<const std::uint8_t> mask = {}) {
    detail::check_metric_args(pred, target, mask);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!mask.empty() && !mask[i]) continue;
        total += std::abs(pred[i] - target[i]);
        ++count;
    }
    if (count == 0) throw std::invalid_argument("mae: every entry is masked");
    return total / static_cast<double>(count);
}

/// Masked root-mean-square error.
inline double rmse(std::span<const double> pred, std::span<const double> target,
                   std::span<const std::uint8_t> mask = {}) {
    detail::check_metric_args(pred, target, mask);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!mask.empty() && !mask[i]) continue;
        const double d = pred[i] - target[i];
        total += d * d;
        ++count;
    }
    if (count == 0) throw std::invalid_argument("rmse: every entry is masked");
    return std::sqrt(total / static_cast<double>(count));
}

inline MetricsReport metrics_report(std::span<const double> pred, std::span<const double> target,
                                    std::span<const std::uint8_t> mask = {}) {
    MetricsReport r;
    r.mae = mae(pred, target, mask);
    r.rmse = rmse(pred, target, mask);
    if (mask.empty()) {
        r.count = pred.size();
    } else {
        for (std::uint8_t m : mask)
            if (m) ++r.count;
    }
    r.dropped = pred.size() - r.count;
    return r;
}

}  // namespace graphdyn
