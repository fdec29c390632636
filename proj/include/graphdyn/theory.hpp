#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphdyn/metrics.hpp"
#include "graphdyn/optimize.hpp"
#include "graphdyn/rdgcn.hpp"
#include "graphdyn/series.hpp"
#include "graphdyn/split.hpp"
#include "graphdyn/synth.hpp"
#include "graphdyn/util.hpp"
#include "graphdyn/version.hpp"

namespace graphdyn {

// ---------------------------------------------------------------------------
// Assumption checkers. Pass thresholds (3 standard errors, skewness 0.5) are
// artifact conventions and are carried verbatim in every report.
// ---------------------------------------------------------------------------

struct SymmetryReport {
    double mean = 0.0;
    double median = 0.0;
    double skewness = 0.0;
    double se_mean = 0.0;
    double se_median = 0.0;  // 1.2533 * sd / sqrt(n), normal approximation
    std::size_t count = 0;
    std::vector<double> histogram_edges;
    std::vector<std::size_t> histogram_counts;
    double se_multiplier = 3.0;
    double skewness_threshold = 0.5;
    bool pass = false;
};

/// Checks that a residual sample looks symmetric about zero: mean and
/// median within 3 standard errors of 0 and |skewness| < 0.5.
inline SymmetryReport check_symmetry(std::span<const double> samples, std::size_t bins = 21) {
    if (samples.size() < 30)
        throw std::invalid_argument("check_symmetry: need at least 30 samples, got " +
                                    std::to_string(samples.size()));
    SymmetryReport r;
    r.count = samples.size();
    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0;
    for (double v : samples) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    r.mean = mean;
    r.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    const double sd = std::sqrt(m2 * n / std::max(1.0, n - 1.0));
    r.se_mean = sd / std::sqrt(n);
    r.se_median = 1.2533141373155003 * sd / std::sqrt(n);

    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    r.median = sorted.size() % 2 == 1
                   ? sorted[sorted.size() / 2]
                   : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);

    double hi = 0.0;
    for (double v : samples) hi = std::max(hi, std::abs(v));
    if (hi == 0.0) hi = 1.0;
    r.histogram_edges.resize(bins + 1);
    r.histogram_counts.assign(bins, 0);
    for (std::size_t b = 0; b <= bins; ++b)
        r.histogram_edges[b] = -hi + 2.0 * hi * static_cast<double>(b) / static_cast<double>(bins);
    for (double v : sorted) {
        std::size_t b = static_cast<std::size_t>((v + hi) / (2.0 * hi) * static_cast<double>(bins));
        if (b >= bins) b = bins - 1;
        ++r.histogram_counts[b];
    }

    r.pass = std::abs(r.mean) <= r.se_multiplier * r.se_mean &&
             std::abs(r.median) <= r.se_multiplier * r.se_median &&
             std::abs(r.skewness) < r.skewness_threshold;
    return r;
}

struct NegCorrReport {
    double mean_product = 0.0;
    double se = 0.0;
    std::size_t count = 0;
    double se_multiplier = 3.0;
    bool pass = false;
};

/// Empirical E[G_s * G_tau]; passes when the mean is non-positive within
/// the stated standard-error allowance.
inline NegCorrReport check_negative_correlation(std::span<const double> g_s,
                                                std::span<const double> g_t) {
    if (g_s.size() != g_t.size())
        throw std::invalid_argument("check_negative_correlation: unpaired sample lengths");
    if (g_s.empty()) throw std::invalid_argument("check_negative_correlation: no samples");
    NegCorrReport r;
    r.count = g_s.size();
    const double n = static_cast<double>(g_s.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < g_s.size(); ++i) mean += g_s[i] * g_t[i];
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < g_s.size(); ++i) {
        const double d = g_s[i] * g_t[i] - mean;
        var += d * d;
    }
    var /= std::max(1.0, n - 1.0);
    r.mean_product = mean;
    r.se = std::sqrt(var / n);
    r.pass = mean <= r.se_multiplier * r.se;
    return r;
}

// ---------------------------------------------------------------------------
// The H1 baseline: a ridge regressor over the flattened T x n history.
// ---------------------------------------------------------------------------

struct WindowRegressor {
    std::size_t window = 12;
    std::size_t n = 0;
    double ridge_lambda = 0.0;
    DenseMatrix coef;  // (window * n) x n

    std::vector<double> predict(std::span<const double> flat_history) const {
        if (flat_history.size() != window * n)
            throw std::invalid_argument("window regressor: history length != T*n");
        std::vector<double> out(n, 0.0);
        for (std::size_t f = 0; f < flat_history.size(); ++f) {
            const double h = flat_history[f];
            if (h == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) out[j] += coef.at(f, j) * h;
        }
        return out;
    }
};

/// Windowed design matrix: row r holds rows t-T+1..t of the table
/// concatenated time-major, its target is row t+1. Rows touching any
/// missing cell are skipped (the regressor needs complete features).
struct WindowDataset {
    DenseMatrix X;  // m x (T*n)
    DenseMatrix Y;  // m x n
    std::vector<std::size_t> target_times;
};

inline WindowDataset build_window_dataset(const TimeSeriesTable& table, std::size_t window,
                                          std::size_t t_begin, std::size_t t_end) {
    const std::size_t n = table.vertex_count();
    if (window < 2) throw std::invalid_argument("window regressor: T must be >= 2");
    WindowDataset out;
    std::vector<std::size_t> rows;
    for (std::size_t t = std::max(t_begin, window - 1); t + 1 < t_end; ++t) {
        bool ok = true;
        for (std::size_t k = 0; ok && k < window; ++k)
            for (std::size_t i = 0; ok && i < n; ++i)
                if (!table.observed(t + 1 - window + k, i)) ok = false;
        for (std::size_t i = 0; ok && i < n; ++i)
            if (!table.observed(t + 1, i)) ok = false;
        if (ok) rows.push_back(t);
    }
    out.X = DenseMatrix(rows.size(), window * n);
    out.Y = DenseMatrix(rows.size(), n);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t t = rows[r];
        for (std::size_t k = 0; k < window; ++k)
            for (std::size_t i = 0; i < n; ++i)
                out.X.at(r, k * n + i) = table.value(t + 1 - window + k, i);
        for (std::size_t i = 0; i < n; ++i) out.Y.at(r, i) = table.value(t + 1, i);
    }
    out.target_times.reserve(rows.size());
    for (std::size_t t : rows) out.target_times.push_back(t + 1);
    return out;
}

/// Closed-form ridge solution of the regularized normal equations.
inline WindowRegressor fit_window_regressor(const WindowDataset& data, double ridge_lambda,
                                            std::size_t window, std::size_t n) {
    const std::size_t p = window * n;
    if (data.X.cols != p || data.Y.cols != n || data.X.rows != data.Y.rows)
        throw std::invalid_argument("fit_window_regressor: dataset shape mismatch");
    if (data.X.rows == 0) throw std::invalid_argument("fit_window_regressor: empty dataset");
    DenseMatrix xtx(p, p);
    for (std::size_t r = 0; r < data.X.rows; ++r) {
        const auto row = data.X.row(r);
        for (std::size_t a = 0; a < p; ++a) {
            if (row[a] == 0.0) continue;
            for (std::size_t b = a; b < p; ++b) xtx.at(a, b) += row[a] * row[b];
        }
    }
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < a; ++b) xtx.at(a, b) = xtx.at(b, a);
    for (std::size_t a = 0; a < p; ++a) xtx.at(a, a) += ridge_lambda;
    DenseMatrix xty(p, n);
    for (std::size_t r = 0; r < data.X.rows; ++r)
        for (std::size_t a = 0; a < p; ++a) {
            const double xa = data.X.at(r, a);
            if (xa == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) xty.at(a, j) += xa * data.Y.at(r, j);
        }
    WindowRegressor reg;
    reg.window = window;
    reg.n = n;
    reg.ridge_lambda = ridge_lambda;
    try {
        reg.coef = solve_spd(std::move(xtx), std::move(xty));
    } catch (const std::runtime_error&) {
        throw std::runtime_error(
            "fit_window_regressor: singular normal equations (increase ridge_lambda)");
    }
    return reg;
}

// ---------------------------------------------------------------------------
// Discrepancy experiment (empirical disc estimate over a finite trained
// pool) and the sample-size experiment behind the h2* -> F argument.
// ---------------------------------------------------------------------------

struct TheoryLabConfig {
    SynthConfig source;  // symmetric pattern; shares seed-derived graph/truth/phases
    SynthConfig target;  // same seed, different pattern
    std::size_t seeds = 20;
    std::uint64_t base_seed = 1;
    std::size_t train_steps = 1600;  // leading steps used for fitting
    std::size_t eval_steps = 400;    // trailing steps used for evaluation
    std::size_t window = 12;         // H1 history length
    double ridge_lambda = 1e-3;
    TrainConfig train;  // H2 optimizer settings
};

struct HypothesisOutcome {
    double source_loss = 0.0;
    double target_loss = 0.0;
    double abs_gap = 0.0;
};

struct TrialCurves {
    std::vector<double> h1_target_mae;  // per eval time step, seed-averaged later
    std::vector<double> h2_target_mae;
};

struct DiscrepancyReport {
    std::vector<std::uint64_t> seeds;
    std::vector<bool> trial_valid;
    std::vector<std::string> trial_notes;
    std::vector<HypothesisOutcome> h1_mae, h2_mae, h1_mse, h2_mse;
    double disc_h1_mae = 0.0, disc_h2_mae = 0.0, pooled_se_mae = 0.0;
    double disc_h1_mse = 0.0, disc_h2_mse = 0.0, pooled_se_mse = 0.0;
    SymmetryReport symmetry;
    NegCorrReport negcorr;
    bool mse_gate = false;
    std::size_t pool_size = 0;
    TrialCurves curves;  // seed-averaged target-domain MAE over eval time
};

namespace detail {

inline double pool_max_gap(std::span<const HypothesisOutcome> pool) {
    double m = 0.0;
    for (const auto& h : pool) m = std::max(m, h.abs_gap);
    return m;
}

/// Welch-style pooled standard error of the two |gap| samples.
inline double pooled_se(std::span<const HypothesisOutcome> a,
                        std::span<const HypothesisOutcome> b) {
    auto var = [](std::span<const HypothesisOutcome> pool) {
        if (pool.size() < 2) return 0.0;
        double mean = 0.0;
        for (const auto& h : pool) mean += h.abs_gap;
        mean /= static_cast<double>(pool.size());
        double v = 0.0;
        for (const auto& h : pool) v += (h.abs_gap - mean) * (h.abs_gap - mean);
        return v / static_cast<double>(pool.size() - 1);
    };
    const double n1 = static_cast<double>(std::max<std::size_t>(a.size(), 1));
    const double n2 = static_cast<double>(std::max<std::size_t>(b.size(), 1));
    return std::sqrt(var(a) / n1 + var(b) / n2);
}

struct EvalAccumulator {
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    std::size_t count = 0;

    void add(double pred, double target) {
        const double d = pred - target;
        abs_sum += std::abs(d);
        sq_sum += d * d;
        ++count;
    }
    double mae() const { return abs_sum / static_cast<double>(count); }
    double mse() const { return sq_sum / static_cast<double>(count); }
};

}  // namespace detail

/// Train H2 (RDGCN on one-step pairs) and H1 (ridge over T-step windows) on
/// the synthetic source domain, evaluate both on held-out source and target
/// regions, and report the empirical discrepancy per class: the maximum
/// |source loss - target loss| over the trained pool. The finite pool is an
/// under-approximation of the supremum; its size is part of the report.
inline DiscrepancyReport discrepancy_experiment(const TheoryLabConfig& cfg) {
    if (cfg.seeds < 1) throw std::invalid_argument("theory lab: need at least one seed");
    if (cfg.train_steps < cfg.window + 2 || cfg.eval_steps < cfg.window + 2)
        throw std::invalid_argument("theory lab: train/eval regions too short for the window");
    if (cfg.source.n != cfg.target.n)
        throw std::invalid_argument("theory lab: source and target must share the graph size");

    DiscrepancyReport report;
    const std::size_t horizon = cfg.train_steps + cfg.eval_steps;
    std::vector<double> curve_h1, curve_h2;
    std::size_t curve_trials = 0;

    for (std::size_t trial = 0; trial < cfg.seeds; ++trial) {
        const std::uint64_t trial_seed = derive_seed(cfg.base_seed, "trial-" + std::to_string(trial));
        report.seeds.push_back(trial_seed);

        SynthConfig src = cfg.source;
        SynthConfig tgt = cfg.target;
        src.seed = trial_seed;
        tgt.seed = trial_seed;  // same graph, truth and phases as the source
        tgt.noise_seed = derive_seed(trial_seed, "target-noise");
        src.horizon = horizon;
        tgt.horizon = horizon;

        const auto src_data = synth_rd(src);
        const auto tgt_data = synth_rd(tgt);

        // Symmetry gate on the realized source pattern samples. A
        // common-phase pattern repeats identically across vertices, so only
        // one column carries independent information there.
        auto gate_samples = [&](const DenseMatrix& g, std::size_t rows) {
            std::vector<double> out;
            if (src.g_common_phase) {
                out.reserve(rows);
                for (std::size_t t = 0; t < rows; ++t) out.push_back(g.at(t, 0));
            } else {
                out.assign(g.data.begin(), g.data.begin() + rows * g.cols);
            }
            return out;
        };
        const auto symmetry = check_symmetry(gate_samples(src_data.g_samples, cfg.train_steps - 1));
        if (trial == 0) {
            report.symmetry = symmetry;
            const std::size_t all_rows = src_data.g_samples.rows;
            const auto gs = gate_samples(src_data.g_samples, all_rows);
            const auto gt = gate_samples(tgt_data.g_samples, all_rows);
            report.negcorr = check_negative_correlation(gs, gt);
            report.mse_gate = report.negcorr.pass;
            if (!symmetry.pass)
                throw std::runtime_error(
                    "theory lab: source pattern fails the symmetry check (mean " +
                    std::to_string(symmetry.mean) + ", median " + std::to_string(symmetry.median) +
                    ", skewness " + std::to_string(symmetry.skewness) +
                    "): the source pattern must be symmetric about zero");
        }
        if (!symmetry.pass) {
            report.trial_valid.push_back(false);
            report.trial_notes.push_back("source symmetry check failed");
            continue;
        }

        // H2: RDGCN trained on the source one-step pairs.
        RdModel model(src_data.graph);
        std::vector<std::size_t> train_pool = index_range(cfg.train_steps - 1);
        Rng split_rng(derive_seed(trial_seed, "h2-split"));
        shuffle(train_pool, split_rng);
        const std::size_t n_train = train_pool.size() * 3 / 4;
        std::vector<std::size_t> train_idx(train_pool.begin(), train_pool.begin() + n_train);
        std::vector<std::size_t> val_idx(train_pool.begin() + n_train, train_pool.end());
        auto objective = make_rd_objective(model, make_step_samples(src_data.table, train_idx),
                                           make_step_samples(src_data.table, val_idx));
        TrainConfig tc = cfg.train;
        tc.seed = derive_seed(trial_seed, "h2-train");
        TrainResult trained;
        try {
            trained = train(objective, model.pack(model.init_params(tc.seed)), tc);
        } catch (const std::runtime_error& err) {
            report.trial_valid.push_back(false);
            report.trial_notes.push_back(std::string("H2 training diverged: ") + err.what());
            continue;
        }
        const RdParams h2 = model.unpack(trained.params);

        // H1: ridge regressor over the same source region.
        const auto h1_data = build_window_dataset(src_data.table, cfg.window, 0, cfg.train_steps);
        const auto h1 = fit_window_regressor(h1_data, cfg.ridge_lambda, cfg.window, src.n);

        // Shared evaluation targets: times tau in the trailing region with a
        // full window of history available to H1.
        detail::EvalAccumulator h1_src, h1_tgt, h2_src, h2_tgt;
        const std::size_t eval_begin = cfg.train_steps + cfg.window - 1;
        std::vector<double> trial_curve_h1(horizon - 1 - eval_begin, 0.0);
        std::vector<double> trial_curve_h2(horizon - 1 - eval_begin, 0.0);
        std::vector<double> history(cfg.window * src.n);
        for (std::size_t t = eval_begin; t + 1 < horizon; ++t) {
            for (const bool on_target : {false, true}) {
                const TimeSeriesTable& table = on_target ? tgt_data.table : src_data.table;
                const auto x = table.values.row(t);
                const auto target_row = table.values.row(t + 1);
                const auto pred2 = model.forward(h2, x);
                for (std::size_t k = 0; k < cfg.window; ++k)
                    for (std::size_t i = 0; i < src.n; ++i)
                        history[k * src.n + i] = table.value(t + 1 - cfg.window + k, i);
                const auto pred1 = h1.predict(history);
                detail::EvalAccumulator te1, te2;
                for (std::size_t i = 0; i < src.n; ++i) {
                    (on_target ? h1_tgt : h1_src).add(pred1[i], target_row[i]);
                    (on_target ? h2_tgt : h2_src).add(pred2[i], target_row[i]);
                    if (on_target) {
                        te1.add(pred1[i], target_row[i]);
                        te2.add(pred2[i], target_row[i]);
                    }
                }
                if (on_target) {
                    trial_curve_h1[t - eval_begin] = te1.mae();
                    trial_curve_h2[t - eval_begin] = te2.mae();
                }
            }
        }

        auto outcome = [](const detail::EvalAccumulator& s, const detail::EvalAccumulator& t,
                          bool mse) {
            HypothesisOutcome o;
            o.source_loss = mse ? s.mse() : s.mae();
            o.target_loss = mse ? t.mse() : t.mae();
            o.abs_gap = std::abs(o.source_loss - o.target_loss);
            return o;
        };
        report.h1_mae.push_back(outcome(h1_src, h1_tgt, false));
        report.h2_mae.push_back(outcome(h2_src, h2_tgt, false));
        report.h1_mse.push_back(outcome(h1_src, h1_tgt, true));
        report.h2_mse.push_back(outcome(h2_src, h2_tgt, true));
        report.trial_valid.push_back(true);
        report.trial_notes.push_back("");

        if (curve_h1.empty()) {
            curve_h1.assign(trial_curve_h1.size(), 0.0);
            curve_h2.assign(trial_curve_h2.size(), 0.0);
        }
        for (std::size_t i = 0; i < curve_h1.size(); ++i) {
            curve_h1[i] += trial_curve_h1[i];
            curve_h2[i] += trial_curve_h2[i];
        }
        ++curve_trials;
    }

    if (report.h1_mae.empty())
        throw std::runtime_error("theory lab: no valid trials (see trial notes)");
    report.pool_size = report.h1_mae.size();
    report.disc_h1_mae = detail::pool_max_gap(report.h1_mae);
    report.disc_h2_mae = detail::pool_max_gap(report.h2_mae);
    report.pooled_se_mae = detail::pooled_se(report.h1_mae, report.h2_mae);
    report.disc_h1_mse = detail::pool_max_gap(report.h1_mse);
    report.disc_h2_mse = detail::pool_max_gap(report.h2_mse);
    report.pooled_se_mse = detail::pooled_se(report.h1_mse, report.h2_mse);
    for (std::size_t i = 0; i < curve_h1.size(); ++i) {
        curve_h1[i] /= static_cast<double>(curve_trials);
        curve_h2[i] /= static_cast<double>(curve_trials);
    }
    report.curves.h1_target_mae = std::move(curve_h1);
    report.curves.h2_target_mae = std::move(curve_h2);
    return report;
}

// ---------------------------------------------------------------------------
// Sample-size experiment: with a symmetric source pattern, the trained H2
// model's held-out loss against F-only labels shrinks as the training set
// grows, under both L1 and MSE training.
// ---------------------------------------------------------------------------

struct SampleSizeConfig {
    SynthConfig base;  // symmetric-pattern source domain
    std::vector<std::size_t> sample_sizes = {100, 1000, 10000};
    std::size_t seeds_per_size = 3;
    std::size_t eval_pairs = 400;
    TrainConfig train;
    std::uint64_t base_seed = 1;
};

struct SampleSizeReport {
    std::vector<std::size_t> sizes;
    DenseMatrix per_seed_mae;  // size x seed, held-out loss against F labels
    DenseMatrix per_seed_mse;
    std::vector<double> mean_mae;
    std::vector<double> mean_mse;
    bool monotone_mae = false;
    bool monotone_mse = false;
};

/// Held-out distance to F: inputs are drawn from the source trajectory
/// tail, labels are the noiseless F step of the true parameters.
inline double loss_against_f(const RdModel& model, const RdParams& fitted, const RdParams& truth,
                             const TimeSeriesTable& table, std::size_t t_begin, std::size_t t_end,
                             LossKind kind) {
    detail::EvalAccumulator acc;
    for (std::size_t t = t_begin; t < t_end; ++t) {
        const auto x = table.values.row(t);
        const auto f_label = model.forward(truth, x);
        const auto pred = model.forward(fitted, x);
        for (std::size_t i = 0; i < pred.size(); ++i) acc.add(pred[i], f_label[i]);
    }
    return kind == LossKind::kMae ? acc.mae() : acc.mse();
}

inline SampleSizeReport sample_size_experiment(const SampleSizeConfig& cfg) {
    SampleSizeReport report;
    report.sizes = cfg.sample_sizes;
    const std::size_t rows = cfg.sample_sizes.size();
    report.per_seed_mae = DenseMatrix(rows, cfg.seeds_per_size);
    report.per_seed_mse = DenseMatrix(rows, cfg.seeds_per_size);

    for (const LossKind kind : {LossKind::kMae, LossKind::kMse}) {
        for (std::size_t si = 0; si < rows; ++si) {
            const std::size_t size = cfg.sample_sizes[si];
            for (std::size_t rep = 0; rep < cfg.seeds_per_size; ++rep) {
                const std::uint64_t seed = derive_seed(
                    cfg.base_seed, "samplesize-" + to_string(kind) + "-" + std::to_string(size) +
                                       "-" + std::to_string(rep));
                SynthConfig scfg = cfg.base;
                scfg.seed = seed;
                const std::size_t val_pairs = std::max<std::size_t>(size / 5, 16);
                scfg.horizon = size + val_pairs + cfg.eval_pairs + 1;
                const auto data = synth_rd(scfg);
                RdModel model(data.graph);

                std::vector<std::size_t> train_idx = index_range(size);
                std::vector<std::size_t> val_idx(val_pairs);
                for (std::size_t i = 0; i < val_pairs; ++i) val_idx[i] = size + i;
                auto obj = make_rd_objective(model, make_step_samples(data.table, train_idx),
                                             make_step_samples(data.table, val_idx));
                TrainConfig tc = cfg.train;
                tc.loss_kind = kind;
                tc.seed = derive_seed(seed, "train");
                const auto trained = train(obj, model.pack(model.init_params(tc.seed)), tc);

                const double held_out = loss_against_f(
                    model, model.unpack(trained.params), data.true_params, data.table,
                    size + val_pairs, size + val_pairs + cfg.eval_pairs, kind);
                if (kind == LossKind::kMae)
                    report.per_seed_mae.at(si, rep) = held_out;
                else
                    report.per_seed_mse.at(si, rep) = held_out;
            }
        }
    }

    auto summarize = [&](const DenseMatrix& m, std::vector<double>& means) {
        means.resize(rows);
        for (std::size_t si = 0; si < rows; ++si) {
            double s = 0.0;
            for (std::size_t r = 0; r < cfg.seeds_per_size; ++r) s += m.at(si, r);
            means[si] = s / static_cast<double>(cfg.seeds_per_size);
        }
        bool mono = true;
        for (std::size_t si = 1; si < rows; ++si)
            if (!(means[si] < means[si - 1])) mono = false;
        return mono;
    };
    report.monotone_mae = summarize(report.per_seed_mae, report.mean_mae);
    report.monotone_mse = summarize(report.per_seed_mse, report.mean_mse);
    return report;
}

// ---------------------------------------------------------------------------
// JSON serialization for the machine-readable reports.
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const SymmetryReport& r) {
    j = {{"mean", r.mean},
         {"median", r.median},
         {"skewness", r.skewness},
         {"se_mean", r.se_mean},
         {"se_median", r.se_median},
         {"count", r.count},
         {"histogram_edges", r.histogram_edges},
         {"histogram_counts", r.histogram_counts},
         {"se_multiplier", r.se_multiplier},
         {"skewness_threshold", r.skewness_threshold},
         {"pass", r.pass}};
}

inline void to_json(nlohmann::json& j, const NegCorrReport& r) {
    j = {{"mean_product", r.mean_product},
         {"se", r.se},
         {"count", r.count},
         {"se_multiplier", r.se_multiplier},
         {"pass", r.pass}};
}

inline void to_json(nlohmann::json& j, const HypothesisOutcome& o) {
    j = {{"source_loss", o.source_loss}, {"target_loss", o.target_loss}, {"abs_gap", o.abs_gap}};
}

inline void to_json(nlohmann::json& j, const DiscrepancyReport& r) {
    j = {{"library_version", kVersion},
         {"seeds", r.seeds},
         {"trial_valid", r.trial_valid},
         {"trial_notes", r.trial_notes},
         {"pool_size", r.pool_size},
         {"h1_mae", r.h1_mae},
         {"h2_mae", r.h2_mae},
         {"h1_mse", r.h1_mse},
         {"h2_mse", r.h2_mse},
         {"disc_h1_mae", r.disc_h1_mae},
         {"disc_h2_mae", r.disc_h2_mae},
         {"pooled_se_mae", r.pooled_se_mae},
         {"disc_h1_mse", r.disc_h1_mse},
         {"disc_h2_mse", r.disc_h2_mse},
         {"pooled_se_mse", r.pooled_se_mse},
         {"symmetry", r.symmetry},
         {"negative_correlation", r.negcorr},
         {"mse_gate", r.mse_gate},
         {"note",
          "disc values are maxima over the finite trained pool, an explicit "
          "under-approximation of the supremum; pooled_se is the Welch "
          "standard error of the per-trial |source-target| gaps"}};
}

}  // namespace graphdyn
