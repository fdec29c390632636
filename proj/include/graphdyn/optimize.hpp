#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphdyn/util.hpp"

namespace graphdyn {

struct TrainConfig {
    double learning_rate = 0.001;
    std::size_t batch_size = 64;
    std::size_t patience = 30;
    std::size_t max_epochs = 200;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    LossKind loss_kind = LossKind::kMse;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
        if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
        if (patience < 1) throw std::invalid_argument("train: patience must be >= 1");
        if (!(adam_epsilon > 0.0)) throw std::invalid_argument("train: adam_epsilon must be > 0");
        if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0)
            throw std::invalid_argument("train: adam betas must lie in [0, 1)");
    }
};

struct MamlConfig {
    double inner_lr = 0.00005;
    double outer_lr = 0.0005;
    std::size_t iterations = 200;

    void validate() const {
        if (inner_lr < 0.0) throw std::invalid_argument("maml: inner_lr must be >= 0");
        if (!(outer_lr > 0.0)) throw std::invalid_argument("maml: outer_lr must be > 0");
    }
};

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
    std::vector<double> m;  // first moment
    std::vector<double> v;  // second moment
    std::size_t step = 0;

    static AdamState for_dim(std::size_t dim) {
        AdamState s;
        s.m.assign(dim, 0.0);
        s.v.assign(dim, 0.0);
        return s;
    }
};

/// Standard bias-corrected Adam update, in place. Non-finite gradient
/// entries are rejected before any state is touched.
inline void adam_step(AdamState& state, std::vector<double>& params,
                      std::span<const double> grad, const TrainConfig& cfg) {
    cfg.validate();
    if (params.size() != grad.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    if (!all_finite(grad))
        throw std::invalid_argument("adam_step: non-finite gradient entry");
    state.step += 1;
    const double b1 = cfg.adam_beta1;
    const double b2 = cfg.adam_beta2;
    const double m_corr = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double v_corr = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad[i];
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / m_corr;
        const double v_hat = state.v[i] / v_corr;
        params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
    }
}

// ---------------------------------------------------------------------------
// Mini-batch objective abstraction. Models bind their sample sets into this
// functional form; the training loop never sees model internals.
// ---------------------------------------------------------------------------

struct Objective {
    std::size_t dim = 0;
    std::size_t train_size = 0;
    /// Masked-mean loss over the indexed train samples; when `grad` is
    /// non-null it is filled (not accumulated) with d(loss)/d(params).
    std::function<double(std::span<const double> params, std::span<const std::size_t> idx,
                         LossKind kind, std::vector<double>* grad)>
        train_eval;
    /// Loss over the full validation set.
    std::function<double(std::span<const double> params, LossKind kind)> val_eval;
};

struct EpochRecord {
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    std::vector<double> params;        // parameters at the best validation epoch
    std::vector<EpochRecord> history;  // one record per completed epoch
    std::size_t best_epoch = 0;        // 1-based index into history
    double best_val_loss = std::numeric_limits<double>::infinity();
    bool interrupted = false;
};

/// Mini-batch Adam with validation-based early stopping: per-epoch shuffle
/// (seeded), stop after `patience` epochs without validation improvement,
/// return the best-validation parameters.
inline TrainResult train(const Objective& obj, std::vector<double> init, const TrainConfig& cfg,
                         const std::atomic<bool>* stop_requested = nullptr) {
    cfg.validate();
    if (obj.train_size == 0) throw std::invalid_argument("train: empty training set");
    if (!obj.train_eval || !obj.val_eval)
        throw std::invalid_argument("train: objective is missing evaluators");
    if (init.size() != obj.dim) throw std::invalid_argument("train: bad initial parameter size");

    TrainResult result;
    std::vector<double> params = std::move(init);
    AdamState adam = AdamState::for_dim(obj.dim);
    Rng rng(cfg.seed);
    std::vector<std::size_t> order = index_range(obj.train_size);
    std::vector<double> grad(obj.dim, 0.0);
    std::vector<std::size_t> all = index_range(obj.train_size);

    result.params = params;
    std::size_t epochs_since_best = 0;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            const std::span<const std::size_t> batch(order.data() + start, len);
            obj.train_eval(params, batch, cfg.loss_kind, &grad);
            adam_step(adam, params, grad, cfg);
        }
        EpochRecord rec;
        rec.train_loss = obj.train_eval(params, all, cfg.loss_kind, nullptr);
        rec.val_loss = obj.val_eval(params, cfg.loss_kind);
        if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss))
            throw std::runtime_error("train: loss diverged to a non-finite value at epoch " +
                                     std::to_string(epoch));
        result.history.push_back(rec);

        if (rec.val_loss < result.best_val_loss) {
            result.best_val_loss = rec.val_loss;
            result.best_epoch = epoch;
            result.params = params;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
        }
        if (epochs_since_best >= cfg.patience) break;
        if (stop_requested && stop_requested->load()) {
            result.interrupted = true;
            break;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// First-order MAML meta-initialization. Each task exposes its own train set
// through the Objective interface; the support half adapts, the query half
// drives the outer update.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> task_gradient(const Objective& task, std::span<const double> params,
                                         std::span<const std::size_t> idx, LossKind kind) {
    std::vector<double> grad(task.dim, 0.0);
    task.train_eval(params, idx, kind, &grad);
    return grad;
}

}  // namespace detail

/// One inner SGD step on each task's support half, outer SGD step from the
/// query-half gradient at the adapted parameters, repeated `iterations`
/// times. With inner_lr = 0 this reduces to averaged-gradient pretraining
/// on the query halves.
inline std::vector<double> maml_init(std::span<const Objective> tasks, std::vector<double> init,
                                     const MamlConfig& cfg, LossKind kind) {
    cfg.validate();
    if (tasks.empty()) throw std::invalid_argument("maml_init: no tasks");
    for (const Objective& t : tasks) {
        if (t.dim != init.size()) throw std::invalid_argument("maml_init: task dimension mismatch");
        if (t.train_size < 2)
            throw std::invalid_argument("maml_init: task too small to split into support/query");
    }

    std::vector<double> theta = std::move(init);
    std::vector<double> outer(theta.size(), 0.0);
    std::vector<double> adapted(theta.size(), 0.0);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        std::fill(outer.begin(), outer.end(), 0.0);
        for (const Objective& task : tasks) {
            const std::size_t half = task.train_size / 2;
            std::vector<std::size_t> support(half), query(half);
            for (std::size_t i = 0; i < half; ++i) {
                support[i] = i;
                query[i] = half + i;
            }
            const auto g_support = detail::task_gradient(task, theta, support, kind);
            adapted = theta;
            for (std::size_t i = 0; i < adapted.size(); ++i)
                adapted[i] -= cfg.inner_lr * g_support[i];
            const auto g_query = detail::task_gradient(task, adapted, query, kind);
            for (std::size_t i = 0; i < outer.size(); ++i) outer[i] += g_query[i];
        }
        for (std::size_t i = 0; i < theta.size(); ++i)
            theta[i] -= cfg.outer_lr * outer[i] / static_cast<double>(tasks.size());
    }
    return theta;
}

}  // namespace graphdyn
