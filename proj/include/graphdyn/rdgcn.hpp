#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "graphdyn/graph.hpp"
#include "graphdyn/optimize.hpp"
#include "graphdyn/series.hpp"
#include "graphdyn/util.hpp"

namespace graphdyn {

/// Reaction-diffusion parameters. `rho` lives on the diffusion edges (the
/// physical edge list), `sigma` on the reaction edges (same list, reversed
/// per edge), biases are per vertex in speed units.
struct RdParams {
    EdgeWeights rho;
    EdgeWeights sigma;
    std::vector<double> b_d;
    std::vector<double> b_r;

    std::size_t count() const { return rho.size() + sigma.size() + b_d.size() + b_r.size(); }
};

/// The reaction-diffusion traffic model. The reaction graph (edge
/// transpose) and its adjacency index are derived once and cached here;
/// prediction is always a single forward-Euler step.
class RdModel {
public:
    explicit RdModel(DirectedGraph diffusion)
        : diffusion_(std::move(diffusion)), reaction_(graphdyn::reaction_graph(diffusion_)) {}

    const DirectedGraph& diffusion_graph() const { return diffusion_; }
    const DirectedGraph& reaction_graph() const { return reaction_; }
    std::size_t vertex_count() const { return diffusion_.vertex_count(); }

    /// 2|E| + 2n trainable parameters.
    std::size_t param_count() const {
        return 2 * diffusion_.edge_count() + 2 * diffusion_.vertex_count();
    }

    RdParams zero_params() const {
        RdParams p;
        p.rho.assign(diffusion_.edge_count(), 0.0);
        p.sigma.assign(diffusion_.edge_count(), 0.0);
        p.b_d.assign(vertex_count(), 0.0);
        p.b_r.assign(vertex_count(), 0.0);
        return p;
    }

    /// Edge weights uniform in (-0.1, 0.1), biases zero; keeps the tanh in
    /// its linear regime at the start of training.
    RdParams init_params(std::uint64_t seed) const {
        RdParams p = zero_params();
        Rng rng(derive_seed(seed, "rd-init"));
        for (double& v : p.rho) v = uniform(rng, -0.1, 0.1);
        for (double& v : p.sigma) v = uniform(rng, -0.1, 0.1);
        return p;
    }

    void check_params(const RdParams& p) const {
        if (p.rho.size() != diffusion_.edge_count() || p.sigma.size() != diffusion_.edge_count() ||
            p.b_d.size() != vertex_count() || p.b_r.size() != vertex_count())
            throw std::invalid_argument("rdgcn: parameter shape mismatch");
    }

    /// x_hat(t+1) = x + (L_d x + b_d) + tanh(L_r x + b_r).
    std::vector<double> forward(const RdParams& p, std::span<const double> x) const {
        check_params(p);
        if (x.size() != vertex_count()) throw std::invalid_argument("rdgcn: state length != n");
        auto diff = apply_weighted_laplacian(diffusion_, p.rho, x);
        auto reac = apply_weighted_laplacian(reaction_, p.sigma, x);
        std::vector<double> out(vertex_count());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = x[i] + diff[i] + p.b_d[i] + std::tanh(reac[i] + p.b_r[i]);
        return out;
    }

    /// Masked forward: edges with a missing endpoint drop out of both
    /// Laplacian sums. Entries whose own input is missing are still
    /// returned (callers exclude them from losses).
    std::vector<double> forward(const RdParams& p, std::span<const double> x,
                                std::span<const std::uint8_t> x_mask) const {
        check_params(p);
        if (x.size() != vertex_count() || x_mask.size() != vertex_count())
            throw std::invalid_argument("rdgcn: state length != n");
        auto diff = apply_weighted_laplacian(diffusion_, p.rho, x, x_mask);
        auto reac = apply_weighted_laplacian(reaction_, p.sigma, x, x_mask);
        std::vector<double> out(vertex_count());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = x[i] + diff[i] + p.b_d[i] + std::tanh(reac[i] + p.b_r[i]);
        return out;
    }

    double loss(const RdParams& p, std::span<const StepSample> batch, LossKind kind) const {
        return loss_and_grad_impl(p, batch, kind, nullptr);
    }

    /// Masked mean loss over the batch plus the analytic gradient. A vertex
    /// counts when its input and target are both observed; the MAE
    /// subgradient at a zero residual is 0.
    double loss_and_grad(const RdParams& p, std::span<const StepSample> batch, LossKind kind,
                         RdParams& grad) const {
        grad = zero_params();
        return loss_and_grad_impl(p, batch, kind, &grad);
    }

    /// Residual table r_i(t) = x_i(t+1) - forward(x(t))_i; entries where the
    /// target or its own input is missing are masked out.
    TimeSeriesTable residuals(const RdParams& p, const TimeSeriesTable& series) const {
        check_params(p);
        if (series.step_count() < 2)
            throw std::invalid_argument("rdgcn residuals: series needs at least 2 steps");
        if (series.vertex_count() != vertex_count())
            throw std::invalid_argument("rdgcn residuals: series width != n");
        TimeSeriesTable out;
        out.columns = series.columns;
        out.resolution_seconds = series.resolution_seconds;
        out.weekly_labels = series.weekly_labels;
        out.timestamps.assign(series.timestamps.begin(), series.timestamps.end() - 1);
        const std::size_t steps = series.step_count() - 1;
        out.values = DenseMatrix(steps, vertex_count());
        out.mask.assign(steps * vertex_count(), 0);
        for (std::size_t t = 0; t < steps; ++t) {
            const auto x = series.values.row(t);
            const auto xm = series.mask_row(t);
            const auto pred = forward(p, x, xm);
            for (std::size_t i = 0; i < vertex_count(); ++i) {
                if (!series.observed(t, i) || !series.observed(t + 1, i)) continue;
                out.values.at(t, i) = series.value(t + 1, i) - pred[i];
                out.mask[t * vertex_count() + i] = 1;
            }
        }
        return out;
    }

    // Flat layout for the optimizer: rho | sigma | b_d | b_r.
    std::vector<double> pack(const RdParams& p) const {
        check_params(p);
        std::vector<double> flat;
        flat.reserve(param_count());
        flat.insert(flat.end(), p.rho.begin(), p.rho.end());
        flat.insert(flat.end(), p.sigma.begin(), p.sigma.end());
        flat.insert(flat.end(), p.b_d.begin(), p.b_d.end());
        flat.insert(flat.end(), p.b_r.begin(), p.b_r.end());
        return flat;
    }

    RdParams unpack(std::span<const double> flat) const {
        if (flat.size() != param_count()) throw std::invalid_argument("rdgcn: bad flat size");
        RdParams p;
        const std::size_t m = diffusion_.edge_count();
        const std::size_t n = vertex_count();
        p.rho.assign(flat.begin(), flat.begin() + m);
        p.sigma.assign(flat.begin() + m, flat.begin() + 2 * m);
        p.b_d.assign(flat.begin() + 2 * m, flat.begin() + 2 * m + n);
        p.b_r.assign(flat.begin() + 2 * m + n, flat.end());
        return p;
    }

private:
    double loss_and_grad_impl(const RdParams& p, std::span<const StepSample> batch, LossKind kind,
                              RdParams* grad) const {
        check_params(p);
        if (batch.empty()) throw std::invalid_argument("rdgcn loss: empty batch");
        const std::size_t n = vertex_count();

        // First pass: count contributing entries so gradients can be scaled
        // by the masked-mean normalizer in a single sweep.
        std::size_t count = 0;
        for (const StepSample& s : batch) {
            if (s.x.size() != n || s.y.size() != n || s.x_mask.size() != n || s.y_mask.size() != n)
                throw std::invalid_argument("rdgcn loss: sample shape mismatch");
            for (std::size_t i = 0; i < n; ++i)
                if (s.x_mask[i] && s.y_mask[i]) ++count;
        }
        if (count == 0) throw std::invalid_argument("rdgcn loss: all targets masked");

        double total = 0.0;
        std::vector<double> reac_pre(n);
        for (const StepSample& s : batch) {
            const auto diff = apply_weighted_laplacian(diffusion_, p.rho, s.x, s.x_mask);
            const auto reac = apply_weighted_laplacian(reaction_, p.sigma, s.x, s.x_mask);
            for (std::size_t i = 0; i < n; ++i) reac_pre[i] = reac[i] + p.b_r[i];

            for (std::size_t i = 0; i < n; ++i) {
                if (!(s.x_mask[i] && s.y_mask[i])) continue;
                const double pred = s.x[i] + diff[i] + p.b_d[i] + std::tanh(reac_pre[i]);
                const double r = pred - s.y[i];
                double dpred;  // d(loss)/d(pred), including the 1/count mean
                if (kind == LossKind::kMse) {
                    total += r * r;
                    dpred = 2.0 * r / static_cast<double>(count);
                } else {
                    total += std::abs(r);
                    dpred = (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) / static_cast<double>(count);
                }
                if (!grad) continue;

                grad->b_d[i] += dpred;
                const double th = std::tanh(reac_pre[i]);
                const double dtanh = dpred * (1.0 - th * th);
                grad->b_r[i] += dtanh;
                for (std::size_t k : diffusion_.out_edges(i)) {
                    const Edge& e = diffusion_.edge(k);
                    if (!s.x_mask[e.dst]) continue;
                    grad->rho[k] += dpred * (s.x[e.dst] - s.x[e.src]);
                }
                for (std::size_t k : reaction_.out_edges(i)) {
                    const Edge& e = reaction_.edge(k);
                    if (!s.x_mask[e.dst]) continue;
                    grad->sigma[k] += dtanh * (s.x[e.dst] - s.x[e.src]);
                }
            }
        }
        return total / static_cast<double>(count);
    }

    DirectedGraph diffusion_;
    DirectedGraph reaction_;
};

/// Bind train/validation sample sets into the optimizer-facing objective.
inline Objective make_rd_objective(const RdModel& model, std::vector<StepSample> train_samples,
                                   std::vector<StepSample> val_samples) {
    auto train_ptr = std::make_shared<std::vector<StepSample>>(std::move(train_samples));
    auto val_ptr = std::make_shared<std::vector<StepSample>>(std::move(val_samples));
    Objective obj;
    obj.dim = model.param_count();
    obj.train_size = train_ptr->size();
    obj.train_eval = [&model, train_ptr](std::span<const double> flat,
                                         std::span<const std::size_t> idx, LossKind kind,
                                         std::vector<double>* grad_out) {
        const RdParams p = model.unpack(flat);
        std::vector<StepSample> batch;
        batch.reserve(idx.size());
        for (std::size_t k : idx) batch.push_back((*train_ptr)[k]);
        if (!grad_out) return model.loss(p, batch, kind);
        RdParams grad;
        const double loss = model.loss_and_grad(p, batch, kind, grad);
        *grad_out = model.pack(grad);
        return loss;
    };
    obj.val_eval = [&model, val_ptr](std::span<const double> flat, LossKind kind) {
        return model.loss(model.unpack(flat), *val_ptr, kind);
    };
    return obj;
}

}  // namespace graphdyn
