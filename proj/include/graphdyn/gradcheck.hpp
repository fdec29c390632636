#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "graphdyn/rdgcn.hpp"
#include "graphdyn/series.hpp"
#include "graphdyn/sirgcn.hpp"
#include "graphdyn/synth.hpp"
#include "graphdyn/util.hpp"

namespace graphdyn {

/// Central finite differences of a scalar function of a flat vector.
inline std::vector<double> central_difference(
    const std::function<double(std::span<const double>)>& f, std::vector<double> x,
    double step = 1e-5) {
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + step;
        const double hi = f(x);
        x[i] = keep - step;
        const double lo = f(x);
        x[i] = keep;
        grad[i] = (hi - lo) / (2.0 * step);
    }
    return grad;
}

/// Per-coordinate relative error |a - f| / max(1, |a|, |f|); the unit floor
/// turns the comparison absolute for near-zero gradients.
struct GradCheckResult {
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    bool pass = false;
};

inline GradCheckResult compare_gradients(std::span<const double> analytic,
                                         std::span<const double> finite_diff, double tolerance) {
    if (analytic.size() != finite_diff.size())
        throw std::invalid_argument("compare_gradients: length mismatch");
    GradCheckResult r;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(finite_diff[i])});
        const double rel = std::abs(analytic[i] - finite_diff[i]) / denom;
        if (rel > r.max_rel_err) {
            r.max_rel_err = rel;
            r.worst_index = i;
        }
    }
    r.pass = r.max_rel_err <= tolerance;
    return r;
}

/// Random small RDGCN instance: analytic gradient vs central differences.
/// `inject_error` perturbs one analytic coordinate, for exercising the
/// failure path.
inline GradCheckResult rd_gradcheck_instance(std::uint64_t seed, LossKind kind,
                                             double tolerance = 1e-5, double fd_step = 1e-5,
                                             double inject_error = 0.0) {
    Rng rng(derive_seed(seed, "rd-gradcheck"));
    SynthConfig cfg;
    cfg.n = 2 + rng() % 7;  // n <= 8
    cfg.topology = Topology::kRandomOneDirectional;
    cfg.edge_count = 1 + rng() % (cfg.n * (cfg.n - 1) / 2);
    cfg.horizon = 2 + rng() % 4;  // batch of 1..4 pairs
    cfg.noise_sd = 1.0;
    cfg.seed = rng();
    const auto data = synth_rd(cfg);
    RdModel model(data.graph);
    const RdParams at = model.unpack([&] {
        std::vector<double> v(model.param_count());
        for (double& x : v) x = uniform(rng, -0.5, 0.5);
        return v;
    }());

    std::vector<std::size_t> pair_idx = index_range(data.table.step_count() - 1);
    const auto batch = make_step_samples(data.table, pair_idx);

    RdParams grad;
    model.loss_and_grad(at, batch, kind, grad);
    std::vector<double> analytic = model.pack(grad);
    if (inject_error != 0.0 && !analytic.empty()) analytic[0] += inject_error;

    const auto fd = central_difference(
        [&](std::span<const double> flat) { return model.loss(model.unpack(flat), batch, kind); },
        model.pack(at), fd_step);
    return compare_gradients(analytic, fd, tolerance);
}

/// Random small SIRGCN instance; the finite differences run over the raw
/// (pre-squash) parameters, exercising the constraint materialization path.
inline GradCheckResult sir_gradcheck_instance(std::uint64_t seed, LossKind kind,
                                              double tolerance = 1e-5, double fd_step = 1e-5,
                                              double inject_error = 0.0) {
    Rng rng(derive_seed(seed, "sir-gradcheck"));
    SynthConfig cfg;
    cfg.n = 2 + rng() % 7;
    cfg.topology = Topology::kRandomOneDirectional;
    cfg.edge_count = 1 + rng() % (cfg.n * (cfg.n - 1) / 2);
    cfg.horizon = 3 + rng() % 4;
    cfg.episodes = 1 + rng() % 2;
    cfg.seed = rng();
    const auto data = synth_sir(cfg);
    SirModel model(data.graph);
    const bool single_beta = (rng() & 1) != 0;
    SirParams at = model.init_params(single_beta, rng());

    SirParams grad;
    model.loss_and_grad(at, data.episodes, kind, grad);
    std::vector<double> analytic = model.pack(grad);
    if (inject_error != 0.0 && !analytic.empty()) analytic[0] += inject_error;

    const auto fd = central_difference(
        [&](std::span<const double> flat) {
            return model.loss(model.unpack(flat, single_beta), data.episodes, kind);
        },
        model.pack(at), fd_step);
    return compare_gradients(analytic, fd, tolerance);
}

}  // namespace graphdyn
