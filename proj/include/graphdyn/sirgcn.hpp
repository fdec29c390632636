#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "graphdyn/graph.hpp"
#include "graphdyn/optimize.hpp"
#include "graphdyn/util.hpp"

namespace graphdyn {

/// Unconstrained SIR-network parameters. Travel fractions, infection rates
/// and the shared recovery rate are stored as logits and squashed by
/// materialize_constraints; `single_beta` selects one shared infection rate
/// (SIRGCN-1) instead of one per vertex (SIRGCN-n).
struct SirParams {
    std::vector<double> phi_raw;   // one per edge
    std::vector<double> beta_raw;  // n entries, or 1 when single_beta
    double gamma_raw = 0.0;
    bool single_beta = false;

    std::size_t trainable_count() const { return phi_raw.size() + beta_raw.size() + 1; }
};

/// Materialized constraint values: every travel row sums to one (self
/// fraction plus outgoing edge fractions), beta and gamma lie in [0,1].
struct SirConstrained {
    std::vector<double> phi_edge;  // per edge, in edge order
    std::vector<double> phi_self;  // per vertex
    std::vector<double> beta;      // per vertex (expanded when single_beta)
    double gamma = 0.0;
};

/// Epidemic state: populations, the recovered base at the epidemic start,
/// and the infectious history from t0 through the current time t (last row).
struct SirState {
    std::vector<double> N;
    std::vector<double> R0;
    std::size_t t0 = 0;
    DenseMatrix I_history;  // (t - t0 + 1) x n
};

/// One simulated or observed outbreak. Row t of `I` is the infectious count
/// vector at time t0 + t; `target_mask` (optional, steps x n) marks observed
/// entries, empty meaning fully observed.
struct SirEpisode {
    std::vector<double> N;
    std::vector<double> R0;
    DenseMatrix I;
    MaskVector target_mask;

    std::size_t steps() const { return I.rows; }
    bool observed(std::size_t t, std::size_t i) const {
        return target_mask.empty() || target_mask[t * I.cols + i] != 0;
    }
};

namespace detail {

inline double logit_slope(double squashed) { return squashed * (1.0 - squashed); }

}  // namespace detail

/// SIR-network epidemic model over a travel graph. Caches the in-adjacency
/// index used to assemble the transformation matrix K.
class SirModel {
public:
    explicit SirModel(DirectedGraph travel) : graph_(std::move(travel)) {
        const std::size_t n = graph_.vertex_count();
        in_edges_.assign(n, {});
        for (std::size_t k = 0; k < graph_.edge_count(); ++k)
            in_edges_[graph_.edge(k).dst].push_back(k);
    }

    const DirectedGraph& graph() const { return graph_; }
    std::size_t vertex_count() const { return graph_.vertex_count(); }

    std::size_t param_count(bool single_beta) const {
        return graph_.edge_count() + (single_beta ? 1 : vertex_count()) + 1;
    }

    SirParams init_params(bool single_beta, std::uint64_t seed) const {
        SirParams p;
        Rng rng(derive_seed(seed, "sir-init"));
        p.single_beta = single_beta;
        p.phi_raw.resize(graph_.edge_count());
        p.beta_raw.resize(single_beta ? 1 : vertex_count());
        for (double& v : p.phi_raw) v = uniform(rng, -0.5, 0.5);
        for (double& v : p.beta_raw) v = uniform(rng, -0.5, 0.5);
        p.gamma_raw = uniform(rng, -0.5, 0.5);
        return p;
    }

    void check_params(const SirParams& p) const {
        if (p.phi_raw.size() != graph_.edge_count())
            throw std::invalid_argument("sirgcn: phi_raw size != edge count");
        const std::size_t want = p.single_beta ? 1 : vertex_count();
        if (p.beta_raw.size() != want)
            throw std::invalid_argument("sirgcn: beta_raw size mismatch");
    }

    /// Sigmoid-squash every edge logit, then normalize each row together
    /// with a fixed unit self-logit so the row sums to exactly one. The
    /// self fraction carries no trainable parameter.
    SirConstrained materialize_constraints(const SirParams& p) const {
        check_params(p);
        const std::size_t n = vertex_count();
        SirConstrained c;
        c.phi_edge.assign(graph_.edge_count(), 0.0);
        c.phi_self.assign(n, 0.0);
        const double w_self = sigmoid(1.0);
        for (std::size_t v = 0; v < n; ++v) {
            double denom = w_self;
            for (std::size_t k : graph_.out_edges(v)) denom += sigmoid(p.phi_raw[k]);
            c.phi_self[v] = w_self / denom;
            for (std::size_t k : graph_.out_edges(v)) c.phi_edge[k] = sigmoid(p.phi_raw[k]) / denom;
        }
        c.beta.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            c.beta[i] = sigmoid(p.single_beta ? p.beta_raw[0] : p.beta_raw[i]);
        c.gamma = sigmoid(p.gamma_raw);
        return c;
    }

    /// Incoming travel population N^p_j = sum_k phi_(k,j) N_k, including the
    /// self fraction. Throws when some N^p_j is not positive.
    std::vector<double> travel_population(const SirConstrained& c,
                                          std::span<const double> N) const {
        const std::size_t n = vertex_count();
        if (N.size() != n) throw std::invalid_argument("sirgcn: population length != n");
        std::vector<double> np(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            np[j] = c.phi_self[j] * N[j];
            for (std::size_t k : in_edges_[j]) np[j] += c.phi_edge[k] * N[graph_.edge(k).src];
        }
        for (std::size_t j = 0; j < n; ++j)
            if (!(np[j] > 0.0))
                throw std::domain_error("sirgcn: degenerate travel population at vertex " +
                                        std::to_string(j));
        return np;
    }

    /// Susceptible counts S_i = N_i - I_i(t) - R_i(t) with the recovered
    /// accumulator R_i(t) = R0_i + gamma * sum_{t0..t} I_i. Negative values
    /// are clamped at zero and counted in `overshoot`.
    std::vector<double> susceptible(const SirConstrained& c, const SirState& state,
                                    std::size_t* overshoot = nullptr) const {
        const std::size_t n = vertex_count();
        if (state.N.size() != n || state.R0.size() != n || state.I_history.cols != n ||
            state.I_history.rows == 0)
            throw std::invalid_argument("sirgcn: state shape mismatch");
        std::vector<double> s(n);
        const std::size_t last = state.I_history.rows - 1;
        for (std::size_t i = 0; i < n; ++i) {
            double hist = 0.0;
            for (std::size_t t = 0; t <= last; ++t) hist += state.I_history.at(t, i);
            const double r = state.R0[i] + c.gamma * hist;
            double v = state.N[i] - state.I_history.at(last, i) - r;
            if (v < 0.0) {
                v = 0.0;
                if (overshoot) ++*overshoot;
            }
            s[i] = v;
        }
        return s;
    }

    /// Transformation matrix K_{i,k} = sum_j beta_j phi_(i,j) phi_(k,j)
    /// S_i / N^p_j; entries pair vertices through shared travel
    /// destinations, so K_{i,k} = 0 when i and k have none.
    DenseMatrix build_K(const SirConstrained& c, std::span<const double> S,
                        std::span<const double> N) const {
        const std::size_t n = vertex_count();
        if (S.size() != n) throw std::invalid_argument("sirgcn: susceptible length != n");
        const auto np = travel_population(c, N);
        DenseMatrix K(n, n);
        std::vector<std::pair<std::size_t, double>> incoming;
        for (std::size_t j = 0; j < n; ++j) {
            incoming.clear();
            incoming.emplace_back(j, c.phi_self[j]);
            for (std::size_t k : in_edges_[j])
                incoming.emplace_back(graph_.edge(k).src, c.phi_edge[k]);
            const double scale = c.beta[j] / np[j];
            for (const auto& [i, phi_ij] : incoming)
                for (const auto& [k, phi_kj] : incoming)
                    K.at(i, k) += scale * phi_ij * phi_kj * S[i];
        }
        return K;
    }

    DenseMatrix build_K(const SirParams& p, const SirState& state) const {
        const auto c = materialize_constraints(p);
        const auto s = susceptible(c, state);
        return build_K(c, s, state.N);
    }

    /// One-step prediction I_hat(t+1) = I(t) + (K - gamma) I(t), with I(t)
    /// taken from the last row of the state's history.
    std::vector<double> forward(const SirParams& p, const SirState& state) const {
        const auto c = materialize_constraints(p);
        const auto s = susceptible(c, state);
        const auto K = build_K(c, s, state.N);
        const std::size_t n = vertex_count();
        const auto I_t = state.I_history.row(state.I_history.rows - 1);
        for (double v : I_t)
            if (v < 0.0) throw std::invalid_argument("sirgcn: negative infectious count");
        std::vector<double> out(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = (1.0 - c.gamma) * I_t[i];
            for (std::size_t k = 0; k < n; ++k) acc += K.at(i, k) * I_t[k];
            out[i] = acc;
        }
        return out;
    }

    double loss(const SirParams& p, std::span<const SirEpisode> episodes, LossKind kind) const {
        return loss_and_grad_impl(p, episodes, all_samples(episodes), kind, nullptr);
    }

    /// Masked mean loss over every consecutive (I_t, I_{t+1}) pair in the
    /// episodes plus the gradient with respect to the raw parameters. The
    /// gradient flows through the sigmoid squashing, the row normalization,
    /// K, and the recovered-accumulator dependence of S on gamma.
    double loss_and_grad(const SirParams& p, std::span<const SirEpisode> episodes, LossKind kind,
                         SirParams& grad) const {
        return loss_and_grad_indexed(p, episodes, all_samples(episodes), kind, &grad);
    }

    /// Sample-indexed variant used by the mini-batch objective; sample
    /// (e, t) predicts episode e's row t+1 from rows 0..t.
    double loss_and_grad_indexed(const SirParams& p, std::span<const SirEpisode> episodes,
                                 std::span<const std::pair<std::size_t, std::size_t>> samples,
                                 LossKind kind, SirParams* grad) const {
        if (grad) {
            grad->single_beta = p.single_beta;
            grad->phi_raw.assign(p.phi_raw.size(), 0.0);
            grad->beta_raw.assign(p.beta_raw.size(), 0.0);
            grad->gamma_raw = 0.0;
        }
        return loss_and_grad_impl(p, episodes, samples, kind, grad);
    }

    static std::vector<std::pair<std::size_t, std::size_t>> all_samples(
        std::span<const SirEpisode> episodes) {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t e = 0; e < episodes.size(); ++e)
            for (std::size_t t = 0; t + 1 < episodes[e].steps(); ++t) out.emplace_back(e, t);
        return out;
    }

    // Flat layout: phi_raw | beta_raw | gamma_raw.
    std::vector<double> pack(const SirParams& p) const {
        check_params(p);
        std::vector<double> flat;
        flat.reserve(p.trainable_count());
        flat.insert(flat.end(), p.phi_raw.begin(), p.phi_raw.end());
        flat.insert(flat.end(), p.beta_raw.begin(), p.beta_raw.end());
        flat.push_back(p.gamma_raw);
        return flat;
    }

    SirParams unpack(std::span<const double> flat, bool single_beta) const {
        SirParams p;
        p.single_beta = single_beta;
        const std::size_t m = graph_.edge_count();
        const std::size_t nb = single_beta ? 1 : vertex_count();
        if (flat.size() != m + nb + 1) throw std::invalid_argument("sirgcn: bad flat size");
        p.phi_raw.assign(flat.begin(), flat.begin() + m);
        p.beta_raw.assign(flat.begin() + m, flat.begin() + m + nb);
        p.gamma_raw = flat[m + nb];
        return p;
    }

private:
    double loss_and_grad_impl(const SirParams& p, std::span<const SirEpisode> episodes,
                              std::span<const std::pair<std::size_t, std::size_t>> samples,
                              LossKind kind, SirParams* grad) const {
        check_params(p);
        if (samples.empty()) throw std::invalid_argument("sirgcn loss: no samples");
        const std::size_t n = vertex_count();
        const auto c = materialize_constraints(p);

        std::size_t count = 0;
        for (const auto& [e, t] : samples) {
            const SirEpisode& ep = episodes[e];
            if (ep.I.cols != n || ep.N.size() != n || ep.R0.size() != n)
                throw std::invalid_argument("sirgcn loss: episode shape mismatch");
            if (t + 1 >= ep.steps())
                throw std::invalid_argument("sirgcn loss: sample index out of range");
            for (std::size_t i = 0; i < n; ++i)
                if (ep.observed(t, i) && ep.observed(t + 1, i)) ++count;
        }
        if (count == 0) throw std::invalid_argument("sirgcn loss: all targets masked");

        double total = 0.0;
        // Accumulators over materialized values; mapped back through the
        // constraint transforms once at the end.
        std::vector<double> d_phi_edge, d_phi_self, d_beta, d_np, d_s, d_pred;
        double d_gamma = 0.0;
        if (grad) {
            d_phi_edge.assign(graph_.edge_count(), 0.0);
            d_phi_self.assign(n, 0.0);
            d_beta.assign(n, 0.0);
        }

        std::vector<double> hist_sum(n), S(n), pred(n);
        std::vector<std::uint8_t> clamped(n);
        std::vector<std::pair<std::size_t, double>> incoming;
        for (const auto& [e, t] : samples) {
            const SirEpisode& ep = episodes[e];
            const auto I_t = ep.I.row(t);
            const auto target = ep.I.row(t + 1);

            std::fill(hist_sum.begin(), hist_sum.end(), 0.0);
            for (std::size_t tt = 0; tt <= t; ++tt)
                for (std::size_t i = 0; i < n; ++i) hist_sum[i] += ep.I.at(tt, i);
            for (std::size_t i = 0; i < n; ++i) {
                double v = ep.N[i] - I_t[i] - (ep.R0[i] + c.gamma * hist_sum[i]);
                clamped[i] = v < 0.0;
                S[i] = clamped[i] ? 0.0 : v;
            }
            const auto np = travel_population(c, ep.N);
            const auto K = build_K_given(c, S, np);

            for (std::size_t i = 0; i < n; ++i) {
                double acc = (1.0 - c.gamma) * I_t[i];
                for (std::size_t k = 0; k < n; ++k) acc += K.at(i, k) * I_t[k];
                pred[i] = acc;
            }

            d_pred.assign(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                if (!(ep.observed(t, i) && ep.observed(t + 1, i))) continue;
                const double r = pred[i] - target[i];
                if (kind == LossKind::kMse) {
                    total += r * r;
                    d_pred[i] = 2.0 * r / static_cast<double>(count);
                } else {
                    total += std::abs(r);
                    d_pred[i] =
                        (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) / static_cast<double>(count);
                }
            }
            if (!grad) continue;

            d_np.assign(n, 0.0);
            d_s.assign(n, 0.0);
            // Direct -gamma I path.
            for (std::size_t i = 0; i < n; ++i) d_gamma -= d_pred[i] * I_t[i];
            // Through K, mirroring the forward assembly loop.
            for (std::size_t j = 0; j < n; ++j) {
                incoming.clear();
                incoming.emplace_back(j, c.phi_self[j]);
                for (std::size_t k : in_edges_[j])
                    incoming.emplace_back(graph_.edge(k).src, c.phi_edge[k]);
                const double scale = c.beta[j] / np[j];
                for (std::size_t a = 0; a < incoming.size(); ++a) {
                    const auto& [i, phi_ij] = incoming[a];
                    for (std::size_t b = 0; b < incoming.size(); ++b) {
                        const auto& [k, phi_kj] = incoming[b];
                        const double u = d_pred[i] * I_t[k];  // dL/dK_{i,k}
                        if (u == 0.0) continue;
                        const double pp = phi_ij * phi_kj;
                        d_beta[j] += u * pp * S[i] / np[j];
                        d_np[j] -= u * scale * pp * S[i] / np[j];
                        d_s[i] += u * scale * pp;
                        // phi gradients: slot a is (i -> j), slot b is (k -> j);
                        // a == b doubles up, matching the squared term.
                        add_phi_grad(d_phi_edge, d_phi_self, j, a, u * scale * S[i] * phi_kj);
                        add_phi_grad(d_phi_edge, d_phi_self, j, b, u * scale * S[i] * phi_ij);
                    }
                }
            }
            // S_i depends on gamma through the recovered accumulator.
            for (std::size_t i = 0; i < n; ++i)
                if (!clamped[i]) d_gamma -= d_s[i] * hist_sum[i];
            // N^p_j = sum of incoming phi * N.
            for (std::size_t j = 0; j < n; ++j) {
                if (d_np[j] == 0.0) continue;
                d_phi_self[j] += d_np[j] * ep.N[j];
                for (std::size_t k : in_edges_[j]) d_phi_edge[k] += d_np[j] * ep.N[graph_.edge(k).src];
            }
        }

        if (grad) {
            // Row normalization backward: phi_row = w_row / D with a constant
            // self weight; then the sigmoid squashing of the edge logits.
            const double w_self = sigmoid(1.0);
            for (std::size_t v = 0; v < n; ++v) {
                double denom = w_self;
                for (std::size_t k : graph_.out_edges(v)) denom += sigmoid(p.phi_raw[k]);
                double dot = d_phi_self[v] * c.phi_self[v];
                for (std::size_t k : graph_.out_edges(v)) dot += d_phi_edge[k] * c.phi_edge[k];
                for (std::size_t k : graph_.out_edges(v)) {
                    const double w = sigmoid(p.phi_raw[k]);
                    const double dw = (d_phi_edge[k] - dot) / denom;
                    grad->phi_raw[k] += dw * w * (1.0 - w);
                }
            }
            for (std::size_t i = 0; i < n; ++i) {
                const double slope = detail::logit_slope(c.beta[i]);
                if (p.single_beta)
                    grad->beta_raw[0] += d_beta[i] * slope;
                else
                    grad->beta_raw[i] += d_beta[i] * slope;
            }
            grad->gamma_raw = d_gamma * detail::logit_slope(c.gamma);
        }
        return total / static_cast<double>(count);
    }

    DenseMatrix build_K_given(const SirConstrained& c, std::span<const double> S,
                              std::span<const double> np) const {
        const std::size_t n = vertex_count();
        DenseMatrix K(n, n);
        std::vector<std::pair<std::size_t, double>> incoming;
        for (std::size_t j = 0; j < n; ++j) {
            incoming.clear();
            incoming.emplace_back(j, c.phi_self[j]);
            for (std::size_t k : in_edges_[j])
                incoming.emplace_back(graph_.edge(k).src, c.phi_edge[k]);
            const double scale = c.beta[j] / np[j];
            for (const auto& [i, phi_ij] : incoming)
                for (const auto& [k, phi_kj] : incoming)
                    K.at(i, k) += scale * phi_ij * phi_kj * S[i];
        }
        return K;
    }

    void add_phi_grad(std::vector<double>& d_edge, std::vector<double>& d_self, std::size_t j,
                      std::size_t slot, double value) const {
        if (slot == 0)
            d_self[j] += value;
        else
            d_edge[in_edges_[j][slot - 1]] += value;
    }

    DirectedGraph graph_;
    std::vector<std::vector<std::size_t>> in_edges_;
};

/// Continuous-time right-hand sides of the SIR-network system; the three
/// components sum to zero identically. dS is evaluated with an independent
/// summation order from the K-based dI so the conservation check is not
/// trivially exact.
struct SirRhs {
    std::vector<double> dS, dI, dR;
};

inline SirRhs sir_rhs(const SirModel& model, const SirConstrained& c, std::span<const double> S,
                      std::span<const double> I, std::span<const double> N) {
    const std::size_t n = model.vertex_count();
    if (S.size() != n || I.size() != n || N.size() != n)
        throw std::invalid_argument("sir_rhs: shape mismatch");
    const auto np = model.travel_population(c, N);
    const DenseMatrix K = model.build_K(c, S, N);
    SirRhs rhs;
    rhs.dS.assign(n, 0.0);
    rhs.dI.assign(n, 0.0);
    rhs.dR.assign(n, 0.0);

    // Infection inflow at each destination j, then distributed back to the
    // travelling susceptible populations.
    const DirectedGraph& g = model.graph();
    std::vector<double> inflow(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = c.phi_self[j] * I[j];
        for (std::size_t k = 0; k < g.edge_count(); ++k)
            if (g.edge(k).dst == j) acc += c.phi_edge[k] * I[g.edge(k).src];
        inflow[j] = acc;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double acc = c.phi_self[i] * c.beta[i] * inflow[i] / np[i];
        for (std::size_t k : g.out_edges(i)) {
            const std::size_t j = g.edge(k).dst;
            acc += c.phi_edge[k] * c.beta[j] * inflow[j] / np[j];
        }
        rhs.dS[i] = -S[i] * acc;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double ki = 0.0;
        for (std::size_t k = 0; k < n; ++k) ki += K.at(i, k) * I[k];
        rhs.dI[i] = ki - c.gamma * I[i];
        rhs.dR[i] = c.gamma * I[i];
    }
    return rhs;
}

using SirSampleId = std::pair<std::size_t, std::size_t>;  // (episode, local t)

/// Bind a shared episode store plus explicit train/validation sample lists
/// into the optimizer-facing objective.
inline Objective make_sir_objective(const SirModel& model, bool single_beta,
                                    std::shared_ptr<const std::vector<SirEpisode>> episodes,
                                    std::vector<SirSampleId> train_samples,
                                    std::vector<SirSampleId> val_samples) {
    auto train_ptr = std::make_shared<std::vector<SirSampleId>>(std::move(train_samples));
    auto val_ptr = std::make_shared<std::vector<SirSampleId>>(std::move(val_samples));
    Objective obj;
    obj.dim = model.param_count(single_beta);
    obj.train_size = train_ptr->size();
    obj.train_eval = [&model, single_beta, episodes, train_ptr](
                         std::span<const double> flat, std::span<const std::size_t> idx,
                         LossKind kind, std::vector<double>* grad_out) {
        const SirParams p = model.unpack(flat, single_beta);
        std::vector<SirSampleId> batch;
        batch.reserve(idx.size());
        for (std::size_t k : idx) batch.push_back((*train_ptr)[k]);
        if (!grad_out) return model.loss_and_grad_indexed(p, *episodes, batch, kind, nullptr);
        SirParams grad;
        const double loss = model.loss_and_grad_indexed(p, *episodes, batch, kind, &grad);
        *grad_out = model.pack(grad);
        return loss;
    };
    obj.val_eval = [&model, single_beta, episodes, val_ptr](std::span<const double> flat,
                                                            LossKind kind) {
        return model.loss_and_grad_indexed(model.unpack(flat, single_beta), *episodes, *val_ptr,
                                           kind, nullptr);
    };
    return obj;
}

/// Convenience overload: every consecutive pair of the train episodes is a
/// training sample, the val episodes supply the validation loss.
inline Objective make_sir_objective(const SirModel& model, bool single_beta,
                                    std::vector<SirEpisode> train_eps,
                                    std::vector<SirEpisode> val_eps) {
    auto all = std::make_shared<std::vector<SirEpisode>>(std::move(train_eps));
    const std::size_t train_count = all->size();
    for (SirEpisode& ep : val_eps) all->push_back(std::move(ep));
    std::vector<SirSampleId> train_samples, val_samples;
    for (std::size_t e = 0; e < all->size(); ++e)
        for (std::size_t t = 0; t + 1 < (*all)[e].steps(); ++t) {
            if (e < train_count)
                train_samples.emplace_back(e, t);
            else
                val_samples.emplace_back(e, t);
        }
    return make_sir_objective(model, single_beta, std::move(all), std::move(train_samples),
                              std::move(val_samples));
}

}  // namespace graphdyn
