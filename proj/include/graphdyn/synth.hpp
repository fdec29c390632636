#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphdyn/graph.hpp"
#include "graphdyn/rdgcn.hpp"
#include "graphdyn/series.hpp"
#include "graphdyn/sirgcn.hpp"
#include "graphdyn/util.hpp"

namespace graphdyn {

enum class Topology { kRing, kRandomOneDirectional };

inline std::string to_string(Topology t) {
    return t == Topology::kRing ? "ring" : "random-one-directional";
}

inline Topology topology_from_string(const std::string& s) {
    if (s == "ring") return Topology::kRing;
    if (s == "random-one-directional") return Topology::kRandomOneDirectional;
    throw std::invalid_argument("unknown topology: " + s);
}

enum class GPattern { kNone, kSymmetricPeriodic, kShiftedPeriodic };

inline std::string to_string(GPattern p) {
    switch (p) {
        case GPattern::kNone: return "none";
        case GPattern::kSymmetricPeriodic: return "symmetric-periodic";
        case GPattern::kShiftedPeriodic: return "shifted-periodic";
    }
    return "?";
}

inline GPattern g_pattern_from_string(const std::string& s) {
    if (s == "none") return GPattern::kNone;
    if (s == "symmetric-periodic") return GPattern::kSymmetricPeriodic;
    if (s == "shifted-periodic") return GPattern::kShiftedPeriodic;
    throw std::invalid_argument("unknown g pattern: " + s);
}

/// Generator configuration. The pattern term stands in for the
/// history-dependent part of the dynamics: per-vertex sinusoids whose
/// phases are drawn once from the seed, so the source marginal is
/// symmetric about zero; the shifted variant offsets every phase, which
/// with equal periods makes the two domains negatively correlated.
struct SynthConfig {
    std::size_t n = 20;
    Topology topology = Topology::kRing;
    std::size_t edge_count = 0;  // 0 = automatic for the topology
    std::size_t horizon = 500;   // rd steps, or steps per sir episode
    std::size_t episodes = 5;    // sir only
    GPattern g_pattern = GPattern::kNone;
    double g_amplitude = 0.0;
    double g_period = 24.0;
    double g_phase_shift = 3.141592653589793;  // shifted-periodic offset
    double g_offset = 0.0;                     // constant added to the pattern
    bool g_common_phase = false;               // one shared phase instead of per-vertex
    double noise_sd = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t noise_seed = 0;  // 0 = derive from seed
    std::optional<RdParams> true_rd;    // generated from the seed when absent
    std::optional<SirParams> true_sir;  // likewise (raw logits)
};

struct SynthRdData {
    DirectedGraph graph;
    TimeSeriesTable table;
    RdParams true_params;
    DenseMatrix g_samples;  // injected pattern + noise, (horizon-1) x n
};

struct SynthSirData {
    DirectedGraph graph;
    std::vector<SirEpisode> episodes;
    SirParams true_params;
    std::vector<double> populations;
};

namespace detail {

inline DirectedGraph make_topology(const SynthConfig& cfg, Rng& rng) {
    if (cfg.n < 2) throw std::invalid_argument("synth: need at least 2 vertices");
    std::vector<Edge> edges;
    if (cfg.topology == Topology::kRing) {
        for (std::size_t i = 0; i < cfg.n; ++i) edges.push_back({i, (i + 1) % cfg.n});
    } else {
        // Sample unordered pairs, then orient each edge one way so both
        // directions never coexist.
        std::size_t want = cfg.edge_count ? cfg.edge_count : (cfg.n * 3) / 2;
        const std::size_t max_edges = cfg.n * (cfg.n - 1) / 2;
        if (want > max_edges) want = max_edges;
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t i = 0; i < cfg.n; ++i)
            for (std::size_t j = i + 1; j < cfg.n; ++j) pairs.emplace_back(i, j);
        shuffle(pairs, rng);
        for (std::size_t k = 0; k < want; ++k) {
            const auto [a, b] = pairs[k];
            if (rng() & 1)
                edges.push_back({a, b});
            else
                edges.push_back({b, a});
        }
    }
    return DirectedGraph(cfg.n, std::move(edges));
}

/// True RD parameters with row sums of rho kept below one, which keeps the
/// linear part of the Euler map inside the unit disc.
inline RdParams make_true_rd(const DirectedGraph& g, Rng& rng) {
    RdParams p;
    p.rho.assign(g.edge_count(), 0.0);
    p.sigma.assign(g.edge_count(), 0.0);
    p.b_d.assign(g.vertex_count(), 0.0);
    p.b_r.assign(g.vertex_count(), 0.0);
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        const auto out = g.out_edges(v);
        if (out.empty()) continue;
        const double cap = 0.8 / static_cast<double>(out.size());
        for (std::size_t k : out) p.rho[k] = uniform(rng, 0.25, 1.0) * cap;
    }
    for (double& v : p.sigma) v = uniform(rng, 0.05, 0.4);
    return p;
}

inline SirParams make_true_sir(const DirectedGraph& g, Rng& rng, bool heterogeneous_beta = true) {
    SirParams p;
    p.single_beta = false;
    p.phi_raw.resize(g.edge_count());
    p.beta_raw.resize(g.vertex_count());
    for (double& v : p.phi_raw) v = uniform(rng, -1.0, 1.0);
    for (double& v : p.beta_raw)
        v = heterogeneous_beta ? uniform(rng, -2.5, 0.5) : -1.0;
    p.gamma_raw = uniform(rng, -1.5, -0.5);  // gamma roughly 0.18..0.38
    return p;
}

/// Spectral-radius estimate of x -> x + L_d x by power iteration; the
/// geometric mean of the post-warmup step norms smooths the oscillation a
/// complex dominant pair produces on this non-normal map.
inline double linear_growth_estimate(const DirectedGraph& g, const EdgeWeights& rho, Rng& rng) {
    std::vector<double> y(g.vertex_count());
    for (double& v : y) v = normal(rng);
    constexpr int kWarm = 200, kMeasure = 500;
    double log_sum = 0.0;
    for (int it = 0; it < kWarm + kMeasure; ++it) {
        const auto ly = apply_weighted_laplacian(g, rho, y);
        double norm = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] += ly[i];
            norm += y[i] * y[i];
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        for (double& v : y) v /= norm;
        if (it >= kWarm) log_sum += std::log(norm);
    }
    return std::exp(log_sum / kMeasure);
}

}  // namespace detail

/// Evaluate the configured pattern term on a (steps x n) grid. Phases are
/// derived from the seed only, so a source and target config sharing a seed
/// see the same per-vertex phases. With `g_common_phase` the wave is pure
/// common mode, which graph-Laplacian features cannot see at all.
inline DenseMatrix pattern_samples(const SynthConfig& cfg, std::size_t steps) {
    DenseMatrix g(steps, cfg.n, cfg.g_offset);
    if (cfg.g_pattern == GPattern::kNone || cfg.g_amplitude == 0.0) return g;
    Rng phase_rng(derive_seed(cfg.seed, "g-phase"));
    std::vector<double> phase(cfg.n);
    if (cfg.g_common_phase) {
        const double shared = uniform(phase_rng, 0.0, 6.283185307179586);
        phase.assign(cfg.n, shared);
    } else {
        for (double& v : phase) v = uniform(phase_rng, 0.0, 6.283185307179586);
    }
    const double shift = cfg.g_pattern == GPattern::kShiftedPeriodic ? cfg.g_phase_shift : 0.0;
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t i = 0; i < cfg.n; ++i)
            g.at(t, i) = cfg.g_offset +
                         cfg.g_amplitude *
                             std::sin(6.283185307179586 * static_cast<double>(t) / cfg.g_period +
                                      phase[i] + shift);
    return g;
}

/// Simulate x(t+1) = x(t) + F(x(t)) + G(t) by forward Euler, with F the
/// reaction-diffusion step and G the configured pattern term plus Gaussian
/// noise. Residuals of the true model on the emitted table equal the
/// injected G samples exactly.
inline SynthRdData synth_rd(const SynthConfig& cfg) {
    if (cfg.horizon < 2) throw std::invalid_argument("synth_rd: horizon must be >= 2");
    Rng rng(derive_seed(cfg.seed, "rd-synth"));
    DirectedGraph graph = detail::make_topology(cfg, rng);
    RdParams truth = cfg.true_rd ? *cfg.true_rd : detail::make_true_rd(graph, rng);
    RdModel model(graph);
    model.check_params(truth);

    const double growth = detail::linear_growth_estimate(graph, truth.rho, rng);
    if (growth > 1.0 + 1e-3)
        throw std::runtime_error("synth_rd: linear part is unstable (growth " +
                                 std::to_string(growth) + ")");

    SynthRdData out{std::move(graph), {}, std::move(truth), pattern_samples(cfg, cfg.horizon - 1)};
    if (cfg.noise_sd > 0.0) {
        Rng noise_rng(derive_seed(cfg.noise_seed ? cfg.noise_seed : cfg.seed, "rd-noise"));
        for (double& v : out.g_samples.data) v += cfg.noise_sd * normal(noise_rng);
    }

    const std::size_t n = cfg.n;
    TimeSeriesTable& table = out.table;
    table.values = DenseMatrix(cfg.horizon, n);
    table.mask.assign(cfg.horizon * n, 1);
    table.resolution_seconds = 300;
    table.columns.resize(n);
    for (std::size_t i = 0; i < n; ++i) table.columns[i] = "v" + std::to_string(i);
    table.timestamps.resize(cfg.horizon);
    // Monday 2024-01-01 00:00, 5-minute steps: gives the table a full
    // weekday/weekend structure for split tests.
    const std::int64_t start = detail::days_from_civil(2024, 1, 1) * 86400;
    for (std::size_t t = 0; t < cfg.horizon; ++t)
        table.timestamps[t] = start + static_cast<std::int64_t>(t) * 300;

    std::vector<double> x(n);
    for (double& v : x) v = uniform(rng, 40.0, 60.0);
    for (std::size_t i = 0; i < n; ++i) table.values.at(0, i) = x[i];
    const RdModel sim(out.graph);
    for (std::size_t t = 0; t + 1 < cfg.horizon; ++t) {
        x = sim.forward(out.true_params, x);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += out.g_samples.at(t, i);
            if (!(std::abs(x[i]) < 1e6))
                throw std::runtime_error("synth_rd: trajectory diverged at step " +
                                         std::to_string(t + 1) + ", vertex " + std::to_string(i));
            table.values.at(t + 1, i) = x[i];
        }
    }
    return out;
}

/// Euler-simulated SIR-network outbreaks with known materialized beta,
/// gamma and travel fractions. The simulator uses the model's own forward
/// step, so a perfectly fit model reproduces episodes exactly, and
/// S + I + R = N holds by construction of S.
inline SynthSirData synth_sir(const SynthConfig& cfg) {
    if (cfg.horizon < 2) throw std::invalid_argument("synth_sir: horizon must be >= 2");
    if (cfg.episodes < 1) throw std::invalid_argument("synth_sir: need at least one episode");
    Rng rng(derive_seed(cfg.seed, "sir-synth"));
    DirectedGraph graph = detail::make_topology(cfg, rng);
    SirParams truth = cfg.true_sir ? *cfg.true_sir : detail::make_true_sir(graph, rng);
    SirModel model(graph);
    model.check_params(truth);

    SynthSirData out{std::move(graph), {}, std::move(truth), {}};
    const std::size_t n = cfg.n;
    out.populations.resize(n);
    for (double& v : out.populations) v = uniform(rng, 5e3, 2e4);

    Rng noise_rng(derive_seed(cfg.noise_seed ? cfg.noise_seed : cfg.seed, "sir-noise"));
    for (std::size_t e = 0; e < cfg.episodes; ++e) {
        SirEpisode ep;
        ep.N = out.populations;
        ep.R0.assign(n, 0.0);
        ep.I = DenseMatrix(cfg.horizon, n);
        for (std::size_t i = 0; i < n; ++i)
            ep.I.at(0, i) = out.populations[i] * uniform(rng, 0.001, 0.01);

        SirState state;
        state.N = ep.N;
        state.R0 = ep.R0;
        state.I_history = DenseMatrix(1, n);
        for (std::size_t i = 0; i < n; ++i) state.I_history.at(0, i) = ep.I.at(0, i);
        for (std::size_t t = 0; t + 1 < cfg.horizon; ++t) {
            auto next = model.forward(out.true_params, state);
            for (std::size_t i = 0; i < n; ++i) {
                if (cfg.noise_sd > 0.0) next[i] += cfg.noise_sd * normal(noise_rng);
                if (next[i] < 0.0) next[i] = 0.0;
                if (!(next[i] < 2.0 * ep.N[i]))
                    throw std::runtime_error("synth_sir: infectious count diverged at step " +
                                             std::to_string(t + 1));
                ep.I.at(t + 1, i) = next[i];
            }
            // Extend the history with the realized (possibly noisy) counts.
            DenseMatrix h(state.I_history.rows + 1, n);
            std::copy(state.I_history.data.begin(), state.I_history.data.end(), h.data.begin());
            for (std::size_t i = 0; i < n; ++i) h.at(h.rows - 1, i) = ep.I.at(t + 1, i);
            state.I_history = std::move(h);
        }
        out.episodes.push_back(std::move(ep));
    }
    return out;
}

}  // namespace graphdyn
