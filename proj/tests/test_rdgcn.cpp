#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <vector>

#include "graphdyn/checkpoint.hpp"
#include "graphdyn/rdgcn.hpp"
#include "graphdyn/synth.hpp"

using namespace graphdyn;

namespace {

// Brute-force per-vertex forward: rescans the raw edge list for every
// vertex instead of using the model's adjacency index or Laplacian helper.
std::vector<double> brute_rd_forward(const DirectedGraph& g, const RdParams& p,
                                     const std::vector<double>& x) {
    const std::size_t n = g.vertex_count();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double diffusion = 0.0;
        for (std::size_t k = 0; k < g.edge_count(); ++k)
            if (g.edge(k).src == i) diffusion += p.rho[k] * (x[g.edge(k).dst] - x[i]);
        double reaction = 0.0;
        for (std::size_t k = 0; k < g.edge_count(); ++k)
            if (g.edge(k).dst == i)  // reverse edge (i <- src) carries sigma_k
                reaction += p.sigma[k] * (x[g.edge(k).src] - x[i]);
        out[i] = x[i] + diffusion + p.b_d[i] + std::tanh(reaction + p.b_r[i]);
    }
    return out;
}

// Test-side central differences, independent of the library's gradcheck.
std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double hi = f(x);
        x[i] = keep - h;
        const double lo = f(x);
        x[i] = keep;
        g[i] = (hi - lo) / (2.0 * h);
    }
    return g;
}

DirectedGraph random_graph(Rng& rng, std::size_t max_n) {
    const std::size_t n = 2 + rng() % (max_n - 1);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && rng() % 3 == 0) edges.push_back({i, j});
    return DirectedGraph(n, std::move(edges));
}

RdParams random_params(const RdModel& model, Rng& rng) {
    std::vector<double> flat(model.param_count());
    for (double& v : flat) v = uniform(rng, -0.6, 0.6);
    return model.unpack(flat);
}

std::vector<StepSample> random_batch(const RdModel& model, Rng& rng, std::size_t max_batch = 4) {
    const std::size_t n = model.vertex_count();
    std::vector<StepSample> batch(1 + rng() % max_batch);
    for (StepSample& s : batch) {
        s.x.resize(n);
        s.y.resize(n);
        s.x_mask.assign(n, 1);
        s.y_mask.assign(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            s.x[i] = uniform(rng, -5.0, 5.0);
            s.y[i] = uniform(rng, -5.0, 5.0);
        }
    }
    return batch;
}

}  // namespace

TEST_CASE("rd_forward trivial cases", "[rdgcn]") {
    // Isolated vertex: both Laplacian terms vanish, tanh(0) = 0.
    RdModel lone{DirectedGraph(1, {})};
    RdParams p = lone.zero_params();
    p.b_d[0] = 0.3;
    const auto out = lone.forward(p, std::vector<double>{5.0});
    CHECK(out[0] == Catch::Approx(5.3));

    // All-zero parameters act as the identity.
    RdModel chain{DirectedGraph(3, {{0, 1}, {1, 2}})};
    const std::vector<double> x{4.0, -2.0, 9.0};
    const auto id = chain.forward(chain.zero_params(), x);
    for (std::size_t i = 0; i < 3; ++i) CHECK(id[i] == Catch::Approx(x[i]));
}

TEST_CASE("rd_forward single-edge hand evaluation", "[rdgcn]") {
    RdModel model{DirectedGraph(2, {{0, 1}})};
    RdParams p = model.zero_params();
    p.rho[0] = 0.5;    // diffusion on (0,1)
    p.sigma[0] = 0.2;  // reaction edge 0 is the transpose (1,0)
    const auto out = model.forward(p, std::vector<double>{10.0, 20.0});
    CHECK(out[0] == Catch::Approx(15.0));
    // Independent scalar tanh: (e^u - e^-u) / (e^u + e^-u) at u = -2.
    const double u = 0.2 * (10.0 - 20.0);
    const double tanh_oracle = (std::exp(u) - std::exp(-u)) / (std::exp(u) + std::exp(-u));
    CHECK(out[1] == Catch::Approx(20.0 + tanh_oracle).epsilon(1e-14));
}

TEST_CASE("rd_forward matches the per-vertex brute-force loop", "[rdgcn]") {
    Rng rng(21);
    for (int rep = 0; rep < 100; ++rep) {
        const DirectedGraph g = random_graph(rng, 10);
        RdModel model(g);
        const RdParams p = random_params(model, rng);
        std::vector<double> x(g.vertex_count());
        for (double& v : x) v = uniform(rng, -20.0, 20.0);
        const auto fast = model.forward(p, x);
        const auto oracle = brute_rd_forward(g, p, x);
        for (std::size_t i = 0; i < fast.size(); ++i) {
            const double scale = std::max(1.0, std::abs(oracle[i]));
            CHECK(std::abs(fast[i] - oracle[i]) / scale <= 1e-12);
        }
    }
}

TEST_CASE("rd gradient matches central finite differences", "[rdgcn]") {
    Rng rng(31);
    for (int rep = 0; rep < 100; ++rep) {
        const DirectedGraph g = random_graph(rng, 8);
        RdModel model(g);
        const RdParams p = random_params(model, rng);
        const auto batch = random_batch(model, rng);

        RdParams grad;
        model.loss_and_grad(p, batch, LossKind::kMse, grad);
        const auto analytic = model.pack(grad);
        const auto fd = fd_gradient(
            [&](const std::vector<double>& flat) {
                return model.loss(model.unpack(flat), batch, LossKind::kMse);
            },
            model.pack(p), 1e-5);
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(fd[i])});
            CHECK(std::abs(analytic[i] - fd[i]) / denom <= 1e-5);
        }
    }
}

TEST_CASE("rd MAE gradient matches finite differences away from kinks", "[rdgcn]") {
    Rng rng(37);
    int done = 0;
    while (done < 40) {
        const DirectedGraph g = random_graph(rng, 8);
        RdModel model(g);
        const RdParams p = random_params(model, rng);
        auto batch = random_batch(model, rng);

        // Keep every residual away from the |.| kink relative to the step.
        bool safe = true;
        for (const StepSample& s : batch) {
            const auto pred = model.forward(p, s.x);
            for (std::size_t i = 0; i < pred.size(); ++i)
                if (std::abs(pred[i] - s.y[i]) < 1e-3) safe = false;
        }
        if (!safe) continue;
        ++done;

        RdParams grad;
        model.loss_and_grad(p, batch, LossKind::kMae, grad);
        const auto analytic = model.pack(grad);
        const auto fd = fd_gradient(
            [&](const std::vector<double>& flat) {
                return model.loss(model.unpack(flat), batch, LossKind::kMae);
            },
            model.pack(p), 1e-5);
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(fd[i])});
            CHECK(std::abs(analytic[i] - fd[i]) / denom <= 1e-4);
        }
    }
}

TEST_CASE("rd gradient on a single-vertex graph is bias-only", "[rdgcn]") {
    RdModel model{DirectedGraph(1, {})};
    StepSample s;
    s.x = {3.0};
    s.y = {4.0};
    s.x_mask = {1};
    s.y_mask = {1};
    RdParams at = model.zero_params();
    at.b_d[0] = 0.2;
    at.b_r[0] = -0.4;
    RdParams grad;
    model.loss_and_grad(at, std::vector<StepSample>{s}, LossKind::kMse, grad);
    const auto analytic = model.pack(grad);
    const auto fd = fd_gradient(
        [&](const std::vector<double>& flat) {
            return model.loss(model.unpack(flat), std::vector<StepSample>{s}, LossKind::kMse);
        },
        model.pack(at), 1e-5);
    REQUIRE(analytic.size() == 2);  // b_d and b_r only
    for (std::size_t i = 0; i < analytic.size(); ++i)
        CHECK(analytic[i] == Catch::Approx(fd[i]).margin(1e-6));
}

TEST_CASE("rd loss at a stationary identity fit is zero", "[rdgcn]") {
    RdModel model{DirectedGraph(3, {{0, 1}, {2, 1}})};
    StepSample s;
    s.x = {1.0, 2.0, 3.0};
    s.y = s.x;  // x(t+1) = x(t), perfectly fit by zero parameters
    s.x_mask.assign(3, 1);
    s.y_mask.assign(3, 1);
    RdParams grad;
    const double loss =
        model.loss_and_grad(model.zero_params(), std::vector<StepSample>{s}, LossKind::kMse, grad);
    CHECK(loss == 0.0);
    for (double v : model.pack(grad)) CHECK(v == 0.0);
}

TEST_CASE("rd masked inputs drop out of neighbor sums and the loss", "[rdgcn]") {
    // Masking vertex 2's input must equal deleting its edges entirely.
    const DirectedGraph g(3, {{0, 1}, {0, 2}, {2, 1}});
    const DirectedGraph reduced(3, {{0, 1}});
    RdModel model(g), reduced_model(reduced);
    Rng rng(5);
    RdParams p = random_params(model, rng);
    RdParams q = reduced_model.zero_params();
    q.rho[0] = p.rho[0];
    q.sigma[0] = p.sigma[0];
    q.b_d = p.b_d;
    q.b_r = p.b_r;

    const std::vector<double> x{1.0, 2.0, 99.0};
    const MaskVector x_mask{1, 1, 0};
    const auto masked = model.forward(p, x, x_mask);
    const auto oracle = reduced_model.forward(q, x);
    CHECK(masked[0] == Catch::Approx(oracle[0]));
    CHECK(masked[1] == Catch::Approx(oracle[1]));

    StepSample s;
    s.x = x;
    s.y = {1.5, 2.5, 3.5};
    s.x_mask = x_mask;
    s.y_mask = {1, 1, 1};
    // Vertex 2's own prediction is excluded: the loss only counts 0 and 1.
    const double loss = model.loss(p, std::vector<StepSample>{s}, LossKind::kMae);
    const double expected = (std::abs(masked[0] - 1.5) + std::abs(masked[1] - 2.5)) / 2.0;
    CHECK(loss == Catch::Approx(expected));
}

TEST_CASE("rd loss error paths", "[rdgcn]") {
    RdModel model{DirectedGraph(2, {{0, 1}})};
    CHECK_THROWS_AS(model.loss(model.zero_params(), std::vector<StepSample>{}, LossKind::kMse),
                    std::invalid_argument);
    StepSample s;
    s.x = {1.0, 2.0};
    s.y = {1.0, 2.0};
    s.x_mask = {0, 0};
    s.y_mask = {1, 1};
    CHECK_THROWS_AS(model.loss(model.zero_params(), std::vector<StepSample>{s}, LossKind::kMse),
                    std::invalid_argument);
}

TEST_CASE("rd residuals recover the injected pattern", "[rdgcn]") {
    SynthConfig cfg;
    cfg.n = 8;
    cfg.topology = Topology::kRandomOneDirectional;
    cfg.horizon = 60;
    cfg.seed = 404;
    const auto clean = synth_rd(cfg);
    RdModel model(clean.graph);

    // Noiseless generation: residuals of the true parameters vanish.
    const auto zero_res = model.residuals(clean.true_params, clean.table);
    for (std::size_t t = 0; t < zero_res.step_count(); ++t)
        for (std::size_t i = 0; i < zero_res.vertex_count(); ++i)
            CHECK(std::abs(zero_res.value(t, i)) <= 1e-9);

    // Constant shift on every target moves the first-row residuals by c.
    TimeSeriesTable shifted = clean.table;
    for (std::size_t i = 0; i < shifted.vertex_count(); ++i) shifted.values.at(1, i) += 2.5;
    const auto shifted_res = model.residuals(clean.true_params, shifted);
    for (std::size_t i = 0; i < shifted_res.vertex_count(); ++i)
        CHECK(shifted_res.value(0, i) == Catch::Approx(2.5));

    CHECK_THROWS_AS(model.residuals(clean.true_params, TimeSeriesTable{}), std::invalid_argument);
}

TEST_CASE("rd residual median is near zero under a symmetric pattern", "[rdgcn]") {
    SynthConfig cfg;
    cfg.n = 6;
    cfg.horizon = 2000;
    cfg.g_pattern = GPattern::kSymmetricPeriodic;
    cfg.g_amplitude = 0.8;
    cfg.g_period = 23.0;
    cfg.seed = 7;
    const auto data = synth_rd(cfg);
    RdModel model(data.graph);
    const auto res = model.residuals(data.true_params, data.table);
    std::vector<double> flat(res.values.data.begin(), res.values.data.end());
    std::sort(flat.begin(), flat.end());
    const double median = flat[flat.size() / 2];
    double mean = 0.0, var = 0.0;
    for (double v : flat) mean += v;
    mean /= static_cast<double>(flat.size());
    for (double v : flat) var += (v - mean) * (v - mean);
    var /= static_cast<double>(flat.size() - 1);
    const double se_median = 1.2533 * std::sqrt(var / static_cast<double>(flat.size()));
    CHECK(std::abs(median) <= 3.0 * se_median);
}

TEST_CASE("rd training recovers the generator dynamics", "[rdgcn]") {
    // Noiseless data: the trained model reproduces the trajectory almost
    // exactly. With a symmetric common-mode pattern added, training moves
    // the model at least 10x closer to the F-only labels than the random
    // initialization was.
    SynthConfig cfg;
    cfg.n = 6;
    cfg.topology = Topology::kRandomOneDirectional;
    cfg.edge_count = 9;
    cfg.horizon = 400;
    cfg.seed = 88;
    TrainConfig tc;
    tc.learning_rate = 0.01;
    tc.batch_size = 16;
    tc.max_epochs = 600;
    tc.patience = 600;
    tc.seed = 4;

    auto fit = [&](const SynthConfig& scfg) {
        const auto data = synth_rd(scfg);
        RdModel model(data.graph);
        std::vector<std::size_t> pairs = index_range(data.table.step_count() - 1);
        Rng rng(2);
        shuffle(pairs, rng);
        const std::size_t n_train = pairs.size() * 3 / 4;
        auto obj = make_rd_objective(
            model,
            make_step_samples(data.table,
                              std::vector<std::size_t>(pairs.begin(), pairs.begin() + n_train)),
            make_step_samples(data.table,
                              std::vector<std::size_t>(pairs.begin() + n_train, pairs.end())));
        const std::vector<double> init = model.pack(model.init_params(7));
        const auto result = train(obj, init, tc);
        double best_train = result.history.front().train_loss;
        for (const auto& rec : result.history) best_train = std::min(best_train, rec.train_loss);
        return std::tuple{data, init, result.params, best_train};
    };

    const auto [clean, init_c, fitted_c, train_mse] = fit(cfg);
    CHECK(train_mse < 1e-6);

    // Symmetric zero-mean pattern plus per-vertex noise: the noise keeps the
    // neighbor differences excited so the dynamics stay identifiable.
    SynthConfig noisy = cfg;
    noisy.g_pattern = GPattern::kSymmetricPeriodic;
    noisy.g_amplitude = 0.8;
    noisy.g_period = 20.0;
    noisy.g_common_phase = true;
    noisy.noise_sd = 0.5;
    const auto [data, init, fitted, train_mse_noisy] = fit(noisy);
    (void)train_mse_noisy;
    RdModel model(data.graph);
    auto f_loss = [&](std::span<const double> flat) {
        double acc = 0.0;
        std::size_t count = 0;
        const RdParams p = model.unpack(flat);
        for (std::size_t t = 0; t + 1 < data.table.step_count(); ++t) {
            const auto x = data.table.values.row(t);
            const auto f_label = model.forward(data.true_params, x);
            const auto pred = model.forward(p, x);
            for (std::size_t i = 0; i < pred.size(); ++i) {
                acc += (pred[i] - f_label[i]) * (pred[i] - f_label[i]);
                ++count;
            }
        }
        return acc / static_cast<double>(count);
    };
    const double initial = f_loss(init);
    const double trained = f_loss(fitted);
    CHECK(trained * 10.0 <= initial);
}

TEST_CASE("rd parameter count follows 2E + 2n", "[rdgcn]") {
    Rng rng(3);
    const DirectedGraph g = random_graph(rng, 9);
    RdModel model(g);
    CHECK(model.param_count() == 2 * g.edge_count() + 2 * g.vertex_count());
    CHECK(model.zero_params().count() == model.param_count());
}

TEST_CASE("rd checkpoint round trip is bit identical", "[rdgcn]") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "graphdyn-test-rd";
    fs::create_directories(dir);
    const std::string path = (dir / "ckpt.json").string();

    Rng rng(17);
    const DirectedGraph g = random_graph(rng, 8);
    RdModel model(g);
    RdParams p = random_params(model, rng);
    p.rho[0] = 1e-17;
    p.b_d[0] = -0.1 + 1e-18;

    save_rd_checkpoint(path, model, p);
    const RdParams back = load_rd_checkpoint(path, model);
    const auto a = model.pack(p);
    const auto b = model.pack(back);
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);

    // A different graph must be rejected.
    RdModel other{DirectedGraph(g.vertex_count() + 1, g.edges())};
    CHECK_THROWS(load_rd_checkpoint(path, other));
    fs::remove_all(dir);
}
