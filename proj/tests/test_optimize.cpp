#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "graphdyn/optimize.hpp"

using namespace graphdyn;

namespace {

// Quadratic objective sum_i w_i (p - c_i)^2 over indexed "samples"; simple
// enough that every training behavior has a closed-form sanity check.
Objective quadratic_objective(std::vector<double> centers, double val_center) {
    auto c = std::make_shared<std::vector<double>>(std::move(centers));
    Objective obj;
    obj.dim = 1;
    obj.train_size = c->size();
    obj.train_eval = [c](std::span<const double> p, std::span<const std::size_t> idx,
                         LossKind kind, std::vector<double>* grad) {
        double loss = 0.0, g = 0.0;
        for (std::size_t k : idx) {
            const double r = p[0] - (*c)[k];
            if (kind == LossKind::kMse) {
                loss += r * r;
                g += 2.0 * r;
            } else {
                loss += std::abs(r);
                g += r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0);
            }
        }
        loss /= static_cast<double>(idx.size());
        if (grad) (*grad)[0] = g / static_cast<double>(idx.size());
        return loss;
    };
    obj.val_eval = [val_center](std::span<const double> p, LossKind) {
        return (p[0] - val_center) * (p[0] - val_center);
    };
    return obj;
}

}  // namespace

TEST_CASE("adam zero gradient leaves parameters unchanged", "[optimize]") {
    TrainConfig cfg;
    AdamState st = AdamState::for_dim(2);
    std::vector<double> p{1.5, -2.5};
    adam_step(st, p, std::vector<double>{0.0, 0.0}, cfg);
    CHECK(p == std::vector<double>{1.5, -2.5});
    CHECK(st.step == 1);
}

TEST_CASE("adam first step magnitude matches the closed form", "[optimize]") {
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    AdamState st = AdamState::for_dim(1);
    std::vector<double> p{3.0};
    const double g = 0.7;
    adam_step(st, p, std::vector<double>{g}, cfg);
    // Bias-corrected first step: lr * g / (|g| + eps).
    const double expected = 3.0 - cfg.learning_rate * g / (std::abs(g) + cfg.adam_epsilon);
    CHECK(p[0] == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("adam descends a quadratic", "[optimize]") {
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    AdamState st = AdamState::for_dim(1);
    std::vector<double> p{2.0};
    auto loss = [](double x) { return x * x; };
    double prev = loss(p[0]);
    for (int i = 0; i < 2; ++i) {
        adam_step(st, p, std::vector<double>{2.0 * p[0]}, cfg);
        const double cur = loss(p[0]);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("adam rejects bad inputs", "[optimize]") {
    TrainConfig cfg;
    AdamState st = AdamState::for_dim(1);
    std::vector<double> p{0.0};
    CHECK_THROWS_AS(adam_step(st, p, std::vector<double>{std::nan("")}, cfg),
                    std::invalid_argument);
    TrainConfig bad = cfg;
    bad.adam_epsilon = 0.0;
    CHECK_THROWS_AS(adam_step(st, p, std::vector<double>{1.0}, bad), std::invalid_argument);
}

TEST_CASE("train is deterministic for a fixed seed", "[optimize]") {
    auto make = [] {
        std::vector<double> centers;
        Rng rng(5);
        for (int i = 0; i < 50; ++i) centers.push_back(uniform(rng, -1.0, 1.0));
        return quadratic_objective(std::move(centers), 0.1);
    };
    TrainConfig cfg;
    cfg.max_epochs = 20;
    cfg.batch_size = 8;
    cfg.seed = 77;
    const auto a = train(make(), {2.0}, cfg);
    const auto b = train(make(), {2.0}, cfg);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].train_loss == b.history[i].train_loss);
        CHECK(a.history[i].val_loss == b.history[i].val_loss);
    }
    CHECK(a.params == b.params);
}

TEST_CASE("early stopping halts after patience non-improving epochs", "[optimize]") {
    // Training pulls p toward 10 while validation wants 0, so the
    // validation loss strictly increases from the first epoch.
    auto obj = quadratic_objective(std::vector<double>(20, 10.0), 0.0);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 20;
    cfg.patience = 4;
    cfg.max_epochs = 100;
    const auto res = train(obj, {0.0}, cfg);
    CHECK(res.history.size() == 1 + cfg.patience);
    CHECK(res.best_epoch == 1);
}

TEST_CASE("patience larger than max_epochs runs exactly max_epochs", "[optimize]") {
    auto obj = quadratic_objective(std::vector<double>(10, 1.0), 1.0);
    TrainConfig cfg;
    cfg.patience = 500;
    cfg.max_epochs = 7;
    const auto res = train(obj, {0.0}, cfg);
    CHECK(res.history.size() == 7);
}

TEST_CASE("returned parameters achieve the minimum recorded validation loss", "[optimize]") {
    std::vector<double> centers;
    Rng rng(9);
    for (int i = 0; i < 30; ++i) centers.push_back(uniform(rng, 0.5, 1.5));
    auto obj = quadratic_objective(std::move(centers), 1.0);
    TrainConfig cfg;
    cfg.max_epochs = 40;
    cfg.batch_size = 4;
    cfg.learning_rate = 0.05;
    const auto res = train(obj, {-1.0}, cfg);
    double min_val = res.history.front().val_loss;
    for (const auto& rec : res.history) min_val = std::min(min_val, rec.val_loss);
    CHECK(res.best_val_loss == min_val);
    CHECK(obj.val_eval(res.params, cfg.loss_kind) == Catch::Approx(min_val));
}

TEST_CASE("train validates inputs", "[optimize]") {
    auto obj = quadratic_objective({1.0, 2.0}, 0.0);
    TrainConfig cfg;
    cfg.learning_rate = -1.0;
    CHECK_THROWS_AS(train(obj, {0.0}, cfg), std::invalid_argument);
    cfg = TrainConfig{};
    Objective empty = obj;
    empty.train_size = 0;
    CHECK_THROWS_AS(train(empty, {0.0}, cfg), std::invalid_argument);
}

TEST_CASE("maml with zero iterations returns the initialization", "[optimize]") {
    std::vector<Objective> tasks{quadratic_objective({1.0, 2.0, 3.0, 4.0}, 0.0)};
    MamlConfig cfg;
    cfg.iterations = 0;
    const auto out = maml_init(tasks, {0.25}, cfg, LossKind::kMse);
    CHECK(out == std::vector<double>{0.25});
}

TEST_CASE("maml with zero inner rate is averaged-gradient pretraining", "[optimize]") {
    std::vector<Objective> tasks{quadratic_objective({2.0, 2.0, 4.0, 4.0}, 0.0),
                                 quadratic_objective({-1.0, -1.0, -3.0, -3.0}, 0.0)};
    MamlConfig cfg;
    cfg.inner_lr = 0.0;
    cfg.outer_lr = 0.01;
    cfg.iterations = 5;
    const auto out = maml_init(tasks, {0.0}, cfg, LossKind::kMse);

    // Manual SGD on the mean query-half gradient.
    double theta = 0.0;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        const double g1 = 2.0 * (theta - 4.0);   // query half of task 1
        const double g2 = 2.0 * (theta + 3.0);   // query half of task 2
        theta -= cfg.outer_lr * 0.5 * (g1 + g2);
    }
    CHECK(out[0] == Catch::Approx(theta).epsilon(1e-12));
}

TEST_CASE("maml on one task with identical halves is two-stage descent", "[optimize]") {
    // Support and query halves share the same center, so each iteration is
    // gradient descent evaluated twice; the loss never increases.
    std::vector<Objective> tasks{quadratic_objective({3.0, 3.0, 3.0, 3.0}, 0.0)};
    MamlConfig cfg;
    cfg.inner_lr = 0.05;
    cfg.outer_lr = 0.05;
    cfg.iterations = 30;
    std::vector<double> theta{0.0};
    double prev = (theta[0] - 3.0) * (theta[0] - 3.0);
    for (int it = 0; it < 30; ++it) {
        MamlConfig one = cfg;
        one.iterations = 1;
        theta = maml_init(tasks, theta, one, LossKind::kMse);
        const double cur = (theta[0] - 3.0) * (theta[0] - 3.0);
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
}

TEST_CASE("maml rejects undersized tasks", "[optimize]") {
    std::vector<Objective> tasks{quadratic_objective({1.0}, 0.0)};
    MamlConfig cfg;
    CHECK_THROWS_AS(maml_init(tasks, {0.0}, cfg, LossKind::kMse), std::invalid_argument);
}
