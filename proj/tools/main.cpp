// graphdyn command-line tool: dataset synthesis, training, evaluation,
// gradient checking, and the discrepancy laboratory. One binary, subcommand
// style; options come from flags or an INI config file (flags win).

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "graphdyn/graphdyn.hpp"

namespace fs = std::filesystem;
using namespace graphdyn;
using nlohmann::json;

namespace {

std::atomic<bool> g_stop_requested{false};

void handle_sigint(int) { g_stop_requested.store(true); }

// ---------------------------------------------------------------------------
// Shared option bundles
// ---------------------------------------------------------------------------

struct CommonOpts {
    std::string model = "rd";
    std::string out_dir;
    std::uint64_t seed = 0;
    std::string loss = "mse";
};

struct SynthOpts {
    std::size_t n = 20;
    std::string topology = "ring";
    std::size_t edges = 0;
    std::size_t horizon = 500;
    std::size_t episodes = 5;
    std::string g_pattern = "none";
    double g_amplitude = 0.0;
    double g_period = 24.0;
    double g_shift = 3.141592653589793;
    double g_offset = 0.0;
    bool g_common_phase = false;
    double noise_sd = 0.0;

    SynthConfig to_config(std::uint64_t seed) const {
        SynthConfig cfg;
        cfg.n = n;
        cfg.topology = topology_from_string(topology);
        cfg.edge_count = edges;
        cfg.horizon = horizon;
        cfg.episodes = episodes;
        cfg.g_pattern = g_pattern_from_string(g_pattern);
        cfg.g_amplitude = g_amplitude;
        cfg.g_period = g_period;
        cfg.g_phase_shift = g_shift;
        cfg.g_offset = g_offset;
        cfg.g_common_phase = g_common_phase;
        cfg.noise_sd = noise_sd;
        cfg.seed = seed;
        return cfg;
    }
};

struct TrainOpts {
    double learning_rate = 0.001;
    std::size_t batch_size = 64;
    std::size_t patience = 30;
    std::size_t max_epochs = 500;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    bool maml = false;
    bool single_beta = false;
    std::size_t maml_tasks = 4;
    double maml_inner_lr = 0.00005;
    double maml_outer_lr = 0.0005;
    std::size_t maml_iterations = 200;

    TrainConfig to_config(std::uint64_t seed, LossKind kind) const {
        TrainConfig cfg;
        cfg.learning_rate = learning_rate;
        cfg.batch_size = batch_size;
        cfg.patience = patience;
        cfg.max_epochs = max_epochs;
        cfg.adam_beta1 = adam_beta1;
        cfg.adam_beta2 = adam_beta2;
        cfg.adam_epsilon = adam_epsilon;
        cfg.loss_kind = kind;
        cfg.seed = seed;
        return cfg;
    }
    MamlConfig to_maml_config() const {
        MamlConfig cfg;
        cfg.inner_lr = maml_inner_lr;
        cfg.outer_lr = maml_outer_lr;
        cfg.iterations = maml_iterations;
        return cfg;
    }
};

struct SplitOpts {
    std::string mode = "plain";
    int train_hour_begin = 8;
    int train_hour_end = 12;
    int test_hour_begin = 13;
    int test_hour_end = 14;
    std::size_t train_days = 0;
    int ratio_train = 0;  // 0 = mode default (3:1 plain/traffic, 5:2 ili)
    int ratio_val = 0;

    SplitSpec to_spec(std::uint64_t seed) const {
        SplitSpec spec;
        spec.mode = split_mode_from_string(mode);
        spec.train_hour_begin = train_hour_begin;
        spec.train_hour_end = train_hour_end;
        spec.test_hour_begin = test_hour_begin;
        spec.test_hour_end = test_hour_end;
        spec.train_days = train_days;
        const bool ili = spec.mode == SplitMode::kIliSeason;
        spec.ratio_train = ratio_train > 0 ? ratio_train : (ili ? 5 : 3);
        spec.ratio_val = ratio_val > 0 ? ratio_val : (ili ? 2 : 1);
        spec.seed = seed;
        return spec;
    }
};

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

std::uint64_t write_config_snapshot(CLI::App& app, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const std::string resolved = app.config_to_str(true, true);
    std::ofstream out(out_dir / "config_resolved.ini");
    out << resolved;
    // Provenance hash over the computation-relevant keys only: path-valued
    // options say where results go, not what was computed.
    std::istringstream lines(resolved);
    std::string line, hashed;
    while (std::getline(lines, line)) {
        const auto eq = line.find('=');
        if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
        const std::string key = detail::strip(line.substr(0, eq));
        const bool path_key = key.size() >= 4 && (key.ends_with(".out") || key.ends_with(".data") ||
                                                  key.ends_with(".checkpoint"));
        if (!path_key) hashed += line + '\n';
    }
    return fnv1a(hashed);
}

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void write_history_csv(const fs::path& path, const std::vector<EpochRecord>& history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < history.size(); ++e)
        out << (e + 1) << ',' << detail::format_double(history[e].train_loss) << ','
            << detail::format_double(history[e].val_loss) << '\n';
}

// ---------------------------------------------------------------------------
// SIR data directory handling. Synthetic layout: edges.csv, populations.csv
// and episode_*.csv; ILI layout: edges.csv, series.csv and optionally
// populations.csv (approximated from the data when absent).
// ---------------------------------------------------------------------------

struct SirData {
    DirectedGraph graph;
    std::shared_ptr<std::vector<SirEpisode>> episodes;
    std::vector<SirSampleId> train, val, test;
};

std::vector<double> load_populations(const fs::path& path,
                                     const std::vector<std::string>& columns) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open populations file: " + path.string());
    std::string line;
    if (!std::getline(in, line) || detail::strip(line) != "region,N")
        throw std::runtime_error("populations csv: expected header 'region,N'");
    std::map<std::string, double> by_name;
    while (std::getline(in, line)) {
        const std::string row = detail::strip(line);
        if (row.empty()) continue;
        const auto comma = row.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("populations csv: malformed row '" + row + "'");
        by_name[detail::strip(row.substr(0, comma))] =
            detail::parse_double(detail::strip(row.substr(comma + 1)));
    }
    std::vector<double> out(columns.size());
    for (std::size_t i = 0; i < columns.size(); ++i) {
        auto it = by_name.find(columns[i]);
        if (it == by_name.end())
            throw std::runtime_error("populations csv: no entry for region '" + columns[i] + "'");
        out[i] = it->second;
    }
    return out;
}

void save_populations(const fs::path& path, const std::vector<std::string>& columns,
                      const std::vector<double>& populations) {
    std::ofstream out(path);
    out << "region,N\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
        out << columns[i] << ',' << detail::format_double(populations[i]) << '\n';
}

SirData load_sir_data(const fs::path& dir, const SplitOpts& split_opts, std::uint64_t seed) {
    SirData data{DirectedGraph(), std::make_shared<std::vector<SirEpisode>>(), {}, {}, {}};
    if (fs::exists(dir / "series.csv")) {
        // ILI mode: one weekly table, year-per-episode, season split. The
        // table width pins the vertex count so isolated regions survive.
        const TimeSeriesTable table = load_series((dir / "series.csv").string());
        data.graph = load_edges((dir / "edges.csv").string(), table.vertex_count());
        std::vector<double> populations =
            fs::exists(dir / "populations.csv")
                ? load_populations(dir / "populations.csv", table.columns)
                : approximate_populations(table);
        auto built = build_year_episodes(table, populations);
        *data.episodes = std::move(built.episodes);

        SplitOpts season = split_opts;
        season.mode = "ili";
        const SplitResult split = build_split(table, season.to_spec(seed));
        auto map_samples = [&](const std::vector<std::size_t>& pairs,
                               std::vector<SirSampleId>& out) {
            for (std::size_t t : pairs) {
                auto it = built.sample_of_pair.find(t);
                if (it != built.sample_of_pair.end()) out.push_back(it->second);
            }
        };
        map_samples(split.train, data.train);
        map_samples(split.val, data.val);
        map_samples(split.test, data.test);
    } else {
        // Synthetic episode files, split by whole episodes.
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("episode_", 0) == 0 && entry.path().extension() == ".csv")
                files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw std::runtime_error("no series.csv or episode_*.csv under " + dir.string());
        std::vector<std::string> columns;
        for (const fs::path& f : files) {
            const TimeSeriesTable table = load_series(f.string());
            if (data.graph.vertex_count() == 0)
                data.graph = load_edges((dir / "edges.csv").string(), table.vertex_count());
            if (table.vertex_count() != data.graph.vertex_count())
                throw std::runtime_error("episode width does not match the edge list: " +
                                         f.string());
            columns = table.columns;
            SirEpisode ep;
            ep.N.assign(table.vertex_count(), 0.0);
            ep.R0.assign(table.vertex_count(), 0.0);
            ep.I = table.values;
            ep.target_mask = table.mask;
            data.episodes->push_back(std::move(ep));
        }
        const auto populations = load_populations(dir / "populations.csv", columns);
        for (SirEpisode& ep : *data.episodes) ep.N = populations;

        const SplitSpec spec = split_opts.to_spec(seed);
        std::vector<std::size_t> order = index_range(data.episodes->size());
        Rng rng(derive_seed(seed, "episode-split"));
        shuffle(order, rng);
        const std::size_t n_train = std::max<std::size_t>(
            1, order.size() * static_cast<std::size_t>(spec.ratio_train) /
                   static_cast<std::size_t>(spec.ratio_train + spec.ratio_val));
        for (std::size_t k = 0; k < order.size(); ++k) {
            const std::size_t e = order[k];
            auto& bucket = k < n_train ? data.train : data.val;
            for (std::size_t t = 0; t + 1 < (*data.episodes)[e].steps(); ++t)
                bucket.emplace_back(e, t);
        }
        if (data.val.empty())
            throw std::runtime_error("need at least two episodes to form a validation set");
    }
    if (data.train.empty()) throw std::runtime_error("sir data: empty training set");
    return data;
}

// ---------------------------------------------------------------------------
// RD data directory handling
// ---------------------------------------------------------------------------

struct RdData {
    DirectedGraph graph;
    TimeSeriesTable table;
    SplitResult split;
};

RdData load_rd_data(const fs::path& dir, const SplitOpts& split_opts, std::uint64_t seed) {
    TimeSeriesTable table = load_series((dir / "series.csv").string());
    DirectedGraph graph = load_edges((dir / "edges.csv").string(), table.vertex_count());
    RdData data{std::move(graph), std::move(table), {}};
    data.split = build_split(data.table, split_opts.to_spec(seed));
    return data;
}

// ---------------------------------------------------------------------------
// Subcommand implementations
// ---------------------------------------------------------------------------

int cmd_synth(CLI::App& app, const CommonOpts& common, const SynthOpts& synth_opts) {
    const SynthConfig cfg = synth_opts.to_config(common.seed);
    const fs::path out(common.out_dir);
    if (common.model == "rd") {
        const SynthRdData data = synth_rd(cfg);  // may throw before any file exists
        write_config_snapshot(app, out);
        save_edges(data.graph, (out / "edges.csv").string());
        save_series(data.table, (out / "series.csv").string());
        RdModel model(data.graph);
        save_rd_checkpoint((out / "truth.json").string(), model, data.true_params);
        std::cout << "wrote rd dataset: " << data.table.step_count() << " steps x "
                  << data.table.vertex_count() << " vertices under " << out.string() << "\n";
    } else {
        const SynthSirData data = synth_sir(cfg);
        write_config_snapshot(app, out);
        save_edges(data.graph, (out / "edges.csv").string());
        std::vector<std::string> columns(cfg.n);
        for (std::size_t i = 0; i < cfg.n; ++i) columns[i] = "region_" + std::to_string(i);
        save_populations(out / "populations.csv", columns, data.populations);
        for (std::size_t e = 0; e < data.episodes.size(); ++e) {
            TimeSeriesTable table;
            table.columns = columns;
            table.values = data.episodes[e].I;
            table.mask.assign(table.values.data.size(), 1);
            table.weekly_labels = true;
            table.resolution_seconds = 7 * 86400;
            table.timestamps.resize(table.values.rows);
            const std::int64_t start = epoch_from_iso_week({2001, 1});
            for (std::size_t t = 0; t < table.values.rows; ++t)
                table.timestamps[t] = start + static_cast<std::int64_t>(t) * 7 * 86400;
            char name[32];
            std::snprintf(name, sizeof(name), "episode_%03zu.csv", e);
            save_series(table, (out / name).string());
        }
        SirModel model(data.graph);
        save_sir_checkpoint((out / "truth.json").string(), model, data.true_params);
        std::cout << "wrote sir dataset: " << data.episodes.size() << " episodes x " << cfg.horizon
                  << " weeks under " << out.string() << "\n";
    }
    return 0;
}

int cmd_train(CLI::App& app, const CommonOpts& common, const TrainOpts& train_opts,
              const SplitOpts& split_opts, const std::string& data_dir) {
    const fs::path out(common.out_dir);
    const LossKind kind = loss_kind_from_string(common.loss);
    const TrainConfig tc = train_opts.to_config(common.seed, kind);

    // The shared_ptr captures keep model and data alive inside the
    // objective's lambdas after this scope unwinds.
    Objective objective;
    std::function<void(std::span<const double>)> save_checkpoint;
    std::vector<double> init;
    if (common.model == "rd") {
        auto data = std::make_shared<RdData>(load_rd_data(data_dir, split_opts, common.seed));
        auto model = std::make_shared<RdModel>(data->graph);
        if (!data->graph.one_directional())
            std::cerr << "warning: edge list holds both directions of some pair; traffic "
                         "graphs carry one sensor direction per segment\n";
        objective = make_rd_objective(*model, make_step_samples(data->table, data->split.train),
                                      make_step_samples(data->table, data->split.val));
        auto train_eval = objective.train_eval;
        auto val_eval = objective.val_eval;
        objective.train_eval = [train_eval, model, data](auto p, auto i, auto k, auto* g) {
            return train_eval(p, i, k, g);
        };
        objective.val_eval = [val_eval, model, data](auto p, auto k) { return val_eval(p, k); };
        save_checkpoint = [model, out](std::span<const double> flat) {
            save_rd_checkpoint((out / "checkpoint.json").string(), *model, model->unpack(flat));
        };
        init = model->pack(model->init_params(common.seed));
    } else {
        auto data = std::make_shared<SirData>(load_sir_data(data_dir, split_opts, common.seed));
        auto model = std::make_shared<SirModel>(data->graph);
        const bool single_beta = train_opts.single_beta;
        objective =
            make_sir_objective(*model, single_beta, data->episodes, data->train, data->val);
        auto train_eval = objective.train_eval;
        auto val_eval = objective.val_eval;
        objective.train_eval = [train_eval, model, data](auto p, auto i, auto k, auto* g) {
            return train_eval(p, i, k, g);
        };
        objective.val_eval = [val_eval, model, data](auto p, auto k) { return val_eval(p, k); };
        save_checkpoint = [model, out, single_beta](std::span<const double> flat) {
            save_sir_checkpoint((out / "checkpoint.json").string(), *model,
                                model->unpack(flat, single_beta));
        };
        init = model->pack(model->init_params(single_beta, common.seed));
    }

    if (train_opts.maml) {
        // Tasks are contiguous chunks of the training samples.
        std::vector<Objective> tasks;
        const std::size_t task_count =
            std::max<std::size_t>(1, std::min(train_opts.maml_tasks, objective.train_size / 2));
        const std::size_t chunk = objective.train_size / task_count;
        for (std::size_t t = 0; t < task_count; ++t) {
            Objective task = objective;
            const std::size_t begin = t * chunk;
            task.train_size = (t + 1 == task_count) ? objective.train_size - begin : chunk;
            auto inner = objective.train_eval;
            task.train_eval = [inner, begin](std::span<const double> p,
                                             std::span<const std::size_t> idx, LossKind k,
                                             std::vector<double>* g) {
                std::vector<std::size_t> shifted(idx.begin(), idx.end());
                for (std::size_t& v : shifted) v += begin;
                return inner(p, shifted, k, g);
            };
            tasks.push_back(std::move(task));
        }
        init = maml_init(tasks, std::move(init), train_opts.to_maml_config(), kind);
    }

    write_config_snapshot(app, out);
    const TrainResult result = train(objective, std::move(init), tc, &g_stop_requested);
    write_history_csv(out / "history.csv", result.history);
    if (result.interrupted) {
        std::cerr << "interrupted: partial history flushed to " << (out / "history.csv").string()
                  << "\n";
        return 130;
    }
    save_checkpoint(result.params);
    std::cout << "trained " << common.model << ": best val " << result.best_val_loss
              << " at epoch " << result.best_epoch << " of " << result.history.size() << "\n";
    return 0;
}

int cmd_eval(CLI::App& app, const CommonOpts& common, const SplitOpts& split_opts,
             const std::string& data_dir, const std::string& checkpoint,
             const std::string& regime) {
    const fs::path out(common.out_dir);
    double abs_sum = 0.0, sq_sum = 0.0;
    std::size_t count = 0, dropped = 0;

    if (common.model == "rd") {
        const RdData data = load_rd_data(data_dir, split_opts, common.seed);
        RdModel model(data.graph);
        const RdParams params = load_rd_checkpoint(checkpoint, model);
        std::vector<std::size_t> pairs;
        if (regime == "train")
            pairs = data.split.train;
        else if (regime == "val")
            pairs = data.split.val;
        else if (regime == "test")
            pairs = data.split.test;
        else
            pairs = index_range(data.table.step_count() - 1);
        if (pairs.empty())
            throw std::runtime_error("eval: the '" + regime +
                                     "' regime holds no pairs (try --regime all)");
        for (std::size_t t : pairs) {
            const StepSample s = make_step_sample(data.table, t);
            const auto pred = model.forward(params, s.x, s.x_mask);
            for (std::size_t i = 0; i < pred.size(); ++i) {
                if (!(s.x_mask[i] && s.y_mask[i])) {
                    ++dropped;  // missing target or missing last value
                    continue;
                }
                const double d = pred[i] - s.y[i];
                abs_sum += std::abs(d);
                sq_sum += d * d;
                ++count;
            }
        }
    } else {
        const SirData data = load_sir_data(data_dir, split_opts, common.seed);
        SirModel model(data.graph);
        const SirParams params = load_sir_checkpoint(checkpoint, model);
        std::vector<SirSampleId> samples;
        if (regime == "train")
            samples = data.train;
        else if (regime == "val")
            samples = data.val;
        else if (regime == "test")
            samples = data.test;
        else
            samples = SirModel::all_samples(*data.episodes);
        if (samples.empty())
            throw std::runtime_error("eval: the '" + regime +
                                     "' regime holds no samples (try --regime all)");
        for (const auto& [e, t] : samples) {
            const SirEpisode& ep = (*data.episodes)[e];
            SirState state;
            state.N = ep.N;
            state.R0 = ep.R0;
            state.I_history = DenseMatrix(t + 1, ep.I.cols);
            for (std::size_t tt = 0; tt <= t; ++tt)
                for (std::size_t i = 0; i < ep.I.cols; ++i)
                    state.I_history.at(tt, i) = ep.I.at(tt, i);
            const auto pred = model.forward(params, state);
            for (std::size_t i = 0; i < pred.size(); ++i) {
                if (!(ep.observed(t, i) && ep.observed(t + 1, i))) {
                    ++dropped;
                    continue;
                }
                const double d = pred[i] - ep.I.at(t + 1, i);
                abs_sum += std::abs(d);
                sq_sum += d * d;
                ++count;
            }
        }
    }
    if (count == 0) throw std::runtime_error("eval: every prediction was dropped");
    const double mae_value = abs_sum / static_cast<double>(count);
    const double rmse_value = std::sqrt(sq_sum / static_cast<double>(count));
    if (mae_value > rmse_value + 1e-12)
        throw std::logic_error("eval: mae exceeded rmse, which is impossible");

    const std::uint64_t config_hash = write_config_snapshot(app, out);
    json j;
    j["library_version"] = kVersion;
    j["config_hash"] = hex64(config_hash);
    j["model"] = common.model;
    j["regime"] = regime;
    j["mae"] = mae_value;
    j["rmse"] = rmse_value;
    j["count"] = count;
    j["dropped"] = dropped;
    write_json(out / "metrics.json", j);
    std::cout << "mae " << j["mae"].get<double>() << "  rmse " << j["rmse"].get<double>()
              << "  count " << count << "  dropped " << dropped << "\n";
    return 0;
}

int cmd_gradcheck(CLI::App& app, const CommonOpts& common, std::size_t instances,
                  double inject_error) {
    const double tolerance = 1e-5;
    bool all_pass = true;
    json rows = json::array();
    std::printf("%-6s %-9s %-12s %-6s %s\n", "model", "instance", "max_rel_err", "worst", "pass");
    for (const char* family_cstr : {"rd", "sir"}) {
        const std::string family(family_cstr);
        if (common.model != family && common.model != "both") continue;
        for (std::size_t k = 0; k < instances; ++k) {
            const double inject = (k == 0) ? inject_error : 0.0;
            const GradCheckResult r =
                family == "rd"
                    ? rd_gradcheck_instance(derive_seed(common.seed, "cli-" + std::to_string(k)),
                                            LossKind::kMse, tolerance, 1e-5, inject)
                    : sir_gradcheck_instance(derive_seed(common.seed, "cli-" + std::to_string(k)),
                                             LossKind::kMse, tolerance, 1e-5, inject);
            all_pass = all_pass && r.pass;
            std::printf("%-6s %-9zu %-12.3e %-6zu %s\n", family.c_str(), k, r.max_rel_err,
                        r.worst_index, r.pass ? "ok" : "FAIL");
            rows.push_back({{"model", family},
                            {"instance", k},
                            {"max_rel_err", r.max_rel_err},
                            {"worst_index", r.worst_index},
                            {"pass", r.pass}});
        }
    }
    if (!common.out_dir.empty()) {
        const std::uint64_t config_hash = write_config_snapshot(app, common.out_dir);
        json j;
        j["library_version"] = kVersion;
        j["config_hash"] = hex64(config_hash);
        j["tolerance"] = tolerance;
        j["results"] = rows;
        j["pass"] = all_pass;
        write_json(fs::path(common.out_dir) / "gradcheck.json", j);
    }
    std::cout << (all_pass ? "gradcheck passed" : "gradcheck FAILED") << "\n";
    return all_pass ? 0 : 1;
}

struct TheoryOpts {
    std::size_t seeds = 20;
    std::size_t n = 12;
    std::size_t edges = 18;
    std::size_t train_steps = 1609;
    std::size_t eval_steps = 400;
    std::size_t window = 12;
    double ridge_lambda = 1e-3;
    double amplitude = 1.0;
    double period_source = 24.0;
    double period_target = 16.0;
    double noise_sd = 0.05;
    bool per_vertex_phase = false;
    double g_offset = 0.0;  // test hook: breaks the source symmetry
    double learning_rate = 0.005;
    std::size_t max_epochs = 120;
    std::size_t patience = 15;

    TheoryLabConfig to_config(std::uint64_t seed) const {
        TheoryLabConfig cfg;
        cfg.source.n = n;
        cfg.source.topology = Topology::kRandomOneDirectional;
        cfg.source.edge_count = edges;
        cfg.source.g_pattern = GPattern::kSymmetricPeriodic;
        cfg.source.g_amplitude = amplitude;
        cfg.source.g_period = period_source;
        cfg.source.g_common_phase = !per_vertex_phase;
        cfg.source.g_offset = g_offset;
        cfg.source.noise_sd = noise_sd;
        cfg.target = cfg.source;
        cfg.target.g_pattern = GPattern::kShiftedPeriodic;
        cfg.target.g_period = period_target;
        cfg.target.g_offset = 0.0;
        cfg.seeds = seeds;
        cfg.base_seed = seed;
        cfg.train_steps = train_steps;
        cfg.eval_steps = eval_steps;
        cfg.window = window;
        cfg.ridge_lambda = ridge_lambda;
        cfg.train.learning_rate = learning_rate;
        cfg.train.max_epochs = max_epochs;
        cfg.train.patience = patience;
        return cfg;
    }
};

int cmd_theory_lab(CLI::App& app, const CommonOpts& common, const TheoryOpts& opts) {
    const TheoryLabConfig cfg = opts.to_config(common.seed);
    const DiscrepancyReport report = discrepancy_experiment(cfg);

    const fs::path out(common.out_dir);
    const std::uint64_t config_hash = write_config_snapshot(app, out);
    json j = report;
    j["config_hash"] = hex64(config_hash);
    write_json(out / "disc_report.json", j);

    {
        std::ofstream curves(out / "curves.csv");
        curves << "time,model,mae\n";
        for (std::size_t t = 0; t < report.curves.h2_target_mae.size(); ++t)
            curves << t << ",rdgcn," << detail::format_double(report.curves.h2_target_mae[t])
                   << '\n';
        for (std::size_t t = 0; t < report.curves.h1_target_mae.size(); ++t)
            curves << t << ",ridge," << detail::format_double(report.curves.h1_target_mae[t])
                   << '\n';
    }

    std::printf("discrepancy over %zu trained hypotheses per class\n", report.pool_size);
    std::printf("%-10s %-12s %-12s %-12s\n", "loss", "disc(H1*)", "disc(H2*)", "pooled_se");
    std::printf("%-10s %-12.5f %-12.5f %-12.5f\n", "mae", report.disc_h1_mae, report.disc_h2_mae,
                report.pooled_se_mae);
    if (report.mse_gate)
        std::printf("%-10s %-12.5f %-12.5f %-12.5f\n", "mse", report.disc_h1_mse,
                    report.disc_h2_mse, report.pooled_se_mse);
    else
        std::printf("%-10s gated off (negative-correlation check failed)\n", "mse");
    std::printf("symmetry: mean %.5f median %.5f skew %.3f -> %s\n", report.symmetry.mean,
                report.symmetry.median, report.symmetry.skewness,
                report.symmetry.pass ? "pass" : "FAIL");
    std::printf("E[Gs*Gt]: %.5f (3se %.5f) -> %s\n", report.negcorr.mean_product,
                3.0 * report.negcorr.se, report.negcorr.pass ? "pass" : "FAIL");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, handle_sigint);

    CLI::App app{"graphdyn: domain-ODE-informed graph forecasting models and the "
                 "discrepancy laboratory"};
    app.set_version_flag("--version", std::string("graphdyn ") + kVersion);
    app.set_config("--config", "", "INI config file; sections match subcommands");
    app.allow_config_extras(false);
    app.require_subcommand(1);
    // Defaults are captured into the resolved-config snapshot so a run can
    // be reproduced from it verbatim.
    app.option_defaults()->always_capture_default(true);

    CommonOpts synth_common, train_common, eval_common, lab_common;
    SynthOpts synth_opts;
    TrainOpts train_opts;
    SplitOpts train_split, eval_split;
    TheoryOpts theory_opts;
    std::string train_data, eval_data, checkpoint, regime = "test";
    CommonOpts grad_common;
    std::string gradcheck_model = "both";
    std::size_t gradcheck_instances = 20;
    double inject_error = 0.0;

    auto add_split_options = [](CLI::App* cmd, SplitOpts& opts) {
        cmd->add_option("--split", opts.mode, "split mode: plain, traffic, ili")
            ->check(CLI::IsMember({"plain", "traffic", "ili"}));
        cmd->add_option("--train-hour-begin", opts.train_hour_begin, "train window start");
        cmd->add_option("--train-hour-end", opts.train_hour_end, "train window end");
        cmd->add_option("--test-hour-begin", opts.test_hour_begin, "test window start");
        cmd->add_option("--test-hour-end", opts.test_hour_end, "test window end");
        cmd->add_option("--train-days", opts.train_days,
                        "consecutive weekdays in the block (0 = all)");
        cmd->add_option("--ratio-train", opts.ratio_train, "train share (0 = mode default)");
        cmd->add_option("--ratio-val", opts.ratio_val, "val share (0 = mode default)");
    };

    // synth ------------------------------------------------------------
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    synth->add_option("--model", synth_common.model, "rd or sir")
        ->check(CLI::IsMember({"rd", "sir"}));
    synth->add_option("--out", synth_common.out_dir, "output directory")->required();
    synth->add_option("--seed", synth_common.seed, "generator seed");
    synth->add_option("--n", synth_opts.n, "vertex count");
    synth->add_option("--topology", synth_opts.topology, "ring or random-one-directional")
        ->check(CLI::IsMember({"ring", "random-one-directional"}));
    synth->add_option("--edges", synth_opts.edges, "edge count (0 = automatic)");
    synth->add_option("--horizon", synth_opts.horizon, "steps (rd) or weeks per episode (sir)");
    synth->add_option("--episodes", synth_opts.episodes, "episode count (sir)");
    synth->add_option("--g-pattern", synth_opts.g_pattern,
                      "none, symmetric-periodic or shifted-periodic")
        ->check(CLI::IsMember({"none", "symmetric-periodic", "shifted-periodic"}));
    synth->add_option("--g-amplitude", synth_opts.g_amplitude, "pattern amplitude");
    synth->add_option("--g-period", synth_opts.g_period, "pattern period in steps");
    synth->add_option("--g-shift", synth_opts.g_shift, "phase shift of the shifted pattern");
    synth->add_flag("--g-common-phase", synth_opts.g_common_phase,
                    "share one phase across vertices");
    synth->add_option("--g-offset", synth_opts.g_offset, "constant pattern offset")->group("");
    synth->add_option("--noise-sd", synth_opts.noise_sd, "gaussian noise level");

    // train ------------------------------------------------------------
    CLI::App* train_cmd = app.add_subcommand("train", "train a model on a dataset directory");
    train_cmd->add_option("--model", train_common.model, "rd or sir")
        ->check(CLI::IsMember({"rd", "sir"}));
    train_cmd->add_option("--data", train_data, "dataset directory")->required();
    train_cmd->add_option("--out", train_common.out_dir, "output directory")->required();
    train_cmd->add_option("--seed", train_common.seed, "run seed");
    train_cmd->add_option("--loss", train_common.loss, "mae or mse")
        ->check(CLI::IsMember({"mae", "mse"}));
    train_cmd->add_option("--lr", train_opts.learning_rate, "Adam learning rate");
    train_cmd->add_option("--batch-size", train_opts.batch_size, "mini-batch size");
    train_cmd->add_option("--patience", train_opts.patience, "early-stopping patience");
    train_cmd->add_option("--max-epochs", train_opts.max_epochs, "epoch cap");
    train_cmd->add_option("--adam-beta1", train_opts.adam_beta1, "Adam beta1");
    train_cmd->add_option("--adam-beta2", train_opts.adam_beta2, "Adam beta2");
    train_cmd->add_option("--adam-epsilon", train_opts.adam_epsilon, "Adam epsilon");
    train_cmd->add_flag("--single-beta", train_opts.single_beta,
                        "share one infection rate across vertices (SIRGCN-1)");
    train_cmd->add_flag("--maml", train_opts.maml, "run first-order MAML meta-initialization");
    train_cmd->add_option("--maml-tasks", train_opts.maml_tasks, "task count for MAML");
    train_cmd->add_option("--maml-inner-lr", train_opts.maml_inner_lr, "MAML inner rate");
    train_cmd->add_option("--maml-outer-lr", train_opts.maml_outer_lr, "MAML outer rate");
    train_cmd->add_option("--maml-iterations", train_opts.maml_iterations, "MAML iterations");
    add_split_options(train_cmd, train_split);

    // eval -------------------------------------------------------------
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("--model", eval_common.model, "rd or sir")
        ->check(CLI::IsMember({"rd", "sir"}));
    eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
    eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint path")->required();
    eval_cmd->add_option("--out", eval_common.out_dir, "output directory")->required();
    eval_cmd->add_option("--seed", eval_common.seed, "split seed");
    eval_cmd->add_option("--regime", regime, "test, train, val or all")
        ->check(CLI::IsMember({"test", "train", "val", "all"}));
    add_split_options(eval_cmd, eval_split);

    // gradcheck ----------------------------------------------------------
    CLI::App* grad_cmd =
        app.add_subcommand("gradcheck", "verify analytic gradients against finite differences");
    grad_cmd->add_option("--model", gradcheck_model, "rd, sir or both")
        ->check(CLI::IsMember({"rd", "sir", "both"}));
    grad_cmd->add_option("--seed", grad_common.seed, "instance seed");
    grad_cmd->add_option("--instances", gradcheck_instances, "instances per family");
    grad_cmd->add_option("--out", grad_common.out_dir, "optional output directory");
    grad_cmd->add_option("--inject-error", inject_error, "test hook: corrupt one coordinate")
        ->group("");

    // theory-lab ---------------------------------------------------------
    CLI::App* lab = app.add_subcommand("theory-lab", "run the discrepancy experiment");
    lab->add_option("--out", lab_common.out_dir, "output directory")->required();
    lab->add_option("--seed", lab_common.seed, "base seed");
    lab->add_option("--seeds", theory_opts.seeds, "trial count");
    lab->add_option("--n", theory_opts.n, "vertex count");
    lab->add_option("--edges", theory_opts.edges, "edge count");
    lab->add_option("--train-steps", theory_opts.train_steps, "source steps used for fitting");
    lab->add_option("--eval-steps", theory_opts.eval_steps, "held-out steps per domain");
    lab->add_option("--window", theory_opts.window, "history length of the ridge baseline");
    lab->add_option("--ridge-lambda", theory_opts.ridge_lambda, "ridge penalty");
    lab->add_option("--amplitude", theory_opts.amplitude, "pattern amplitude");
    lab->add_option("--period-source", theory_opts.period_source, "source pattern period");
    lab->add_option("--period-target", theory_opts.period_target, "target pattern period");
    lab->add_option("--noise-sd", theory_opts.noise_sd, "gaussian noise level");
    lab->add_flag("--per-vertex-phase", theory_opts.per_vertex_phase,
                  "draw one phase per vertex instead of a shared one");
    lab->add_option("--g-offset", theory_opts.g_offset, "test hook: shift the source pattern")
        ->group("");
    lab->add_option("--lr", theory_opts.learning_rate, "H2 learning rate");
    lab->add_option("--max-epochs", theory_opts.max_epochs, "H2 epoch cap");
    lab->add_option("--patience", theory_opts.patience, "H2 early-stopping patience");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(app, synth_common, synth_opts);
        if (train_cmd->parsed())
            return cmd_train(app, train_common, train_opts, train_split, train_data);
        if (eval_cmd->parsed())
            return cmd_eval(app, eval_common, eval_split, eval_data, checkpoint, regime);
        if (grad_cmd->parsed()) {
            CommonOpts g = grad_common;
            g.model = gradcheck_model;
            return cmd_gradcheck(app, g, gradcheck_instances, inject_error);
        }
        if (lab->parsed()) return cmd_theory_lab(app, lab_common, theory_opts);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
