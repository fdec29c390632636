#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "graphdyn/graph.hpp"
#include "graphdyn/rdgcn.hpp"
#include "graphdyn/sirgcn.hpp"
#include "graphdyn/version.hpp"

namespace graphdyn {

// Self-describing JSON checkpoints. nlohmann::json emits shortest
// round-trip representations for doubles, so the parameter arrays survive
// write -> read bit-identically.

namespace detail {

inline nlohmann::json checkpoint_header(const std::string& model, const DirectedGraph& g) {
    nlohmann::json j;
    j["format"] = "graphdyn-checkpoint";
    j["library_version"] = kVersion;
    j["model"] = model;
    j["n"] = g.vertex_count();
    j["edge_hash"] = g.topology_hash();
    return j;
}

inline nlohmann::json read_checkpoint(const std::string& path, const std::string& model,
                                      const DirectedGraph& g) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("format", "") != "graphdyn-checkpoint")
        throw std::runtime_error("not a graphdyn checkpoint: " + path);
    if (j.value("model", "") != model)
        throw std::runtime_error("checkpoint holds a '" + j.value("model", "?") +
                                 "' model, expected '" + model + "': " + path);
    if (j.value("n", std::size_t{0}) != g.vertex_count() ||
        j.value("edge_hash", std::uint64_t{0}) != g.topology_hash())
        throw std::runtime_error("checkpoint graph does not match the loaded edge list: " + path);
    return j;
}

}  // namespace detail

inline void save_rd_checkpoint(const std::string& path, const RdModel& model, const RdParams& p) {
    model.check_params(p);
    nlohmann::json j = detail::checkpoint_header("rdgcn", model.diffusion_graph());
    j["params"] = {{"rho", p.rho}, {"sigma", p.sigma}, {"b_d", p.b_d}, {"b_r", p.b_r}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump(2) << '\n';
}

inline RdParams load_rd_checkpoint(const std::string& path, const RdModel& model) {
    const auto j = detail::read_checkpoint(path, "rdgcn", model.diffusion_graph());
    RdParams p;
    const auto& params = j.at("params");
    params.at("rho").get_to(p.rho);
    params.at("sigma").get_to(p.sigma);
    params.at("b_d").get_to(p.b_d);
    params.at("b_r").get_to(p.b_r);
    model.check_params(p);
    return p;
}

inline void save_sir_checkpoint(const std::string& path, const SirModel& model,
                                const SirParams& p) {
    model.check_params(p);
    nlohmann::json j = detail::checkpoint_header("sirgcn", model.graph());
    j["params"] = {{"phi_raw", p.phi_raw},
                   {"beta_raw", p.beta_raw},
                   {"gamma_raw", p.gamma_raw},
                   {"single_beta", p.single_beta}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump(2) << '\n';
}

inline SirParams load_sir_checkpoint(const std::string& path, const SirModel& model) {
    const auto j = detail::read_checkpoint(path, "sirgcn", model.graph());
    SirParams p;
    const auto& params = j.at("params");
    params.at("phi_raw").get_to(p.phi_raw);
    params.at("beta_raw").get_to(p.beta_raw);
    p.gamma_raw = params.at("gamma_raw").get<double>();
    p.single_beta = params.at("single_beta").get<bool>();
    model.check_params(p);
    return p;
}

}  // namespace graphdyn
