#pragma once

#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "graphdyn/series.hpp"
#include "graphdyn/sirgcn.hpp"

namespace graphdyn {

/// Total-population approximation for ILI data: ten times the average
/// annual sum of infectious cases, per region.
inline std::vector<double> approximate_populations(const TimeSeriesTable& table) {
    const std::size_t n = table.vertex_count();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::map<int, double> annual;
        for (std::size_t t = 0; t < table.step_count(); ++t)
            if (table.observed(t, i))
                annual[iso_week_from_epoch(table.timestamps[t]).year] += table.value(t, i);
        if (annual.empty())
            throw std::invalid_argument("populations: region " + std::to_string(i) +
                                        " has no observed counts");
        double mean = 0.0;
        for (const auto& [year, sum] : annual) mean += sum;
        mean /= static_cast<double>(annual.size());
        out[i] = 10.0 * mean;
    }
    return out;
}

/// ILI table split into one episode per ISO year. The susceptible pool at
/// each period start is `susceptible_fraction` of the population, so the
/// recovered base absorbs the remainder. `sample_of_pair` maps usable table
/// pair indices to (episode, local step); pairs crossing a year boundary
/// are absent.
struct IliEpisodes {
    std::vector<SirEpisode> episodes;
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> sample_of_pair;
};

inline IliEpisodes build_year_episodes(const TimeSeriesTable& table,
                                       const std::vector<double>& populations,
                                       double susceptible_fraction = 0.1) {
    const std::size_t n = table.vertex_count();
    if (populations.size() != n)
        throw std::invalid_argument("build_year_episodes: populations length != columns");
    if (table.step_count() < 2)
        throw std::invalid_argument("build_year_episodes: table too short");

    IliEpisodes out;
    std::size_t start = 0;
    while (start < table.step_count()) {
        const int year = iso_week_from_epoch(table.timestamps[start]).year;
        std::size_t end = start + 1;
        while (end < table.step_count() && iso_week_from_epoch(table.timestamps[end]).year == year)
            ++end;
        const std::size_t steps = end - start;
        if (steps >= 2) {
            SirEpisode ep;
            ep.N = populations;
            ep.R0.resize(n);
            ep.I = DenseMatrix(steps, n);
            ep.target_mask.assign(steps * n, 0);
            for (std::size_t t = 0; t < steps; ++t)
                for (std::size_t i = 0; i < n; ++i) {
                    const bool obs = table.observed(start + t, i);
                    ep.I.at(t, i) = obs ? table.value(start + t, i) : 0.0;
                    ep.target_mask[t * n + i] = obs ? 1 : 0;
                }
            for (std::size_t i = 0; i < n; ++i) {
                double r0 = (1.0 - susceptible_fraction) * populations[i] - ep.I.at(0, i);
                if (r0 < 0.0) r0 = 0.0;
                ep.R0[i] = r0;
            }
            const std::size_t episode_index = out.episodes.size();
            for (std::size_t t = 0; t + 1 < steps; ++t)
                out.sample_of_pair[start + t] = {episode_index, t};
            out.episodes.push_back(std::move(ep));
        }
        start = end;
    }
    if (out.episodes.empty())
        throw std::invalid_argument("build_year_episodes: no year spans at least two weeks");
    return out;
}

}  // namespace graphdyn
