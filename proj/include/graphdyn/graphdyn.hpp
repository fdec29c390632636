#pragma once

// Umbrella header for the graphdyn library: domain-ODE-informed graph
// forecasting models (reaction-diffusion traffic, SIR-network epidemics),
// analytic-gradient training, mismatched-split data handling, and the
// discrepancy laboratory.

#include "graphdyn/checkpoint.hpp"
#include "graphdyn/episodes.hpp"
#include "graphdyn/gradcheck.hpp"
#include "graphdyn/graph.hpp"
#include "graphdyn/metrics.hpp"
#include "graphdyn/optimize.hpp"
#include "graphdyn/rdgcn.hpp"
#include "graphdyn/series.hpp"
#include "graphdyn/sirgcn.hpp"
#include "graphdyn/split.hpp"
#include "graphdyn/synth.hpp"
#include "graphdyn/theory.hpp"
#include "graphdyn/util.hpp"
#include "graphdyn/version.hpp"
