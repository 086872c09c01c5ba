#pragma once

#include <cstdint>
#include <vector>

#include "red/gw/model.hpp"
#include "red/lm/rng.hpp"

namespace red::gw {

struct TreeOutcome {
  int size = 0;
  int max_depth = 0;
};

struct GwOutcome {
  int total_nodes = 0;
  std::vector<TreeOutcome> trees;
  bool any_critical = false;  // via an independent kappa coin per node
};

struct GwStats {
  std::size_t trials = 0;
  double mean_total_nodes = 0.0;
  double stddev_total_nodes = 0.0;  // sample stddev of per-trial totals
  double mean_sigma = 0.0;          // stddev / sqrt(trials)
  double critical_rate = 0.0;       // fraction of trials with any critical
  double critical_sigma = 0.0;      // binomial sigma of that fraction
};

// Grows one forest: roots arrive as independent Bernoulli draws along the
// trigger profile; a root born at step t gets T - t generations.
GwOutcome simulate_one(const GwConfig& cfg, lm::RngStream& rng);

GwStats simulate_gw(const GwConfig& cfg, std::size_t trials,
                    std::uint64_t seed);

struct MisguidanceStats {
  std::size_t trials = 0;
  double p_first_correct = 0.0;  // no critical node in the first phase
  double p_misguided = 0.0;      // first correct AND extension critical
  double misguided_sigma = 0.0;
};

// Two-phase run: the first solution under `first`, then a continuation
// under `ext` (subs-regime parameters). The misguidance event is
// "first phase clean, extension phase critical".
MisguidanceStats simulate_misguidance(const GwConfig& first,
                                      const GwConfig& ext, std::size_t trials,
                                      std::uint64_t seed);

}  // namespace red::gw
