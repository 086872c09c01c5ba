#pragma once

/**
 * Deterministic text tables. Every report starts with a header line that
 * declares the layout and the fixed decimal precision of all numeric
 * cells; absent values render as "n/a", never blank. Output is golden-file
 * tested, so formatting changes are deliberate.
 */

#include <optional>
#include <string>
#include <vector>

#include "red/entropy/quadrants.hpp"
#include "red/foe/forest.hpp"
#include "red/harness/experiments.hpp"

namespace red::harness {

// First/Subs paired forest metrics with deltas (absolute for FS, N/T and
// D/T; percentage for the reproduction rate).
struct FoePairRow {
  std::string dataset;
  foe::StaticMetrics first;
  foe::StaticMetrics subs;
  double repro_first = 0.0;
  double repro_subs = 0.0;
};

std::string render_foe_pairs(const std::vector<FoePairRow>& rows);

// Region x NTR/RTR/AND, First and Subs side by side.
std::string render_quadrants(const entropy::TriggerRateTable& first,
                             const entropy::TriggerRateTable& subs);

std::string render_sensitivity(SweepParam param,
                               const std::vector<SweepRow>& rows);

std::string render_ablation(const std::vector<AblationRow>& rows);

struct GwReportRow {
  std::string config;
  double simulated_mean = 0.0;
  double analytic_mean = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // bound - simulated rate (or mean), per context
};

std::string render_gw(const std::vector<GwReportRow>& rows);

std::string render_rollback(const std::vector<RollbackPoint>& points,
                            double mean_error_rate);

}  // namespace red::harness
