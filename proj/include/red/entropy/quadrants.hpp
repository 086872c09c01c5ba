#pragma once

/**
 * Quadrant analytics over (window-mean entropy h, window variance v):
 * nearest-rank 75th-percentile thresholds partition steps into LL / HL /
 * LH / HH, and per-quadrant node-trigger / root-trigger rates plus the
 * average error-node depth are computed from labeled step annotations.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "red/errors.hpp"

namespace red::entropy {

enum class QuadrantLabel { LL, HL, LH, HH };

inline const char* quadrant_name(QuadrantLabel q) {
  switch (q) {
    case QuadrantLabel::LL: return "LL";
    case QuadrantLabel::HL: return "HL";
    case QuadrantLabel::LH: return "LH";
    case QuadrantLabel::HH: return "HH";
  }
  return "?";
}

struct QuadrantThresholds {
  double h75 = 0.0;
  double v75 = 0.0;
};

struct QuadrantResult {
  QuadrantThresholds thresholds;
  std::vector<QuadrantLabel> labels;
};

// Nearest-rank percentile: the ceil(q*n)-th smallest value, no
// interpolation.
inline double nearest_rank_percentile(std::vector<double> xs, double q) {
  if (xs.empty()) throw DomainError("percentile of empty series");
  std::sort(xs.begin(), xs.end());
  const auto n = xs.size();
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(n)));
  if (rank == 0) rank = 1;
  if (rank > n) rank = n;
  return xs[rank - 1];
}

/**
 * Labels each (h, v) point against the series' own 75th percentiles;
 * "high" means strictly greater than the threshold, so a degenerate
 * constant series is all-LL.
 */
inline QuadrantResult classify_quadrants(
    const std::vector<std::pair<double, double>>& series) {
  if (series.size() < 4) {
    throw DomainError("quadrant classification needs >= 4 points");
  }
  std::vector<double> hs, vs;
  hs.reserve(series.size());
  vs.reserve(series.size());
  for (const auto& [h, v] : series) {
    hs.push_back(h);
    vs.push_back(v);
  }
  QuadrantResult out;
  out.thresholds.h75 = nearest_rank_percentile(hs, 0.75);
  out.thresholds.v75 = nearest_rank_percentile(vs, 0.75);
  out.labels.reserve(series.size());
  for (const auto& [h, v] : series) {
    const bool hh = h > out.thresholds.h75;
    const bool hv = v > out.thresholds.v75;
    out.labels.push_back(hh ? (hv ? QuadrantLabel::HH : QuadrantLabel::HL)
                            : (hv ? QuadrantLabel::LH : QuadrantLabel::LL));
  }
  return out;
}

struct LabeledStep {
  QuadrantLabel quadrant;
  bool is_error_node = false;
  bool is_root = false;
  std::optional<int> node_depth;  // required when is_error_node
};

struct QuadrantRates {
  std::size_t steps = 0;
  std::size_t error_steps = 0;
  std::size_t root_steps = 0;
  std::optional<double> ntr;  // absent for an empty quadrant
  std::optional<double> rtr;
  std::optional<double> avg_depth;  // absent when no error steps
};

using TriggerRateTable = std::array<QuadrantRates, 4>;

inline TriggerRateTable trigger_rates(const std::vector<LabeledStep>& steps) {
  TriggerRateTable table{};
  std::array<double, 4> depth_sum{};
  for (const auto& s : steps) {
    if (s.is_error_node && !s.node_depth) {
      throw DomainError("error step without node depth");
    }
    auto& cell = table[static_cast<std::size_t>(s.quadrant)];
    ++cell.steps;
    if (s.is_error_node) {
      ++cell.error_steps;
      depth_sum[static_cast<std::size_t>(s.quadrant)] +=
          static_cast<double>(*s.node_depth);
    }
    if (s.is_root) ++cell.root_steps;
  }
  for (std::size_t q = 0; q < 4; ++q) {
    auto& cell = table[q];
    if (cell.steps > 0) {
      cell.ntr = static_cast<double>(cell.error_steps) /
                 static_cast<double>(cell.steps);
      cell.rtr = static_cast<double>(cell.root_steps) /
                 static_cast<double>(cell.steps);
    }
    if (cell.error_steps > 0) {
      cell.avg_depth = depth_sum[q] / static_cast<double>(cell.error_steps);
    }
  }
  return table;
}

// OR(p, p') = (p/(1-p)) / (p'/(1-p')); undefined at p or p' in {0, 1}.
inline double odds_ratio(double p, double p_prime) {
  if (!(p > 0.0 && p < 1.0) || !(p_prime > 0.0 && p_prime < 1.0)) {
    throw DomainError("odds_ratio needs rates strictly inside (0, 1)");
  }
  return (p / (1.0 - p)) / (p_prime / (1.0 - p_prime));
}

}  // namespace red::entropy
