#pragma once

/**
 * Forest of Errors.
 *
 * Error events arrive in chronological order; each event links to the
 * nearest earlier event whose parent-child association score clears the
 * threshold, otherwise it roots a new tree. Scores arrive raw on the
 * one-decimal [1.0, 5.0] scale and normalize to raw/5 in [0.2, 1]; the
 * default edge threshold 0.8 corresponds to a raw score of 4.0.
 *
 * Candidates are scored nearest-first and scoring stops at the first hit,
 * which selects exactly max{ i < j : s_ij >= tau } while touching as few
 * pairs as possible.
 */

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "red/errors.hpp"

namespace red::foe {

struct ErrorEvent {
  int index = 0;        // 1-based chronological position
  std::size_t step = 0; // token index of first occurrence
  std::string span;     // opaque text or token range
};

inline void validate_events(const std::vector<ErrorEvent>& events) {
  for (std::size_t k = 0; k < events.size(); ++k) {
    if (events[k].index != static_cast<int>(k) + 1) {
      throw DomainError("error events must be indexed 1..n in order");
    }
    if (k > 0 && events[k].step <= events[k - 1].step) {
      throw DomainError("error event steps must be strictly increasing");
    }
  }
}

// Raw scores live on a one-decimal grid in [1.0, 5.0].
inline void validate_raw_score(double raw, int i, int j) {
  if (!(raw >= 1.0 && raw <= 5.0)) {
    throw ScorerError("raw score outside [1.0, 5.0]", i, j);
  }
  const double tenths = raw * 10.0;
  if (std::abs(tenths - std::round(tenths)) > 1e-6) {
    throw ScorerError("raw score must have one decimal place", i, j);
  }
}

struct PairScore {
  int i = 0;
  int j = 0;
  double raw = 1.0;

  double normalized() const { return raw / 5.0; }

  void validate() const {
    if (!(i < j) || i < 1) throw DomainError("pair score needs 1 <= i < j");
    validate_raw_score(raw, i, j);
  }
};

// Returns the raw score for candidate parent i of child j.
using PairScorer = std::function<double(int i, int j)>;

struct ErrorForest {
  // 1-based node arrays; parent[j] == 0 marks a root.
  std::vector<int> parent;
  std::vector<int> tree_id;
  std::vector<int> depth;  // roots sit at depth 1
  std::vector<std::vector<int>> children;

  std::size_t size() const { return parent.empty() ? 0 : parent.size() - 1; }
  int num_trees() const {
    int n = 0;
    for (std::size_t j = 1; j < parent.size(); ++j) {
      if (parent[j] == 0) ++n;
    }
    return n;
  }

  void validate() const;
};

ErrorForest build_forest(const std::vector<ErrorEvent>& events,
                         const PairScorer& scorer, double tau = 0.8);

// Convenience: forest directly from a dense upper-triangular score table
// (table[i-1][j-1] = raw score, only i < j entries read).
ErrorForest build_forest_from_table(
    std::size_t n, const std::vector<std::vector<double>>& raw_table,
    double tau = 0.8);

struct StaticMetrics {
  int forest_size = 0;                    // FS
  std::optional<double> nodes_per_tree;   // N/T, absent for empty forest
  std::optional<double> depth_per_tree;   // D/T, mean max depth
};

StaticMetrics static_metrics(const ErrorForest& forest);

// Average error-node reproduction rate: mean over nodes of
// k(v) / max(depth(v), 1). Empty forest -> 0 by convention.
double repro_rate(const ErrorForest& forest);

// ---------------------------------------------------------------------------
// Spawn rate after descendant-only fixes
// ---------------------------------------------------------------------------

struct PostFixEvent {
  std::size_t steps_after = 0;  // decode steps after the fix
  double raw_score = 1.0;       // raw score against the uncorrected ancestor
};

struct InterventionObservation {
  int ancestor = 0;
  std::vector<PostFixEvent> new_events;
};

// Fraction of interventions where some new event within delta steps scores
// >= tau (normalized) against the still-uncorrected ancestor.
double spawn_rate(const std::vector<InterventionObservation>& interventions,
                  std::size_t delta, double tau = 0.8);

// ---------------------------------------------------------------------------
// Reflection metrics
// ---------------------------------------------------------------------------

struct ReflectionInstance {
  int checklist_size = 1;  // K
  int covered = 0;         // checklist items covered
  int oracle_depth = 1;    // D*
  int reached_depth = 0;   // D
};

struct SolutionAnnotation {
  int problem = 0;
  int solution_index = 1;  // s
  std::vector<ReflectionInstance> instances;  // size = N_{p,s}
};

struct ReflectionMetrics {
  std::optional<double> frq;  // mean instance count over problems with s
  std::optional<double> com;  // coverage averaged over all instances
  std::optional<double> dep;  // reached-depth ratio averaged likewise
};

// Per-solution-index aggregates keyed by s.
std::map<int, ReflectionMetrics> reflection_metrics(
    const std::vector<SolutionAnnotation>& annotations);

}  // namespace red::foe
