#include "red/foe/forest.hpp"

#include <algorithm>

namespace red::foe {

void ErrorForest::validate() const {
  const std::size_t n = size();
  if (parent.size() != n + 1 || tree_id.size() != n + 1 ||
      depth.size() != n + 1 || children.size() != n + 1) {
    throw DomainError("forest arrays have inconsistent sizes");
  }
  for (std::size_t j = 1; j <= n; ++j) {
    const int p = parent[j];
    if (p < 0 || p >= static_cast<int>(j)) {
      throw DomainError("parent index must satisfy 0 <= pi(j) < j");
    }
    if (p == 0) {
      if (depth[j] != 1) throw DomainError("roots must sit at depth 1");
    } else {
      if (depth[j] != depth[static_cast<std::size_t>(p)] + 1) {
        throw DomainError("depth(j) must equal depth(parent) + 1");
      }
      if (tree_id[j] != tree_id[static_cast<std::size_t>(p)]) {
        throw DomainError("tree id must propagate from the parent");
      }
      const auto& sibs = children[static_cast<std::size_t>(p)];
      if (std::find(sibs.begin(), sibs.end(), static_cast<int>(j)) ==
          sibs.end()) {
        throw DomainError("children list missing an edge");
      }
    }
  }
}

ErrorForest build_forest(const std::vector<ErrorEvent>& events,
                         const PairScorer& scorer, double tau) {
  validate_events(events);
  if (!(tau >= 0.2 && tau <= 1.0)) {
    throw DomainError("tau must lie in the normalized range [0.2, 1]");
  }
  const std::size_t n = events.size();
  ErrorForest forest;
  forest.parent.assign(n + 1, 0);
  forest.tree_id.assign(n + 1, 0);
  forest.depth.assign(n + 1, 0);
  forest.children.assign(n + 1, {});

  int trees = 0;
  for (std::size_t j = 1; j <= n; ++j) {
    int p = 0;
    for (int i = static_cast<int>(j) - 1; i >= 1; --i) {  // nearest first
      double raw;
      try {
        raw = scorer(i, static_cast<int>(j));
      } catch (const ScorerError&) {
        throw;
      } catch (const std::exception& e) {
        throw ScorerError(std::string("scorer failed: ") + e.what(), i,
                          static_cast<int>(j));
      }
      validate_raw_score(raw, i, static_cast<int>(j));
      if (raw / 5.0 >= tau) {
        p = i;
        break;  // farther candidates are never scored
      }
    }
    forest.parent[j] = p;
    if (p == 0) {
      forest.tree_id[j] = ++trees;
      forest.depth[j] = 1;
    } else {
      forest.tree_id[j] = forest.tree_id[static_cast<std::size_t>(p)];
      forest.depth[j] = forest.depth[static_cast<std::size_t>(p)] + 1;
      forest.children[static_cast<std::size_t>(p)].push_back(
          static_cast<int>(j));
    }
  }
  return forest;
}

ErrorForest build_forest_from_table(
    std::size_t n, const std::vector<std::vector<double>>& raw_table,
    double tau) {
  std::vector<ErrorEvent> events(n);
  for (std::size_t k = 0; k < n; ++k) {
    events[k].index = static_cast<int>(k) + 1;
    events[k].step = k + 1;
  }
  return build_forest(
      events,
      [&raw_table](int i, int j) {
        return raw_table.at(static_cast<std::size_t>(i) - 1)
            .at(static_cast<std::size_t>(j) - 1);
      },
      tau);
}

StaticMetrics static_metrics(const ErrorForest& forest) {
  forest.validate();
  StaticMetrics m;
  m.forest_size = forest.num_trees();
  const std::size_t n = forest.size();
  if (n == 0) return m;

  m.nodes_per_tree = static_cast<double>(n) / m.forest_size;
  std::map<int, int> max_depth;
  for (std::size_t j = 1; j <= n; ++j) {
    int& d = max_depth[forest.tree_id[j]];
    d = std::max(d, forest.depth[j]);
  }
  double total = 0.0;
  for (const auto& [tree, d] : max_depth) total += d;
  m.depth_per_tree = total / m.forest_size;
  return m;
}

double repro_rate(const ErrorForest& forest) {
  forest.validate();
  const std::size_t n = forest.size();
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    const double k = static_cast<double>(forest.children[j].size());
    const double lifespan = std::max(forest.depth[j], 1);
    sum += k / lifespan;
  }
  return sum / static_cast<double>(n);
}

double spawn_rate(const std::vector<InterventionObservation>& interventions,
                  std::size_t delta, double tau) {
  if (interventions.empty()) return 0.0;
  std::size_t spawned = 0;
  for (const auto& obs : interventions) {
    bool hit = false;
    for (const PostFixEvent& e : obs.new_events) {
      validate_raw_score(e.raw_score, obs.ancestor, obs.ancestor);
      hit = hit || (e.steps_after <= delta && e.raw_score / 5.0 >= tau);
    }
    if (hit) ++spawned;
  }
  return static_cast<double>(spawned) /
         static_cast<double>(interventions.size());
}

std::map<int, ReflectionMetrics> reflection_metrics(
    const std::vector<SolutionAnnotation>& annotations) {
  struct Acc {
    int problems = 0;      // problems that have this solution index
    int instances = 0;     // sum of N_{p,s} over problems with N > 0
    double coverage = 0.0; // sum of per-instance checklist coverage
    double depth = 0.0;    // sum of per-instance D / D*
  };
  std::map<int, Acc> acc;
  for (const auto& a : annotations) {
    auto& slot = acc[a.solution_index];
    ++slot.problems;
    for (const auto& inst : a.instances) {
      if (inst.checklist_size < 1 || inst.oracle_depth < 1 ||
          inst.covered > inst.checklist_size ||
          inst.reached_depth > inst.oracle_depth) {
        throw DomainError("malformed reflection instance");
      }
      ++slot.instances;
      slot.coverage += static_cast<double>(inst.covered) /
                       static_cast<double>(inst.checklist_size);
      slot.depth += static_cast<double>(inst.reached_depth) /
                    static_cast<double>(inst.oracle_depth);
    }
  }
  std::map<int, ReflectionMetrics> out;
  for (auto& [s, slot] : acc) {
    ReflectionMetrics m;
    double total_instances = 0.0;
    for (const auto& a : annotations) {
      if (a.solution_index == s) {
        total_instances += static_cast<double>(a.instances.size());
      }
    }
    m.frq = total_instances / slot.problems;
    if (slot.instances > 0) {
      m.com = slot.coverage / slot.instances;
      m.dep = slot.depth / slot.instances;
    }
    out[s] = m;
  }
  return out;
}

}  // namespace red::foe
