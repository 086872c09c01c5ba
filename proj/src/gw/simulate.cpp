#include "red/gw/simulate.hpp"

#include <cmath>

namespace red::gw {

namespace {

int draw_offspring(OffspringLaw law, double rho, lm::RngStream& rng) {
  switch (law) {
    case OffspringLaw::Poisson: {
      // Knuth's product method; rho stays small in every config here.
      const double limit = std::exp(-rho);
      int k = 0;
      double prod = rng.next_double();
      while (prod > limit) {
        ++k;
        prod *= rng.next_double();
      }
      return k;
    }
    case OffspringLaw::Geometric: {
      // Support {0,1,...} with mean rho: success prob 1/(1+rho).
      if (rho == 0.0) return 0;
      const double q = rho / (1.0 + rho);
      int k = 0;
      while (rng.next_double() < q) ++k;
      return k;
    }
    case OffspringLaw::Fixed: {
      const double base = std::floor(rho);
      const double frac = rho - base;
      int k = static_cast<int>(base);
      if (frac > 0.0 && rng.next_bernoulli(frac)) ++k;
      return k;
    }
  }
  return 0;
}

}  // namespace

GwOutcome simulate_one(const GwConfig& cfg, lm::RngStream& rng) {
  GwOutcome out;
  for (int t = 1; t <= cfg.horizon; ++t) {
    const double p_root =
        cfg.trigger_profile[static_cast<std::size_t>(t - 1)];
    if (!rng.next_bernoulli(p_root)) continue;

    // One tree: generation g may exist while g <= remaining steps.
    const int remaining = cfg.horizon - t;
    TreeOutcome tree;
    tree.size = 1;
    tree.max_depth = 1;
    if (cfg.kappa > 0.0 && rng.next_bernoulli(cfg.kappa)) {
      out.any_critical = true;
    }
    int current_gen = 1;
    for (int g = 1; g <= remaining && current_gen > 0; ++g) {
      int next_gen = 0;
      for (int node = 0; node < current_gen; ++node) {
        next_gen += draw_offspring(cfg.law, cfg.rho, rng);
      }
      if (next_gen > 0) tree.max_depth = g + 1;
      tree.size += next_gen;
      for (int node = 0; node < next_gen; ++node) {
        if (cfg.kappa > 0.0 && rng.next_bernoulli(cfg.kappa)) {
          out.any_critical = true;
        }
      }
      current_gen = next_gen;
    }
    out.total_nodes += tree.size;
    out.trees.push_back(tree);
  }
  return out;
}

GwStats simulate_gw(const GwConfig& cfg, std::size_t trials,
                    std::uint64_t seed) {
  cfg.validate();
  if (trials < 1) throw DomainError("need >= 1 trial");

  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t critical = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    lm::RngStream rng = lm::RngStream::keyed({seed, 0x67u, i});
    const GwOutcome o = simulate_one(cfg, rng);
    sum += o.total_nodes;
    sum_sq += static_cast<double>(o.total_nodes) *
              static_cast<double>(o.total_nodes);
    if (o.any_critical) ++critical;
  }

  GwStats stats;
  stats.trials = trials;
  const double n = static_cast<double>(trials);
  stats.mean_total_nodes = sum / n;
  if (trials > 1) {
    const double var =
        std::max(0.0, (sum_sq - n * stats.mean_total_nodes *
                                    stats.mean_total_nodes) /
                          (n - 1.0));
    stats.stddev_total_nodes = std::sqrt(var);
    stats.mean_sigma = stats.stddev_total_nodes / std::sqrt(n);
  }
  stats.critical_rate = static_cast<double>(critical) / n;
  stats.critical_sigma =
      std::sqrt(std::max(stats.critical_rate * (1.0 - stats.critical_rate),
                         1e-12) /
                n);
  return stats;
}

MisguidanceStats simulate_misguidance(const GwConfig& first,
                                      const GwConfig& ext, std::size_t trials,
                                      std::uint64_t seed) {
  first.validate();
  ext.validate();
  if (trials < 1) throw DomainError("need >= 1 trial");

  std::size_t first_correct = 0;
  std::size_t misguided = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    lm::RngStream rng = lm::RngStream::keyed({seed, 0x68u, i});
    const GwOutcome a = simulate_one(first, rng);
    const GwOutcome b = simulate_one(ext, rng);
    if (!a.any_critical) {
      ++first_correct;
      if (b.any_critical) ++misguided;
    }
  }

  MisguidanceStats stats;
  stats.trials = trials;
  const double n = static_cast<double>(trials);
  stats.p_first_correct = static_cast<double>(first_correct) / n;
  stats.p_misguided = static_cast<double>(misguided) / n;
  stats.misguided_sigma =
      std::sqrt(std::max(stats.p_misguided * (1.0 - stats.p_misguided),
                         1e-12) /
                n);
  return stats;
}

}  // namespace red::gw
