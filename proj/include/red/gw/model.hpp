#pragma once

/**
 * Analytic side of the branching-process error model.
 *
 * Roots arrive per-step with profile probabilities; each root grows a
 * truncated Galton-Watson tree with mean reproduction rho, so a root with
 * ell remaining steps expects G(ell; rho) = sum_{d=0..ell} rho^d nodes.
 * With per-node criticality at most kappa, the answer-error probability is
 * union-bounded by Phi = kappa * sum_t Pr(root at t) * G(T - t; rho),
 * which is monotone in the horizon, the profile and rho.
 *
 * The probe-side theory lives here too: binary KL, the Chernoff bound on
 * wrong dual-consistency triggers, the majority-vote tail and the
 * cross-prompt agreement probability.
 */

#include <cmath>
#include <cstdint>
#include <vector>

#include "red/errors.hpp"

namespace red::gw {

// sigmoid(beta0 + beta_h*h + beta_v*v + beta_hv*h*v); beta_hv > 0 encodes
// the entropy/variance synergy, configurable off for ablations.
struct RootTriggerModel {
  double beta0 = 0.0;
  double beta_h = 0.0;
  double beta_v = 0.0;
  double beta_hv = 1.0;
};

inline double root_trigger_prob(const RootTriggerModel& m, double h,
                                double v) {
  if (h < 0.0 || v < 0.0) {
    throw DomainError("entropy features must be non-negative");
  }
  const double logit = m.beta0 + m.beta_h * h + m.beta_v * v +
                       m.beta_hv * h * v;
  return 1.0 / (1.0 + std::exp(-logit));
}

enum class OffspringLaw {
  Poisson,    // Poisson(rho)
  Geometric,  // support {0,1,...}, mean rho
  Fixed,      // floor(rho) + Bernoulli(frac), minimal variance at mean rho
};

struct GwConfig {
  double rho = 0.5;
  int horizon = 10;  // T, steps
  std::vector<double> trigger_profile;  // Pr(root at step t), size = horizon
  double kappa = 0.1;  // per-node criticality bound in [0, 1]
  OffspringLaw law = OffspringLaw::Poisson;

  void validate() const {
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (!(rho >= 0.0)) throw ConfigError("rho must be >= 0");
    if (!(kappa >= 0.0 && kappa <= 1.0)) {
      throw ConfigError("kappa must be in [0, 1]");
    }
    if (trigger_profile.size() != static_cast<std::size_t>(horizon)) {
      throw ConfigError("trigger profile length must equal the horizon");
    }
    for (double p : trigger_profile) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ConfigError("trigger probabilities must be in [0, 1]");
      }
    }
  }
};

// G(ell; rho) = sum_{d=0}^{ell} rho^d; closed form for rho != 1.
inline double gw_expected_size(int ell, double rho) {
  if (ell < 0) throw DomainError("remaining steps must be >= 0");
  if (!(rho >= 0.0)) throw DomainError("rho must be >= 0");
  if (rho == 1.0) return static_cast<double>(ell) + 1.0;
  return (1.0 - std::pow(rho, ell + 1)) / (1.0 - rho);
}

// Expected forest size sum_t Pr(R_t = 1) * G(T - t; rho).
inline double expected_forest_size(const GwConfig& cfg) {
  cfg.validate();
  double total = 0.0;
  for (int t = 1; t <= cfg.horizon; ++t) {
    total += cfg.trigger_profile[static_cast<std::size_t>(t - 1)] *
             gw_expected_size(cfg.horizon - t, cfg.rho);
  }
  return total;
}

struct PhiBound {
  double value = 0.0;    // may exceed 1: an upper bound, not a probability
  double clamped = 0.0;  // min(value, 1)
};

inline PhiBound phi_bound(const GwConfig& cfg) {
  PhiBound b;
  b.value = cfg.kappa * expected_forest_size(cfg);
  b.clamped = std::min(b.value, 1.0);
  return b;
}

struct PhiOrdering {
  double phi_first = 0.0;
  double phi_subs = 0.0;
  bool holds = false;  // phi_first <= phi_subs, must hold for valid inputs
};

/**
 * Evaluates both bounds for a componentwise-dominated pair. Throws
 * DominanceViolation when the caller's inputs are not actually dominated
 * (profile pointwise, rho, horizon); the returned ordering then must hold.
 */
inline PhiOrdering phi_dominance(const GwConfig& first, const GwConfig& subs) {
  first.validate();
  subs.validate();
  if (first.horizon > subs.horizon || first.rho > subs.rho ||
      first.kappa > subs.kappa) {
    throw DominanceViolation("subs config does not dominate first");
  }
  for (std::size_t t = 0; t < first.trigger_profile.size(); ++t) {
    if (first.trigger_profile[t] > subs.trigger_profile[t]) {
      throw DominanceViolation("trigger profile not pointwise dominated");
    }
  }
  PhiOrdering out;
  out.phi_first = phi_bound(first).value;
  out.phi_subs = phi_bound(subs).value;
  out.holds = out.phi_first <= out.phi_subs + 1e-12;
  return out;
}

// Pr(misguidance) <= Pr(first correct) * Phi_ext.
inline double misguidance_bound(double p_first_correct, double phi_ext) {
  if (!(p_first_correct >= 0.0 && p_first_correct <= 1.0)) {
    throw DomainError("p_first_correct must be in [0, 1]");
  }
  if (!(phi_ext >= 0.0)) throw DomainError("phi_ext must be >= 0");
  return p_first_correct * phi_ext;
}

// ---------------------------------------------------------------------------
// Probe-side bounds
// ---------------------------------------------------------------------------

// D(u || v) = u log(u/v) + (1-u) log((1-u)/(1-v)), nats.
inline double binary_kl(double u, double v) {
  if (!(u > 0.0 && u < 1.0) || !(v > 0.0 && v < 1.0)) {
    throw DomainError("binary KL needs arguments strictly inside (0, 1)");
  }
  return u * std::log(u / v) + (1.0 - u) * std::log((1.0 - u) / (1.0 - v));
}

/**
 * Pr[wrong dual-consistency trigger] <= sum_a exp(-N * sum_m D(P || q_am)).
 * q[a][m] is the probability of wrong answer a under prompt m; every q
 * must lie strictly below P for the bound's hypothesis to hold.
 */
inline double chernoff_wrong_trigger_bound(
    double p_threshold, const std::vector<std::vector<double>>& q,
    int samples_per_prompt) {
  if (samples_per_prompt < 1) throw DomainError("N must be >= 1");
  double total = 0.0;
  for (const auto& per_prompt : q) {
    double exponent = 0.0;
    for (double qa : per_prompt) {
      if (!(qa < p_threshold)) {
        throw DomainError(
            "Chernoff hypothesis fails: some wrong-answer probability >= P");
      }
      exponent += binary_kl(p_threshold, qa);
    }
    total += std::exp(-static_cast<double>(samples_per_prompt) * exponent);
  }
  return total;
}

inline double binomial_coefficient(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double c = 1.0;
  for (int i = 1; i <= k; ++i) {
    c *= static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return c;
}

/**
 * Two-contender majority vote: Pr[mode = correct] evaluated as the tail
 * sum_{k=tau}^{N} C(N,k) p^k r^(N-k) with tau = floor(N/2) + 1. The mass
 * outside the two contenders is ignored, as the formula is written.
 */
inline double majority_correct_prob(int n, double p, double r) {
  if (n < 1) throw DomainError("N must be >= 1");
  if (!(p >= 0.0 && r >= 0.0 && p + r <= 1.0 + 1e-12)) {
    throw DomainError("need p, r >= 0 with p + r <= 1");
  }
  const int tau = n / 2 + 1;
  double total = 0.0;
  for (int k = tau; k <= n; ++k) {
    total += binomial_coefficient(n, k) * std::pow(p, k) *
             std::pow(r, n - k);
  }
  return total;
}

struct AgreementResult {
  double agree = 0.0;        // sum_a prod_m pi_m(a)
  double wrong_agree = 0.0;  // same sum restricted to a != correct
};

inline AgreementResult agreement_prob(
    const std::vector<std::vector<double>>& distributions, int correct_index) {
  if (distributions.empty()) throw DomainError("need >= 1 distribution");
  const std::size_t n_answers = distributions.front().size();
  AgreementResult out;
  for (std::size_t a = 0; a < n_answers; ++a) {
    double prod = 1.0;
    for (const auto& d : distributions) {
      if (d.size() != n_answers) {
        throw DomainError("agreement distributions differ in support");
      }
      prod *= d[a];
    }
    out.agree += prod;
    if (static_cast<int>(a) != correct_index) out.wrong_agree += prod;
  }
  return out;
}

}  // namespace red::gw
