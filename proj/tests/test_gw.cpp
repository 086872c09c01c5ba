#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "red/gw/model.hpp"
#include "red/gw/simulate.hpp"
#include "red/lm/rng.hpp"

using namespace red;
using namespace red::gw;

namespace {

GwConfig config_with(double rho, int horizon, std::vector<double> profile,
                     double kappa = 0.1,
                     OffspringLaw law = OffspringLaw::Poisson) {
  GwConfig cfg;
  cfg.rho = rho;
  cfg.horizon = horizon;
  cfg.trigger_profile = std::move(profile);
  cfg.kappa = kappa;
  cfg.law = law;
  return cfg;
}

GwConfig random_config(lm::RngStream& rng, int horizon) {
  std::vector<double> profile(static_cast<std::size_t>(horizon));
  for (auto& p : profile) p = rng.next_double() * 0.4;
  return config_with(rng.next_double() * 1.1, horizon, std::move(profile),
                     rng.next_double());
}

}  // namespace

TEST_CASE("expected tree size G(ell; rho)") {
  CHECK(gw_expected_size(5, 0.0) == 1.0);   // only the root
  CHECK(gw_expected_size(3, 1.0) == 4.0);   // linear growth at rho = 1
  CHECK(gw_expected_size(2, 0.5) == doctest::Approx(1.75));  // 1 + .5 + .25
  CHECK(gw_expected_size(0, 3.0) == 1.0);
  CHECK_THROWS_AS(gw_expected_size(-1, 0.5), DomainError);
  // Truncated geometric sum oracle.
  for (double rho : {0.3, 0.9, 1.0, 1.4}) {
    for (int ell : {0, 1, 4, 9}) {
      double direct = 0.0;
      for (int d = 0; d <= ell; ++d) direct += std::pow(rho, d);
      CHECK(gw_expected_size(ell, rho) ==
            doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("phi bound") {
  SUBCASE("no roots possible, no risk") {
    const auto cfg = config_with(0.7, 5, {0, 0, 0, 0, 0}, 0.5);
    CHECK(phi_bound(cfg).value == 0.0);
  }

  SUBCASE("two-step hand computation") {
    const auto cfg = config_with(0.0, 2, {0.1, 0.1}, 1.0);
    CHECK(phi_bound(cfg).value == doctest::Approx(0.2).epsilon(1e-12));
  }

  SUBCASE("zero criticality erases the bound") {
    const auto cfg = config_with(0.9, 6, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5}, 0.0);
    CHECK(phi_bound(cfg).value == 0.0);
  }

  SUBCASE("the unclamped value may exceed one") {
    const auto cfg = config_with(1.5, 8,
                                 std::vector<double>(8, 0.9), 1.0);
    const auto b = phi_bound(cfg);
    CHECK(b.value > 1.0);
    CHECK(b.clamped == 1.0);
  }
}

TEST_CASE("phi dominance ordering") {
  SUBCASE("identical configs give equality") {
    const auto cfg = config_with(0.5, 4, {0.2, 0.2, 0.2, 0.2}, 0.3);
    const auto ord = phi_dominance(cfg, cfg);
    CHECK(ord.phi_first == ord.phi_subs);
    CHECK(ord.holds);
  }

  SUBCASE("raising rho strictly raises the bound") {
    const auto first = config_with(0.5, 4, {0.2, 0.2, 0.2, 0.2}, 0.3);
    auto subs = first;
    subs.rho = 0.6;
    const auto ord = phi_dominance(first, subs);
    CHECK(ord.phi_first < ord.phi_subs);
  }

  SUBCASE("violating the precondition throws") {
    const auto first = config_with(0.5, 4, {0.2, 0.2, 0.2, 0.2}, 0.3);
    auto subs = first;
    subs.rho = 0.4;  // smaller rho: not dominated
    CHECK_THROWS_AS(phi_dominance(first, subs), DominanceViolation);
  }

  SUBCASE("random dominated pairs always order correctly") {
    lm::RngStream rng(404);
    for (int trial = 0; trial < 1000; ++trial) {
      const int horizon = 2 + static_cast<int>(rng.next_below(8));
      auto first = random_config(rng, horizon);
      auto subs = first;
      subs.rho += rng.next_double() * 0.5;
      subs.kappa = std::min(1.0, subs.kappa + rng.next_double() * 0.2);
      const int extra = static_cast<int>(rng.next_below(4));
      subs.horizon += extra;
      for (auto& p : subs.trigger_profile) {
        p = std::min(1.0, p + rng.next_double() * 0.3);
      }
      for (int e = 0; e < extra; ++e) {
        subs.trigger_profile.push_back(rng.next_double());
      }
      const auto ord = phi_dominance(first, subs);
      REQUIRE(ord.holds);
    }
  }
}

TEST_CASE("galton-watson simulation") {
  SUBCASE("rho zero leaves singleton trees; mean matches the profile sum") {
    const auto cfg = config_with(0.0, 6, {0.5, 0.1, 0.9, 0.3, 0.2, 0.7}, 0.0);
    const auto stats = simulate_gw(cfg, 20000, 11);
    double profile_sum = 0.0;
    for (double p : cfg.trigger_profile) profile_sum += p;
    CHECK(std::abs(stats.mean_total_nodes - profile_sum) <
          3.0 * stats.mean_sigma);
    for (int trial = 0; trial < 200; ++trial) {
      lm::RngStream rng = lm::RngStream::keyed({12u,
                                                static_cast<std::uint64_t>(
                                                    trial)});
      const auto outcome = simulate_one(cfg, rng);
      for (const auto& tree : outcome.trees) {
        CHECK(tree.size == 1);
        CHECK(tree.max_depth == 1);
      }
    }
  }

  SUBCASE("deterministic single root matches the closed form within 2%") {
    auto cfg = config_with(0.5, 10, {1, 0, 0, 0, 0, 0, 0, 0, 0, 0}, 0.0);
    const auto stats = simulate_gw(cfg, 20000, 21);
    const double expected = gw_expected_size(9, 0.5);
    CHECK(std::abs(stats.mean_total_nodes - expected) / expected < 0.02);
  }

  SUBCASE("expected-size identity on random profiles within 3 sigma") {
    lm::RngStream rng(31);
    for (int trial = 0; trial < 5; ++trial) {
      const auto cfg = random_config(rng, 8);
      const auto stats = simulate_gw(cfg, 8000, 1000 + trial);
      CHECK(std::abs(stats.mean_total_nodes - expected_forest_size(cfg)) <
            3.0 * stats.mean_sigma + 1e-9);
    }
  }

  SUBCASE("kappa one with a guaranteed root saturates the critical rate") {
    auto cfg = config_with(0.5, 5, {1, 0.2, 0.2, 0.2, 0.2}, 1.0);
    const auto stats = simulate_gw(cfg, 2000, 5);
    CHECK(stats.critical_rate == 1.0);
  }

  SUBCASE("empirical error frequency is union-bounded by phi") {
    lm::RngStream rng(77);
    for (int trial = 0; trial < 5; ++trial) {
      auto cfg = random_config(rng, 8);
      cfg.kappa *= 0.3;  // keep the bound informative
      const auto stats = simulate_gw(cfg, 8000, 2000 + trial);
      const auto bound = phi_bound(cfg);
      CHECK(stats.critical_rate <=
            bound.value + 3.0 * stats.critical_sigma + 1e-9);
    }
  }

  SUBCASE("offspring laws agree on the mean") {
    for (auto law : {OffspringLaw::Poisson, OffspringLaw::Geometric,
                     OffspringLaw::Fixed}) {
      auto cfg = config_with(0.7, 8, {1, 0, 0, 0, 0, 0, 0, 0}, 0.0, law);
      const auto stats = simulate_gw(cfg, 20000, 33);
      const double expected = gw_expected_size(7, 0.7);
      CHECK(std::abs(stats.mean_total_nodes - expected) <
            4.0 * stats.mean_sigma + 1e-9);
    }
  }
}

TEST_CASE("misguidance bound") {
  CHECK(misguidance_bound(0.0, 0.9) == 0.0);
  CHECK(misguidance_bound(0.9, 0.2) == doctest::Approx(0.18));
  CHECK_THROWS_AS(misguidance_bound(1.2, 0.2), DomainError);

  SUBCASE("two-phase simulation sits below the bound") {
    const auto first = config_with(0.3, 6, {0.1, 0.1, 0.1, 0.1, 0.1, 0.1},
                                   0.05);
    const auto ext = config_with(0.6, 8,
                                 std::vector<double>(8, 0.25), 0.08);
    const auto stats = simulate_misguidance(first, ext, 20000, 99);
    const double bound =
        misguidance_bound(stats.p_first_correct, phi_bound(ext).value);
    CHECK(stats.p_misguided <= bound + 3.0 * stats.misguided_sigma);
  }
}

TEST_CASE("binary KL divergence") {
  CHECK(binary_kl(0.37, 0.37) == 0.0);
  // Direct evaluation oracle: 0.6 ln 2 + 0.4 ln(4/7).
  const double direct = 0.6 * std::log(2.0) + 0.4 * std::log(4.0 / 7.0);
  CHECK(binary_kl(0.6, 0.3) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(binary_kl(0.6, 0.3) == doctest::Approx(0.19205).epsilon(1e-4));
  CHECK_THROWS_AS(binary_kl(0.0, 0.5), DomainError);
  CHECK_THROWS_AS(binary_kl(0.5, 1.0), DomainError);

  SUBCASE("non-negativity over random pairs") {
    lm::RngStream rng(55);
    for (int i = 0; i < 10000; ++i) {
      const double u = 0.001 + rng.next_double() * 0.998;
      const double v = 0.001 + rng.next_double() * 0.998;
      REQUIRE(binary_kl(u, v) >= 0.0);
    }
  }
}

TEST_CASE("chernoff wrong-trigger bound") {
  SUBCASE("single wrong answer, one prompt") {
    const double b = chernoff_wrong_trigger_bound(0.6, {{0.3}}, 12);
    CHECK(b == doctest::Approx(std::exp(-12.0 * binary_kl(0.6, 0.3)))
                   .epsilon(1e-12));
    CHECK(b == doctest::Approx(0.0998).epsilon(2e-3));
  }

  SUBCASE("doubling N squares the per-answer factor") {
    const double b1 = chernoff_wrong_trigger_bound(0.6, {{0.3, 0.25}}, 6);
    const double b2 = chernoff_wrong_trigger_bound(0.6, {{0.3, 0.25}}, 12);
    CHECK(b2 == doctest::Approx(b1 * b1).epsilon(1e-9));
  }

  SUBCASE("hypothesis failure is reported, not clamped") {
    CHECK_THROWS_AS(chernoff_wrong_trigger_bound(0.6, {{0.7}}, 12),
                    DomainError);
    CHECK_THROWS_AS(chernoff_wrong_trigger_bound(0.6, {{0.6}}, 12),
                    DomainError);
  }

  SUBCASE("Monte Carlo wrong-trigger frequency respects the bound") {
    // One strongest wrong answer at q = 0.45 under M = 2 prompts, N = 12.
    const double p_threshold = 0.6;
    const double q = 0.45;
    const int n = 12, m = 2, trials = 20000;
    lm::RngStream rng(808);
    int wrong_triggers = 0;
    for (int trial = 0; trial < trials; ++trial) {
      bool all_prompts_wrong = true;
      for (int prompt = 0; prompt < m && all_prompts_wrong; ++prompt) {
        int wrong_count = 0;
        for (int s = 0; s < n; ++s) {
          if (rng.next_bernoulli(q)) ++wrong_count;
        }
        const double fraction = static_cast<double>(wrong_count) / n;
        all_prompts_wrong = fraction >= p_threshold;
      }
      if (all_prompts_wrong) ++wrong_triggers;
    }
    const double freq = static_cast<double>(wrong_triggers) / trials;
    const double bound = chernoff_wrong_trigger_bound(
        p_threshold, {{q, q}}, n);
    const double sigma = std::sqrt(freq * (1.0 - freq) / trials + 1e-12);
    CHECK(freq <= bound + 3.0 * sigma);
  }
}

TEST_CASE("majority vote probability") {
  CHECK(majority_correct_prob(1, 0.42, 0.58) == doctest::Approx(0.42));
  // Term-by-term: 3 * 0.36 * 0.4 + 0.216 = 0.648.
  CHECK(majority_correct_prob(3, 0.6, 0.4) ==
        doctest::Approx(0.648).epsilon(1e-12));
  CHECK(majority_correct_prob(5, 0.0, 0.6) == 0.0);

  SUBCASE("monotone in p, antitone in r, improving with odd N") {
    CHECK(majority_correct_prob(5, 0.7, 0.3) >
          majority_correct_prob(5, 0.6, 0.3));
    // The r direction is meaningful on the two-contender slice p + r = 1:
    // shifting mass from the contender to the correct answer helps.
    CHECK(majority_correct_prob(5, 0.6, 0.4) <
          majority_correct_prob(5, 0.7, 0.3));
    double prev = 0.0;
    for (int n : {1, 3, 5, 7, 9}) {
      const double cur = majority_correct_prob(n, 0.65, 0.35);
      CHECK(cur >= prev - 1e-12);
      prev = cur;
    }
  }

  SUBCASE("simulation agreement at N = 3") {
    lm::RngStream rng(909);
    const int trials = 100000;
    int correct_mode = 0;
    for (int t = 0; t < trials; ++t) {
      int correct = 0;
      for (int s = 0; s < 3; ++s) {
        if (rng.next_bernoulli(0.6)) ++correct;
      }
      if (correct >= 2) ++correct_mode;
    }
    const double freq = static_cast<double>(correct_mode) / trials;
    const double expected = majority_correct_prob(3, 0.6, 0.4);
    const double sigma = std::sqrt(expected * (1.0 - expected) / trials);
    CHECK(std::abs(freq - expected) < 3.0 * sigma);
  }
}

TEST_CASE("agreement probability") {
  SUBCASE("one-hot consensus") {
    const auto res = agreement_prob({{1, 0, 0}, {1, 0, 0}}, 0);
    CHECK(res.agree == 1.0);
    CHECK(res.wrong_agree == 0.0);
  }

  SUBCASE("two uniform prompts over four answers") {
    const std::vector<double> u(4, 0.25);
    const auto res = agreement_prob({u, u}, 0);
    CHECK(res.agree == doctest::Approx(0.25));
    CHECK(res.wrong_agree == doctest::Approx(0.1875));
  }

  SUBCASE("wrong agreement decays as q^M for identical prompts") {
    const std::vector<double> d{0.7, 0.3};
    for (int m = 1; m <= 6; ++m) {
      std::vector<std::vector<double>> prompts(m, d);
      const auto res = agreement_prob(prompts, 0);
      CHECK(res.wrong_agree ==
            doctest::Approx(std::pow(0.3, m)).epsilon(1e-12));
    }
  }

  SUBCASE("single one-hot prompt agrees with itself") {
    const auto res = agreement_prob({{0, 1, 0}}, 1);
    CHECK(res.agree == 1.0);
    CHECK(res.wrong_agree == 0.0);
  }
}

TEST_CASE("root trigger logistic model") {
  RootTriggerModel flat{0, 0, 0, 0};
  CHECK(root_trigger_prob(flat, 1.0, 2.0) == doctest::Approx(0.5));

  RootTriggerModel m{-1.5, 0.4, 0.3, 0.8};
  CHECK(root_trigger_prob(m, 0.0, 0.0) ==
        doctest::Approx(1.0 / (1.0 + std::exp(1.5))));
  CHECK_THROWS_AS(root_trigger_prob(m, -0.1, 0.0), DomainError);

  SUBCASE("monotone on a grid when all betas are non-negative") {
    RootTriggerModel mono{-2.0, 0.5, 0.4, 0.9};
    double prev_row = 0.0;
    for (double h = 0.0; h <= 4.0; h += 0.5) {
      double prev = 0.0;
      for (double v = 0.0; v <= 4.0; v += 0.5) {
        const double p = root_trigger_prob(mono, h, v);
        CHECK(p >= prev - 1e-12);
        prev = p;
      }
      const double row_start = root_trigger_prob(mono, h, 0.0);
      CHECK(row_start >= prev_row - 1e-12);
      prev_row = row_start;
    }
  }
}
