#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "red/entropy/quadrants.hpp"
#include "red/entropy/window.hpp"
#include "red/lm/rng.hpp"

using namespace red;
using lm::TokenDistribution;

namespace {

// Independent from-scratch oracle for the window statistics.
struct WindowOracle {
  double mean = 0.0;
  double variance = 0.0;
  double topk_mean = 0.0;
};

WindowOracle recompute(const std::vector<double>& entries, std::size_t k) {
  WindowOracle o;
  const double n = static_cast<double>(entries.size());
  for (double e : entries) o.mean += e;
  o.mean /= n;
  if (entries.size() > 1) {
    for (double e : entries) o.variance += (e - o.mean) * (e - o.mean);
    o.variance /= (n - 1.0);
  }
  std::vector<double> sorted = entries;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  const std::size_t kk = std::min(k, sorted.size());
  for (std::size_t i = 0; i < kk; ++i) o.topk_mean += sorted[i];
  o.topk_mean /= static_cast<double>(kk);
  return o;
}

TokenDistribution dist_from(std::vector<double> probs) {
  TokenDistribution d;
  d.probs = std::move(probs);
  return d;
}

}  // namespace

TEST_CASE("token entropy analytic values") {
  CHECK(entropy::token_entropy(TokenDistribution::uniform(4)) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(entropy::token_entropy(TokenDistribution::one_hot(8, 3)) == 0.0);
  // Direct summation oracle: -(0.5 ln 0.5 + 2 * 0.25 ln 0.25) = 1.5 ln 2
  const auto d = dist_from({0.5, 0.25, 0.25});
  CHECK(entropy::token_entropy(d) ==
        doctest::Approx(1.5 * std::log(2.0)).epsilon(1e-12));
  CHECK(entropy::token_entropy(d) == doctest::Approx(1.039721).epsilon(1e-6));
}

TEST_CASE("window push and eviction") {
  entropy::EntropyWindow w(3, 3);
  w.push(1.0);
  CHECK(w.variance() == 0.0);  // singleton window
  w.push(2.0);
  w.push(3.0);
  CHECK(w.mean() == doctest::Approx(2.0));
  CHECK(w.variance() == doctest::Approx(1.0));  // divisor |W|-1 = 2

  // Fourth push evicts the oldest; stats recomputed over the last 3.
  w.push(5.0);
  const auto oracle = recompute({2.0, 3.0, 5.0}, 3);
  CHECK(w.mean() == doctest::Approx(oracle.mean).epsilon(1e-12));
  CHECK(w.variance() == doctest::Approx(oracle.variance).epsilon(1e-12));
  CHECK(w.topk_mean() == doctest::Approx(oracle.topk_mean).epsilon(1e-12));
}

TEST_CASE("incremental stats equal recomputation over a random stream") {
  entropy::EntropyWindow w(15, 3);
  lm::RngStream rng(2024);
  for (int i = 0; i < 20000; ++i) {
    w.push(rng.next_double() * 4.2);
    const auto oracle = recompute(w.snapshot(), 3);
    REQUIRE(std::abs(w.mean() - oracle.mean) < 1e-10);
    REQUIRE(std::abs(w.variance() - oracle.variance) < 1e-10);
    REQUIRE(std::abs(w.topk_mean() - oracle.topk_mean) < 1e-10);
  }
}

TEST_CASE("topk_mean dominates the mean once K entries exist") {
  entropy::EntropyWindow w(10, 4);
  lm::RngStream rng(7);
  for (int i = 0; i < 200; ++i) {
    w.push(rng.next_double() * 3.0);
    if (w.size() >= 4) CHECK(w.topk_mean() >= w.mean() - 1e-12);
  }
}

TEST_CASE("intervention trigger") {
  entropy::TriggerConfig cfg;
  cfg.window_length = 3;
  cfg.top_k = 3;
  cfg.variance_threshold = 2.4;
  cfg.cooldown = 3;

  SUBCASE("constant window never fires") {
    entropy::EntropyWindow w(3, 3);
    w.push(1.4);
    w.push(1.4);
    w.push(1.4);
    CHECK_FALSE(entropy::should_intervene(w, 100.0, cfg, 999));
  }

  SUBCASE("hand-computed firing case") {
    entropy::EntropyWindow w(3, 3);
    w.push(0.1);
    w.push(3.5);
    w.push(0.2);
    // v = ((0.1-1.2667)^2 + (3.5-1.2667)^2 + (0.2-1.2667)^2) / 2 = 3.7433
    CHECK(w.variance() == doctest::Approx(3.743333).epsilon(1e-5));
    CHECK(w.topk_mean() == doctest::Approx(1.266667).epsilon(1e-5));
    CHECK(entropy::should_intervene(w, 2.0, cfg, 3));
    // cooldown gate
    CHECK_FALSE(entropy::should_intervene(w, 2.0, cfg, 2));
    // next_H below the top-K mean
    CHECK_FALSE(entropy::should_intervene(w, 1.2, cfg, 3));
  }

  SUBCASE("monotone in next entropy") {
    entropy::EntropyWindow w(3, 3);
    w.push(0.1);
    w.push(3.5);
    w.push(0.2);
    bool fired = false;
    for (double h = 0.0; h < 5.0; h += 0.05) {
      const bool now = entropy::should_intervene(w, h, cfg, 10);
      if (fired) CHECK(now);  // once fired, fires for any larger next_H
      fired = fired || now;
    }
    CHECK(fired);
  }
}

TEST_CASE("quadrant classification") {
  SUBCASE("degenerate constant series is all LL") {
    std::vector<std::pair<double, double>> series(6, {1.0, 2.0});
    const auto res = entropy::classify_quadrants(series);
    for (auto q : res.labels) CHECK(q == entropy::QuadrantLabel::LL);
  }

  SUBCASE("eight points, two above each threshold independently") {
    std::vector<std::pair<double, double>> series{
        {1, 10}, {2, 20}, {3, 30}, {4, 40},
        {5, 50}, {6, 60}, {7, 80}, {8, 70}};
    const auto res = entropy::classify_quadrants(series);
    // Nearest-rank 75th of 8 points = 6th smallest; exactly two exceed it.
    CHECK(res.thresholds.h75 == 6.0);
    CHECK(res.thresholds.v75 == 60.0);
    // Exhaustive labeling oracle.
    int counts[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < series.size(); ++i) {
      const bool hh = series[i].first > 6.0;
      const bool hv = series[i].second > 60.0;
      const auto expect =
          hh ? (hv ? entropy::QuadrantLabel::HH : entropy::QuadrantLabel::HL)
             : (hv ? entropy::QuadrantLabel::LH : entropy::QuadrantLabel::LL);
      CHECK(res.labels[i] == expect);
      ++counts[static_cast<int>(res.labels[i])];
    }
    CHECK(counts[static_cast<int>(entropy::QuadrantLabel::HH)] == 2);
    CHECK(counts[static_cast<int>(entropy::QuadrantLabel::LL)] == 6);
  }

  SUBCASE("labels partition and HH points exceed both thresholds") {
    lm::RngStream rng(99);
    std::vector<std::pair<double, double>> series;
    for (int i = 0; i < 200; ++i) {
      series.emplace_back(rng.next_double() * 4.0, rng.next_double() * 6.0);
    }
    const auto res = entropy::classify_quadrants(series);
    REQUIRE(res.labels.size() == series.size());
    int high_h = 0, high_v = 0, hh = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (series[i].first > res.thresholds.h75) ++high_h;
      if (series[i].second > res.thresholds.v75) ++high_v;
      if (res.labels[i] == entropy::QuadrantLabel::HH) {
        ++hh;
        CHECK(series[i].first > res.thresholds.h75);
        CHECK(series[i].second > res.thresholds.v75);
      }
    }
    CHECK(hh <= std::min(high_h, high_v));
  }
}

TEST_CASE("trigger rates per quadrant") {
  using entropy::LabeledStep;
  using entropy::QuadrantLabel;

  SUBCASE("counting oracle") {
    std::vector<LabeledStep> steps;
    for (int i = 0; i < 7; ++i) {
      steps.push_back({QuadrantLabel::HH, false, false, std::nullopt});
    }
    steps.push_back({QuadrantLabel::HH, true, true, 1});
    steps.push_back({QuadrantLabel::HH, true, false, 2});
    steps.push_back({QuadrantLabel::HH, true, false, 3});
    const auto table = entropy::trigger_rates(steps);
    const auto& cell = table[static_cast<std::size_t>(QuadrantLabel::HH)];
    CHECK(cell.steps == 10);
    CHECK(*cell.ntr == doctest::Approx(0.3));
    CHECK(*cell.rtr == doctest::Approx(0.1));
    CHECK(*cell.avg_depth == doctest::Approx(2.0));
    // Conservation: errors across quadrants sum to the labeled total.
    std::size_t errors = 0;
    for (const auto& c : table) errors += c.error_steps;
    CHECK(errors == 3);
  }

  SUBCASE("no errors and empty quadrants report absent values") {
    std::vector<LabeledStep> steps(
        5, LabeledStep{QuadrantLabel::LL, false, false, std::nullopt});
    const auto table = entropy::trigger_rates(steps);
    const auto& ll = table[static_cast<std::size_t>(QuadrantLabel::LL)];
    CHECK(*ll.ntr == 0.0);
    CHECK(*ll.rtr == 0.0);
    CHECK_FALSE(ll.avg_depth.has_value());
    const auto& hh = table[static_cast<std::size_t>(QuadrantLabel::HH)];
    CHECK_FALSE(hh.ntr.has_value());  // empty quadrant, not a failure
  }

  SUBCASE("saturation") {
    std::vector<LabeledStep> steps(
        4, LabeledStep{QuadrantLabel::HL, true, true, 1});
    const auto table = entropy::trigger_rates(steps);
    const auto& hl = table[static_cast<std::size_t>(QuadrantLabel::HL)];
    CHECK(*hl.ntr == 1.0);
    CHECK(*hl.rtr == 1.0);
    CHECK(*hl.avg_depth == 1.0);
  }

  SUBCASE("error step without depth is rejected") {
    std::vector<LabeledStep> steps{
        {QuadrantLabel::LL, true, false, std::nullopt}};
    CHECK_THROWS_AS(entropy::trigger_rates(steps), DomainError);
  }
}

TEST_CASE("odds ratios") {
  // Published quadrant effect sizes: HH vs LL on the first solution.
  CHECK(entropy::odds_ratio(0.187, 0.014) ==
        doctest::Approx(16.20).epsilon(2e-3));
  // First-vs-Subs within HH: reciprocal pair around 0.64.
  CHECK(entropy::odds_ratio(0.187, 0.264) ==
        doctest::Approx(0.64).epsilon(6e-3));
  CHECK(entropy::odds_ratio(0.264, 0.187) *
            entropy::odds_ratio(0.187, 0.264) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(entropy::odds_ratio(0.4, 0.4) == doctest::Approx(1.0));
  CHECK_THROWS_AS(entropy::odds_ratio(0.0, 0.5), DomainError);
  CHECK_THROWS_AS(entropy::odds_ratio(0.5, 1.0), DomainError);
}
