#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>

#include "red/lm/context.hpp"
#include "red/lm/mock.hpp"
#include "red/lm/remote.hpp"
#include "red/lm/rng.hpp"
#include "red/lm/sampling.hpp"

using namespace red;
using lm::GenerationContext;
using lm::Token;
using lm::TokenDistribution;

TEST_CASE("counter-based rng streams") {
  lm::RngStream a(42), b(42), c(43);
  CHECK(a.next_u64() == b.next_u64());
  CHECK(a.next_u64() == b.next_u64());
  CHECK(a.next_u64() != c.next_u64());

  // Keyed streams depend on the whole key tuple, not the draw order.
  lm::RngStream p = lm::RngStream::keyed({1, 2, 3});
  lm::RngStream q = lm::RngStream::keyed({1, 2, 4});
  lm::RngStream p2 = lm::RngStream::keyed({1, 2, 3});
  CHECK(p.next_double() == p2.next_double());
  CHECK(p.next_double() != q.next_double());

  lm::RngStream u(5);
  for (int i = 0; i < 100; ++i) {
    const double x = u.next_double();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("distribution validation") {
  CHECK_NOTHROW(TokenDistribution::uniform(64).validate());
  CHECK_NOTHROW(TokenDistribution::one_hot(4, 2).validate());
  TokenDistribution bad;
  bad.probs = {0.5};
  CHECK_THROWS_AS(bad.validate(), DomainError);  // vocab < 2
  bad.probs = {0.7, 0.2};
  CHECK_THROWS_AS(bad.validate(), DomainError);  // sums to 0.9
  bad.probs = {1.2, -0.2};
  CHECK_THROWS_AS(bad.validate(), DomainError);  // negative entry
}

TEST_CASE("context fork semantics") {
  GenerationContext root = lm::make_root_context({10, 11, 12});
  CHECK(root.generated() == 0);

  SUBCASE("empty suffix copies the history") {
    const auto child = lm::fork_context(root, std::vector<Token>{});
    CHECK(child.history == root.history);
    CHECK(child.parent_branch == root.branch_id);
  }

  SUBCASE("siblings differ only in their suffix") {
    const auto a = lm::fork_context(root, std::vector<Token>{1, 2});
    const auto b = lm::fork_context(root, std::vector<Token>{3});
    CHECK(a.history == std::vector<Token>{10, 11, 12, 1, 2});
    CHECK(b.history == std::vector<Token>{10, 11, 12, 3});
    CHECK(a.branch_id != b.branch_id);
    CHECK(root.history.size() == 3);
  }

  SUBCASE("appending to a child never touches the parent") {
    auto child = lm::fork_context(root, std::vector<Token>{1});
    const std::size_t before = root.history.size();
    for (Token t = 0; t < 5; ++t) lm::append_token(child, t);
    CHECK(root.history.size() == before);
    CHECK(child.history.size() == before + 6);
  }
}

TEST_CASE("scripted mock") {
  lm::ScriptedModel model(8);
  model.set_default(TokenDistribution::one_hot(8, 3));
  const auto ctx = lm::make_root_context({0});
  CHECK(model.next_distribution(ctx).probs[3] == 1.0);

  model.add_suffix_rule({7, 7}, TokenDistribution::one_hot(8, 5));
  auto forked = lm::fork_context(ctx, std::vector<Token>{7, 7});
  CHECK(model.next_distribution(forked).probs[5] == 1.0);
  CHECK(model.next_distribution(ctx).probs[3] == 1.0);
}

TEST_CASE("markov mock determinism") {
  lm::MarkovModel model(64, 1234);
  auto ctx = lm::make_root_context({9, 4});
  const auto d1 = model.next_distribution(ctx);
  const auto d2 = model.next_distribution(ctx);
  REQUIRE(d1.probs.size() == d2.probs.size());
  for (std::size_t i = 0; i < d1.probs.size(); ++i) {
    CHECK(d1.probs[i] == d2.probs[i]);  // bit-exact double evaluation
  }
  d1.validate();

  // Different trailing token, different distribution.
  lm::append_token(ctx, 5);
  const auto d3 = model.next_distribution(ctx);
  bool differs = false;
  for (std::size_t i = 0; i < d1.probs.size(); ++i) {
    differs = differs || d1.probs[i] != d3.probs[i];
  }
  CHECK(differs);
}

TEST_CASE("monotone-growth mock") {
  lm::MockModelSpec spec;
  spec.kind = lm::MockKind::MonotoneGrowth;
  spec.seed = 77;
  spec.alpha = 0.3;
  spec.tau = 96.0;
  lm::MonotoneGrowthModel model(spec);

  auto probe_ctx_at = [&](std::size_t t, std::size_t tmpl) {
    GenerationContext ctx = lm::make_root_context({30, 31});
    for (std::size_t i = 0; i < t; ++i) lm::append_token(ctx, 10);
    return lm::fork_context(ctx, spec.probe_templates[tmpl]);
  };

  SUBCASE("far below tau the probe committee carries no confidence") {
    const auto d = model.next_distribution(probe_ctx_at(2, 0));
    d.validate();
    CHECK(d.probs[1] < 1e-6);  // correct answer: sigmoid of a large negative
    // Remaining answer mass sits evenly on the distractors.
    CHECK(d.probs[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(d.probs[3] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(d.probs[4] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  }

  SUBCASE("far above tau the probe locks onto the correct answer") {
    const auto d = model.next_distribution(probe_ctx_at(220, 1));
    CHECK(d.probs[1] > 0.999);
  }

  SUBCASE("logistic curve value") {
    // p* = sigmoid(alpha * (t - tau))
    CHECK(model.correct_answer_prob(96, -1) == doctest::Approx(0.5));
    CHECK(model.correct_answer_prob(106, -1) ==
          doctest::Approx(1.0 / (1.0 + std::exp(-3.0))));
  }

  SUBCASE("main stream is a valid mixture with answer mass") {
    GenerationContext ctx = lm::make_root_context({30});
    for (std::size_t i = 0; i < 50; ++i) lm::append_token(ctx, 10);
    const auto d = model.next_distribution(ctx);
    d.validate();
    double answer_mass = 0.0;
    for (Token t : spec.answer_tokens) {
      answer_mass += d.probs[static_cast<std::size_t>(t)];
    }
    CHECK(answer_mass == doctest::Approx(spec.answer_share).epsilon(1e-9));
  }

  SUBCASE("determinism across instances with equal spec") {
    lm::MonotoneGrowthModel twin(spec);
    const auto ctx = probe_ctx_at(37, 2);
    const auto a = model.next_distribution(ctx);
    const auto b = twin.next_distribution(ctx);
    for (std::size_t i = 0; i < a.probs.size(); ++i) {
      CHECK(a.probs[i] == b.probs[i]);
    }
  }

  SUBCASE("adversarial committee locks onto the wrong answer") {
    lm::MockModelSpec bad = spec;
    bad.adversarial = true;
    bad.wrong_index = 1;
    lm::MonotoneGrowthModel liar(bad);
    GenerationContext ctx = lm::make_root_context({30, 31});
    for (std::size_t i = 0; i < 220; ++i) lm::append_token(ctx, 10);
    const auto d = liar.next_distribution(
        lm::fork_context(ctx, bad.probe_templates[0]));
    CHECK(d.probs[2] > 0.999);  // answer token index 1 = "B"
  }
}

TEST_CASE("constrained sampling") {
  lm::AnswerSet answers;
  answers.tokens = {2, 7};
  answers.labels = {{2, "A"}, {7, "B"}};
  answers.validate(10);

  SUBCASE("single allowed token always wins") {
    lm::AnswerSet only;
    only.tokens = {2};
    only.labels = {{2, "A"}};
    lm::RngStream rng(1);
    for (int i = 0; i < 50; ++i) {
      CHECK(lm::sample_constrained(TokenDistribution::uniform(10), only,
                                   rng) == 2);
    }
  }

  SUBCASE("renormalized frequencies within 3 sigma") {
    TokenDistribution d;
    d.probs.assign(10, 0.0);
    d.probs[2] = 0.2;
    d.probs[7] = 0.6;
    d.probs[0] = 0.2;  // mass outside the answer set is ignored
    lm::RngStream rng(31337);
    const int n = 100000;
    int hits7 = 0;
    for (int i = 0; i < n; ++i) {
      if (lm::sample_constrained(d, answers, rng) == 7) ++hits7;
    }
    const double freq = static_cast<double>(hits7) / n;
    const double expected = 0.6 / 0.8;
    const double sigma = std::sqrt(expected * (1 - expected) / n);
    CHECK(std::abs(freq - expected) < 3 * sigma);
  }

  SUBCASE("chi-square goodness of fit at a fixed seed budget") {
    TokenDistribution d;
    d.probs.assign(10, 0.0);
    d.probs[2] = 0.3;
    d.probs[7] = 0.1;
    d.probs[5] = 0.6;
    lm::AnswerSet three;
    three.tokens = {2, 5, 7};
    three.labels = {{2, "A"}, {5, "B"}, {7, "C"}};
    lm::RngStream rng(555);
    const int n = 50000;
    std::map<Token, int> counts;
    for (int i = 0; i < n; ++i) ++counts[lm::sample_constrained(d, three, rng)];
    double chi2 = 0.0;
    for (Token t : three.tokens) {
      const double expected = d.probs[static_cast<std::size_t>(t)] * n;
      const double diff = counts[t] - expected;
      chi2 += diff * diff / expected;
    }
    CHECK(chi2 < 13.8);  // 99.9th percentile of chi-square with 2 dof
  }

  SUBCASE("zero mass raises") {
    TokenDistribution d;
    d.probs.assign(10, 0.0);
    d.probs[0] = 1.0;
    lm::RngStream rng(1);
    CHECK_THROWS_AS(lm::sample_constrained(d, answers, rng), ZeroMassError);
  }
}

TEST_CASE("plain sampling with temperature and top-p") {
  SUBCASE("one-hot always returns its token") {
    lm::RngStream rng(9);
    for (int i = 0; i < 20; ++i) {
      CHECK(lm::sample_token(TokenDistribution::one_hot(6, 4), rng) == 4);
    }
  }

  SUBCASE("temperature zero is greedy") {
    TokenDistribution d;
    d.probs = {0.1, 0.5, 0.4};
    lm::RngStream rng(9);
    lm::SamplerParams params;
    params.temperature = 0.0;
    for (int i = 0; i < 20; ++i) CHECK(lm::sample_token(d, rng, params) == 1);
  }

  SUBCASE("uniform frequencies within 3 sigma") {
    lm::RngStream rng(404);
    const int n = 100000;
    int counts[4] = {0, 0, 0, 0};
    for (int i = 0; i < n; ++i) {
      ++counts[lm::sample_token(TokenDistribution::uniform(4), rng)];
    }
    const double sigma = std::sqrt(0.25 * 0.75 / n);
    for (int c : counts) {
      CHECK(std::abs(static_cast<double>(c) / n - 0.25) < 3 * sigma);
    }
  }

  SUBCASE("top-p keeps the smallest dominating prefix") {
    TokenDistribution d;
    d.probs = {0.6, 0.3, 0.06, 0.04};
    lm::RngStream rng(11);
    lm::SamplerParams params;
    params.top_p = 0.85;
    for (int i = 0; i < 200; ++i) {
      const Token t = lm::sample_token(d, rng, params);
      CHECK(t <= 1);  // tokens 2 and 3 fall outside the 0.85 nucleus
    }
  }
}

TEST_CASE("answer set validation") {
  lm::AnswerSet s;
  s.tokens = {1, 2};
  s.labels = {{1, "A"}, {2, "A"}};
  CHECK_THROWS_AS(s.validate(8), DomainError);  // labels not injective
  s.labels = {{1, "A"}, {2, "B"}};
  CHECK_NOTHROW(s.validate(8));
  s.tokens = {1, 99};
  s.labels[99] = "C";
  CHECK_THROWS_AS(s.validate(8), DomainError);  // outside vocabulary
}

TEST_CASE("mock spec config file") {
  const std::string text = R"(
# fleet problem 12
kind = monotone-growth
seed = 42
vocab = 64
answers = 1,2,3,4
labels = A,B,C,D
correct = 2
alpha = 0.35
tau = 120
answer_share = 0.25
adversarial = false
)";
  const auto spec = lm::parse_mock_spec(text);
  CHECK(spec.kind == lm::MockKind::MonotoneGrowth);
  CHECK(spec.seed == 42);
  CHECK(spec.correct_index == 2);
  CHECK(spec.alpha == doctest::Approx(0.35));
  CHECK(spec.tau == doctest::Approx(120.0));

  CHECK_THROWS_AS(lm::parse_mock_spec("kind = warp"), ConfigError);
  CHECK_THROWS_AS(lm::parse_mock_spec("seed 42"), ParseError);
  CHECK_THROWS_AS(lm::parse_mock_spec("kind = monotone-growth\nalpha = -1"),
                  ConfigError);
}

TEST_CASE("remote backend surface") {
  SUBCASE("config validation") {
    lm::RemoteBackendConfig cfg;
    CHECK_THROWS_AS(lm::RemoteBackend{cfg}, ConfigError);  // no URL
    cfg.base_url = "http://127.0.0.1:9";
    cfg.vocab = 64;
    const lm::RemoteBackend backend(cfg);
    CHECK_FALSE(backend.supports_full_distribution());
    CHECK(backend.vocab_size() == 64);
  }

  SUBCASE("top-k logprob parsing") {
    const std::string body = R"({
      "choices": [{
        "logprobs": {"top_logprobs": [{"3": -0.2231435513, "9": -1.6094379124}]}
      }]
    })";
    const auto d = lm::parse_top_logprobs_response(body, 16);
    d.validate();
    // exp(-0.2231) ~= 0.8, exp(-1.6094) ~= 0.2, renormalized over the two.
    CHECK(d.probs[3] == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(d.probs[9] == doctest::Approx(0.2).epsilon(1e-6));
    CHECK_THROWS_AS(lm::parse_top_logprobs_response("{}", 16), BackendError);
    CHECK_THROWS_AS(lm::parse_top_logprobs_response("not json", 16),
                    BackendError);
  }
}
