#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "red/errors.hpp"
#include "red/lm/distribution.hpp"
#include "red/lm/rng.hpp"

namespace red::lm {

/**
 * A restricted answer vocabulary for guided decoding: the tokens a probe
 * is allowed to emit, each mapped to a human-readable label ("A", "17", ...).
 * Labels must be injective over the allowed tokens.
 */
struct AnswerSet {
  std::vector<Token> tokens;
  std::map<Token, std::string> labels;

  const std::string& label_of(Token t) const {
    auto it = labels.find(t);
    if (it == labels.end()) {
      throw DomainError("token " + std::to_string(t) + " has no answer label");
    }
    return it->second;
  }

  void validate(int vocab) const {
    if (tokens.empty()) throw DomainError("answer set is empty");
    std::map<std::string, int> seen;
    for (Token t : tokens) {
      if (t < 0 || t >= vocab) {
        throw DomainError("answer token " + std::to_string(t) +
                          " outside vocabulary");
      }
      if (++seen[label_of(t)] > 1) {
        throw DomainError("answer labels are not injective");
      }
    }
  }
};

struct SamplerParams {
  double temperature = 1.0;  // 0 = greedy
  double top_p = 1.0;        // 1 = disabled
};

/**
 * Draws a token from dist after the temperature / top-p transform.
 * Temperature 1 with top-p 1 leaves the distribution untouched; the
 * temperature -> 0 limit is greedy argmax.
 */
inline Token sample_token(const TokenDistribution& dist, RngStream& rng,
                          const SamplerParams& params = {}) {
  const int n = dist.vocab_size();
  if (params.temperature <= 0.0) {
    rng.next_u64();  // keep draw parity with the stochastic path
    return dist.argmax();
  }

  std::vector<double> p = dist.probs;
  if (params.temperature != 1.0) {
    // p^(1/T) renormalized == softmax(logits / T)
    const double inv_t = 1.0 / params.temperature;
    double total = 0.0;
    for (double& x : p) {
      x = x > 0.0 ? std::pow(x, inv_t) : 0.0;
      total += x;
    }
    for (double& x : p) x /= total;
  }

  std::vector<int> order;
  if (params.top_p < 1.0) {
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return p[a] > p[b]; });
    double cum = 0.0;
    std::size_t keep = 0;
    while (keep < order.size()) {
      cum += p[static_cast<std::size_t>(order[keep])];
      ++keep;
      if (cum >= params.top_p) break;
    }
    order.resize(keep);
    double total = 0.0;
    for (int i : order) total += p[static_cast<std::size_t>(i)];
    const double u = rng.next_double() * total;
    double acc = 0.0;
    for (int i : order) {
      acc += p[static_cast<std::size_t>(i)];
      if (u < acc) return static_cast<Token>(i);
    }
    return static_cast<Token>(order.back());
  }

  const double u = rng.next_double();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += p[static_cast<std::size_t>(i)];
    if (u < acc) return static_cast<Token>(i);
  }
  // Rounding left u above the accumulated mass; return the last live token.
  for (int i = n - 1; i >= 0; --i) {
    if (p[static_cast<std::size_t>(i)] > 0.0) return static_cast<Token>(i);
  }
  return static_cast<Token>(n - 1);
}

/**
 * Guided decoding: draws from dist restricted to the answer set and
 * renormalized. Throws ZeroMassError when every allowed token has zero
 * probability (the probe cannot elicit an answer at this checkpoint).
 */
inline Token sample_constrained(const TokenDistribution& dist,
                                const AnswerSet& answers, RngStream& rng) {
  double total = 0.0;
  for (Token t : answers.tokens) {
    total += dist.probs.at(static_cast<std::size_t>(t));
  }
  if (!(total > 0.0)) {
    throw ZeroMassError("all allowed answer tokens have zero probability");
  }
  const double u = rng.next_double() * total;
  double acc = 0.0;
  for (Token t : answers.tokens) {
    acc += dist.probs.at(static_cast<std::size_t>(t));
    if (u < acc) return t;
  }
  return answers.tokens.back();
}

}  // namespace red::lm
