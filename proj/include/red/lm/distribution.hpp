#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "red/errors.hpp"

namespace red::lm {

using Token = std::int32_t;

/**
 * A probability vector over a finite vocabulary at one decoding step.
 * Entries are non-negative and sum to 1 within 1e-9; vocab size >= 2.
 */
struct TokenDistribution {
  std::vector<double> probs;

  int vocab_size() const { return static_cast<int>(probs.size()); }

  double sum() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
  }

  Token argmax() const {
    return static_cast<Token>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
  }

  void validate() const {
    if (probs.size() < 2) {
      throw DomainError("distribution needs vocab_size >= 2, got " +
                        std::to_string(probs.size()));
    }
    for (double p : probs) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw DomainError("distribution entry negative or non-finite");
      }
    }
    if (std::abs(sum() - 1.0) > 1e-9) {
      throw DomainError("distribution sums to " + std::to_string(sum()) +
                        ", expected 1 within 1e-9");
    }
  }

  static TokenDistribution uniform(int vocab) {
    TokenDistribution d;
    d.probs.assign(static_cast<std::size_t>(vocab), 1.0 / vocab);
    return d;
  }

  static TokenDistribution one_hot(int vocab, Token t) {
    TokenDistribution d;
    d.probs.assign(static_cast<std::size_t>(vocab), 0.0);
    d.probs.at(static_cast<std::size_t>(t)) = 1.0;
    return d;
  }

  // Normalizes arbitrary non-negative weights into a distribution.
  static TokenDistribution from_weights(std::vector<double> w) {
    double s = 0.0;
    for (double x : w) s += x;
    if (!(s > 0.0)) throw DomainError("from_weights: total weight is zero");
    for (double& x : w) x /= s;
    TokenDistribution d;
    d.probs = std::move(w);
    return d;
  }
};

/**
 * Softmax over additive scores. Entries of -inf stay at probability 0,
 * so support restrictions survive the renormalization.
 */
inline TokenDistribution softmax_scores(std::span<const double> scores) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double s : scores) {
    if (s > hi) hi = s;
  }
  TokenDistribution out;
  out.probs.resize(scores.size(), 0.0);
  if (!std::isfinite(hi)) {
    throw DomainError("softmax_scores: no finite score");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isfinite(scores[i])) {
      out.probs[i] = std::exp(scores[i] - hi);
      total += out.probs[i];
    }
  }
  for (double& p : out.probs) p /= total;
  return out;
}

}  // namespace red::lm
