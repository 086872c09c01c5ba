#pragma once

/**
 * Per-step token entropy and the sliding-window statistics that drive the
 * intervention trigger: window mean h_t, sample variance v_t (divisor
 * |W|-1, zero for singleton windows) and the mean of the K largest
 * entropies currently in the window.
 *
 * The trigger fires when the window variance exceeds T, the next token's
 * entropy exceeds the top-K mean, and the cooldown has elapsed.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "red/errors.hpp"
#include "red/lm/distribution.hpp"

namespace red::entropy {

// Shannon entropy in nats; p = 0 terms contribute 0.
inline double token_entropy(const lm::TokenDistribution& dist) {
  double h = 0.0;
  for (double p : dist.probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

struct TriggerConfig {
  std::size_t window_length = 15;  // L
  double variance_threshold = 2.4; // T, nats^2
  std::size_t top_k = 3;           // K
  std::size_t cooldown = 15;       // tokens; default = L

  void validate() const {
    if (window_length < 2) throw ConfigError("window length must be >= 2");
    if (top_k < 1 || top_k > window_length) {
      throw ConfigError("top_k must be in [1, L]");
    }
    if (!(variance_threshold > 0.0)) {
      throw ConfigError("variance threshold must be > 0");
    }
  }
};

/**
 * Ring buffer of the most recent step entropies with incrementally
 * maintained mean and sample variance. The top-K mean is recomputed by
 * scanning the (at most L) retained entries.
 */
class EntropyWindow {
 public:
  EntropyWindow(std::size_t length, std::size_t top_k)
      : capacity_(length), top_k_(top_k), buf_(length, 0.0) {
    if (length < 2) throw ConfigError("window length must be >= 2");
    if (top_k < 1 || top_k > length) throw ConfigError("top_k out of range");
  }

  explicit EntropyWindow(const TriggerConfig& cfg)
      : EntropyWindow(cfg.window_length, cfg.top_k) {}

  void push(double h) {
    if (count_ == capacity_) {
      const double old = buf_[head_];
      sum_ -= old;
      sum_sq_ -= old * old;
    } else {
      ++count_;
    }
    buf_[head_] = h;
    head_ = (head_ + 1) % capacity_;
    sum_ += h;
    sum_sq_ += h * h;
  }

  std::size_t size() const { return count_; }
  std::size_t length() const { return capacity_; }

  double mean() const {
    return count_ == 0 ? 0.0 : sum_ / static_cast<double>(count_);
  }

  double variance() const {
    if (count_ <= 1) return 0.0;
    const double m = mean();
    const double v =
        (sum_sq_ - static_cast<double>(count_) * m * m) /
        static_cast<double>(count_ - 1);
    return std::max(v, 0.0);
  }

  // Mean of the K largest retained entries; falls back to the mean of all
  // entries while fewer than K have been seen.
  double topk_mean() const {
    if (count_ == 0) return 0.0;
    std::vector<double> entries = snapshot();
    const std::size_t k = std::min(top_k_, count_);
    std::partial_sort(entries.begin(),
                      entries.begin() + static_cast<std::ptrdiff_t>(k),
                      entries.end(), std::greater<double>());
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += entries[i];
    return s / static_cast<double>(k);
  }

  // Retained entries, oldest first.
  std::vector<double> snapshot() const {
    std::vector<double> out;
    out.reserve(count_);
    const std::size_t start = (head_ + capacity_ - count_) % capacity_;
    for (std::size_t i = 0; i < count_; ++i) {
      out.push_back(buf_[(start + i) % capacity_]);
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t top_k_;
  std::vector<double> buf_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
};

inline bool should_intervene(const EntropyWindow& window, double next_entropy,
                             const TriggerConfig& cfg,
                             std::size_t steps_since_last) {
  if (window.size() < 2) return false;
  if (steps_since_last < cfg.cooldown) return false;
  return window.variance() > cfg.variance_threshold &&
         next_entropy > window.topk_mean();
}

}  // namespace red::entropy
