#pragma once

/**
 * Negative-branch logit guidance.
 *
 * At a triggered position the negative prompt is appended to a fork of the
 * main context, the next-token distribution of that fork is read (one
 * lookahead step, then the fork is discarded), and the adjusted scores
 *
 *     s(x) = log pos(x) - alpha * log neg(x)
 *
 * are renormalized by softmax. The scaling sits on the negative term only;
 * a compatibility flag switches to the conventional (1+alpha)/-alpha
 * classifier-free form for ablations. Negative probabilities are floored
 * at 1e-12 before the log so a zero never produces an infinite score, and
 * tokens with pos(x) = 0 stay at 0.
 */

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "red/entropy/window.hpp"
#include "red/errors.hpp"
#include "red/lm/backend.hpp"
#include "red/lm/context.hpp"
#include "red/lm/sampling.hpp"

namespace red::guidance {

struct GuidanceConfig {
  double alpha = 1.0;
  double max_alpha = 5.0;
  std::vector<lm::Token> negative_prompt{60, 61, 62};
  bool conventional_form = false;  // (1+alpha) * log pos - alpha * log neg

  void validate() const {
    if (negative_prompt.empty()) {
      throw ConfigError("negative prompt must be non-empty");
    }
    if (!(alpha >= 0.0 && alpha <= max_alpha)) {
      throw ConfigError("alpha must be in [0, max_alpha]");
    }
  }
};

struct InterventionEvent {
  std::size_t step = 0;
  double alpha = 0.0;
  double window_variance = 0.0;
  double window_topk_mean = 0.0;
  double next_entropy = 0.0;
  lm::TokenDistribution pre_dist;
  lm::TokenDistribution neg_dist;
  lm::TokenDistribution post_dist;
};

constexpr double kNegFloor = 1e-12;

inline lm::TokenDistribution apply_guidance(const lm::TokenDistribution& pos,
                                            const lm::TokenDistribution& neg,
                                            double alpha,
                                            bool conventional_form = false) {
  if (pos.vocab_size() != neg.vocab_size()) {
    throw DomainError("guidance distributions differ in vocabulary size");
  }
  if (alpha < 0.0) throw DomainError("guidance alpha must be >= 0");
  if (alpha == 0.0 && !conventional_form) return pos;  // exact identity

  std::vector<double> scores(pos.probs.size());
  const double pos_coeff = conventional_form ? 1.0 + alpha : 1.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (pos.probs[i] <= 0.0) {
      scores[i] = -std::numeric_limits<double>::infinity();
      continue;
    }
    const double n = std::max(neg.probs[i], kNegFloor);
    scores[i] = pos_coeff * std::log(pos.probs[i]) - alpha * std::log(n);
  }
  return lm::softmax_scores(scores);
}

/**
 * Next-token distribution of fork(ctx, negative_prompt). Exactly one
 * lookahead step; the main context is never modified. Requires a backend
 * with full-vocabulary distributions.
 */
inline lm::TokenDistribution build_negative_branch(
    const lm::LmBackend& model, const lm::GenerationContext& ctx,
    const GuidanceConfig& cfg) {
  cfg.validate();
  if (!model.supports_full_distribution()) {
    throw CapabilityError(
        "negative-branch guidance needs full-vocabulary distributions; "
        "this backend exposes top-k only");
  }
  const lm::GenerationContext branch = lm::fork_context(ctx,
                                                        cfg.negative_prompt);
  return model.next_distribution(branch);
}

// Per-stream trigger state owned by one decode loop.
struct RefineState {
  entropy::EntropyWindow window;
  std::size_t steps_since_intervention;

  explicit RefineState(const entropy::TriggerConfig& cfg)
      : window(cfg),
        steps_since_intervention(cfg.cooldown) {}
};

struct RefineOutcome {
  lm::Token token = 0;
  double entropy_pushed = 0.0;  // entropy of the distribution sampled from
  std::optional<InterventionEvent> event;
};

/**
 * One decode step under the intervention policy: reads the positive
 * distribution, fires the trigger when the window says so, samples from
 * either the guided or the plain distribution and pushes the entropy of
 * whichever distribution was actually sampled from.
 */
inline RefineOutcome refine_step(const lm::LmBackend& model,
                                 const lm::GenerationContext& ctx,
                                 RefineState& state,
                                 const GuidanceConfig& gcfg,
                                 const entropy::TriggerConfig& tcfg,
                                 lm::RngStream& rng,
                                 const lm::SamplerParams& sampler = {}) {
  const lm::TokenDistribution pos = model.next_distribution(ctx);
  const double next_h = entropy::token_entropy(pos);

  RefineOutcome out;
  if (entropy::should_intervene(state.window, next_h, tcfg,
                                state.steps_since_intervention)) {
    InterventionEvent ev;
    ev.step = ctx.generated();
    ev.alpha = gcfg.alpha;
    ev.window_variance = state.window.variance();
    ev.window_topk_mean = state.window.topk_mean();
    ev.next_entropy = next_h;
    ev.pre_dist = pos;
    ev.neg_dist = build_negative_branch(model, ctx, gcfg);
    ev.post_dist = apply_guidance(pos, ev.neg_dist, gcfg.alpha,
                                  gcfg.conventional_form);
    out.token = lm::sample_token(ev.post_dist, rng, sampler);
    out.entropy_pushed = entropy::token_entropy(ev.post_dist);
    out.event = std::move(ev);
    state.steps_since_intervention = 0;
  } else {
    out.token = lm::sample_token(pos, rng, sampler);
    out.entropy_pushed = next_h;
    ++state.steps_since_intervention;
  }
  state.window.push(out.entropy_pushed);
  return out;
}

}  // namespace red::guidance
