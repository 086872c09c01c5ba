#pragma once

/**
 * Deterministic mock backends.
 *
 * Three kinds:
 *  - scripted:        explicit suffix rules and per-step distributions,
 *                     for surgically constructed unit tests.
 *  - markov:          distribution is a pure hash of (seed, last token);
 *                     cheap "language-ish" noise.
 *  - monotone-growth: the correct answer's probability follows a logistic
 *                     curve sigmoid(alpha_m * (t - tau_m)) per probe
 *                     template, the remaining answer mass spread over
 *                     distractors; the main stream mixes a seeded filler
 *                     profile (for entropy texture) with the answer mass.
 *
 * All mocks are immutable after construction and their distributions are
 * pure functions of (spec, seed, context), so two runs with equal seeds
 * produce bit-identical traces.
 */

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "red/lm/backend.hpp"
#include "red/lm/sampling.hpp"

namespace red::lm {

enum class MockKind { Scripted, Markov, MonotoneGrowth };

struct MockModelSpec {
  MockKind kind = MockKind::MonotoneGrowth;
  std::uint64_t seed = 0;
  int vocab = 64;

  // Answer vocabulary shared by all kinds.
  std::vector<Token> answer_tokens{1, 2, 3, 4};
  std::vector<std::string> answer_labels{"A", "B", "C", "D"};
  int correct_index = 0;

  // monotone-growth parameters. template_alpha/template_tau, when set,
  // override the base curve per probe template (same length as templates).
  double alpha = 0.3;
  double tau = 96.0;
  std::vector<double> template_alpha;
  std::vector<double> template_tau;
  double answer_share = 0.2;
  bool adversarial = false;
  int wrong_index = 1;

  // Reserved control-token sequences the mock recognizes as fork suffixes.
  std::vector<std::vector<Token>> probe_templates{
      {40, 50}, {41, 51}, {42, 52}, {43, 53}};
  std::vector<Token> negative_prompt{60, 61, 62};

  // scripted parameters: per-step one-hot tokens (step-indexed), used by
  // the config-file surface; richer scripts are built programmatically.
  std::vector<Token> onehot_sequence;

  AnswerSet answer_set() const;
  void validate() const;
};

// Parses the documented key=value schema (see README).
MockModelSpec load_mock_spec(const std::string& path);
MockModelSpec parse_mock_spec(const std::string& text);

std::unique_ptr<LmBackend> make_mock_backend(const MockModelSpec& spec);

// ---------------------------------------------------------------------------
// Scripted mock
// ---------------------------------------------------------------------------

/**
 * First matching suffix rule wins; otherwise the per-step table (clamped
 * to its last entry); otherwise the default distribution.
 */
class ScriptedModel final : public LmBackend {
 public:
  explicit ScriptedModel(int vocab)
      : vocab_(vocab), default_dist_(TokenDistribution::uniform(vocab)) {}

  void add_suffix_rule(std::vector<Token> suffix, TokenDistribution dist) {
    dist.validate();
    suffix_rules_.emplace_back(std::move(suffix), std::move(dist));
  }

  void set_step_distributions(std::vector<TokenDistribution> dists) {
    for (const auto& d : dists) d.validate();
    step_dists_ = std::move(dists);
  }

  void set_default(TokenDistribution dist) {
    dist.validate();
    default_dist_ = std::move(dist);
  }

  TokenDistribution next_distribution(
      const GenerationContext& ctx) const override;
  bool supports_full_distribution() const override { return true; }
  int vocab_size() const override { return vocab_; }
  const char* backend_name() const override { return "mock-scripted"; }

 private:
  int vocab_;
  std::vector<std::pair<std::vector<Token>, TokenDistribution>> suffix_rules_;
  std::vector<TokenDistribution> step_dists_;
  TokenDistribution default_dist_;
};

// ---------------------------------------------------------------------------
// Markov mock
// ---------------------------------------------------------------------------

class MarkovModel final : public LmBackend {
 public:
  MarkovModel(int vocab, std::uint64_t seed) : vocab_(vocab), seed_(seed) {}

  TokenDistribution next_distribution(
      const GenerationContext& ctx) const override;
  bool supports_full_distribution() const override { return true; }
  int vocab_size() const override { return vocab_; }
  const char* backend_name() const override { return "mock-markov"; }

 private:
  int vocab_;
  std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Monotone-growth mock
// ---------------------------------------------------------------------------

class MonotoneGrowthModel final : public LmBackend {
 public:
  explicit MonotoneGrowthModel(MockModelSpec spec);

  TokenDistribution next_distribution(
      const GenerationContext& ctx) const override;
  bool supports_full_distribution() const override { return true; }
  int vocab_size() const override { return spec_.vocab; }
  const char* backend_name() const override { return "mock-monotone"; }

  const MockModelSpec& spec() const { return spec_; }
  const AnswerSet& answers() const { return answers_; }
  const std::string& correct_label() const {
    return answers_.label_of(
        spec_.answer_tokens[static_cast<std::size_t>(spec_.correct_index)]);
  }

  // Answer committee at main-stream step t for probe template m
  // (m < 0 selects the base curve).
  double correct_answer_prob(std::size_t t, int m) const;

 private:
  struct SuffixMatch {
    int template_index;  // >= 0 probe template, -1 negative prompt
    std::size_t suffix_len;
  };
  std::optional<SuffixMatch> match_suffix(const GenerationContext& ctx) const;

  TokenDistribution answer_profile(std::size_t t, int m, bool inverted) const;
  TokenDistribution filler_profile(std::size_t t) const;

  MockModelSpec spec_;
  AnswerSet answers_;
  std::vector<Token> filler_tokens_;  // vocabulary minus reserved ids
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace red::lm
