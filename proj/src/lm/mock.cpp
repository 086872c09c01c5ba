#include "red/lm/mock.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "red/errors.hpp"

namespace red::lm {

namespace {

bool ends_with(const std::vector<Token>& history,
               const std::vector<Token>& suffix) {
  if (suffix.empty() || suffix.size() > history.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), history.rbegin());
}

}  // namespace

// ---------------------------------------------------------------------------
// MockModelSpec
// ---------------------------------------------------------------------------

AnswerSet MockModelSpec::answer_set() const {
  AnswerSet s;
  s.tokens = answer_tokens;
  for (std::size_t i = 0; i < answer_tokens.size(); ++i) {
    s.labels[answer_tokens[i]] = answer_labels.at(i);
  }
  return s;
}

void MockModelSpec::validate() const {
  if (vocab < 2) throw ConfigError("mock vocab must be >= 2");
  if (answer_tokens.size() != answer_labels.size()) {
    throw ConfigError("answer_tokens and answer_labels length mismatch");
  }
  answer_set().validate(vocab);
  if (kind == MockKind::MonotoneGrowth) {
    if (!(alpha > 0.0)) throw ConfigError("monotone-growth needs alpha > 0");
    for (double a : template_alpha) {
      if (!(a > 0.0)) throw ConfigError("template alpha must be > 0");
    }
    if (!template_alpha.empty() &&
        template_alpha.size() != probe_templates.size()) {
      throw ConfigError("template_alpha length must match probe templates");
    }
    if (!template_tau.empty() &&
        template_tau.size() != probe_templates.size()) {
      throw ConfigError("template_tau length must match probe templates");
    }
    if (!(answer_share > 0.0 && answer_share <= 1.0)) {
      throw ConfigError("answer_share must be in (0, 1]");
    }
    if (correct_index < 0 ||
        correct_index >= static_cast<int>(answer_tokens.size())) {
      throw ConfigError("correct_index out of range");
    }
    if (adversarial &&
        (wrong_index < 0 ||
         wrong_index >= static_cast<int>(answer_tokens.size()) ||
         wrong_index == correct_index)) {
      throw ConfigError("adversarial wrong_index invalid");
    }
    std::size_t tmpl_len = probe_templates.empty() ? 0
                                                  : probe_templates[0].size();
    for (const auto& t : probe_templates) {
      if (t.size() != tmpl_len) {
        throw ConfigError("probe templates must be length-normalized");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// key=value spec files
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    // trim
    auto b = item.find_first_not_of(" \t");
    auto e = item.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<Token> parse_tokens(const std::string& s) {
  std::vector<Token> out;
  for (const auto& p : split_csv(s)) out.push_back(std::stoi(p));
  return out;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& p : split_csv(s)) out.push_back(std::stod(p));
  return out;
}

}  // namespace

MockModelSpec parse_mock_spec(const std::string& text) {
  MockModelSpec spec;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("expected key = value", lineno);
    }
    auto trim = [](std::string s) {
      auto x = s.find_first_not_of(" \t\r");
      auto y = s.find_last_not_of(" \t\r");
      return x == std::string::npos ? std::string() : s.substr(x, y - x + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "kind") {
        if (val == "scripted") spec.kind = MockKind::Scripted;
        else if (val == "markov") spec.kind = MockKind::Markov;
        else if (val == "monotone-growth") spec.kind = MockKind::MonotoneGrowth;
        else throw ConfigError("unknown mock kind '" + val + "'");
      } else if (key == "seed") {
        spec.seed = std::stoull(val);
      } else if (key == "vocab") {
        spec.vocab = std::stoi(val);
      } else if (key == "answers") {
        spec.answer_tokens = parse_tokens(val);
      } else if (key == "labels") {
        spec.answer_labels = split_csv(val);
      } else if (key == "correct") {
        spec.correct_index = std::stoi(val);
      } else if (key == "alpha") {
        spec.alpha = std::stod(val);
      } else if (key == "tau") {
        spec.tau = std::stod(val);
      } else if (key == "template_alpha") {
        spec.template_alpha = parse_doubles(val);
      } else if (key == "template_tau") {
        spec.template_tau = parse_doubles(val);
      } else if (key == "answer_share") {
        spec.answer_share = std::stod(val);
      } else if (key == "adversarial") {
        spec.adversarial = (val == "true" || val == "1");
      } else if (key == "wrong") {
        spec.wrong_index = std::stoi(val);
      } else if (key == "onehot_sequence") {
        spec.onehot_sequence = parse_tokens(val);
      } else if (key == "negative_prompt") {
        spec.negative_prompt = parse_tokens(val);
      } else {
        throw ConfigError("unknown mock spec key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw ParseError("bad value for key '" + key + "'", lineno);
    } catch (const std::out_of_range&) {
      throw ParseError("value out of range for key '" + key + "'", lineno);
    }
  }
  spec.validate();
  return spec;
}

MockModelSpec load_mock_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mock spec file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mock_spec(ss.str());
}

std::unique_ptr<LmBackend> make_mock_backend(const MockModelSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case MockKind::Markov:
      return std::make_unique<MarkovModel>(spec.vocab, spec.seed);
    case MockKind::MonotoneGrowth:
      return std::make_unique<MonotoneGrowthModel>(spec);
    case MockKind::Scripted: {
      auto m = std::make_unique<ScriptedModel>(spec.vocab);
      if (!spec.onehot_sequence.empty()) {
        std::vector<TokenDistribution> steps;
        steps.reserve(spec.onehot_sequence.size());
        for (Token t : spec.onehot_sequence) {
          steps.push_back(TokenDistribution::one_hot(spec.vocab, t));
        }
        m->set_step_distributions(std::move(steps));
      }
      return m;
    }
  }
  throw ConfigError("unreachable mock kind");
}

// ---------------------------------------------------------------------------
// ScriptedModel
// ---------------------------------------------------------------------------

TokenDistribution ScriptedModel::next_distribution(
    const GenerationContext& ctx) const {
  for (const auto& [suffix, dist] : suffix_rules_) {
    if (ends_with(ctx.history, suffix)) return dist;
  }
  if (!step_dists_.empty()) {
    std::size_t step = std::min(ctx.generated(), step_dists_.size() - 1);
    return step_dists_[step];
  }
  return default_dist_;
}

// ---------------------------------------------------------------------------
// MarkovModel
// ---------------------------------------------------------------------------

TokenDistribution MarkovModel::next_distribution(
    const GenerationContext& ctx) const {
  const Token last = ctx.history.empty() ? -1 : ctx.history.back();
  std::vector<double> w(static_cast<std::size_t>(vocab_));
  for (int i = 0; i < vocab_; ++i) {
    std::uint64_t h = mix_key({seed_, static_cast<std::uint64_t>(last + 1),
                               static_cast<std::uint64_t>(i)});
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    w[static_cast<std::size_t>(i)] = std::exp(2.0 * u);
  }
  return TokenDistribution::from_weights(std::move(w));
}

// ---------------------------------------------------------------------------
// MonotoneGrowthModel
// ---------------------------------------------------------------------------

MonotoneGrowthModel::MonotoneGrowthModel(MockModelSpec spec)
    : spec_(std::move(spec)), answers_(spec_.answer_set()) {
  spec_.validate();
  for (Token i = 0; i < spec_.vocab; ++i) {
    bool reserved = std::find(spec_.answer_tokens.begin(),
                              spec_.answer_tokens.end(),
                              i) != spec_.answer_tokens.end();
    for (const auto& tpl : spec_.probe_templates) {
      reserved = reserved ||
                 std::find(tpl.begin(), tpl.end(), i) != tpl.end();
    }
    reserved = reserved || std::find(spec_.negative_prompt.begin(),
                                     spec_.negative_prompt.end(),
                                     i) != spec_.negative_prompt.end();
    if (!reserved) filler_tokens_.push_back(i);
  }
  if (filler_tokens_.empty()) {
    throw ConfigError(
        "monotone-growth mock needs at least one non-reserved token");
  }
}

std::optional<MonotoneGrowthModel::SuffixMatch>
MonotoneGrowthModel::match_suffix(const GenerationContext& ctx) const {
  for (std::size_t m = 0; m < spec_.probe_templates.size(); ++m) {
    if (ends_with(ctx.history, spec_.probe_templates[m])) {
      return SuffixMatch{static_cast<int>(m), spec_.probe_templates[m].size()};
    }
  }
  if (ends_with(ctx.history, spec_.negative_prompt)) {
    return SuffixMatch{-1, spec_.negative_prompt.size()};
  }
  return std::nullopt;
}

double MonotoneGrowthModel::correct_answer_prob(std::size_t t, int m) const {
  double a = spec_.alpha;
  double tau = spec_.tau;
  if (m >= 0) {
    if (!spec_.template_alpha.empty()) {
      a = spec_.template_alpha[static_cast<std::size_t>(m)];
    }
    if (!spec_.template_tau.empty()) {
      tau = spec_.template_tau[static_cast<std::size_t>(m)];
    }
  }
  return sigmoid(a * (static_cast<double>(t) - tau));
}

TokenDistribution MonotoneGrowthModel::answer_profile(std::size_t t, int m,
                                                      bool inverted) const {
  const auto& toks = spec_.answer_tokens;
  const std::size_t j = toks.size();
  const double p_star = correct_answer_prob(t, m);
  int focus = spec_.adversarial ? spec_.wrong_index : spec_.correct_index;
  if (inverted) {
    // The "mistake direction": confidence mass moved onto a wrong answer.
    focus = (spec_.correct_index + 1) % static_cast<int>(j);
  }
  TokenDistribution d;
  d.probs.assign(static_cast<std::size_t>(spec_.vocab), 0.0);
  if (j == 1) {
    d.probs[static_cast<std::size_t>(toks[0])] = 1.0;
    return d;
  }
  const double rest = (1.0 - p_star) / static_cast<double>(j - 1);
  for (std::size_t i = 0; i < j; ++i) {
    d.probs[static_cast<std::size_t>(toks[i])] =
        (static_cast<int>(i) == focus) ? p_star : rest;
  }
  return d;
}

TokenDistribution MonotoneGrowthModel::filler_profile(std::size_t t) const {
  // Uniform over a power-of-two block of filler tokens whose size and
  // offset are hashed per step. Block-size swings give the entropy series
  // real variance so the intervention trigger has something to bite on.
  const std::uint64_t h = mix_key({spec_.seed, 0xF111ULL, t});
  const std::size_t max_pow = 6;  // blocks of 1..64 tokens
  std::size_t k = std::size_t{1} << (h % (max_pow + 1));
  k = std::min(k, filler_tokens_.size());
  const std::size_t offset = splitmix64(h) % filler_tokens_.size();
  TokenDistribution d;
  d.probs.assign(static_cast<std::size_t>(spec_.vocab), 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const Token tok = filler_tokens_[(offset + i) % filler_tokens_.size()];
    d.probs[static_cast<std::size_t>(tok)] = 1.0 / static_cast<double>(k);
  }
  return d;
}

TokenDistribution MonotoneGrowthModel::next_distribution(
    const GenerationContext& ctx) const {
  const auto match = match_suffix(ctx);
  if (match) {
    const std::size_t t = ctx.history.size() - ctx.prompt_len -
                          match->suffix_len;
    if (match->template_index >= 0) {
      return answer_profile(t, match->template_index, /*inverted=*/false);
    }
    return answer_profile(t, -1, /*inverted=*/true);
  }

  const std::size_t t = ctx.generated();
  TokenDistribution filler = filler_profile(t);
  TokenDistribution committee = answer_profile(t, -1, /*inverted=*/false);
  TokenDistribution d;
  d.probs.resize(static_cast<std::size_t>(spec_.vocab));
  const double w = spec_.answer_share;
  for (std::size_t i = 0; i < d.probs.size(); ++i) {
    d.probs[i] = (1.0 - w) * filler.probs[i] + w * committee.probs[i];
  }
  return d;
}

}  // namespace red::lm
