#pragma once

/**
 * Periodic probing and the dual-consistency early-exit verdict.
 *
 * At each checkpoint the current context is forked M times, once per probe
 * template; N answers are drawn per fork with constrained sampling. Exit
 * requires (i) internal consistency - each template's modal answer holds a
 * fraction >= P of its N samples - and (ii) cross-prompt agreement - all M
 * modes identical. Ablation variants relax one side or the other.
 */

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "red/errors.hpp"
#include "red/lm/backend.hpp"
#include "red/lm/context.hpp"
#include "red/lm/sampling.hpp"

namespace red::earlystop {

enum class ProbeVariant { IC, CP1, CPN, DC };

inline const char* variant_name(ProbeVariant v) {
  switch (v) {
    case ProbeVariant::IC: return "IC";
    case ProbeVariant::CP1: return "CP1";
    case ProbeVariant::CPN: return "CPN";
    case ProbeVariant::DC: return "DC";
  }
  return "?";
}

struct ProbeConfig {
  std::size_t interval = 2;  // tokens between checkpoints
  std::size_t samples_per_template = 12;  // N
  double consistency_fraction = 0.6;      // P
  std::vector<std::vector<lm::Token>> templates{
      {40, 50}, {41, 51}, {42, 52}, {43, 53}};  // M sequences, equal length
  lm::AnswerSet answers;
  ProbeVariant variant = ProbeVariant::DC;

  std::size_t num_templates() const { return templates.size(); }

  void validate() const {
    if (templates.empty()) throw ConfigError("probe needs >= 1 template");
    if (samples_per_template < 1) throw ConfigError("probe needs N >= 1");
    if (!(consistency_fraction > 0.0 && consistency_fraction <= 1.0)) {
      throw ConfigError("consistency fraction P must be in (0, 1]");
    }
    if (interval < 1) throw ConfigError("probe interval must be >= 1");
    const std::size_t len = templates.front().size();
    for (const auto& t : templates) {
      if (t.size() != len) {
        throw ConfigError("probe templates must be length-normalized");
      }
    }
    if (variant == ProbeVariant::IC && templates.size() != 1) {
      throw ConfigError("IC variant requires exactly one template");
    }
    if (variant == ProbeVariant::CP1 && samples_per_template != 1) {
      throw ConfigError("CP1 variant requires N = 1");
    }
  }
};

enum class ProbeVerdict { Exit, Continue };

enum class ContinueReason {
  None,            // verdict was Exit
  LowFraction,     // some template's mode below P
  CrossDisagree,   // template modes differ
  Abstain,         // some template could not elicit any answer
};

struct TemplateProbe {
  std::map<std::string, int> histogram;  // label -> count, sums to N
  std::optional<std::string> mode;       // absent iff abstained
  double mode_fraction = 0.0;            // max count / N
  std::optional<std::string> first_draw; // the N=1 view, for CP1
  bool abstained = false;
};

struct ProbeReport {
  std::size_t checkpoint = 0;  // main-stream token index
  std::vector<TemplateProbe> per_template;
  ProbeVerdict verdict = ProbeVerdict::Continue;
  ContinueReason reason = ContinueReason::None;

  // Verdicts of every ablation variant evaluated on this same report;
  // lets exit-set inclusion be checked checkpointwise on any single run.
  bool ic_exit = false;
  bool cp1_exit = false;
  bool cpn_exit = false;
  bool dc_exit = false;
};

/**
 * Runs the M x N probe at the current checkpoint. Probes read through
 * forks only - the main context is untouched. A template whose constrained
 * sampling throws ZeroMassError abstains; an abstaining template fails
 * internal consistency for this checkpoint.
 *
 * Each (template, sample) draw uses its own counter-based stream keyed by
 * (probe_key, template, sample), so evaluation order cannot matter.
 */
ProbeReport run_probe(const lm::LmBackend& model,
                      const lm::GenerationContext& ctx,
                      const ProbeConfig& cfg, std::uint64_t probe_key);

// Exit iff every mode fraction >= P and all template modes are identical.
ProbeVerdict dual_consistency(const ProbeReport& report, double p_fraction,
                              ContinueReason* reason = nullptr);

// Variant-specific verdict evaluated on an existing report.
bool variant_exit(const ProbeReport& report, ProbeVariant variant,
                  double p_fraction);

// The label exported on exit: the agreed mode (CP1: the agreed draw).
std::optional<std::string> agreed_answer(const ProbeReport& report,
                                         ProbeVariant variant);

struct RunRecord {
  bool triggered = false;               // S_i
  bool wrong = false;                   // I_i; false unless triggered
  std::optional<std::size_t> exit_step; // present iff triggered
  std::size_t tokens_generated = 0;
  std::string final_answer;
};

struct RunMetrics {
  double esc = 0.0;    // % of runs that triggered early exit
  double wesr = 0.0;   // % of runs with a wrong early stop
  double crisk = 0.0;  // % wrong among triggered runs
};

constexpr double kMetricsEpsilon = 1e-12;

RunMetrics run_metrics(const std::vector<RunRecord>& records);

}  // namespace red::earlystop
