#pragma once

/**
 * Batch experiments over the mock fleet: the probe-variant ablation, the
 * hyperparameter sensitivity sweep, and the rollback-sampling experiment.
 * Every cell draws from counter-based streams keyed by (seed, problem,
 * step), so the same seeds feed all variants and grid points - orderings
 * between rows are paired by construction.
 */

#include <optional>
#include <string>
#include <vector>

#include "red/controlled_decode.hpp"
#include "red/harness/config.hpp"
#include "red/harness/fleet.hpp"
#include "red/harness/trace.hpp"

namespace red::harness {

// ---------------------------------------------------------------------------
// Single runs
// ---------------------------------------------------------------------------

struct RunOutcome {
  std::size_t problem = 0;
  std::uint64_t seed = 0;
  bool adversarial = false;
  earlystop::RunRecord record;
  bool correct_final = false;
  std::size_t interventions = 0;
};

// Probe config specialized to an ablation variant (IC keeps only the first
// template; CP1 drops to one sample per template).
earlystop::ProbeConfig probe_config_for_variant(
    const earlystop::ProbeConfig& base, earlystop::ProbeVariant variant);

earlystop::DecodeResult run_problem(const Problem& problem,
                                    const ExperimentConfig& cfg,
                                    earlystop::ProbeVariant variant,
                                    std::uint64_t seed, bool probes_enabled);

// True when no checkpoint in the trace has a DC exit without a CPN exit.
bool exit_inclusion_holds(const DecodeTrace& trace);

// ---------------------------------------------------------------------------
// Probe-variant ablation
// ---------------------------------------------------------------------------

struct AblationRow {
  earlystop::ProbeVariant variant;
  earlystop::RunMetrics metrics;
  double mean_tokens = 0.0;
};

struct AblationResult {
  std::vector<AblationRow> rows;          // IC, CP1, CPN, DC order
  std::vector<RunOutcome> runs;           // all cells, for paired analysis
  bool exit_inclusion_everywhere = true;  // DC => CPN at every checkpoint
};

AblationResult ablation_sweep(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Hyperparameter sensitivity
// ---------------------------------------------------------------------------

enum class SweepParam {
  VarianceThreshold,  // T
  ConsistencyFraction,  // P
  WindowLength,       // L
  ProbeInterval,      // checkpoint spacing
  GuidanceAlpha,      // alpha
};

const char* sweep_param_name(SweepParam p);

struct SweepRow {
  double value = 0.0;
  double accuracy = 0.0;     // fraction of runs ending on the truth label
  double mean_tokens = 0.0;
  double mean_interventions = 0.0;
};

std::vector<SweepRow> sensitivity_sweep(SweepParam param,
                                        const std::vector<double>& grid,
                                        const ExperimentConfig& base);

// ---------------------------------------------------------------------------
// Rollback sampling
// ---------------------------------------------------------------------------

struct RollbackSpec {
  std::vector<int> ratios{10, 20, 30, 40, 50, 60, 70, 80};  // K%
  std::size_t resamples = 100;                               // N

  void validate() const;
};

// Stream tags of the rollback resampling format. Fixed constants so an
// independent counter can replay the exact draws: continuation step
// `step` of resample `n` at ratio K draws from the stream keyed
// (seed, kRollbackStepTag, K, n, step); the terminal constrained draw
// uses (seed, kRollbackFinalTag, K, n).
inline constexpr std::uint64_t kRollbackStepTag = 0x44;
inline constexpr std::uint64_t kRollbackFinalTag = 0x55;

struct RollbackPoint {
  int ratio = 0;
  std::size_t truncate_at = 0;
  std::size_t wrong = 0;
  std::size_t total = 0;
  double error_rate = 0.0;
  bool skipped = false;  // prefix shorter than the rollback point
};

struct RollbackResult {
  std::vector<RollbackPoint> points;
  double mean_error_rate = 0.0;  // over non-skipped points
};

/**
 * Truncates a correct base trajectory at floor(K/100 * T_s), replays the
 * prefix (state restoration is prefix replay at mock scale), resamples the
 * continuation N times and counts wrong final answers. Resample n of
 * ratio K draws from streams keyed by (seed, K, n, step) - bit-replayable
 * by any independent counter.
 */
RollbackResult rollback_experiment(const lm::LmBackend& model,
                                   const lm::GenerationContext& question,
                                   const DecodeTrace& base_trace,
                                   const lm::AnswerSet& answers,
                                   const std::string& truth_label,
                                   const RollbackSpec& spec,
                                   std::uint64_t seed);

// One resampled continuation; exposed so tests can brute-force the counts.
std::string rollback_resample_final(const lm::LmBackend& model,
                                    const lm::GenerationContext& question,
                                    const DecodeTrace& base_trace,
                                    const lm::AnswerSet& answers,
                                    std::size_t truncate_at, int ratio,
                                    std::size_t resample_index,
                                    std::uint64_t seed);

// First-vs-subs aggregation of mean rollback error rates (a ratio).
double relative_instability(double mean_first, double mean_subs);

}  // namespace red::harness
