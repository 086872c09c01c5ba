#pragma once

/**
 * The full control loop: tokens come from the refine-step sampler (entropy
 * trigger + negative-branch guidance) and every K generated tokens the
 * probe runs; the run exits early when the active variant's verdict fires,
 * otherwise it decodes to the budget and the terminal answer is elicited
 * by constrained sampling at the final context.
 */

#include <cstdint>
#include <optional>
#include <string>

#include "red/early_stop.hpp"
#include "red/entropy/window.hpp"
#include "red/guidance.hpp"
#include "red/harness/trace.hpp"
#include "red/lm/backend.hpp"

namespace red::earlystop {

struct DecodeOptions {
  std::size_t token_budget = 256;  // T_max
  bool probes_enabled = true;      // false = the no-exit baseline
  bool verbose_trace_vectors = false;
  lm::SamplerParams sampler;
  // Ground-truth label when the problem knows it; drives RunRecord.wrong.
  std::optional<std::string> truth_label;
};

struct DecodeResult {
  harness::DecodeTrace trace;
  RunRecord record;
};

DecodeResult controlled_decode(const lm::LmBackend& model,
                               const lm::GenerationContext& question,
                               const ProbeConfig& probe_cfg,
                               const entropy::TriggerConfig& trigger_cfg,
                               const guidance::GuidanceConfig& guidance_cfg,
                               const DecodeOptions& options,
                               std::uint64_t run_seed);

}  // namespace red::earlystop
