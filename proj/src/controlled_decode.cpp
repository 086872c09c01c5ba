#include "red/controlled_decode.hpp"

#include "red/lm/rng.hpp"

namespace red::earlystop {

namespace {

// Stream tags folded into the counter-based keys; the probe stream is keyed
// by checkpoint (not draw order), so probe fan-out is order-independent and
// a variant change cannot shift any other stream.
constexpr std::uint64_t kStreamMain = 0x11;
constexpr std::uint64_t kStreamProbe = 0x22;
constexpr std::uint64_t kStreamFinal = 0x33;

}  // namespace

DecodeResult controlled_decode(const lm::LmBackend& model,
                               const lm::GenerationContext& question,
                               const ProbeConfig& probe_cfg,
                               const entropy::TriggerConfig& trigger_cfg,
                               const guidance::GuidanceConfig& guidance_cfg,
                               const DecodeOptions& options,
                               std::uint64_t run_seed) {
  probe_cfg.validate();
  trigger_cfg.validate();
  guidance_cfg.validate();
  // interval > budget is a legal (vacuous) schedule: no checkpoint is ever
  // reached and the run simply decodes to the budget.

  DecodeResult result;
  result.trace.run_seed = run_seed;
  result.trace.backend = model.backend_name();

  lm::GenerationContext ctx = question;
  guidance::RefineState refine(trigger_cfg);

  for (std::size_t step = 1; step <= options.token_budget; ++step) {
    lm::RngStream main_rng = lm::RngStream::keyed({run_seed, kStreamMain,
                                                   step});
    guidance::RefineOutcome outcome = guidance::refine_step(
        model, ctx, refine, guidance_cfg, trigger_cfg, main_rng,
        options.sampler);
    lm::append_token(ctx, outcome.token);

    harness::TraceEvent ev;
    ev.step = step;
    ev.token = outcome.token;
    ev.entropy = outcome.entropy_pushed;
    ev.window.mean = refine.window.mean();
    ev.window.variance = refine.window.variance();
    ev.window.topk_mean = refine.window.topk_mean();
    if (outcome.event) {
      ev.intervention = harness::summarize_intervention(
          *outcome.event, options.verbose_trace_vectors);
    }

    const bool at_checkpoint =
        options.probes_enabled && step % probe_cfg.interval == 0;
    if (at_checkpoint) {
      const std::uint64_t probe_key =
          lm::mix_key({run_seed, kStreamProbe, step});
      ProbeReport report = run_probe(model, ctx, probe_cfg, probe_key);
      const bool exit_now = variant_exit(report, probe_cfg.variant,
                                         probe_cfg.consistency_fraction);
      ev.probe = report;
      if (exit_now) {
        const auto answer = agreed_answer(report, probe_cfg.variant);
        harness::ExitRecord ex;
        ex.step = step;
        ex.answer = answer.value_or("");
        ex.variant = variant_name(probe_cfg.variant);
        ev.exit = ex;
        result.trace.events.push_back(std::move(ev));

        result.record.triggered = true;
        result.record.exit_step = step;
        result.record.tokens_generated = step;
        result.record.final_answer = answer.value_or("");
        result.record.wrong =
            options.truth_label &&
            result.record.final_answer != *options.truth_label;
        return result;
      }
    }
    result.trace.events.push_back(std::move(ev));
  }

  // Budget exhausted: elicit the model's terminal answer token.
  lm::RngStream final_rng = lm::RngStream::keyed({run_seed, kStreamFinal});
  const lm::TokenDistribution last = model.next_distribution(ctx);
  std::string final_label;
  try {
    const lm::Token tok = lm::sample_constrained(last, probe_cfg.answers,
                                                 final_rng);
    final_label = probe_cfg.answers.label_of(tok);
  } catch (const ZeroMassError&) {
    final_label = "";  // the model never committed to an answer
  }
  result.record.triggered = false;
  result.record.tokens_generated = options.token_budget;
  result.record.final_answer = final_label;
  result.record.wrong = false;  // wrong early stops require a trigger
  return result;
}

}  // namespace red::earlystop
