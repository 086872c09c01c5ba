#include "red/harness/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "red/harness/parallel.hpp"
#include "red/lm/rng.hpp"

namespace red::harness {

namespace {

std::uint64_t run_seed_for(std::uint64_t seed, std::size_t problem) {
  // The variant is deliberately not part of the key: paired runs share
  // every token and probe draw until their exit decisions diverge.
  return lm::mix_key({seed, 0x9A1ULL, problem});
}

}  // namespace

earlystop::ProbeConfig probe_config_for_variant(
    const earlystop::ProbeConfig& base, earlystop::ProbeVariant variant) {
  earlystop::ProbeConfig cfg = base;
  cfg.variant = variant;
  if (variant == earlystop::ProbeVariant::IC) {
    cfg.templates = {base.templates.front()};
  } else if (variant == earlystop::ProbeVariant::CP1) {
    cfg.samples_per_template = 1;
  }
  cfg.validate();
  return cfg;
}

earlystop::DecodeResult run_problem(const Problem& problem,
                                    const ExperimentConfig& cfg,
                                    earlystop::ProbeVariant variant,
                                    std::uint64_t seed, bool probes_enabled) {
  auto backend = backend_for(problem);
  earlystop::ProbeConfig probe_cfg =
      probe_config_for_variant(cfg.probe, variant);
  probe_cfg.answers = problem.spec.answer_set();

  earlystop::DecodeOptions options;
  options.token_budget = cfg.token_budget;
  options.probes_enabled = probes_enabled;
  options.truth_label = problem.truth_label;

  const lm::GenerationContext question = lm::make_root_context(problem.prompt);
  return earlystop::controlled_decode(*backend, question, probe_cfg,
                                      cfg.trigger, cfg.guidance, options,
                                      run_seed_for(seed, problem.id));
}

bool exit_inclusion_holds(const DecodeTrace& trace) {
  for (const auto& ev : trace.events) {
    if (ev.probe && ev.probe->dc_exit && !ev.probe->cpn_exit) return false;
  }
  return true;
}

AblationResult ablation_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<Problem> fleet =
      generate_fleet(cfg.fleet, cfg.token_budget);
  const earlystop::ProbeVariant variants[] = {
      earlystop::ProbeVariant::IC, earlystop::ProbeVariant::CP1,
      earlystop::ProbeVariant::CPN, earlystop::ProbeVariant::DC};

  AblationResult result;
  for (const auto variant : variants) {
    const std::size_t cells = fleet.size() * cfg.seeds.size();
    std::vector<RunOutcome> outcomes(cells);
    std::vector<char> inclusion(cells, 1);
    parallel_for(cells, [&](std::size_t cell) {
      const Problem& problem = fleet[cell % fleet.size()];
      const std::uint64_t seed = cfg.seeds[cell / fleet.size()];
      earlystop::DecodeResult run;
      try {
        run = run_problem(problem, cfg, variant, seed,
                          /*probes_enabled=*/true);
      } catch (const BackendError&) {
        // A failed backend aborts the affected run; it counts as
        // non-triggered so coverage is not inflated.
        RunOutcome aborted;
        aborted.problem = problem.id;
        aborted.seed = seed;
        aborted.adversarial = problem.adversarial;
        outcomes[cell] = aborted;
        return;
      }
      RunOutcome out;
      out.problem = problem.id;
      out.seed = seed;
      out.adversarial = problem.adversarial;
      out.record = run.record;
      out.correct_final = run.record.final_answer == problem.truth_label;
      for (const auto& ev : run.trace.events) {
        if (ev.intervention) ++out.interventions;
      }
      inclusion[cell] = exit_inclusion_holds(run.trace) ? 1 : 0;
      outcomes[cell] = std::move(out);
    });

    std::vector<earlystop::RunRecord> records;
    double tokens = 0.0;
    records.reserve(cells);
    for (const auto& out : outcomes) {
      records.push_back(out.record);
      tokens += static_cast<double>(out.record.tokens_generated);
      result.runs.push_back(out);
    }
    for (char ok : inclusion) {
      result.exit_inclusion_everywhere =
          result.exit_inclusion_everywhere && ok;
    }
    AblationRow row;
    row.variant = variant;
    row.metrics = earlystop::run_metrics(records);
    row.mean_tokens = tokens / static_cast<double>(cells);
    result.rows.push_back(row);
  }
  return result;
}

const char* sweep_param_name(SweepParam p) {
  switch (p) {
    case SweepParam::VarianceThreshold: return "T";
    case SweepParam::ConsistencyFraction: return "P";
    case SweepParam::WindowLength: return "L";
    case SweepParam::ProbeInterval: return "K";
    case SweepParam::GuidanceAlpha: return "alpha";
  }
  return "?";
}

std::vector<SweepRow> sensitivity_sweep(SweepParam param,
                                        const std::vector<double>& grid,
                                        const ExperimentConfig& base) {
  if (grid.empty()) throw ConfigError("sweep grid must be non-empty");
  base.validate();
  const std::vector<Problem> fleet =
      generate_fleet(base.fleet, base.token_budget);

  std::vector<SweepRow> rows;
  for (const double value : grid) {
    ExperimentConfig cfg = base;
    switch (param) {
      case SweepParam::VarianceThreshold:
        cfg.trigger.variance_threshold = value;
        break;
      case SweepParam::ConsistencyFraction:
        cfg.probe.consistency_fraction = value;
        break;
      case SweepParam::WindowLength:
        cfg.trigger.window_length = static_cast<std::size_t>(value);
        cfg.trigger.cooldown = cfg.trigger.window_length;
        cfg.trigger.top_k =
            std::min(cfg.trigger.top_k, cfg.trigger.window_length);
        break;
      case SweepParam::ProbeInterval:
        cfg.probe.interval = static_cast<std::size_t>(value);
        break;
      case SweepParam::GuidanceAlpha:
        cfg.guidance.alpha = value;
        break;
    }
    cfg.validate();

    const std::size_t cells = fleet.size() * cfg.seeds.size();
    std::vector<RunOutcome> outcomes(cells);
    parallel_for(cells, [&](std::size_t cell) {
      const Problem& problem = fleet[cell % fleet.size()];
      const std::uint64_t seed = cfg.seeds[cell / fleet.size()];
      earlystop::DecodeResult run =
          run_problem(problem, cfg, cfg.probe.variant, seed,
                      /*probes_enabled=*/true);
      RunOutcome out;
      out.correct_final = run.record.final_answer == problem.truth_label;
      out.record = run.record;
      for (const auto& ev : run.trace.events) {
        if (ev.intervention) ++out.interventions;
      }
      outcomes[cell] = std::move(out);
    });

    SweepRow row;
    row.value = value;
    double correct = 0.0, tokens = 0.0, interventions = 0.0;
    for (const auto& out : outcomes) {
      correct += out.correct_final ? 1.0 : 0.0;
      tokens += static_cast<double>(out.record.tokens_generated);
      interventions += static_cast<double>(out.interventions);
    }
    row.accuracy = correct / static_cast<double>(cells);
    row.mean_tokens = tokens / static_cast<double>(cells);
    row.mean_interventions = interventions / static_cast<double>(cells);
    rows.push_back(row);
  }
  return rows;
}

void RollbackSpec::validate() const {
  if (resamples < 1) throw ConfigError("rollback needs N >= 1");
  if (ratios.empty()) throw ConfigError("rollback needs >= 1 ratio");
  for (int k : ratios) {
    if (k < 10 || k > 80 || k % 10 != 0) {
      throw ConfigError("rollback ratios must lie in {10, 20, ..., 80}");
    }
  }
}

std::string rollback_resample_final(const lm::LmBackend& model,
                                    const lm::GenerationContext& question,
                                    const DecodeTrace& base_trace,
                                    const lm::AnswerSet& answers,
                                    std::size_t truncate_at, int ratio,
                                    std::size_t resample_index,
                                    std::uint64_t seed) {
  // Restore by replaying the stored prefix token-for-token.
  lm::GenerationContext ctx = question;
  for (std::size_t i = 0; i < truncate_at; ++i) {
    lm::append_token(ctx, base_trace.events[i].token);
  }
  const std::size_t total = base_trace.events.size();
  for (std::size_t step = truncate_at + 1; step <= total; ++step) {
    lm::RngStream rng = lm::RngStream::keyed(
        {seed, kRollbackStepTag, static_cast<std::uint64_t>(ratio),
         resample_index, step});
    const lm::TokenDistribution dist = model.next_distribution(ctx);
    lm::append_token(ctx, lm::sample_token(dist, rng));
  }
  lm::RngStream final_rng = lm::RngStream::keyed(
      {seed, kRollbackFinalTag, static_cast<std::uint64_t>(ratio),
       resample_index});
  const lm::TokenDistribution last = model.next_distribution(ctx);
  try {
    return answers.label_of(lm::sample_constrained(last, answers, final_rng));
  } catch (const ZeroMassError&) {
    return "";
  }
}

RollbackResult rollback_experiment(const lm::LmBackend& model,
                                   const lm::GenerationContext& question,
                                   const DecodeTrace& base_trace,
                                   const lm::AnswerSet& answers,
                                   const std::string& truth_label,
                                   const RollbackSpec& spec,
                                   std::uint64_t seed) {
  spec.validate();
  const std::size_t total = base_trace.events.size();
  RollbackResult result;
  double rate_sum = 0.0;
  std::size_t live_points = 0;

  for (const int ratio : spec.ratios) {
    RollbackPoint point;
    point.ratio = ratio;
    point.truncate_at = static_cast<std::size_t>(
        (static_cast<double>(ratio) / 100.0) * static_cast<double>(total));
    if (point.truncate_at == 0 || point.truncate_at >= total) {
      point.skipped = true;  // solution shorter than the rollback point
      result.points.push_back(point);
      continue;
    }
    std::vector<char> wrong(spec.resamples, 0);
    parallel_for(spec.resamples, [&](std::size_t n) {
      const std::string label = rollback_resample_final(
          model, question, base_trace, answers, point.truncate_at, ratio, n,
          seed);
      wrong[n] = label != truth_label ? 1 : 0;
    });
    point.total = spec.resamples;
    for (char w : wrong) point.wrong += w;
    point.error_rate = static_cast<double>(point.wrong) /
                       static_cast<double>(point.total);
    rate_sum += point.error_rate;
    ++live_points;
    result.points.push_back(point);
  }
  result.mean_error_rate =
      live_points == 0 ? 0.0 : rate_sum / static_cast<double>(live_points);
  return result;
}

double relative_instability(double mean_first, double mean_subs) {
  if (!(mean_subs > 0.0)) {
    throw DomainError("relative instability needs a positive subs rate");
  }
  return mean_first / mean_subs;
}

}  // namespace red::harness
