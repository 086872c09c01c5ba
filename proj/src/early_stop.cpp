#include "red/early_stop.hpp"

#include <algorithm>

#include "red/lm/rng.hpp"

namespace red::earlystop {

namespace {

// Mode with lexicographically-smallest tie break; std::map iteration order
// makes the first maximal entry exactly that.
void fill_mode(TemplateProbe& probe, std::size_t n) {
  int best = 0;
  for (const auto& [label, count] : probe.histogram) {
    if (count > best) {
      best = count;
      probe.mode = label;
    }
  }
  probe.mode_fraction =
      n == 0 ? 0.0 : static_cast<double>(best) / static_cast<double>(n);
}

}  // namespace

ProbeReport run_probe(const lm::LmBackend& model,
                      const lm::GenerationContext& ctx,
                      const ProbeConfig& cfg, std::uint64_t probe_key) {
  cfg.validate();
  cfg.answers.validate(model.vocab_size());
  ProbeReport report;
  report.checkpoint = ctx.generated();
  report.per_template.resize(cfg.templates.size());

  for (std::size_t m = 0; m < cfg.templates.size(); ++m) {
    auto& probe = report.per_template[m];
    const lm::GenerationContext fork = lm::fork_context(ctx,
                                                        cfg.templates[m]);
    try {
      const lm::TokenDistribution dist = model.next_distribution(fork);
      for (std::size_t n = 0; n < cfg.samples_per_template; ++n) {
        lm::RngStream rng = lm::RngStream::keyed({probe_key, m, n});
        const lm::Token tok = lm::sample_constrained(dist, cfg.answers, rng);
        const std::string& label = cfg.answers.label_of(tok);
        ++probe.histogram[label];
        if (n == 0) probe.first_draw = label;
      }
      fill_mode(probe, cfg.samples_per_template);
    } catch (const ZeroMassError&) {
      probe = TemplateProbe{};
      probe.abstained = true;
    }
  }

  report.verdict = dual_consistency(report, cfg.consistency_fraction,
                                    &report.reason);
  report.dc_exit = report.verdict == ProbeVerdict::Exit;
  report.cpn_exit = variant_exit(report, ProbeVariant::CPN,
                                 cfg.consistency_fraction);
  report.cp1_exit = variant_exit(report, ProbeVariant::CP1,
                                 cfg.consistency_fraction);
  report.ic_exit = variant_exit(report, ProbeVariant::IC,
                                cfg.consistency_fraction);
  return report;
}

ProbeVerdict dual_consistency(const ProbeReport& report, double p_fraction,
                              ContinueReason* reason) {
  auto fail = [&](ContinueReason r) {
    if (reason) *reason = r;
    return ProbeVerdict::Continue;
  };
  for (const auto& probe : report.per_template) {
    if (probe.abstained) return fail(ContinueReason::Abstain);
    if (probe.mode_fraction < p_fraction) {
      return fail(ContinueReason::LowFraction);
    }
  }
  const auto& first_mode = report.per_template.front().mode;
  for (const auto& probe : report.per_template) {
    if (probe.mode != first_mode) return fail(ContinueReason::CrossDisagree);
  }
  if (reason) *reason = ContinueReason::None;
  return ProbeVerdict::Exit;
}

bool variant_exit(const ProbeReport& report, ProbeVariant variant,
                  double p_fraction) {
  const auto& probes = report.per_template;
  switch (variant) {
    case ProbeVariant::IC: {
      // Single-prompt fraction test on the first (or only) template.
      const auto& p = probes.front();
      return !p.abstained && p.mode_fraction >= p_fraction;
    }
    case ProbeVariant::CP1: {
      // All single draws (first sample per template) present and equal.
      const auto& first = probes.front().first_draw;
      if (!first) return false;
      return std::all_of(probes.begin(), probes.end(),
                         [&](const TemplateProbe& p) {
                           return p.first_draw == first;
                         });
    }
    case ProbeVariant::CPN: {
      const auto& mode = probes.front().mode;
      if (!mode) return false;
      return std::all_of(probes.begin(), probes.end(),
                         [&](const TemplateProbe& p) {
                           return !p.abstained && p.mode == mode;
                         });
    }
    case ProbeVariant::DC:
      return dual_consistency(report, p_fraction) == ProbeVerdict::Exit;
  }
  return false;
}

std::optional<std::string> agreed_answer(const ProbeReport& report,
                                         ProbeVariant variant) {
  if (variant == ProbeVariant::CP1) return report.per_template.front().first_draw;
  return report.per_template.front().mode;
}

RunMetrics run_metrics(const std::vector<RunRecord>& records) {
  if (records.empty()) throw DomainError("run_metrics on empty record set");
  double triggers = 0.0;
  double wrong_triggers = 0.0;
  for (const auto& r : records) {
    if (r.triggered) {
      triggers += 1.0;
      if (r.wrong) wrong_triggers += 1.0;
    }
  }
  const double d = static_cast<double>(records.size());
  RunMetrics m;
  m.esc = 100.0 * triggers / d;
  m.wesr = 100.0 * wrong_triggers / d;
  m.crisk = 100.0 * wrong_triggers / (triggers + kMetricsEpsilon);
  return m;
}

}  // namespace red::earlystop
