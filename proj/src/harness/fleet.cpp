#include "red/harness/fleet.hpp"

#include "red/lm/rng.hpp"

namespace red::harness {

std::vector<Problem> generate_fleet(const FleetConfig& cfg,
                                    std::size_t token_budget) {
  std::vector<Problem> fleet;
  fleet.reserve(cfg.problems);
  const std::size_t n_adversarial = static_cast<std::size_t>(
      cfg.adversarial_fraction * static_cast<double>(cfg.problems));

  for (std::size_t id = 0; id < cfg.problems; ++id) {
    lm::RngStream rng = lm::RngStream::keyed({cfg.seed, 0xF1EE7ULL, id});
    Problem p;
    p.id = id;
    p.adversarial = id < n_adversarial;

    lm::MockModelSpec spec;
    spec.kind = lm::MockKind::MonotoneGrowth;
    spec.vocab = cfg.vocab;
    spec.seed = rng.next_u64();
    spec.alpha = cfg.alpha_min +
                 rng.next_double() * (cfg.alpha_max - cfg.alpha_min);
    const double budget = static_cast<double>(token_budget);
    spec.tau = budget * (cfg.tau_min_fraction +
                         rng.next_double() *
                             (cfg.tau_max_fraction - cfg.tau_min_fraction));
    spec.template_alpha.assign(spec.probe_templates.size(), spec.alpha);
    spec.template_tau.clear();
    for (std::size_t m = 0; m < spec.probe_templates.size(); ++m) {
      const double jitter =
          (rng.next_double() * 2.0 - 1.0) * cfg.template_tau_jitter;
      spec.template_tau.push_back(std::max(1.0, spec.tau + jitter));
    }
    spec.correct_index =
        static_cast<int>(rng.next_below(spec.answer_tokens.size()));
    spec.adversarial = p.adversarial;
    if (p.adversarial) {
      spec.wrong_index = (spec.correct_index + 1) %
                         static_cast<int>(spec.answer_tokens.size());
    }
    spec.validate();

    p.truth_label = spec.answer_labels[static_cast<std::size_t>(
        spec.correct_index)];
    // Short synthetic question prefix; distinct per problem.
    p.prompt = {static_cast<lm::Token>(5 + id % 16),
                static_cast<lm::Token>(21 + id % 8),
                static_cast<lm::Token>(30 + id % 4)};
    p.spec = std::move(spec);
    fleet.push_back(std::move(p));
  }
  return fleet;
}

std::unique_ptr<lm::LmBackend> backend_for(const Problem& p) {
  return lm::make_mock_backend(p.spec);
}

}  // namespace red::harness
