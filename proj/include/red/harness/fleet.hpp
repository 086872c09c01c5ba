#pragma once

/**
 * The mock problem fleet: a seeded population of monotone-growth problems
 * spanning easy (small tau) through late-converging regimes, with a
 * configurable minority of adversarial problems whose probe committees
 * lock onto a wrong answer.
 */

#include <memory>
#include <string>
#include <vector>

#include "red/harness/config.hpp"
#include "red/lm/mock.hpp"

namespace red::harness {

struct Problem {
  std::size_t id = 0;
  lm::MockModelSpec spec;
  std::string truth_label;
  bool adversarial = false;
  std::vector<lm::Token> prompt;
};

std::vector<Problem> generate_fleet(const FleetConfig& cfg,
                                    std::size_t token_budget);

std::unique_ptr<lm::LmBackend> backend_for(const Problem& p);

}  // namespace red::harness
