#pragma once

/**
 * Experiment configuration: one key=value file drives the trigger,
 * guidance and probe settings plus the mock problem fleet. Backend
 * credentials come from the environment only, never from config files.
 */

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "red/controlled_decode.hpp"
#include "red/early_stop.hpp"
#include "red/entropy/window.hpp"
#include "red/guidance.hpp"

namespace red::harness {

struct FleetConfig {
  std::size_t problems = 200;
  double adversarial_fraction = 0.1;
  std::uint64_t seed = 7;
  int vocab = 64;
  // Logistic-curve parameter ranges for the monotone-growth problems.
  double alpha_min = 0.2;
  double alpha_max = 0.5;
  double tau_min_fraction = 0.15;  // of the token budget
  double tau_max_fraction = 0.35;
  double template_tau_jitter = 8.0;
};

struct ExperimentConfig {
  entropy::TriggerConfig trigger;
  guidance::GuidanceConfig guidance;
  earlystop::ProbeConfig probe;
  std::size_t token_budget = 256;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  FleetConfig fleet;

  void validate() const;
};

// Raw key=value parsing shared by every config surface. '#' starts a
// comment; blank lines are skipped.
std::map<std::string, std::string> parse_key_values(const std::string& text);

ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

// Loads the probe templates from a directory of text files (sorted by
// filename). The texts ship as assets; at mock scale each file maps onto a
// reserved token sequence, which is what this returns alongside the text.
struct ProbeTemplateAsset {
  std::string name;
  std::string text;
  std::vector<lm::Token> tokens;
};
std::vector<ProbeTemplateAsset> load_probe_templates(
    const std::string& directory);

}  // namespace red::harness
