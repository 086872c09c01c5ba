#include "red/harness/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "red/errors.hpp"

namespace red::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("expected key = value", lineno);
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void ExperimentConfig::validate() const {
  trigger.validate();
  guidance.validate();
  probe.validate();
  if (seeds.empty()) throw ConfigError("need at least one seed");
  if (!(fleet.adversarial_fraction >= 0.0 &&
        fleet.adversarial_fraction <= 1.0)) {
    throw ConfigError("adversarial fraction must be in [0, 1]");
  }
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig cfg;
  for (const auto& [key, val] : parse_key_values(text)) {
    try {
      if (key == "window_length") {
        cfg.trigger.window_length = std::stoul(val);
        cfg.trigger.cooldown = cfg.trigger.window_length;
      } else if (key == "variance_threshold") {
        cfg.trigger.variance_threshold =
            val == "inf" ? std::numeric_limits<double>::infinity()
                         : std::stod(val);
      } else if (key == "top_k") {
        cfg.trigger.top_k = std::stoul(val);
      } else if (key == "cooldown") {
        cfg.trigger.cooldown = std::stoul(val);
      } else if (key == "alpha") {
        cfg.guidance.alpha = std::stod(val);
      } else if (key == "conventional_guidance") {
        cfg.guidance.conventional_form = (val == "true" || val == "1");
      } else if (key == "probe_interval") {
        cfg.probe.interval = std::stoul(val);
      } else if (key == "probe_templates") {
        cfg.probe.templates.clear();
        for (const auto& asset : load_probe_templates(val)) {
          cfg.probe.templates.push_back(asset.tokens);
        }
      } else if (key == "probe_samples") {
        cfg.probe.samples_per_template = std::stoul(val);
      } else if (key == "consistency_fraction") {
        cfg.probe.consistency_fraction = std::stod(val);
      } else if (key == "variant") {
        if (val == "IC") cfg.probe.variant = earlystop::ProbeVariant::IC;
        else if (val == "CP1") cfg.probe.variant = earlystop::ProbeVariant::CP1;
        else if (val == "CPN") cfg.probe.variant = earlystop::ProbeVariant::CPN;
        else if (val == "DC") cfg.probe.variant = earlystop::ProbeVariant::DC;
        else throw ConfigError("unknown probe variant '" + val + "'");
      } else if (key == "token_budget") {
        cfg.token_budget = std::stoul(val);
      } else if (key == "seeds") {
        cfg.seeds.clear();
        for (const auto& s : split_csv(val)) cfg.seeds.push_back(std::stoull(s));
      } else if (key == "fleet_problems") {
        cfg.fleet.problems = std::stoul(val);
      } else if (key == "fleet_adversarial_fraction") {
        cfg.fleet.adversarial_fraction = std::stod(val);
      } else if (key == "fleet_seed") {
        cfg.fleet.seed = std::stoull(val);
      } else if (key == "fleet_alpha_min") {
        cfg.fleet.alpha_min = std::stod(val);
      } else if (key == "fleet_alpha_max") {
        cfg.fleet.alpha_max = std::stod(val);
      } else if (key == "fleet_tau_min_fraction") {
        cfg.fleet.tau_min_fraction = std::stod(val);
      } else if (key == "fleet_tau_max_fraction") {
        cfg.fleet.tau_max_fraction = std::stod(val);
      } else {
        throw ConfigError("unknown experiment config key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad value for config key '" + key + "'");
    } catch (const std::out_of_range&) {
      throw ConfigError("value out of range for config key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

std::vector<ProbeTemplateAsset> load_probe_templates(
    const std::string& directory) {
  namespace fs = std::filesystem;
  std::vector<ProbeTemplateAsset> out;
  if (!fs::is_directory(directory)) {
    throw ConfigError("probe template directory not found: " + directory);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw ConfigError("no .txt templates in " + directory);
  }
  for (std::size_t m = 0; m < files.size(); ++m) {
    std::ifstream in(files[m]);
    std::stringstream ss;
    ss << in.rdbuf();
    ProbeTemplateAsset asset;
    asset.name = files[m].stem().string();
    asset.text = ss.str();
    // Reserved-id encoding, length-normalized (two control tokens each).
    asset.tokens = {static_cast<lm::Token>(40 + m),
                    static_cast<lm::Token>(50 + m)};
    out.push_back(std::move(asset));
  }
  return out;
}

}  // namespace red::harness
