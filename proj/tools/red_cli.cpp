// Command-line front end: decoding runs, experiment sweeps, forest
// construction and metrics, branching-process simulation and bounds, and
// report emission. Exit codes: 0 success, 2 config error, 3 backend
// error, 4 parse error, 1 anything else.

#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "red/controlled_decode.hpp"
#include "red/foe/io.hpp"
#include "red/gw/simulate.hpp"
#include "red/harness/config.hpp"
#include "red/harness/experiments.hpp"
#include "red/harness/fleet.hpp"
#include "red/harness/report.hpp"
#include "red/harness/trace.hpp"
#include "red/lm/remote.hpp"

namespace {

using namespace red;

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;
constexpr int kExitParse = 4;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot open output file: " + out_path);
  out << text;
}

harness::ExperimentConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return harness::ExperimentConfig{};
  return harness::load_experiment_config(path);
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> grid;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    grid.push_back(item == "inf" ? std::numeric_limits<double>::infinity()
                                 : std::stod(item));
  }
  return grid;
}

harness::SweepParam parse_sweep_param(const std::string& name) {
  if (name == "T") return harness::SweepParam::VarianceThreshold;
  if (name == "P") return harness::SweepParam::ConsistencyFraction;
  if (name == "L") return harness::SweepParam::WindowLength;
  if (name == "K") return harness::SweepParam::ProbeInterval;
  if (name == "alpha") return harness::SweepParam::GuidanceAlpha;
  throw ConfigError("unknown sweep parameter '" + name +
                    "' (one of T, P, L, K, alpha)");
}

gw::OffspringLaw parse_law(const std::string& name) {
  if (name == "poisson") return gw::OffspringLaw::Poisson;
  if (name == "geometric") return gw::OffspringLaw::Geometric;
  if (name == "fixed") return gw::OffspringLaw::Fixed;
  throw ConfigError("unknown offspring law '" + name + "'");
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

struct DecodeArgs {
  std::string config_path;
  std::string mock_spec_path;
  std::string backend_kind = "mock";  // mock | remote (env-configured)
  std::size_t problem = 0;
  std::uint64_t seed = 1;
  std::string out_trace;
  bool verbose_vectors = false;
  bool no_exit = false;
};

int cmd_decode(const DecodeArgs& args) {
  const auto cfg = load_config_or_default(args.config_path);

  harness::Problem problem;
  if (!args.mock_spec_path.empty()) {
    problem.spec = lm::load_mock_spec(args.mock_spec_path);
    problem.truth_label = problem.spec.answer_labels.at(
        static_cast<std::size_t>(problem.spec.correct_index));
    problem.prompt = {30, 31, 32};
  } else {
    auto fleet = harness::generate_fleet(cfg.fleet, cfg.token_budget);
    if (args.problem >= fleet.size()) {
      throw ConfigError("problem index beyond the fleet size");
    }
    problem = fleet[args.problem];
  }

  std::unique_ptr<lm::LmBackend> backend;
  if (args.backend_kind == "mock") {
    backend = harness::backend_for(problem);
  } else if (args.backend_kind == "remote") {
    // Credentials and endpoint come from the environment only.
    backend = std::make_unique<lm::RemoteBackend>(lm::remote_config_from_env());
  } else {
    throw ConfigError("unknown backend '" + args.backend_kind + "'");
  }
  earlystop::ProbeConfig probe = cfg.probe;
  probe.answers = problem.spec.answer_set();
  earlystop::DecodeOptions options;
  options.token_budget = cfg.token_budget;
  options.probes_enabled = !args.no_exit;
  options.truth_label = problem.truth_label;
  options.verbose_trace_vectors = args.verbose_vectors;

  const auto result = earlystop::controlled_decode(
      *backend, lm::make_root_context(problem.prompt), probe, cfg.trigger,
      cfg.guidance, options, args.seed);

  if (!args.out_trace.empty()) {
    harness::write_trace_file(result.trace, args.out_trace);
  }
  std::cout << "problem " << problem.id << " seed " << args.seed
            << (result.record.triggered
                    ? " exited at step " +
                          std::to_string(*result.record.exit_step)
                    : " ran to the budget")
            << ", answer " << result.record.final_answer << " (truth "
            << problem.truth_label << "), tokens "
            << result.record.tokens_generated << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// foe commands
// ---------------------------------------------------------------------------

int cmd_foe_build(const std::string& annotations_path, double tau,
                  const std::string& out_path) {
  const auto annotation = foe::read_annotation_file(annotations_path);
  const auto forest = foe::build_forest(annotation.events,
                                        annotation.scorer(), tau);
  std::ostringstream out;
  foe::write_forest(forest, out);
  emit(out.str(), out_path);
  return kExitOk;
}

int cmd_foe_metrics(const std::string& forest_path,
                    const std::string& subs_path, const std::string& dataset,
                    const std::string& out_path) {
  const auto first = foe::read_forest_file(forest_path);
  harness::FoePairRow row;
  row.dataset = dataset;
  row.first = foe::static_metrics(first);
  row.repro_first = foe::repro_rate(first);
  if (!subs_path.empty()) {
    const auto subs = foe::read_forest_file(subs_path);
    row.subs = foe::static_metrics(subs);
    row.repro_subs = foe::repro_rate(subs);
  } else {
    row.subs = row.first;
    row.repro_subs = row.repro_first;
  }
  emit(harness::render_foe_pairs({row}), out_path);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gw-sim and bounds
// ---------------------------------------------------------------------------

struct GwArgs {
  double rho = 0.5;
  int horizon = 10;
  std::string profile;  // csv; empty = single deterministic root at t=1
  double kappa = 0.1;
  std::string law = "poisson";
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
  std::string sweep_config;  // file of one simulation spec per line
  std::string out_path;
};

harness::GwReportRow simulate_row(const gw::GwConfig& cfg,
                                  std::size_t trials, std::uint64_t seed,
                                  const std::string& law_name) {
  const auto stats = gw::simulate_gw(cfg, trials, seed);
  const auto bound = gw::phi_bound(cfg);
  harness::GwReportRow row;
  std::ostringstream name;
  name << "rho=" << cfg.rho << ",T=" << cfg.horizon << ",law=" << law_name;
  row.config = name.str();
  row.simulated_mean = stats.mean_total_nodes;
  row.analytic_mean = gw::expected_forest_size(cfg);
  row.bound = bound.value;
  row.margin = bound.value - stats.critical_rate;
  return row;
}

gw::GwConfig config_from_args(const GwArgs& args, const std::string& law) {
  gw::GwConfig cfg;
  cfg.rho = args.rho;
  cfg.horizon = args.horizon;
  cfg.kappa = args.kappa;
  cfg.law = parse_law(law);
  if (args.profile.empty()) {
    cfg.trigger_profile.assign(static_cast<std::size_t>(args.horizon), 0.0);
    cfg.trigger_profile[0] = 1.0;
  } else {
    cfg.trigger_profile = parse_grid(args.profile);
  }
  return cfg;
}

// Sweep file: one simulation per non-comment line, space-separated
// key=value pairs (rho, horizon, kappa, profile, law, trials, seed).
std::vector<harness::GwReportRow> gw_sweep_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open gw sweep config: " + path);
  std::vector<harness::GwReportRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream fields(line);
    GwArgs args;
    std::string field;
    bool any = false;
    while (fields >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) {
        throw ParseError("expected key=value in gw sweep line", lineno);
      }
      const std::string key = field.substr(0, eq);
      const std::string val = field.substr(eq + 1);
      any = true;
      try {
        if (key == "rho") args.rho = std::stod(val);
        else if (key == "horizon") args.horizon = std::stoi(val);
        else if (key == "kappa") args.kappa = std::stod(val);
        else if (key == "profile") args.profile = val;
        else if (key == "law") args.law = val;
        else if (key == "trials") args.trials = std::stoul(val);
        else if (key == "seed") args.seed = std::stoull(val);
        else throw ConfigError("unknown gw sweep key '" + key + "'");
      } catch (const std::invalid_argument&) {
        throw ParseError("bad value for gw sweep key '" + key + "'", lineno);
      }
    }
    if (!any) continue;
    rows.push_back(simulate_row(config_from_args(args, args.law), args.trials,
                                args.seed, args.law));
  }
  if (rows.empty()) throw ConfigError("gw sweep config has no simulations");
  return rows;
}

int cmd_gw_sim(const GwArgs& args) {
  if (!args.sweep_config.empty()) {
    emit(harness::render_gw(gw_sweep_rows(args.sweep_config)), args.out_path);
    return kExitOk;
  }
  const auto row = simulate_row(config_from_args(args, args.law), args.trials,
                                args.seed, args.law);
  emit(harness::render_gw({row}), args.out_path);
  return kExitOk;
}

struct BoundsArgs {
  std::string kind;
  double p = 0.6;
  double q = 0.3;
  double r = 0.4;
  int n = 12;
  int m = 1;
  double u = 0.6;
  double v = 0.3;
  double rho = 0.5;
  int horizon = 10;
  double kappa = 0.1;
  std::string profile;
  double p_first = 0.9;
  double phi_ext = 0.2;
};

int cmd_bounds(const BoundsArgs& args) {
  std::ostringstream out;
  out.precision(12);
  if (args.kind == "kl") {
    out << "D(" << args.u << "||" << args.v << ") = "
        << gw::binary_kl(args.u, args.v) << " nats\n";
  } else if (args.kind == "chernoff") {
    std::vector<std::vector<double>> table{
        std::vector<double>(static_cast<std::size_t>(args.m), args.q)};
    out << "Pr[wrong trigger] <= "
        << gw::chernoff_wrong_trigger_bound(args.p, table, args.n) << "\n";
  } else if (args.kind == "majority") {
    out << "Pr[mode correct] = "
        << gw::majority_correct_prob(args.n, args.p, args.r) << "\n";
  } else if (args.kind == "phi") {
    gw::GwConfig cfg;
    cfg.rho = args.rho;
    cfg.horizon = args.horizon;
    cfg.kappa = args.kappa;
    cfg.trigger_profile =
        args.profile.empty()
            ? std::vector<double>(static_cast<std::size_t>(args.horizon), 0.1)
            : parse_grid(args.profile);
    const auto b = gw::phi_bound(cfg);
    out << "Phi = " << b.value << " (clamped " << b.clamped << ")\n";
  } else if (args.kind == "misguidance") {
    out << "Pr[misguidance] <= "
        << gw::misguidance_bound(args.p_first, args.phi_ext) << "\n";
  } else {
    throw ConfigError("unknown bounds kind '" + args.kind + "'");
  }
  std::cout << out.str();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

// Quadrant table for one trace: the (h, v) series is classified against
// its own percentiles and error roles are joined from the annotation.
entropy::TriggerRateTable quadrant_table(const std::string& trace_path,
                                         const std::string& annotations_path,
                                         double tau) {
  const auto trace = harness::read_trace_file(trace_path);
  std::vector<std::pair<double, double>> series;
  series.reserve(trace.events.size());
  for (const auto& ev : trace.events) {
    series.emplace_back(ev.window.mean, ev.window.variance);
  }
  const auto classified = entropy::classify_quadrants(series);

  std::map<std::size_t, std::pair<bool, int>> error_at;
  if (!annotations_path.empty()) {
    const auto annotation = foe::read_annotation_file(annotations_path);
    const auto forest = foe::build_forest(annotation.events,
                                          annotation.scorer(), tau);
    for (const auto& e : annotation.events) {
      const std::size_t j = static_cast<std::size_t>(e.index);
      error_at[e.step] = {forest.parent[j] == 0, forest.depth[j]};
    }
  }

  std::vector<entropy::LabeledStep> steps;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    entropy::LabeledStep s;
    s.quadrant = classified.labels[i];
    const auto it = error_at.find(trace.events[i].step);
    if (it != error_at.end()) {
      s.is_error_node = true;
      s.is_root = it->second.first;
      s.node_depth = it->second.second;
    }
    steps.push_back(s);
  }
  return entropy::trigger_rates(steps);
}

int cmd_report_quadrants(const std::string& trace_path,
                         const std::string& annotations_path,
                         const std::string& trace_subs_path,
                         const std::string& annotations_subs_path, double tau,
                         const std::string& out_path) {
  const auto first = quadrant_table(trace_path, annotations_path, tau);
  entropy::TriggerRateTable subs{};
  if (!trace_subs_path.empty()) {
    subs = quadrant_table(trace_subs_path, annotations_subs_path, tau);
  }
  emit(harness::render_quadrants(first, subs), out_path);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-triggered decoding control, error-forest analytics "
               "and branching-process validation"};
  app.require_subcommand(1);

  // decode
  DecodeArgs decode_args;
  auto* decode = app.add_subcommand("decode", "run one controlled decode");
  decode->add_option("--config", decode_args.config_path,
                     "experiment config file");
  decode->add_option("--mock-spec", decode_args.mock_spec_path,
                     "mock model spec file (overrides the fleet)");
  decode->add_option("--backend", decode_args.backend_kind,
                     "mock | remote (remote reads RED_BACKEND_* env)");
  decode->add_option("--problem", decode_args.problem, "fleet problem index");
  decode->add_option("--seed", decode_args.seed, "run seed");
  decode->add_option("--out", decode_args.out_trace, "trace output path");
  decode->add_flag("--verbose-vectors", decode_args.verbose_vectors,
                   "serialize full distributions into intervention events");
  decode->add_flag("--no-exit", decode_args.no_exit,
                   "disable probing (baseline run to the budget)");

  // probe-ablate
  std::string ablate_config, ablate_out;
  auto* ablate = app.add_subcommand("probe-ablate",
                                    "IC/CP1/CPN/DC ablation table");
  ablate->add_option("--config", ablate_config, "experiment config file");
  ablate->add_option("--out", ablate_out, "output path (default stdout)");

  // sweep
  std::string sweep_config, sweep_out, sweep_param, sweep_grid;
  auto* sweep = app.add_subcommand("sweep", "hyperparameter sensitivity");
  sweep->add_option("--param", sweep_param, "one of T, P, L, K, alpha")
      ->required();
  sweep->add_option("--grid", sweep_grid, "comma-separated values")
      ->required();
  sweep->add_option("--config", sweep_config, "experiment config file");
  sweep->add_option("--out", sweep_out, "output path (default stdout)");

  // rollback
  std::string rb_config, rb_out, rb_ratios;
  std::size_t rb_problem = 0, rb_resamples = 100;
  std::uint64_t rb_seed = 1;
  auto* rollback = app.add_subcommand("rollback",
                                      "truncate-and-resample stability");
  rollback->add_option("--config", rb_config, "experiment config file");
  rollback->add_option("--problem", rb_problem, "fleet problem index");
  rollback->add_option("--seed", rb_seed, "seed");
  rollback->add_option("--ratios", rb_ratios, "subset of 10..80 (csv)");
  rollback->add_option("--resamples", rb_resamples, "N per rollback point");
  rollback->add_option("--out", rb_out, "output path (default stdout)");

  // foe-build
  std::string fb_annotations, fb_out;
  double fb_tau = 0.8;
  auto* foe_build = app.add_subcommand(
      "foe-build", "construct the forest from annotations");
  foe_build->add_option("--annotations", fb_annotations, "annotation file")
      ->required();
  foe_build->add_option("--tau", fb_tau, "normalized threshold");
  foe_build->add_option("--out", fb_out, "forest output path");

  // foe-metrics
  std::string fm_forest, fm_subs, fm_dataset = "trace", fm_out;
  auto* foe_metrics = app.add_subcommand("foe-metrics",
                                         "static + dynamic forest metrics");
  foe_metrics->add_option("--forest", fm_forest, "forest file")->required();
  foe_metrics->add_option("--forest-subs", fm_subs,
                          "optional subs forest for the paired layout");
  foe_metrics->add_option("--dataset", fm_dataset, "row label");
  foe_metrics->add_option("--out", fm_out, "output path (default stdout)");

  // gw-sim
  GwArgs gw_args;
  auto* gws = app.add_subcommand("gw-sim", "branching-process simulation");
  gws->add_option("--rho", gw_args.rho, "mean reproduction");
  gws->add_option("--horizon", gw_args.horizon, "steps");
  gws->add_option("--profile", gw_args.profile,
                  "per-step root probabilities (csv)");
  gws->add_option("--kappa", gw_args.kappa, "per-node criticality");
  gws->add_option("--law", gw_args.law, "poisson | geometric | fixed");
  gws->add_option("--trials", gw_args.trials, "Monte Carlo trials");
  gws->add_option("--seed", gw_args.seed, "seed");
  gws->add_option("--sweep-config", gw_args.sweep_config,
                  "file with one simulation spec per line");
  gws->add_option("--out", gw_args.out_path, "output path (default stdout)");

  // bounds
  BoundsArgs bounds_args;
  auto* bounds = app.add_subcommand("bounds", "evaluate analytic bounds");
  bounds->add_option("--kind", bounds_args.kind,
                     "kl | chernoff | majority | phi | misguidance")
      ->required();
  bounds->add_option("--p", bounds_args.p, "threshold / correct prob");
  bounds->add_option("--q", bounds_args.q, "wrong-answer prob");
  bounds->add_option("--r", bounds_args.r, "contender prob");
  bounds->add_option("--n", bounds_args.n, "samples per prompt");
  bounds->add_option("--m", bounds_args.m, "prompts");
  bounds->add_option("--u", bounds_args.u, "KL first argument");
  bounds->add_option("--v", bounds_args.v, "KL second argument");
  bounds->add_option("--rho", bounds_args.rho, "mean reproduction");
  bounds->add_option("--horizon", bounds_args.horizon, "steps");
  bounds->add_option("--kappa", bounds_args.kappa, "per-node criticality");
  bounds->add_option("--profile", bounds_args.profile, "root profile (csv)");
  bounds->add_option("--p-first", bounds_args.p_first,
                     "Pr[first solution correct]");
  bounds->add_option("--phi-ext", bounds_args.phi_ext,
                     "extension-phase bound");

  // report
  std::string rp_kind, rp_trace, rp_annotations, rp_trace_subs,
      rp_annotations_subs, rp_out;
  double rp_tau = 0.8;
  auto* report = app.add_subcommand("report", "emit report tables");
  report->add_option("--kind", rp_kind, "quadrants")->required();
  report->add_option("--trace", rp_trace, "decode trace file");
  report->add_option("--annotations", rp_annotations,
                     "error annotation file");
  report->add_option("--trace-subs", rp_trace_subs,
                     "optional subs trace for the paired layout");
  report->add_option("--annotations-subs", rp_annotations_subs,
                     "annotations for the subs trace");
  report->add_option("--tau", rp_tau, "normalized threshold");
  report->add_option("--out", rp_out, "output path (default stdout)");

  try {
    app.parse(argc, argv);

    if (*decode) return cmd_decode(decode_args);

    if (*ablate) {
      const auto cfg = load_config_or_default(ablate_config);
      const auto result = harness::ablation_sweep(cfg);
      emit(harness::render_ablation(result.rows), ablate_out);
      return kExitOk;
    }

    if (*sweep) {
      const auto cfg = load_config_or_default(sweep_config);
      const auto param = parse_sweep_param(sweep_param);
      const auto rows = harness::sensitivity_sweep(param,
                                                   parse_grid(sweep_grid),
                                                   cfg);
      emit(harness::render_sensitivity(param, rows), sweep_out);
      return kExitOk;
    }

    if (*rollback) {
      const auto cfg = load_config_or_default(rb_config);
      auto fleet = harness::generate_fleet(cfg.fleet, cfg.token_budget);
      if (rb_problem >= fleet.size()) {
        throw ConfigError("problem index beyond the fleet size");
      }
      const auto& problem = fleet[rb_problem];
      auto backend = harness::backend_for(problem);
      // Base trajectory: a no-exit run; instance selection requires a
      // correct base answer.
      earlystop::ProbeConfig probe = cfg.probe;
      probe.answers = problem.spec.answer_set();
      earlystop::DecodeOptions options;
      options.token_budget = cfg.token_budget;
      options.probes_enabled = false;
      options.truth_label = problem.truth_label;
      const auto base = earlystop::controlled_decode(
          *backend, lm::make_root_context(problem.prompt), probe, cfg.trigger,
          cfg.guidance, options, rb_seed);
      if (base.record.final_answer != problem.truth_label) {
        throw ConfigError(
            "base run is not correct; pick another problem or seed "
            "(instance selection)");
      }
      harness::RollbackSpec spec;
      if (!rb_ratios.empty()) {
        spec.ratios.clear();
        for (double v : parse_grid(rb_ratios)) {
          spec.ratios.push_back(static_cast<int>(v));
        }
      }
      spec.resamples = rb_resamples;
      const auto result = harness::rollback_experiment(
          *backend, lm::make_root_context(problem.prompt), base.trace,
          problem.spec.answer_set(), problem.truth_label, spec, rb_seed);
      emit(harness::render_rollback(result.points, result.mean_error_rate),
           rb_out);
      return kExitOk;
    }

    if (*foe_build) return cmd_foe_build(fb_annotations, fb_tau, fb_out);
    if (*foe_metrics) {
      return cmd_foe_metrics(fm_forest, fm_subs, fm_dataset, fm_out);
    }
    if (*gws) return cmd_gw_sim(gw_args);
    if (*bounds) return cmd_bounds(bounds_args);
    if (*report) {
      if (rp_kind != "quadrants") {
        throw ConfigError("unknown report kind '" + rp_kind + "'");
      }
      if (rp_trace.empty()) throw ConfigError("report needs --trace");
      return cmd_report_quadrants(rp_trace, rp_annotations, rp_trace_subs,
                                  rp_annotations_subs, rp_tau, rp_out);
    }
    return kExitOther;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
}
