#include "red/harness/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace red::harness {

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string fixed_opt(const std::optional<double>& v, int decimals) {
  return v ? fixed(*v, decimals) : std::string("n/a");
}

void row(std::ostringstream& out, const std::vector<std::string>& cells,
         const std::vector<int>& widths) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << "  ";
    out << cells[i];
    const int pad = widths[i] - static_cast<int>(cells[i].size());
    for (int s = 0; s < pad; ++s) out << ' ';
  }
  out << '\n';
}

}  // namespace

std::string render_foe_pairs(const std::vector<FoePairRow>& rows) {
  std::ostringstream out;
  out << "# layout=foe-pairs decimals=3 cells=first/subs delta=arrow\n";
  const std::vector<int> widths{12, 24, 24, 24, 26};
  row(out, {"dataset", "FS", "N/T", "D/T", "Repro"}, widths);

  auto pair_cell = [](double first, double subs, bool percent_delta) {
    std::string cell = fixed(first, 3) + "/" + fixed(subs, 3);
    const double delta = subs - first;
    const char arrow = delta >= 0.0 ? '^' : 'v';
    if (percent_delta) {
      const double pct = first == 0.0 ? 0.0 : 100.0 * delta / first;
      cell += " " + std::string(1, arrow) + fixed(std::abs(pct), 1) + "%";
    } else {
      cell += " " + std::string(1, arrow) + fixed(std::abs(delta), 3);
    }
    return cell;
  };

  for (const auto& r : rows) {
    std::vector<std::string> cells;
    cells.push_back(r.dataset);
    cells.push_back(pair_cell(r.first.forest_size, r.subs.forest_size,
                              false));
    if (r.first.nodes_per_tree && r.subs.nodes_per_tree) {
      cells.push_back(pair_cell(*r.first.nodes_per_tree,
                                *r.subs.nodes_per_tree, false));
    } else {
      cells.push_back("n/a");
    }
    if (r.first.depth_per_tree && r.subs.depth_per_tree) {
      cells.push_back(pair_cell(*r.first.depth_per_tree,
                                *r.subs.depth_per_tree, false));
    } else {
      cells.push_back("n/a");
    }
    cells.push_back(pair_cell(r.repro_first, r.repro_subs, true));
    row(out, cells, widths);
  }
  return out.str();
}

std::string render_quadrants(const entropy::TriggerRateTable& first,
                             const entropy::TriggerRateTable& subs) {
  std::ostringstream out;
  out << "# layout=quadrants decimals=3\n";
  const std::vector<int> widths{8, 10, 10, 10, 10, 10, 10};
  row(out,
      {"region", "NTR_f", "RTR_f", "AND_f", "NTR_s", "RTR_s", "AND_s"},
      widths);
  const entropy::QuadrantLabel order[] = {
      entropy::QuadrantLabel::LL, entropy::QuadrantLabel::HL,
      entropy::QuadrantLabel::LH, entropy::QuadrantLabel::HH};
  for (const auto q : order) {
    const auto& f = first[static_cast<std::size_t>(q)];
    const auto& s = subs[static_cast<std::size_t>(q)];
    row(out,
        {entropy::quadrant_name(q), fixed_opt(f.ntr, 3), fixed_opt(f.rtr, 3),
         fixed_opt(f.avg_depth, 3), fixed_opt(s.ntr, 3), fixed_opt(s.rtr, 3),
         fixed_opt(s.avg_depth, 3)},
        widths);
  }
  return out.str();
}

std::string render_sensitivity(SweepParam param,
                               const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "# layout=sensitivity decimals=3 param=" << sweep_param_name(param)
      << "\n";
  const std::vector<int> widths{12, 10, 12, 14};
  row(out, {"setting", "accuracy", "mean_tokens", "interventions"}, widths);
  for (const auto& r : rows) {
    const std::string setting =
        std::string(sweep_param_name(param)) + "=" +
        (std::isinf(r.value) ? std::string("inf") : fixed(r.value, 3));
    row(out,
        {setting, fixed(r.accuracy, 3), fixed(r.mean_tokens, 3),
         fixed(r.mean_interventions, 3)},
        widths);
  }
  return out.str();
}

std::string render_ablation(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "# layout=ablation decimals=2\n";
  const std::vector<int> widths{8, 10, 10, 14, 12};
  row(out, {"variant", "ESC", "WESR", "Crisk@Agree", "mean_tokens"}, widths);
  if (rows.empty()) {
    row(out, {"n/a", "n/a", "n/a", "n/a", "n/a"}, widths);
    return out.str();
  }
  for (const auto& r : rows) {
    row(out,
        {earlystop::variant_name(r.variant), fixed(r.metrics.esc, 2),
         fixed(r.metrics.wesr, 2), fixed(r.metrics.crisk, 2),
         fixed(r.mean_tokens, 2)},
        widths);
  }
  return out.str();
}

std::string render_gw(const std::vector<GwReportRow>& rows) {
  std::ostringstream out;
  out << "# layout=gw decimals=5\n";
  const std::vector<int> widths{24, 12, 12, 12, 12};
  row(out, {"config", "simulated", "analytic", "bound", "margin"}, widths);
  if (rows.empty()) {
    row(out, {"n/a", "n/a", "n/a", "n/a", "n/a"}, widths);
    return out.str();
  }
  for (const auto& r : rows) {
    row(out,
        {r.config, fixed(r.simulated_mean, 5), fixed(r.analytic_mean, 5),
         fixed(r.bound, 5), fixed(r.margin, 5)},
        widths);
  }
  return out.str();
}

std::string render_rollback(const std::vector<RollbackPoint>& points,
                            double mean_error_rate) {
  std::ostringstream out;
  out << "# layout=rollback decimals=4\n";
  const std::vector<int> widths{8, 12, 8, 8, 10};
  row(out, {"K%", "truncate_at", "wrong", "total", "e_hat"}, widths);
  for (const auto& p : points) {
    if (p.skipped) {
      row(out,
          {std::to_string(p.ratio), std::to_string(p.truncate_at), "n/a",
           "n/a", "skipped"},
          widths);
      continue;
    }
    row(out,
        {std::to_string(p.ratio), std::to_string(p.truncate_at),
         std::to_string(p.wrong), std::to_string(p.total),
         fixed(p.error_rate, 4)},
        widths);
  }
  out << "mean_error_rate " << fixed(mean_error_rate, 4) << '\n';
  return out.str();
}

}  // namespace red::harness
