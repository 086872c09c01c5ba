#include "red/harness/trace.hpp"

#include <fstream>
#include <sstream>

#include "red/errors.hpp"

namespace red::harness {

namespace {

using nlohmann::json;

constexpr int kTraceVersion = 1;

const char* const kKnownEventKeys[] = {"step",  "token", "entropy", "window",
                                       "ivn",   "probe", "exit"};

json intervention_to_json(const TraceIntervention& ev) {
  json j{{"step", ev.step},
         {"alpha", ev.alpha},
         {"v", ev.window_variance},
         {"topk", ev.window_topk_mean},
         {"next_h", ev.next_entropy},
         {"pre_argmax", ev.pre_argmax},
         {"post_argmax", ev.post_argmax}};
  if (ev.pre_probs) j["pre"] = *ev.pre_probs;
  if (ev.neg_probs) j["neg"] = *ev.neg_probs;
  if (ev.post_probs) j["post"] = *ev.post_probs;
  return j;
}

TraceIntervention intervention_from_json(const json& j) {
  TraceIntervention ev;
  ev.step = j.at("step").get<std::size_t>();
  ev.alpha = j.at("alpha").get<double>();
  ev.window_variance = j.at("v").get<double>();
  ev.window_topk_mean = j.at("topk").get<double>();
  ev.next_entropy = j.at("next_h").get<double>();
  ev.pre_argmax = j.at("pre_argmax").get<lm::Token>();
  ev.post_argmax = j.at("post_argmax").get<lm::Token>();
  if (j.contains("pre")) ev.pre_probs = j.at("pre").get<std::vector<double>>();
  if (j.contains("neg")) ev.neg_probs = j.at("neg").get<std::vector<double>>();
  if (j.contains("post")) {
    ev.post_probs = j.at("post").get<std::vector<double>>();
  }
  return ev;
}

json probe_to_json(const earlystop::ProbeReport& p) {
  json templates = json::array();
  for (const auto& t : p.per_template) {
    json tj{{"hist", t.histogram},
            {"fraction", t.mode_fraction},
            {"abstained", t.abstained}};
    if (t.mode) tj["mode"] = *t.mode;
    if (t.first_draw) tj["first"] = *t.first_draw;
    templates.push_back(std::move(tj));
  }
  return json{{"checkpoint", p.checkpoint},
              {"templates", std::move(templates)},
              {"exit", p.verdict == earlystop::ProbeVerdict::Exit},
              {"reason", static_cast<int>(p.reason)},
              {"ic", p.ic_exit},
              {"cp1", p.cp1_exit},
              {"cpn", p.cpn_exit},
              {"dc", p.dc_exit}};
}

earlystop::ProbeReport probe_from_json(const json& j) {
  earlystop::ProbeReport p;
  p.checkpoint = j.at("checkpoint").get<std::size_t>();
  for (const auto& tj : j.at("templates")) {
    earlystop::TemplateProbe t;
    t.histogram = tj.at("hist").get<std::map<std::string, int>>();
    t.mode_fraction = tj.at("fraction").get<double>();
    t.abstained = tj.at("abstained").get<bool>();
    if (tj.contains("mode")) t.mode = tj.at("mode").get<std::string>();
    if (tj.contains("first")) t.first_draw = tj.at("first").get<std::string>();
    p.per_template.push_back(std::move(t));
  }
  p.verdict = j.at("exit").get<bool>() ? earlystop::ProbeVerdict::Exit
                                       : earlystop::ProbeVerdict::Continue;
  p.reason = static_cast<earlystop::ContinueReason>(j.at("reason").get<int>());
  p.ic_exit = j.at("ic").get<bool>();
  p.cp1_exit = j.at("cp1").get<bool>();
  p.cpn_exit = j.at("cpn").get<bool>();
  p.dc_exit = j.at("dc").get<bool>();
  return p;
}

bool is_known_event_key(const std::string& key) {
  for (const char* k : kKnownEventKeys) {
    if (key == k) return true;
  }
  return false;
}

}  // namespace

TraceIntervention summarize_intervention(const guidance::InterventionEvent& ev,
                                         bool verbose_vectors) {
  TraceIntervention out;
  out.step = ev.step;
  out.alpha = ev.alpha;
  out.window_variance = ev.window_variance;
  out.window_topk_mean = ev.window_topk_mean;
  out.next_entropy = ev.next_entropy;
  out.pre_argmax = ev.pre_dist.argmax();
  out.post_argmax = ev.post_dist.argmax();
  if (verbose_vectors) {
    out.pre_probs = ev.pre_dist.probs;
    out.neg_probs = ev.neg_dist.probs;
    out.post_probs = ev.post_dist.probs;
  }
  return out;
}

void DecodeTrace::validate() const {
  std::size_t prev = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& ev = events[i];
    if (ev.step <= prev) {
      throw DomainError("trace steps must be strictly increasing");
    }
    prev = ev.step;
    if (ev.exit && i + 1 != events.size()) {
      throw DomainError("exit record must terminate the trace");
    }
  }
}

void write_trace(const DecodeTrace& trace, std::ostream& out) {
  trace.validate();
  json header = trace.header_extra;
  header["format"] = "red-trace";
  header["version"] = kTraceVersion;
  header["run_seed"] = trace.run_seed;
  header["backend"] = trace.backend;
  out << header.dump() << '\n';
  for (const auto& ev : trace.events) {
    json j = ev.extra;  // unknown fields first, known fields overwrite
    j["step"] = ev.step;
    j["token"] = ev.token;
    j["entropy"] = ev.entropy;
    j["window"] = json{{"h", ev.window.mean},
                       {"v", ev.window.variance},
                       {"topk", ev.window.topk_mean}};
    if (ev.intervention) j["ivn"] = intervention_to_json(*ev.intervention);
    if (ev.probe) j["probe"] = probe_to_json(*ev.probe);
    if (ev.exit) {
      j["exit"] = json{{"step", ev.exit->step},
                       {"answer", ev.exit->answer},
                       {"variant", ev.exit->variant}};
    }
    out << j.dump() << '\n';
  }
}

void write_trace_file(const DecodeTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open trace file for write: " + path);
  write_trace(trace, out);
}

DecodeTrace read_trace(std::istream& in) {
  DecodeTrace trace;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed trace line: ") + e.what(),
                       lineno);
    }
    if (!have_header) {
      if (!j.is_object() || !j.contains("format") ||
          j.at("format") != "red-trace") {
        throw ParseError("missing red-trace header", lineno);
      }
      trace.run_seed = j.value("run_seed", std::uint64_t{0});
      trace.backend = j.value("backend", std::string());
      j.erase("format");
      j.erase("version");
      j.erase("run_seed");
      j.erase("backend");
      trace.header_extra = std::move(j);
      have_header = true;
      continue;
    }
    TraceEvent ev;
    try {
      ev.step = j.at("step").get<std::size_t>();
      ev.token = j.at("token").get<lm::Token>();
      ev.entropy = j.at("entropy").get<double>();
      const auto& w = j.at("window");
      ev.window.mean = w.at("h").get<double>();
      ev.window.variance = w.at("v").get<double>();
      ev.window.topk_mean = w.at("topk").get<double>();
      if (j.contains("ivn")) {
        ev.intervention = intervention_from_json(j.at("ivn"));
      }
      if (j.contains("probe")) ev.probe = probe_from_json(j.at("probe"));
      if (j.contains("exit")) {
        ExitRecord ex;
        ex.step = j.at("exit").at("step").get<std::size_t>();
        ex.answer = j.at("exit").at("answer").get<std::string>();
        ex.variant = j.at("exit").at("variant").get<std::string>();
        ev.exit = std::move(ex);
      }
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad trace event: ") + e.what(), lineno);
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!is_known_event_key(it.key())) ev.extra[it.key()] = it.value();
    }
    trace.events.push_back(std::move(ev));
  }
  if (!have_header) {
    throw ParseError("trace file is empty (no header)",
                     lineno == 0 ? 1 : lineno);
  }
  trace.validate();
  return trace;
}

DecodeTrace read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file for read: " + path);
  return read_trace(in);
}

bool trace_equal(const DecodeTrace& a, const DecodeTrace& b) {
  std::ostringstream sa, sb;
  write_trace(a, sa);
  write_trace(b, sb);
  return sa.str() == sb.str();
}

}  // namespace red::harness
