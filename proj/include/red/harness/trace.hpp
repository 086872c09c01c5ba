#pragma once

/**
 * Decode traces: the ordered event log of one generation run, persisted as
 * line-delimited JSON with a versioned header. Round trips are lossless -
 * every field present in memory is written and read back bit-exactly, and
 * unknown fields written by future versions are carried along opaquely.
 */

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "red/early_stop.hpp"
#include "red/guidance.hpp"
#include "red/lm/distribution.hpp"

namespace red::harness {

struct WindowStats {
  double mean = 0.0;       // h_t, nats
  double variance = 0.0;   // v_t, nats^2
  double topk_mean = 0.0;  // nats
};

/**
 * Persisted view of an intervention: step, alpha, the trigger statistics,
 * pre/post argmax, and the full probability vectors only when the event
 * was recorded under the verbose flag.
 */
struct TraceIntervention {
  std::size_t step = 0;
  double alpha = 0.0;
  double window_variance = 0.0;
  double window_topk_mean = 0.0;
  double next_entropy = 0.0;
  lm::Token pre_argmax = 0;
  lm::Token post_argmax = 0;
  std::optional<std::vector<double>> pre_probs;
  std::optional<std::vector<double>> neg_probs;
  std::optional<std::vector<double>> post_probs;
};

TraceIntervention summarize_intervention(const guidance::InterventionEvent& ev,
                                         bool verbose_vectors);

struct ExitRecord {
  std::size_t step = 0;
  std::string answer;
  std::string variant;
};

struct TraceEvent {
  std::size_t step = 0;  // 1-based token index, strictly increasing
  lm::Token token = 0;
  double entropy = 0.0;
  WindowStats window;
  std::optional<TraceIntervention> intervention;
  std::optional<earlystop::ProbeReport> probe;
  std::optional<ExitRecord> exit;
  // Unrecognized keys from a newer writer, preserved verbatim.
  nlohmann::json extra = nlohmann::json::object();
};

struct DecodeTrace {
  std::uint64_t run_seed = 0;
  std::string backend;
  std::vector<TraceEvent> events;
  nlohmann::json header_extra = nlohmann::json::object();

  void validate() const;
};

void write_trace(const DecodeTrace& trace, std::ostream& out);
void write_trace_file(const DecodeTrace& trace, const std::string& path);

// Throws ParseError (with the offending 1-based line) on malformed input.
DecodeTrace read_trace(std::istream& in);
DecodeTrace read_trace_file(const std::string& path);

bool trace_equal(const DecodeTrace& a, const DecodeTrace& b);

}  // namespace red::harness
