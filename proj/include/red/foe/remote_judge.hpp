#pragma once

/**
 * Optional remote judge: scores a (parent, child) error pair by sending
 * the few-shot judging prompt (assets/pcs_judge_prompt.txt) plus the two
 * node texts to an OpenAI-compatible chat endpoint and parsing the strict
 * one-line reply. Live calls sit outside the test surface; the reply
 * parser is exported separately so its contract stays testable.
 */

#include <string>
#include <vector>

#include "red/foe/forest.hpp"

namespace red::foe {

struct RemoteJudgeConfig {
  std::string base_url;
  std::string chat_path = "/v1/chat/completions";
  std::string model;
  std::string api_key;
  std::string prompt_asset_path;  // the few-shot judging prompt
  double timeout_seconds = 60.0;
};

// The judge must answer with exactly one number on the one-decimal grid
// [1.0, 5.0] (regex ^(?:[1-4]\.[0-9]|5\.0)$ after trimming whitespace).
// Anything else throws ScorerError with the pair attached.
double parse_pcs_reply(const std::string& reply, int i, int j);

/**
 * Builds a PairScorer over the annotated event spans. Each call issues one
 * chat request; failures surface as ScorerError so build_forest can attach
 * the offending pair.
 */
PairScorer make_remote_judge_scorer(const RemoteJudgeConfig& cfg,
                                    std::vector<ErrorEvent> events);

}  // namespace red::foe
