#pragma once

/**
 * HTTP client for an OpenAI-compatible completion endpoint that returns
 * per-token top-k log-probabilities. The prompt is sent as the raw token-id
 * array (token ids are opaque here; no tokenizer). Because only the top k
 * entries come back, this backend reports supports_full_distribution() ==
 * false and full-vocabulary operations (guidance) must reject it.
 */

#include <optional>
#include <string>

#include "red/lm/backend.hpp"

namespace red::lm {

struct RemoteBackendConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8080
  std::string completion_path = "/v1/completions";
  std::string model;
  std::string api_key;  // empty = no Authorization header
  int vocab = 0;
  int top_k = 20;
  double timeout_seconds = 30.0;

  void validate() const;
};

// Reads RED_BACKEND_URL, RED_BACKEND_MODEL, RED_BACKEND_API_KEY,
// RED_BACKEND_VOCAB and RED_BACKEND_TOPK; unset keys keep the defaults
// already present in `base`.
RemoteBackendConfig remote_config_from_env(RemoteBackendConfig base = {});

class RemoteBackend final : public LmBackend {
 public:
  explicit RemoteBackend(RemoteBackendConfig cfg);

  // Issues one completion request (max_tokens = 1, logprobs = top_k) and
  // spreads exp(logprob) mass over the returned token ids, renormalized.
  // Transport and protocol failures surface as BackendError verbatim.
  TokenDistribution next_distribution(
      const GenerationContext& ctx) const override;

  bool supports_full_distribution() const override { return false; }
  int vocab_size() const override { return cfg_.vocab; }
  const char* backend_name() const override { return "remote"; }

 private:
  RemoteBackendConfig cfg_;
};

// Exposed for tests: parses a completion-response body into a distribution.
TokenDistribution parse_top_logprobs_response(const std::string& body,
                                              int vocab);

}  // namespace red::lm
