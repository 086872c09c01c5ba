#include "red/lm/remote.hpp"

#include <cmath>
#include <cstdlib>

#include "httplib.h"
#include "json.hpp"
#include "red/errors.hpp"

namespace red::lm {

using nlohmann::json;

void RemoteBackendConfig::validate() const {
  if (base_url.empty()) throw ConfigError("remote backend needs a base URL");
  if (vocab < 2) throw ConfigError("remote backend needs vocab >= 2");
  if (top_k < 1) throw ConfigError("remote backend needs top_k >= 1");
}

RemoteBackendConfig remote_config_from_env(RemoteBackendConfig base) {
  if (const char* v = std::getenv("RED_BACKEND_URL")) base.base_url = v;
  if (const char* v = std::getenv("RED_BACKEND_MODEL")) base.model = v;
  if (const char* v = std::getenv("RED_BACKEND_API_KEY")) base.api_key = v;
  if (const char* v = std::getenv("RED_BACKEND_VOCAB")) {
    base.vocab = std::atoi(v);
  }
  if (const char* v = std::getenv("RED_BACKEND_TOPK")) {
    base.top_k = std::atoi(v);
  }
  return base;
}

RemoteBackend::RemoteBackend(RemoteBackendConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
}

TokenDistribution parse_top_logprobs_response(const std::string& body,
                                              int vocab) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("unparseable completion response: ") +
                       e.what());
  }
  try {
    const auto& choice = j.at("choices").at(0);
    const auto& top = choice.at("logprobs").at("top_logprobs").at(0);
    std::vector<double> w(static_cast<std::size_t>(vocab), 0.0);
    for (auto it = top.begin(); it != top.end(); ++it) {
      // Keys are token ids rendered as strings by servers that support
      // token-id prompts; anything else is skipped.
      char* end = nullptr;
      const long id = std::strtol(it.key().c_str(), &end, 10);
      if (end == it.key().c_str() || *end != '\0') continue;
      if (id < 0 || id >= vocab) continue;
      w[static_cast<std::size_t>(id)] = std::exp(it.value().get<double>());
    }
    return TokenDistribution::from_weights(std::move(w));
  } catch (const json::exception& e) {
    throw BackendError(std::string("completion response missing logprobs: ") +
                       e.what());
  } catch (const DomainError&) {
    throw BackendError("completion response carried no usable token mass");
  }
}

TokenDistribution RemoteBackend::next_distribution(
    const GenerationContext& ctx) const {
  httplib::Client client(cfg_.base_url);
  client.set_read_timeout(static_cast<time_t>(cfg_.timeout_seconds), 0);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + cfg_.api_key);
  }

  json req{{"model", cfg_.model},
           {"prompt", json::array({json(ctx.history)})},
           {"max_tokens", 1},
           {"logprobs", cfg_.top_k},
           {"temperature", 0.0}};

  auto res = client.Post(cfg_.completion_path, headers, req.dump(),
                         "application/json");
  if (!res) {
    throw BackendError("completion request failed: " +
                       httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw BackendError("completion endpoint returned HTTP " +
                       std::to_string(res->status) + ": " + res->body);
  }
  return parse_top_logprobs_response(res->body, cfg_.vocab);
}

}  // namespace red::lm
