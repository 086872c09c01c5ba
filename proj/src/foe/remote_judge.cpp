#include "red/foe/remote_judge.hpp"

#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "red/errors.hpp"

namespace red::foe {

using nlohmann::json;

double parse_pcs_reply(const std::string& reply, int i, int j) {
  std::string trimmed = reply;
  const auto b = trimmed.find_first_not_of(" \t\r\n");
  const auto e = trimmed.find_last_not_of(" \t\r\n");
  if (b == std::string::npos) {
    throw ScorerError("judge returned an empty reply", i, j);
  }
  trimmed = trimmed.substr(b, e - b + 1);
  // ^(?:[1-4]\.[0-9]|5\.0)$
  const bool shape_ok =
      trimmed.size() == 3 && trimmed[1] == '.' && trimmed[0] >= '1' &&
      trimmed[0] <= '5' && trimmed[2] >= '0' && trimmed[2] <= '9' &&
      !(trimmed[0] == '5' && trimmed[2] != '0');
  if (!shape_ok) {
    throw ScorerError("judge reply '" + trimmed +
                          "' is not a one-decimal score in [1.0, 5.0]",
                      i, j);
  }
  return (trimmed[0] - '0') + 0.1 * (trimmed[2] - '0');
}

PairScorer make_remote_judge_scorer(const RemoteJudgeConfig& cfg,
                                    std::vector<ErrorEvent> events) {
  if (cfg.base_url.empty()) throw ConfigError("remote judge needs a URL");
  std::ifstream prompt_in(cfg.prompt_asset_path);
  if (!prompt_in) {
    throw ConfigError("cannot open judge prompt asset: " +
                      cfg.prompt_asset_path);
  }
  std::stringstream prompt_ss;
  prompt_ss << prompt_in.rdbuf();
  const std::string system_prompt = prompt_ss.str();

  return [cfg, system_prompt, events = std::move(events)](int i, int j) {
    const auto& parent = events.at(static_cast<std::size_t>(i) - 1);
    const auto& child = events.at(static_cast<std::size_t>(j) - 1);
    std::ostringstream user;
    user << "### CANDIDATE_PARENT_NODE\n" << parent.span << "\n\n"
         << "### CHILD_NODE\n" << child.span << "\n";

    httplib::Client client(cfg.base_url);
    client.set_read_timeout(static_cast<time_t>(cfg.timeout_seconds), 0);
    httplib::Headers headers;
    if (!cfg.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + cfg.api_key);
    }
    const json req{
        {"model", cfg.model},
        {"temperature", 0.0},
        {"messages",
         json::array({json{{"role", "system"}, {"content", system_prompt}},
                      json{{"role", "user"}, {"content", user.str()}}})}};
    auto res = client.Post(cfg.chat_path, headers, req.dump(),
                           "application/json");
    if (!res || res->status != 200) {
      throw ScorerError("judge request failed: " +
                            (res ? "HTTP " + std::to_string(res->status)
                                 : httplib::to_string(res.error())),
                        i, j);
    }
    try {
      const auto body = json::parse(res->body);
      const std::string reply =
          body.at("choices").at(0).at("message").at("content")
              .get<std::string>();
      return parse_pcs_reply(reply, i, j);
    } catch (const json::exception& e) {
      throw ScorerError(std::string("unparseable judge response: ") +
                            e.what(),
                        i, j);
    }
  };
}

}  // namespace red::foe
