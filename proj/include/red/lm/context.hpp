#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "red/lm/distribution.hpp"
#include "red/lm/rng.hpp"

namespace red::lm {

/**
 * One generation branch: the full token history (prompt + generated),
 * plus lineage identifiers. Contexts are plain values; forking copies the
 * history, so nothing a child does can touch its parent.
 */
struct GenerationContext {
  std::vector<Token> history;
  std::size_t prompt_len = 0;
  std::uint64_t branch_id = 0;
  std::optional<std::uint64_t> parent_branch;

  std::size_t generated() const { return history.size() - prompt_len; }
};

inline GenerationContext make_root_context(std::vector<Token> prompt,
                                           std::uint64_t branch_id = 1) {
  GenerationContext ctx;
  ctx.prompt_len = prompt.size();
  ctx.history = std::move(prompt);
  ctx.branch_id = branch_id;
  return ctx;
}

/**
 * Child context whose history is parent-history ++ suffix. The child's
 * branch id is derived deterministically from (parent id, suffix), so two
 * runs with the same seed produce identical lineage in the trace.
 */
inline GenerationContext fork_context(const GenerationContext& parent,
                                      std::span<const Token> suffix) {
  GenerationContext child;
  child.history.reserve(parent.history.size() + suffix.size());
  child.history = parent.history;
  child.history.insert(child.history.end(), suffix.begin(), suffix.end());
  child.prompt_len = parent.prompt_len;
  child.parent_branch = parent.branch_id;
  std::uint64_t h = mix_key({parent.branch_id, suffix.size(),
                             parent.history.size()});
  for (Token t : suffix) h = splitmix64(h ^ static_cast<std::uint64_t>(t));
  child.branch_id = h;
  return child;
}

inline GenerationContext fork_context(const GenerationContext& parent,
                                      const std::vector<Token>& suffix) {
  return fork_context(parent, std::span<const Token>(suffix));
}

inline void append_token(GenerationContext& ctx, Token t) {
  ctx.history.push_back(t);
}

}  // namespace red::lm
