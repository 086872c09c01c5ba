#pragma once

#include "red/lm/context.hpp"
#include "red/lm/distribution.hpp"

namespace red::lm {

/**
 * Abstract language-model backend.
 *
 * next_distribution must be a pure function of the context (and the
 * backend's immutable construction state), so it is safe to call from any
 * number of workers concurrently. Mock backends never fail; remote
 * backends surface transport errors as BackendError.
 *
 * supports_full_distribution() is false for backends that only expose
 * top-k log-probabilities; operations that need the full vocabulary
 * (logit guidance) must reject such backends with CapabilityError.
 */
class LmBackend {
 public:
  virtual ~LmBackend() = default;

  virtual TokenDistribution next_distribution(
      const GenerationContext& ctx) const = 0;

  virtual bool supports_full_distribution() const = 0;

  virtual int vocab_size() const = 0;

  // Short label recorded in trace headers.
  virtual const char* backend_name() const = 0;
};

}  // namespace red::lm
