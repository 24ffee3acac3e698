#pragma once

#include <cstddef>
#include <vector>

#include "pbtdyn/core.hpp"

namespace pbtdyn {

/// How the diffusion coefficient of the inner Langevin dynamics is chosen.
enum class NoiseMode {
  /// c = h[noise_index] (the objective's designated component).
  direct,
  /// c = sqrt(2 / beta), fixed isotropic temperature.
  temperature,
};

struct LangevinConfig {
  double dt = 0.01;
  NoiseMode noise_mode = NoiseMode::direct;
  /// Used in direct mode; falls back to the objective's noise_index.
  std::optional<std::size_t> noise_index;
  /// Used in temperature mode.
  double beta = 1.0;

  void validate() const;
};

/// Raised when the inner dynamics produce a non-finite gradient or state.
class NonFiniteError : public Error {
 public:
  NonFiniteError(int agent_id, Vec theta);
  int agent_id() const { return agent_id_; }
  const Vec& theta() const { return theta_; }

 private:
  int agent_id_;
  Vec theta_;
};

/// Diffusion coefficient c for an agent under cfg.
double diffusion_coefficient(const Agent& agent, const ObjectiveSpec& obj,
                             const LangevinConfig& cfg);

/// One explicit Euler-Maruyama step, in place:
///   theta <- theta - dt grad L(theta, h) + sqrt(dt) c xi.
/// `grad` is scratch of size theta_dim.
void langevin_step_inplace(Agent& agent, const ObjectiveSpec& obj,
                           const LangevinConfig& cfg, Stream& rng,
                           MutSpan grad);

Agent langevin_step(Agent agent, const ObjectiveSpec& obj,
                    const LangevinConfig& cfg, Stream& rng);

/// Applies `steps` Langevin steps in place.
void train_inner_inplace(Agent& agent, const ObjectiveSpec& obj,
                         const LangevinConfig& cfg, long steps, Stream& rng);

Agent train_inner(Agent agent, const ObjectiveSpec& obj,
                  const LangevinConfig& cfg, long steps, Stream& rng);

}  // namespace pbtdyn
