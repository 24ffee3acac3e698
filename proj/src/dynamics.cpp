#include "pbtdyn/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace pbtdyn {

namespace {

std::string describe_non_finite(int agent_id, const Vec& theta) {
  std::ostringstream os;
  os << "non-finite Langevin update for agent " << agent_id << " at theta=(";
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (k) os << ", ";
    os << theta[k];
  }
  os << ")";
  return os.str();
}

}  // namespace

NonFiniteError::NonFiniteError(int agent_id, Vec theta)
    : Error(describe_non_finite(agent_id, theta)),
      agent_id_(agent_id),
      theta_(std::move(theta)) {}

void LangevinConfig::validate() const {
  if (!(dt >= 0.0) || !std::isfinite(dt)) {
    throw Error("langevin: dt must be finite and non-negative");
  }
  if (noise_mode == NoiseMode::temperature && !(beta > 0.0)) {
    throw Error("langevin: beta must be positive in temperature mode");
  }
}

double diffusion_coefficient(const Agent& agent, const ObjectiveSpec& obj,
                             const LangevinConfig& cfg) {
  if (cfg.noise_mode == NoiseMode::temperature) {
    return std::sqrt(2.0 / cfg.beta);
  }
  const auto idx = cfg.noise_index ? cfg.noise_index : obj.noise_index;
  if (!idx) return 0.0;
  if (*idx >= agent.h.size()) {
    throw Error("langevin: noise index out of range for hyperparameters");
  }
  return agent.h[*idx];
}

void langevin_step_inplace(Agent& agent, const ObjectiveSpec& obj,
                           const LangevinConfig& cfg, Stream& rng,
                           MutSpan grad) {
  obj.loss_grad(agent.theta, agent.h, grad);
  const double c = diffusion_coefficient(agent, obj, cfg) * std::sqrt(cfg.dt);
  bool finite = true;
  for (std::size_t k = 0; k < agent.theta.size(); ++k) {
    finite = finite && std::isfinite(grad[k]);
    agent.theta[k] += -cfg.dt * grad[k] + c * rng.normal();
    finite = finite && std::isfinite(agent.theta[k]);
  }
  if (!finite) throw NonFiniteError(agent.id, agent.theta);
}

Agent langevin_step(Agent agent, const ObjectiveSpec& obj,
                    const LangevinConfig& cfg, Stream& rng) {
  cfg.validate();
  Vec grad(agent.theta.size());
  langevin_step_inplace(agent, obj, cfg, rng, grad);
  return agent;
}

void train_inner_inplace(Agent& agent, const ObjectiveSpec& obj,
                         const LangevinConfig& cfg, long steps, Stream& rng) {
  if (steps < 0) throw Error("train_inner: steps must be non-negative");
  Vec grad(agent.theta.size());
  for (long s = 0; s < steps; ++s) {
    langevin_step_inplace(agent, obj, cfg, rng, grad);
  }
}

Agent train_inner(Agent agent, const ObjectiveSpec& obj,
                  const LangevinConfig& cfg, long steps, Stream& rng) {
  cfg.validate();
  train_inner_inplace(agent, obj, cfg, steps, rng);
  return agent;
}

}  // namespace pbtdyn
