#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "pbtdyn/core.hpp"
#include "pbtdyn/effective_fitness.hpp"

namespace pbtdyn::cartpole {

struct CartPoleState {
  double x = 0.0;
  double x_dot = 0.0;
  double phi = 0.0;
  double phi_dot = 0.0;
};

/// Classic control constants.
struct CartPoleParams {
  double gravity = 9.8;
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double half_length = 0.5;
  double force = 10.0;
  double dt = 0.02;
  double x_threshold = 2.4;
  double phi_threshold = 0.2095;
};

struct StepResult {
  CartPoleState state;
  double reward = 1.0;
  bool done = false;
};

bool out_of_bounds(const CartPoleState& s, const CartPoleParams& p = {});

/// One semi-implicit Euler step pushing left (0) or right (1). Reward is 1 on
/// every step, the failing one included. A state already out of bounds is
/// reported done without moving.
StepResult env_step(const CartPoleState& state, int action, const CartPoleParams& p = {});

/// Episode wrapper with a reward cap. `terminal` marks failure, `truncated`
/// marks hitting the cap; only the former stops bootstrapping.
class CartPoleEnv {
 public:
  explicit CartPoleEnv(int reward_cap = 100, CartPoleParams params = {});

  void reset(Stream& rng);
  struct Outcome {
    double reward;
    bool terminal;
    bool truncated;
  };
  Outcome step(int action);

  const CartPoleState& state() const { return state_; }
  std::array<double, 4> observation() const;
  int episode_steps() const { return steps_; }
  int reward_cap() const { return cap_; }

 private:
  CartPoleParams params_;
  CartPoleState state_{};
  int steps_ = 0;
  int cap_;
};

/// p_end + (p_start - p_end) exp(-steps / p_decay)
double epsilon(double total_steps, double p_start = 1.0, double p_end = 0.01,
               double p_decay = 1000.0);

/// 4 -> hidden -> hidden -> 2 ReLU network stored as one flat vector.
class QNetwork {
 public:
  static constexpr int kIn = 4;
  static constexpr int kOut = 2;

  explicit QNetwork(int hidden = 64);

  /// PyTorch-style U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init(Stream& rng);

  int hidden() const { return hidden_; }
  Eigen::Index size() const { return params_.size(); }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  /// Q values, one column per input column.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  std::array<double, 2> q_values(const std::array<double, 4>& obs) const;
  int greedy_action(const std::array<double, 4>& obs) const;

  struct Cache {
    Eigen::MatrixXd z1, a1, z2, a2, q;
  };
  void forward(const Eigen::MatrixXd& x, Cache& cache) const;
  /// Accumulates parameter gradients for dL/dq into grad (same layout).
  void backward(const Eigen::MatrixXd& x, const Cache& cache, const Eigen::MatrixXd& dq,
                Eigen::VectorXd& grad) const;

 private:
  int hidden_;
  Eigen::VectorXd params_;
};

struct Transition {
  std::array<double, 4> s{};
  int a = 0;
  double r = 0.0;
  std::array<double, 4> s2{};
  /// Failure; a capped episode is not done for bootstrapping purposes.
  bool done = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10000);

  void push(const Transition& t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return data_.at(i); }

  /// `n` distinct indices drawn uniformly (Floyd's algorithm).
  std::vector<std::size_t> sample_indices(std::size_t n, Stream& rng) const;
  std::vector<Transition> sample(std::size_t n, Stream& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> data_;
};

/// Mean squared TD error (r + gamma max_a' Q_target(s', a') - Q(s, a))^2 and its
/// gradient with respect to the online parameters.
double td_loss_and_gradient(const QNetwork& online, const QNetwork& target,
                            const std::vector<Transition>& batch, double gamma,
                            Eigen::VectorXd& grad);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Online network, frozen target and optimizer state.
struct DqnLearner {
  QNetwork online;
  QNetwork target;
  AdamState adam;
  long updates = 0;
  int target_sync = 200;

  explicit DqnLearner(int hidden = 64);
  void init(Stream& rng);
};

/// One Adam step on the TD loss; syncs the target every target_sync updates.
/// Throws on a non-finite loss.
double dqn_update(DqnLearner& learner, const std::vector<Transition>& batch,
                  double gamma, double lr);

/// Hyperparameter order: learning rate, p_decay, batch size.
SearchBox hyperparameter_box();

struct CartPoleConfig {
  std::size_t population = 20;
  int steps_per_generation = 300;
  int reward_cap = 100;
  std::size_t window = 5;
  double sigma = 0.1;
  int generations = 40;
  std::uint64_t seed = 1;
  double gamma = 0.99;
  double p_start = 1.0;
  double p_end = 0.01;
  std::size_t buffer_capacity = 10000;
  std::size_t warmup = 500;
  int target_sync = 200;
  int hidden = 64;
  double truncation_fraction = 0.2;
  unsigned threads = 1;
  /// Every agent draws from the same streams (for determinism checks).
  bool clone_streams = false;

  void validate() const;
};

struct CartPoleRecord {
  int generation = 0;
  /// Mean of the five best per-agent generation rewards.
  double top5_mean_reward = 0.0;
  double pop_mean_reward = 0.0;
  Vec mean_h;
  Vec std_h;
  std::size_t episodes = 0;
};

struct RlAgent {
  int id = 0;
  Vec h;
  DqnLearner learner;
  ReplayBuffer buffer;
  CartPoleEnv env;
  long total_steps = 0;
  double episode_return = 0.0;
  FitnessHistory history;
  std::vector<double> generation_episodes;

  RlAgent(int id, const CartPoleConfig& cfg);
  /// Windowed episodic reward, or the running return when no episode has
  /// finished since the agent was last copied.
  double fitness() const;
  /// Mean reward of episodes finished in the current generation, or the
  /// running return when none finished.
  double generation_reward() const;
};

/// Trains for steps_per_generation environment steps: epsilon-greedy acting,
/// replay storage, and one learner update per step after warm-up.
void train_agent(RlAgent& agent, const CartPoleConfig& cfg, Stream& rng);

/// Replaces `dst` with a copy of everything in `src` except id and history.
void clone_into(RlAgent& dst, const RlAgent& src);

struct CartPoleResult {
  std::vector<CartPoleRecord> records;
  /// Final hyperparameters and fitness, one row per agent.
  std::vector<std::array<double, 5>> final_agents;
  double wall_seconds = 0.0;
};

CartPoleResult run_cartpole_pbt(const CartPoleConfig& cfg);

/// First generation whose top-5 mean reaches `threshold`, or -1.
int first_generation_reaching(const std::vector<CartPoleRecord>& records,
                              double threshold);

}  // namespace pbtdyn::cartpole
