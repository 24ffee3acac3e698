#include "pbtdyn/cartpole.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_set>

#include "pbtdyn/evolution.hpp"
#include "pbtdyn/numeric.hpp"
#include "pbtdyn/parallel.hpp"

namespace pbtdyn::cartpole {

namespace {

constexpr std::uint64_t kTagInit = 0x51;
constexpr std::uint64_t kTagTrain = 0x52;
constexpr std::uint64_t kTagJump = 0x53;

struct Layout {
  Eigen::Index w1, b1, w2, b2, w3, b3, total;
};

Layout layout(int hidden) {
  Layout l{};
  const Eigen::Index h = hidden;
  l.w1 = 0;
  l.b1 = l.w1 + h * QNetwork::kIn;
  l.w2 = l.b1 + h;
  l.b2 = l.w2 + h * h;
  l.w3 = l.b2 + h;
  l.b3 = l.w3 + QNetwork::kOut * h;
  l.total = l.b3 + QNetwork::kOut;
  return l;
}

using CMap = Eigen::Map<const Eigen::MatrixXd>;
using MMap = Eigen::Map<Eigen::MatrixXd>;
using CVMap = Eigen::Map<const Eigen::VectorXd>;
using MVMap = Eigen::Map<Eigen::VectorXd>;

Eigen::MatrixXd stack(const std::vector<Transition>& batch, bool next) {
  Eigen::MatrixXd x(QNetwork::kIn, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto& s = next ? batch[j].s2 : batch[j].s;
    for (int k = 0; k < QNetwork::kIn; ++k) x(k, static_cast<Eigen::Index>(j)) = s[k];
  }
  return x;
}

}  // namespace

bool out_of_bounds(const CartPoleState& s, const CartPoleParams& p) {
  return std::abs(s.x) > p.x_threshold || std::abs(s.phi) > p.phi_threshold;
}

StepResult env_step(const CartPoleState& state, int action, const CartPoleParams& p) {
  if (action != 0 && action != 1) throw Error("cartpole: action must be 0 or 1");
  if (out_of_bounds(state, p)) return {state, 1.0, true};

  const double total_mass = p.cart_mass + p.pole_mass;
  const double pole_ml = p.pole_mass * p.half_length;
  const double force = action == 1 ? p.force : -p.force;
  const double cos_phi = std::cos(state.phi);
  const double sin_phi = std::sin(state.phi);
  const double temp =
      (force + pole_ml * state.phi_dot * state.phi_dot * sin_phi) / total_mass;
  const double phi_acc =
      (p.gravity * sin_phi - cos_phi * temp) /
      (p.half_length * (4.0 / 3.0 - p.pole_mass * cos_phi * cos_phi / total_mass));
  const double x_acc = temp - pole_ml * phi_acc * cos_phi / total_mass;

  StepResult r;
  r.state.x_dot = state.x_dot + p.dt * x_acc;
  r.state.x = state.x + p.dt * r.state.x_dot;
  r.state.phi_dot = state.phi_dot + p.dt * phi_acc;
  r.state.phi = state.phi + p.dt * r.state.phi_dot;
  r.reward = 1.0;
  r.done = out_of_bounds(r.state, p);
  return r;
}

CartPoleEnv::CartPoleEnv(int reward_cap, CartPoleParams params)
    : params_(params), cap_(reward_cap) {
  if (reward_cap <= 0) throw Error("cartpole: reward cap must be positive");
}

void CartPoleEnv::reset(Stream& rng) {
  state_.x = rng.uniform(-0.05, 0.05);
  state_.x_dot = rng.uniform(-0.05, 0.05);
  state_.phi = rng.uniform(-0.05, 0.05);
  state_.phi_dot = rng.uniform(-0.05, 0.05);
  steps_ = 0;
}

CartPoleEnv::Outcome CartPoleEnv::step(int action) {
  const StepResult r = env_step(state_, action, params_);
  state_ = r.state;
  ++steps_;
  return {r.reward, r.done, !r.done && steps_ >= cap_};
}

std::array<double, 4> CartPoleEnv::observation() const {
  return {state_.x, state_.x_dot, state_.phi, state_.phi_dot};
}

double epsilon(double total_steps, double p_start, double p_end, double p_decay) {
  if (!(p_decay > 0.0)) throw Error("epsilon: p_decay must be positive");
  return p_end + (p_start - p_end) * std::exp(-total_steps / p_decay);
}

QNetwork::QNetwork(int hidden) : hidden_(hidden) {
  if (hidden <= 0) throw Error("QNetwork: hidden width must be positive");
  params_ = Eigen::VectorXd::Zero(layout(hidden).total);
}

void QNetwork::init(Stream& rng) {
  const Layout l = layout(hidden_);
  auto fill = [&](Eigen::Index from, Eigen::Index to, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    for (Eigen::Index i = from; i < to; ++i) params_[i] = rng.uniform(-bound, bound);
  };
  fill(l.w1, l.w2, kIn);
  fill(l.w2, l.w3, hidden_);
  fill(l.w3, l.total, hidden_);
}

void QNetwork::forward(const Eigen::MatrixXd& x, Cache& c) const {
  const Layout l = layout(hidden_);
  const double* p = params_.data();
  const CMap w1(p + l.w1, hidden_, kIn);
  const CVMap b1(p + l.b1, hidden_);
  const CMap w2(p + l.w2, hidden_, hidden_);
  const CVMap b2(p + l.b2, hidden_);
  const CMap w3(p + l.w3, kOut, hidden_);
  const CVMap b3(p + l.b3, kOut);
  c.z1.noalias() = w1 * x;
  c.z1.colwise() += b1;
  c.a1 = c.z1.cwiseMax(0.0);
  c.z2.noalias() = w2 * c.a1;
  c.z2.colwise() += b2;
  c.a2 = c.z2.cwiseMax(0.0);
  c.q.noalias() = w3 * c.a2;
  c.q.colwise() += b3;
}

Eigen::MatrixXd QNetwork::forward(const Eigen::MatrixXd& x) const {
  Cache c;
  forward(x, c);
  return c.q;
}

void QNetwork::backward(const Eigen::MatrixXd& x, const Cache& c,
                        const Eigen::MatrixXd& dq, Eigen::VectorXd& grad) const {
  const Layout l = layout(hidden_);
  if (grad.size() != l.total) grad = Eigen::VectorXd::Zero(l.total);
  const double* p = params_.data();
  const CMap w2(p + l.w2, hidden_, hidden_);
  const CMap w3(p + l.w3, kOut, hidden_);
  double* g = grad.data();

  MMap(g + l.w3, kOut, hidden_).noalias() += dq * c.a2.transpose();
  MVMap(g + l.b3, kOut) += dq.rowwise().sum();
  Eigen::MatrixXd d2 = w3.transpose() * dq;
  d2 = d2.cwiseProduct((c.z2.array() > 0.0).cast<double>().matrix());
  MMap(g + l.w2, hidden_, hidden_).noalias() += d2 * c.a1.transpose();
  MVMap(g + l.b2, hidden_) += d2.rowwise().sum();
  Eigen::MatrixXd d1 = w2.transpose() * d2;
  d1 = d1.cwiseProduct((c.z1.array() > 0.0).cast<double>().matrix());
  MMap(g + l.w1, hidden_, kIn).noalias() += d1 * x.transpose();
  MVMap(g + l.b1, hidden_) += d1.rowwise().sum();
}

std::array<double, 2> QNetwork::q_values(const std::array<double, 4>& obs) const {
  Eigen::MatrixXd x(kIn, 1);
  for (int k = 0; k < kIn; ++k) x(k, 0) = obs[k];
  const Eigen::MatrixXd q = forward(x);
  if (!q.allFinite()) throw Error("QNetwork: non-finite output");
  return {q(0, 0), q(1, 0)};
}

int QNetwork::greedy_action(const std::array<double, 4>& obs) const {
  const auto q = q_values(obs);
  return q[1] > q[0] ? 1 : 0;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error("replay buffer: capacity must be positive");
  data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(const Transition& t) {
  if (data_.size() < capacity_) {
    data_.push_back(t);
  } else {
    data_[next_] = t;
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Stream& rng) const {
  const std::size_t size = data_.size();
  if (n == 0 || n > size) throw Error("replay buffer: cannot sample that many transitions");
  std::vector<std::size_t> out;
  out.reserve(n);
  std::unordered_set<std::size_t> seen;
  seen.reserve(2 * n);
  for (std::size_t j = size - n; j < size; ++j) {
    const auto t = static_cast<std::size_t>(rng() % (j + 1));
    const std::size_t pick = seen.count(t) ? j : t;
    seen.insert(pick);
    out.push_back(pick);
  }
  return out;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, Stream& rng) const {
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t i : sample_indices(n, rng)) out.push_back(data_[i]);
  return out;
}

double td_loss_and_gradient(const QNetwork& online, const QNetwork& target,
                            const std::vector<Transition>& batch, double gamma,
                            Eigen::VectorXd& grad) {
  if (batch.empty()) throw Error("td loss: empty batch");
  const auto b = static_cast<Eigen::Index>(batch.size());
  const Eigen::MatrixXd x = stack(batch, false);
  const Eigen::MatrixXd q_next = target.forward(stack(batch, true));

  QNetwork::Cache cache;
  online.forward(x, cache);
  Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(QNetwork::kOut, b);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto& t = batch[static_cast<std::size_t>(j)];
    const double bootstrap = t.done ? 0.0 : gamma * q_next.col(j).maxCoeff();
    const double err = cache.q(t.a, j) - (t.r + bootstrap);
    loss += err * err;
    dq(t.a, j) = 2.0 * err / static_cast<double>(b);
  }
  loss /= static_cast<double>(b);
  grad = Eigen::VectorXd::Zero(online.size());
  online.backward(x, cache, dq, grad);
  return loss;
}

DqnLearner::DqnLearner(int hidden) : online(hidden), target(hidden) {
  adam.m = Eigen::VectorXd::Zero(online.size());
  adam.v = Eigen::VectorXd::Zero(online.size());
}

void DqnLearner::init(Stream& rng) {
  online.init(rng);
  target = online;
  adam.m.setZero();
  adam.v.setZero();
  adam.t = 0;
  updates = 0;
}

double dqn_update(DqnLearner& learner, const std::vector<Transition>& batch,
                  double gamma, double lr) {
  Eigen::VectorXd grad;
  const double loss = td_loss_and_gradient(learner.online, learner.target, batch, gamma, grad);
  if (!std::isfinite(loss)) throw Error("dqn update: non-finite loss");
  auto& a = learner.adam;
  ++a.t;
  a.m = a.beta1 * a.m + (1.0 - a.beta1) * grad;
  a.v = a.beta2 * a.v + (1.0 - a.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(a.beta1, static_cast<double>(a.t));
  const double c2 = 1.0 - std::pow(a.beta2, static_cast<double>(a.t));
  learner.online.params().array() -=
      lr * (a.m.array() / c1) / ((a.v.array() / c2).sqrt() + a.eps);
  if (++learner.updates % learner.target_sync == 0) learner.target = learner.online;
  return loss;
}

SearchBox hyperparameter_box() { return SearchBox({1e-5, 500.0, 32.0}, {1e-2, 5000.0, 128.0}); }

void CartPoleConfig::validate() const {
  if (population < 2) throw Error("cartpole: population must be at least 2");
  if (steps_per_generation <= 0) throw Error("cartpole: steps_per_generation must be positive");
  if (reward_cap <= 0) throw Error("cartpole: reward_cap must be positive");
  if (window == 0) throw Error("cartpole: window must be at least 1");
  if (!(sigma >= 0.0)) throw Error("cartpole: sigma must be non-negative");
  if (generations < 0) throw Error("cartpole: generations must be non-negative");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("cartpole: gamma must lie in [0, 1]");
  if (buffer_capacity < 128) throw Error("cartpole: buffer_capacity must be at least 128");
  if (warmup < 128 || warmup > buffer_capacity) {
    throw Error("cartpole: warmup must lie in [128, buffer_capacity]");
  }
  if (target_sync <= 0) throw Error("cartpole: target_sync must be positive");
  if (hidden <= 0) throw Error("cartpole: hidden must be positive");
  if (!(truncation_fraction > 0.0 && truncation_fraction <= 0.5)) {
    throw Error("cartpole: truncation_fraction must lie in (0, 0.5]");
  }
}

RlAgent::RlAgent(int id_, const CartPoleConfig& cfg)
    : id(id_),
      learner(cfg.hidden),
      buffer(cfg.buffer_capacity),
      env(cfg.reward_cap),
      history(cfg.window) {
  learner.target_sync = cfg.target_sync;
}

double RlAgent::fitness() const {
  return history.empty() ? episode_return : time_avg_fitness(history);
}

double RlAgent::generation_reward() const {
  if (generation_episodes.empty()) return episode_return;
  return pairwise_sum(generation_episodes) / static_cast<double>(generation_episodes.size());
}

void train_agent(RlAgent& agent, const CartPoleConfig& cfg, Stream& rng) {
  const double lr = agent.h[0];
  const double p_decay = agent.h[1];
  const auto batch = static_cast<std::size_t>(std::lround(agent.h[2]));
  agent.generation_episodes.clear();
  for (int step = 0; step < cfg.steps_per_generation; ++step) {
    const auto obs = agent.env.observation();
    const double eps = epsilon(static_cast<double>(agent.total_steps), cfg.p_start,
                               cfg.p_end, p_decay);
    int action;
    if (rng.uniform() < eps) {
      action = rng.uniform() < 0.5 ? 0 : 1;
    } else {
      action = agent.learner.online.greedy_action(obs);
    }
    const auto out = agent.env.step(action);
    ++agent.total_steps;
    agent.episode_return += out.reward;
    agent.buffer.push({obs, action, out.reward, agent.env.observation(), out.terminal});

    if (agent.buffer.size() >= cfg.warmup) {
      dqn_update(agent.learner, agent.buffer.sample(batch, rng), cfg.gamma, lr);
    }
    if (out.terminal || out.truncated) {
      agent.history.push(agent.episode_return, 0);
      agent.generation_episodes.push_back(agent.episode_return);
      agent.episode_return = 0.0;
      agent.env.reset(rng);
    }
  }
}

void clone_into(RlAgent& dst, const RlAgent& src) {
  const int id = dst.id;
  FitnessHistory history(src.history.window());
  std::vector<double> episodes = dst.generation_episodes;
  dst = src;
  dst.id = id;
  dst.history = history;
  dst.generation_episodes = std::move(episodes);
}

int first_generation_reaching(const std::vector<CartPoleRecord>& records,
                              double threshold) {
  for (const auto& r : records) {
    if (r.generation > 0 && r.top5_mean_reward >= threshold) return r.generation;
  }
  return -1;
}

namespace {

CartPoleRecord summarize_generation(const std::vector<RlAgent>& agents, int generation) {
  CartPoleRecord rec;
  rec.generation = generation;
  Vec rewards;
  for (const auto& a : agents) {
    rewards.push_back(a.generation_reward());
    rec.episodes += a.generation_episodes.size();
  }
  if (generation > 0) {
    rec.pop_mean_reward = pairwise_sum(rewards) / static_cast<double>(rewards.size());
    std::sort(rewards.begin(), rewards.end(), std::greater<>());
    const std::size_t top = std::min<std::size_t>(5, rewards.size());
    double s = 0.0;
    for (std::size_t i = 0; i < top; ++i) s += rewards[i];
    rec.top5_mean_reward = s / static_cast<double>(top);
  }
  const std::size_t dim = agents.front().h.size();
  const auto n = static_cast<double>(agents.size());
  rec.mean_h.assign(dim, 0.0);
  rec.std_h.assign(dim, 0.0);
  for (std::size_t k = 0; k < dim; ++k) {
    Vec col;
    for (const auto& a : agents) col.push_back(a.h[k]);
    const double m = pairwise_sum(col) / n;
    double v = 0.0;
    for (double x : col) v += (x - m) * (x - m);
    rec.mean_h[k] = m;
    rec.std_h[k] = std::sqrt(v / n);
  }
  return rec;
}

}  // namespace

CartPoleResult run_cartpole_pbt(const CartPoleConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const SearchBox box = hyperparameter_box();
  auto stream_agent = [&](std::size_t i) -> std::uint64_t {
    return cfg.clone_streams ? 0 : i;
  };

  std::vector<RlAgent> agents;
  agents.reserve(cfg.population);
  for (std::size_t i = 0; i < cfg.population; ++i) {
    agents.emplace_back(static_cast<int>(i), cfg);
    Stream rng(stream_key(cfg.seed, stream_agent(i), 0, kTagInit));
    auto& a = agents.back();
    a.h.resize(box.dim());
    for (std::size_t k = 0; k < box.dim(); ++k) {
      a.h[k] = rng.uniform(box.lower()[k], box.upper()[k]);
    }
    a.learner.init(rng);
    a.env.reset(rng);
  }

  CartPoleResult result;
  result.records.push_back(summarize_generation(agents, 0));

  MutationConfig mut;
  mut.sigma = cfg.sigma;
  mut.box = box;
  mut.scale_to_unit = true;
  const SelectionRule rule = SelectionRule::truncation(cfg.truncation_fraction);

  std::vector<int> ids(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) ids[i] = agents[i].id;

  for (int g = 0; g < cfg.generations; ++g) {
    parallel_for(agents.size(), cfg.threads, [&](std::size_t i) {
      Stream rng(stream_key(cfg.seed, stream_agent(i), static_cast<std::uint64_t>(g) + 1,
                            kTagTrain));
      train_agent(agents[i], cfg, rng);
    });

    // Hyperparameter statistics describe the population that produced the
    // rewards, i.e. before the jump.
    result.records.push_back(summarize_generation(agents, g + 1));

    Vec fitness(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i) fitness[i] = agents[i].fitness();
    Stream jump_rng(stream_key(cfg.seed, std::numeric_limits<std::uint64_t>::max(),
                               static_cast<std::uint64_t>(g), kTagJump));
    const auto source = plan_jumps(fitness, ids, rule, 1.0, jump_rng);
    const std::vector<RlAgent> snapshot = agents;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      if (source[i] < 0) continue;
      clone_into(agents[i], snapshot[static_cast<std::size_t>(source[i])]);
      agents[i].h = mutate(agents[i].h, mut, jump_rng);
    }
  }

  for (const auto& a : agents) {
    result.final_agents.push_back({static_cast<double>(a.id), a.h[0], a.h[1], a.h[2],
                                   a.fitness()});
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace pbtdyn::cartpole
