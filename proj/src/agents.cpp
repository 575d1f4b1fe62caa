#include "qppg/agents.hpp"

#include <algorithm>
#include <cmath>

namespace qppg {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::Cpg:
      return "cpg";
    case AgentKind::Qnpg:
      return "qnpg";
    case AgentKind::Qppg:
      return "qppg";
    case AgentKind::Qdqn:
      return "qdqn";
    case AgentKind::Npg:
      return "npg";
  }
  return "unknown";
}

AgentKind parse_agent_kind(const std::string& name) {
  if (name == "cpg") return AgentKind::Cpg;
  if (name == "qnpg") return AgentKind::Qnpg;
  if (name == "qppg") return AgentKind::Qppg;
  if (name == "qdqn") return AgentKind::Qdqn;
  if (name == "npg") return AgentKind::Npg;
  throw std::invalid_argument("unknown agent '" + name + "'");
}

void AgentConfig::validate() const {
  if (!(alpha > 0.0)) throw std::domain_error("alpha must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::domain_error("gamma must lie in (0, 1)");
  if (!(xi > 0.0)) throw std::domain_error("xi must be positive");
  if (horizon <= 0) throw std::domain_error("horizon must be positive");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0)) {
    throw std::domain_error("epsilon schedule must lie in [0, 1]");
  }
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) {
    throw std::domain_error("epsilon decay must lie in (0, 1]");
  }
  if (target_sync_episodes <= 0) throw std::domain_error("target sync period must be positive");
  if (replay_capacity == 0 || batch_size == 0) {
    throw std::domain_error("replay capacity and batch size must be positive");
  }
}

std::vector<double> Trajectory::rewards() const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.reward);
  return out;
}

std::vector<VectorXd> Trajectory::scores() const {
  std::vector<VectorXd> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.score);
  return out;
}

double Trajectory::total_reward() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.reward;
  return total;
}

std::vector<double> compute_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> out(rewards.size());
  double running = 0.0;
  for (size_t k = rewards.size(); k-- > 0;) {
    running = rewards[k] + gamma * running;
    out[k] = running;
  }
  return out;
}

VectorXd policy_gradient(const Trajectory& traj, double gamma) {
  if (traj.steps.empty()) {
    throw std::domain_error("policy_gradient needs a nonempty trajectory");
  }
  const std::vector<double> rewards = traj.rewards();
  const std::vector<double> returns = compute_returns(rewards, gamma);
  VectorXd g = VectorXd::Zero(traj.steps.front().score.size());
  for (size_t t = 0; t < traj.steps.size(); ++t) {
    g += returns[t] * traj.steps[t].score;
  }
  return g;
}

VectorXd preconditioned_step(const FisherMatrix& fisher, const VectorXd& grad, double alpha, double xi,
                             SolveMethod method) {
  return alpha * precondition_solve(fisher, xi, grad, method);
}

VectorXd block_preconditioned_step(const FisherMatrix& fisher, const VectorXd& grad, double alpha,
                                   double xi, const BlockLayout& layout) {
  if (layout.dim() != fisher.dim() || grad.size() != fisher.dim()) {
    throw std::domain_error("block layout, Fisher matrix and gradient dimensions differ");
  }
  if (xi < 0.0) throw std::domain_error("xi must be nonnegative");
  VectorXd step(grad.size());
  for (const auto& b : layout.blocks()) {
    MatrixXd block = fisher.data().block(b.start, b.start, b.length, b.length);
    block = 0.5 * (block + block.transpose()).eval();
    block.diagonal().array() += xi;
    Eigen::LLT<MatrixXd> llt(block);
    if (llt.info() != Eigen::Success) {
      throw SolverError("block '" + b.name + "' is not positive definite");
    }
    step.segment(b.start, b.length) = alpha * llt.solve(grad.segment(b.start, b.length));
  }
  return step;
}

namespace {

ParamVector checked(ParamVector updated, const char* who) {
  if (!updated.allFinite()) {
    throw DivergenceError(std::string(who) + " update produced non-finite parameters");
  }
  return updated;
}

}  // namespace

ParamVector update_cpg(const ParamVector& params, const Trajectory& traj, const AgentConfig& cfg) {
  return checked(params + cfg.alpha * policy_gradient(traj, cfg.gamma), "CPG");
}

ParamVector update_qppg(const ParamVector& params, const Trajectory& traj, const AgentConfig& cfg) {
  const VectorXd g = policy_gradient(traj, cfg.gamma);
  const std::vector<VectorXd> scores = traj.scores();
  const FisherMatrix f = classical_fim(scores);
  return checked(params + preconditioned_step(f, g, cfg.alpha, cfg.xi, cfg.solve), "QPPG");
}

ParamVector update_qnpg(const ParamVector& params, const Trajectory& traj, const AgentConfig& cfg,
                        const BlockLayout& layout) {
  const VectorXd g = policy_gradient(traj, cfg.gamma);
  const std::vector<VectorXd> scores = traj.scores();
  const FisherMatrix f = classical_fim(scores);
  return checked(params + block_preconditioned_step(f, g, cfg.alpha, cfg.xi, layout), "QNPG");
}

ParamVector update_npg(const ParamVector& params, const Trajectory& traj, const AgentConfig& cfg) {
  const VectorXd g = policy_gradient(traj, cfg.gamma);
  const std::vector<VectorXd> scores = traj.scores();
  const FisherMatrix f = classical_fim(scores);
  return checked(params + cfg.alpha * pseudo_inverse_solve(f, g, cfg.npg_rel_cutoff), "NPG");
}

int argmax_lowest(const VectorXd& values) {
  int best = 0;
  for (Index i = 1; i < values.size(); ++i) {
    if (values(i) > values(best)) best = static_cast<int>(i);
  }
  return best;
}

Action select_action(const ActionDistribution& dist, const SelectionMode& mode, Rng& rng) {
  const Index n = dist.probs.size();
  if (n == 0) throw std::domain_error("empty action distribution");
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Action a;
  bool greedy = mode.kind == SelectionMode::Kind::Greedy;
  if (mode.kind == SelectionMode::Kind::EpsilonGreedy) {
    if (uniform(rng) < mode.epsilon) {
      a.index = std::uniform_int_distribution<int>(0, static_cast<int>(n) - 1)(rng);
      if (dist.power) {
        a.power = std::normal_distribution<double>(dist.power->mean, dist.power->stddev)(rng);
      }
      return a;
    }
    greedy = true;
  }
  if (greedy) {
    a.index = argmax_lowest(dist.probs);
    if (dist.power) a.power = dist.power->mean;
    return a;
  }
  const double u = uniform(rng);
  double cumulative = 0.0;
  a.index = static_cast<int>(n) - 1;
  for (Index i = 0; i < n; ++i) {
    cumulative += dist.probs(i);
    if (u < cumulative) {
      a.index = static_cast<int>(i);
      break;
    }
  }
  if (dist.power) {
    a.power = std::normal_distribution<double>(dist.power->mean, dist.power->stddev)(rng);
  }
  return a;
}

PolicyAgent::PolicyAgent(AgentKind kind, ParamLayout layout, const AgentConfig& cfg, Rng& init_rng)
    : kind_(kind),
      layout_(std::move(layout)),
      blocks_(kind == AgentKind::Qnpg ? layout_.blocks() : BlockLayout::single(layout_.total())),
      cfg_(cfg),
      params_(init_params(layout_, init_rng)) {
  if (kind == AgentKind::Qdqn) {
    throw std::invalid_argument("Q-DQN is not a policy-gradient agent");
  }
  cfg_.validate();
}

void PolicyAgent::set_params(ParamVector params) {
  if (params.size() != layout_.total()) {
    throw std::domain_error("parameter vector does not match layout");
  }
  params_ = std::move(params);
}

ActionDistribution PolicyAgent::distribution(const VectorXd& obs) const {
  return forward(params_, layout_, obs);
}

Action PolicyAgent::act(const VectorXd& obs, const SelectionMode& mode, Rng& rng) const {
  return select_action(distribution(obs), mode, rng);
}

LogProbGrad PolicyAgent::score(const VectorXd& obs, const Action& action) const {
  return logprob_and_grad(params_, layout_, obs, action);
}

void PolicyAgent::update(const Trajectory& traj) {
  switch (kind_) {
    case AgentKind::Cpg:
      params_ = update_cpg(params_, traj, cfg_);
      break;
    case AgentKind::Qnpg:
      params_ = update_qnpg(params_, traj, cfg_, blocks_);
      break;
    case AgentKind::Qppg:
      params_ = update_qppg(params_, traj, cfg_);
      break;
    case AgentKind::Npg:
      params_ = update_npg(params_, traj, cfg_);
      break;
    case AgentKind::Qdqn:
      throw std::logic_error("unreachable");
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::domain_error("replay capacity must be positive");
  data_.reserve(std::min<std::size_t>(capacity_, 1 << 14));
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
    return;
  }
  data_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) throw std::out_of_range("replay index out of range");
  return data_[(head_ + i) % data_.size()];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (data_.empty()) throw std::domain_error("cannot sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  std::vector<const Transition*> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(&data_[pick(rng)]);
  return out;
}

QdqnAgent::QdqnAgent(int obs_dim, int num_actions, const AgentConfig& cfg, Rng& init_rng)
    : obs_dim_(obs_dim),
      num_actions_(num_actions),
      cfg_(cfg),
      head_layout_(ParamLayout::q_head(3, num_actions)),
      embed_params_(ParamVector::Zero(kEmbedParams)),
      head_params_(init_params(head_layout_, init_rng)),
      buffer_(cfg.replay_capacity),
      epsilon_(cfg.epsilon_start) {
  if (obs_dim_ <= 0 || obs_dim_ > 3) {
    throw std::domain_error("the embedding circuit encodes one to three observation components");
  }
  cfg_.validate();
  sync_target();
}

VectorXd QdqnAgent::embed(const VectorXd& obs) const { return quantum_embed(obs, embed_params_); }

VectorXd QdqnAgent::q_values(const VectorXd& obs) const {
  return q_forward(head_params_, head_layout_, embed(obs));
}

VectorXd QdqnAgent::target_q_values(const VectorXd& obs) const {
  return q_forward(target_head_, head_layout_, quantum_embed(obs, target_embed_));
}

Action QdqnAgent::act(const VectorXd& obs, const SelectionMode& mode, Rng& rng) const {
  const VectorXd q = q_values(obs);
  ActionDistribution greedy{VectorXd::Zero(q.size()), std::nullopt};
  greedy.probs(argmax_lowest(q)) = 1.0;
  return select_action(greedy, mode, rng);
}

double QdqnAgent::td_target(const Transition& t) const {
  if (t.done) return t.reward;
  return t.reward + cfg_.gamma * target_q_values(t.next_obs).maxCoeff();
}

LossGrad QdqnAgent::loss_and_grad(const std::vector<const Transition*>& batch) const {
  if (batch.empty()) throw std::domain_error("TD batch is empty");
  std::vector<TdSample> samples;
  samples.reserve(batch.size());
  for (const Transition* t : batch) {
    samples.push_back({embed(t->obs), t->action, td_target(*t)});
  }
  const LossGrad head = td_loss_and_grad(head_params_, head_layout_, samples);

  // Chain rule into the circuit angles: dL/dphi = sum -2 (y - Q) / n * W_a J(s).
  VectorXd embed_grad = VectorXd::Zero(kEmbedParams);
  const auto w = head_layout_.view(head_params_, "W");
  const double n = static_cast<double>(batch.size());
  for (size_t k = 0; k < batch.size(); ++k) {
    const auto& s = samples[k];
    const double q = (w.row(s.action) * s.features)(0) + head_layout_.view(head_params_, "b")(s.action, 0);
    const double coeff = -2.0 * (s.target - q) / n;
    const MatrixXd jac = quantum_embed_jacobian(batch[k]->obs, embed_params_);
    embed_grad += coeff * (w.row(s.action) * jac).transpose();
  }

  LossGrad out{head.loss, VectorXd(kEmbedParams + head_layout_.total())};
  out.grad << embed_grad, head.grad;
  return out;
}

void QdqnAgent::observe(Transition t, Rng& rng) {
  buffer_.push(std::move(t));
  if (buffer_.size() < cfg_.batch_size) return;
  const auto batch = buffer_.sample(cfg_.batch_size, rng);
  const LossGrad lg = loss_and_grad(batch);
  ParamVector updated = params() - cfg_.alpha * lg.grad;
  if (!updated.allFinite()) {
    throw DivergenceError("Q-DQN update produced non-finite parameters");
  }
  set_params(updated);
}

void QdqnAgent::end_episode() {
  ++episodes_;
  epsilon_ = std::max(cfg_.epsilon_end, epsilon_ * cfg_.epsilon_decay);
  if (episodes_ % cfg_.target_sync_episodes == 0) sync_target();
}

ParamVector QdqnAgent::params() const {
  ParamVector out(kEmbedParams + head_layout_.total());
  out << embed_params_, head_params_;
  return out;
}

ParamVector QdqnAgent::target_params() const {
  ParamVector out(kEmbedParams + head_layout_.total());
  out << target_embed_, target_head_;
  return out;
}

void QdqnAgent::set_params(const ParamVector& flat) {
  if (flat.size() != kEmbedParams + head_layout_.total()) {
    throw std::domain_error("Q-DQN parameter vector has the wrong length");
  }
  embed_params_ = flat.head(kEmbedParams);
  head_params_ = flat.tail(head_layout_.total());
}

void QdqnAgent::sync_target() {
  target_embed_ = embed_params_;
  target_head_ = head_params_;
}

}  // namespace qppg
