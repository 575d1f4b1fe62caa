// Learners: REINFORCE (CPG), block-diagonal preconditioned PG (QNPG), full
// Tikhonov-regularized preconditioned PG (QPPG), an unregularized natural PG
// baseline, and the value-based agent with a quantum embedding (Q-DQN).
#pragma once

#include "qppg/fisher.hpp"
#include "qppg/policy_net.hpp"
#include "qppg/quantum.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qppg {

enum class AgentKind { Cpg, Qnpg, Qppg, Qdqn, Npg };

std::string to_string(AgentKind kind);
AgentKind parse_agent_kind(const std::string& name);

struct AgentConfig {
  double alpha = 0.002;
  double gamma = 0.99;
  double xi = 0.1;
  int horizon = 10;
  double epsilon_start = 1.0;
  double epsilon_end = 0.01;
  double epsilon_decay = 0.995;
  int target_sync_episodes = 10;
  std::size_t replay_capacity = 10000;
  std::size_t batch_size = 32;
  SolveMethod solve = SolveMethod::Auto;
  /// Relative eigenvalue cutoff of the pseudo-inverse used by the
  /// unregularized natural-gradient baseline.
  double npg_rel_cutoff = 1e-8;

  /// Throws std::domain_error on out-of-range values.
  void validate() const;
};

/// Raised when an update produces non-finite parameters.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrajectoryStep {
  Eigen::VectorXd obs;
  Action action;
  Eigen::VectorXd score;  // grad log pi(a|s)
  double reward = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;

  std::vector<double> rewards() const;
  std::vector<Eigen::VectorXd> scores() const;
  double total_reward() const;
};

/// G_t = r_t + gamma G_{t+1}
std::vector<double> compute_returns(std::span<const double> rewards, double gamma);

/// sum_t score_t G_t
Eigen::VectorXd policy_gradient(const Trajectory& traj, double gamma);

/// alpha (F + xi I)^{-1} g
Eigen::VectorXd preconditioned_step(const FisherMatrix& fisher, const Eigen::VectorXd& grad,
                                    double alpha, double xi, SolveMethod method = SolveMethod::Auto);

/// Per block b: alpha (F_bb + xi I)^{-1} g_b. xi may be zero when every
/// diagonal block is positive definite.
Eigen::VectorXd block_preconditioned_step(const FisherMatrix& fisher, const Eigen::VectorXd& grad,
                                          double alpha, double xi, const BlockLayout& layout);

ParamVector update_cpg(const ParamVector& params, const Trajectory& traj, const AgentConfig& cfg);
ParamVector update_qppg(const ParamVector& params, const Trajectory& traj, const AgentConfig& cfg);
ParamVector update_qnpg(const ParamVector& params, const Trajectory& traj, const AgentConfig& cfg,
                        const BlockLayout& layout);
/// alpha F^+ g with the same empirical Fisher matrix as update_qppg.
ParamVector update_npg(const ParamVector& params, const Trajectory& traj, const AgentConfig& cfg);

struct SelectionMode {
  enum class Kind { Sample, Greedy, EpsilonGreedy };
  Kind kind = Kind::Sample;
  double epsilon = 0.0;

  static SelectionMode sample() { return {Kind::Sample, 0.0}; }
  static SelectionMode greedy() { return {Kind::Greedy, 0.0}; }
  static SelectionMode epsilon_greedy(double eps) { return {Kind::EpsilonGreedy, eps}; }
};

/// Lowest index among the maximal entries.
int argmax_lowest(const Eigen::VectorXd& values);

Action select_action(const ActionDistribution& dist, const SelectionMode& mode, Rng& rng);

/// Softmax-policy learner shared by CPG, QNPG, QPPG and the NPG baseline.
class PolicyAgent {
 public:
  PolicyAgent(AgentKind kind, ParamLayout layout, const AgentConfig& cfg, Rng& init_rng);

  AgentKind kind() const { return kind_; }
  const ParamLayout& layout() const { return layout_; }
  const ParamVector& params() const { return params_; }
  void set_params(ParamVector params);
  const AgentConfig& config() const { return cfg_; }

  ActionDistribution distribution(const Eigen::VectorXd& obs) const;
  Action act(const Eigen::VectorXd& obs, const SelectionMode& mode, Rng& rng) const;
  LogProbGrad score(const Eigen::VectorXd& obs, const Action& action) const;

  /// One update from one trajectory, dispatched on kind().
  void update(const Trajectory& traj);

 private:
  AgentKind kind_;
  ParamLayout layout_;
  BlockLayout blocks_;
  AgentConfig cfg_;
  ParamVector params_;
};

struct Transition {
  Eigen::VectorXd obs;
  int action = 0;
  double reward = 0.0;
  Eigen::VectorXd next_obs;
  bool done = false;
};

/// Fixed-capacity FIFO ring of transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return data_.empty(); }
  /// i-th oldest stored transition.
  const Transition& at(std::size_t i) const;
  /// Uniform draws with replacement.
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> data_;
  std::size_t head_ = 0;  // index of the oldest entry once full
};

/// Value-based agent: quantum-circuit embedding feeding a linear Q head,
/// trained on the squared TD error against a periodically synced target.
class QdqnAgent {
 public:
  QdqnAgent(int obs_dim, int num_actions, const AgentConfig& cfg, Rng& init_rng);

  Eigen::VectorXd embed(const Eigen::VectorXd& obs) const;
  Eigen::VectorXd q_values(const Eigen::VectorXd& obs) const;
  Eigen::VectorXd target_q_values(const Eigen::VectorXd& obs) const;

  /// Epsilon-greedy on the current Q values (greedy mode ignores epsilon).
  Action act(const Eigen::VectorXd& obs, const SelectionMode& mode, Rng& rng) const;
  Action act(const Eigen::VectorXd& obs, Rng& rng) const {
    return act(obs, SelectionMode::epsilon_greedy(epsilon_), rng);
  }

  /// Stores the transition and, once the buffer holds a batch, takes one
  /// gradient step on the TD loss.
  void observe(Transition t, Rng& rng);
  /// Decays epsilon and syncs the target network on schedule.
  void end_episode();

  /// r if done, else r + gamma max_a' Q_target(s', a').
  double td_target(const Transition& t) const;
  /// Loss and gradient with respect to (embedding angles, head parameters).
  LossGrad loss_and_grad(const std::vector<const Transition*>& batch) const;

  double epsilon() const { return epsilon_; }
  int episodes() const { return episodes_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const ParamLayout& head_layout() const { return head_layout_; }

  /// Flat (embedding angles, head parameters).
  ParamVector params() const;
  ParamVector target_params() const;
  void set_params(const ParamVector& flat);
  void sync_target();

 private:
  int obs_dim_;
  int num_actions_;
  AgentConfig cfg_;
  ParamLayout head_layout_;
  ParamVector embed_params_;
  ParamVector head_params_;
  ParamVector target_embed_;
  ParamVector target_head_;
  ReplayBuffer buffer_;
  double epsilon_;
  int episodes_ = 0;
};

}  // namespace qppg
