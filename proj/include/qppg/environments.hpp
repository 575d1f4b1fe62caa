// Episodic environments behind one interface: a two-state classical task, a
// noisy single-qubit control task, and Rayleigh block-fading link adaptation.
#pragma once

#include "qppg/policy_net.hpp"
#include "qppg/quantum.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qppg {

struct StepResult {
  Eigen::VectorXd obs;
  double reward = 0.0;
  bool done = false;
};

class Environment {
 public:
  explicit Environment(std::uint64_t seed) : rng_(seed) {}
  virtual ~Environment() = default;

  /// Starts a new episode. Passing a seed reseeds the environment's RNG first.
  Eigen::VectorXd reset(std::optional<std::uint64_t> seed = std::nullopt) {
    if (seed) rng_.seed(*seed);
    step_ = 0;
    return do_reset();
  }

  StepResult step(const Action& action) {
    StepResult r = do_step(action);
    advance(r);
    return r;
  }

  virtual int obs_dim() const = 0;
  virtual int num_actions() const = 0;
  virtual bool continuous_power() const { return false; }
  virtual int horizon() const = 0;
  virtual double max_step_reward() const = 0;
  int steps_taken() const { return step_; }

 protected:
  virtual Eigen::VectorXd do_reset() = 0;
  virtual StepResult do_step(const Action& action) = 0;
  void advance(StepResult& r) {
    ++step_;
    r.done = step_ >= horizon();
  }
  Rng& rng() { return rng_; }

 private:
  Rng rng_;
  int step_ = 0;
};

// ---------------------------------------------------------------------------
// Classical two-state task

enum class ClassicalOp { Shift = 0, Scale = 1, Rotate = 2, Flip = 3, Identity = 4 };

struct ClassicalState {
  double p0 = 1.0;
  double p1 = 0.0;
  int m = 0;
};

struct ClassicalEnvConfig {
  int horizon = 10;
  double noise_prob = 0.03;
  double drift_half_width = 0.1;
  double collapse_prob = 0.1;
  std::array<double, 2> target = {0.0, 1.0};
};

/// Closed-form deterministic maps: shift adds 0.1 to p1, scale multiplies p1
/// by 1.2, rotate turns (sqrt p0, sqrt p1) by pi/8, flip swaps. p1 is clamped
/// to [0, 1] and p0 = 1 - p1.
ClassicalState classical_transform(const ClassicalState& s, ClassicalOp op);

/// (sum_i sqrt(p_i q_i))^2
double bhattacharyya_fidelity(const std::array<double, 2>& p, const std::array<double, 2>& q);

class ClassicalEnv final : public Environment {
 public:
  explicit ClassicalEnv(std::uint64_t seed, ClassicalEnvConfig cfg = {});

  int obs_dim() const override { return 3; }
  int num_actions() const override { return 5; }
  int horizon() const override { return cfg_.horizon; }
  double max_step_reward() const override { return 1.0; }

  const ClassicalState& state() const { return state_; }
  void set_state(const ClassicalState& s);
  Eigen::VectorXd observation() const;
  double reward() const;

 private:
  Eigen::VectorXd do_reset() override;
  StepResult do_step(const Action& action) override;

  ClassicalEnvConfig cfg_;
  ClassicalState state_;
};

// ---------------------------------------------------------------------------
// Noisy single-qubit control

struct QuantumEnvConfig {
  int horizon = 10;
  /// Rate applied to every channel in `channel_order` after each gate.
  double noise_level = 0.03;
  std::vector<ChannelKind> channel_order = {ChannelKind::Depolarizing, ChannelKind::AmplitudeDamping,
                                            ChannelKind::Dephasing};
  double collapse_prob = 0.1;
  double rotation_angle = 0.78539816339744830962;  // pi/4
};

/// Action index -> gate: 0 Rx, 1 Ry, 2 Rz, 3 H, 4 I.
GateAction quantum_action(int index, double rotation_angle);

class QuantumEnv final : public Environment {
 public:
  explicit QuantumEnv(std::uint64_t seed, QuantumEnvConfig cfg = {});

  int obs_dim() const override { return 3; }
  int num_actions() const override { return 5; }
  int horizon() const override { return cfg_.horizon; }
  double max_step_reward() const override { return 1.0; }

  const QubitState& state() const { return state_; }
  int last_outcome() const { return m_; }
  void set_state(const QubitState& s, int m = 0);
  Eigen::VectorXd observation() const;
  const QuantumEnvConfig& config() const { return cfg_; }
  const std::vector<KrausChannel>& channels() const { return channels_; }

 private:
  Eigen::VectorXd do_reset() override;
  StepResult do_step(const Action& action) override;

  QuantumEnvConfig cfg_;
  std::vector<KrausChannel> channels_;
  QubitState state_;
  int m_ = 0;
};

// ---------------------------------------------------------------------------
// Rayleigh block-fading link adaptation

/// dB thresholds per modulation order.
using ThresholdTable = std::map<int, double>;

/// Gray-mapped square QAM thresholds at error rate 1e-3.
ThresholdTable default_threshold_table();

/// Threshold in dB for modulation order m; unknown m throws std::domain_error.
double snr_threshold(int m, const ThresholdTable& table = default_threshold_table());

struct LinkAction {
  int m = 4;
  double p = 0.0;
};

struct LinkEnvConfig {
  int antennas = 4;
  double pilot_snr_db = 10.0;
  double sigma2_min = 0.05;
  double sigma2_max = 0.2;
  double p_min = 0.0;
  double p_max = 1.0;
  int horizon = 10;
  std::vector<int> modulation_orders = {4, 16, 64};
  ThresholdTable thresholds = default_threshold_table();
};

/// log2(m) if p ||h||^2 / sigma2 reaches the threshold for m, else 0.
double link_reward(const LinkAction& action, double h_norm2, double sigma2,
                   const ThresholdTable& table = default_threshold_table());

struct LinkObs {
  Eigen::VectorXcd h_hat;
  double sigma2 = 1.0;
  /// [Re h_hat, Im h_hat, sigma2]
  Eigen::VectorXd features() const;
};

class LinkEnv final : public Environment {
 public:
  explicit LinkEnv(std::uint64_t seed, LinkEnvConfig cfg = {});

  int obs_dim() const override { return 2 * cfg_.antennas + 1; }
  int num_actions() const override { return static_cast<int>(cfg_.modulation_orders.size()); }
  bool continuous_power() const override { return true; }
  int horizon() const override { return cfg_.horizon; }
  double max_step_reward() const override;

  /// Maps a policy action (categorical index + raw Gaussian sample) to a
  /// modulation order and a power clipped to [p_min, p_max].
  LinkAction to_link_action(const Action& action) const;

  /// Step with an explicit link action.
  StepResult step_link(const LinkAction& action);

  const LinkObs& observation() const { return obs_; }
  const Eigen::VectorXcd& true_channel() const { return h_; }
  /// Pilot estimation error variance 10^(-pilot_snr_db / 10).
  double pilot_noise_variance() const;
  const LinkEnvConfig& config() const { return cfg_; }

  /// Test hook: overrides the current realization.
  void set_realization(const Eigen::VectorXcd& h, const Eigen::VectorXcd& h_hat, double sigma2);

 private:
  Eigen::VectorXd do_reset() override;
  StepResult do_step(const Action& action) override;
  void draw_slot();
  StepResult apply(const LinkAction& action);

  LinkEnvConfig cfg_;
  Eigen::VectorXcd h_;
  LinkObs obs_;
};

/// Draws CN(0, variance I) samples of length n.
Eigen::VectorXcd complex_gaussian(int n, double variance, Rng& rng);

enum class EnvKind { Classical, Quantum, Link };

std::string to_string(EnvKind kind);
EnvKind parse_env_kind(const std::string& name);

}  // namespace qppg
