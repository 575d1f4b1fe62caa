#include "qppg/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qppg {

using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

ClassicalState with_p1(double p1, int m) {
  p1 = std::clamp(p1, 0.0, 1.0);
  return {1.0 - p1, p1, m};
}

}  // namespace

ClassicalState classical_transform(const ClassicalState& s, ClassicalOp op) {
  switch (op) {
    case ClassicalOp::Shift:
      return with_p1(s.p1 + 0.1, s.m);
    case ClassicalOp::Scale:
      return with_p1(std::min(1.0, 1.2 * s.p1), s.m);
    case ClassicalOp::Rotate: {
      const double angle = std::atan2(std::sqrt(std::max(0.0, s.p1)), std::sqrt(std::max(0.0, s.p0)));
      const double turned = angle + std::numbers::pi / 8.0;
      const double c = std::cos(turned);
      const double sn = std::sin(turned);
      return with_p1(sn * sn / (c * c + sn * sn), s.m);
    }
    case ClassicalOp::Flip:
      return with_p1(s.p0, s.m);
    case ClassicalOp::Identity:
      return with_p1(s.p1, s.m);
  }
  throw std::domain_error("unknown classical operation");
}

double bhattacharyya_fidelity(const std::array<double, 2>& p, const std::array<double, 2>& q) {
  const double overlap = std::sqrt(p[0] * q[0]) + std::sqrt(p[1] * q[1]);
  return overlap * overlap;
}

ClassicalEnv::ClassicalEnv(std::uint64_t seed, ClassicalEnvConfig cfg)
    : Environment(seed), cfg_(cfg) {
  if (cfg_.horizon <= 0) throw std::domain_error("horizon must be positive");
}

void ClassicalEnv::set_state(const ClassicalState& s) {
  if (std::abs(s.p0 + s.p1 - 1.0) > 1e-10 || s.p0 < 0.0 || s.p1 < 0.0 || (s.m != 0 && s.m != 1)) {
    throw std::invalid_argument("invalid classical state");
  }
  state_ = s;
}

VectorXd ClassicalEnv::observation() const {
  return VectorXd{{state_.p0, state_.p1, static_cast<double>(state_.m)}};
}

double ClassicalEnv::reward() const {
  return bhattacharyya_fidelity({state_.p0, state_.p1}, cfg_.target);
}

VectorXd ClassicalEnv::do_reset() {
  state_ = ClassicalState{};
  return observation();
}

StepResult ClassicalEnv::do_step(const Action& action) {
  if (action.index < 0 || action.index >= num_actions()) {
    throw std::domain_error("classical action must be in 0..4");
  }
  state_ = classical_transform(state_, static_cast<ClassicalOp>(action.index));

  auto& r = rng();
  if (uniform01(r) < cfg_.noise_prob) {
    if (uniform01(r) < 0.5) {
      state_ = with_p1(state_.p0, state_.m);
    } else {
      std::uniform_real_distribution<double> drift(-cfg_.drift_half_width, cfg_.drift_half_width);
      state_ = with_p1(state_.p1 + drift(r), state_.m);
    }
  }
  if (uniform01(r) < cfg_.collapse_prob) {
    const int m = uniform01(r) < state_.p1 ? 1 : 0;
    state_ = with_p1(m == 1 ? 1.0 : 0.0, m);
  }
  return {observation(), reward(), false};
}

GateAction quantum_action(int index, double rotation_angle) {
  switch (index) {
    case 0:
      return {Gate::Rx, rotation_angle};
    case 1:
      return {Gate::Ry, rotation_angle};
    case 2:
      return {Gate::Rz, rotation_angle};
    case 3:
      return {Gate::H, 0.0};
    case 4:
      return {Gate::I, 0.0};
    default:
      throw std::domain_error("quantum action must be in 0..4");
  }
}

QuantumEnv::QuantumEnv(std::uint64_t seed, QuantumEnvConfig cfg) : Environment(seed), cfg_(std::move(cfg)) {
  if (cfg_.horizon <= 0) throw std::domain_error("horizon must be positive");
  for (auto kind : cfg_.channel_order) {
    channels_.push_back(make_channel(kind, cfg_.noise_level));
  }
}

void QuantumEnv::set_state(const QubitState& s, int m) {
  state_ = s;
  m_ = m;
}

VectorXd QuantumEnv::observation() const {
  return VectorXd{{state_.population(0), state_.population(1), static_cast<double>(m_)}};
}

VectorXd QuantumEnv::do_reset() {
  state_ = QubitState::ground();
  m_ = 0;
  return observation();
}

StepResult QuantumEnv::do_step(const Action& action) {
  state_ = apply_gate(state_, quantum_action(action.index, cfg_.rotation_angle));
  for (const auto& ch : channels_) {
    state_ = apply_channel(state_, ch);
  }
  auto& r = rng();
  if (uniform01(r) < cfg_.collapse_prob) {
    Measurement meas = measure_collapse(state_, r);
    state_ = meas.state;
    m_ = meas.outcome;
  }
  return {observation(), excited_population(state_), false};
}

ThresholdTable default_threshold_table() { return {{4, 9.8}, {16, 16.5}, {64, 22.5}}; }

double snr_threshold(int m, const ThresholdTable& table) {
  const auto it = table.find(m);
  if (it == table.end()) {
    throw std::domain_error("no SNR threshold for modulation order " + std::to_string(m));
  }
  return it->second;
}

double link_reward(const LinkAction& action, double h_norm2, double sigma2, const ThresholdTable& table) {
  const double threshold_linear = std::pow(10.0, snr_threshold(action.m, table) / 10.0);
  const double snr = action.p * h_norm2 / sigma2;
  return snr >= threshold_linear ? std::log2(static_cast<double>(action.m)) : 0.0;
}

VectorXd LinkObs::features() const {
  const auto n = h_hat.size();
  VectorXd phi(2 * n + 1);
  phi.head(n) = h_hat.real();
  phi.segment(n, n) = h_hat.imag();
  phi(2 * n) = sigma2;
  return phi;
}

VectorXcd complex_gaussian(int n, double variance, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5 * variance));
  VectorXcd out(n);
  for (int i = 0; i < n; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    out(i) = {re, im};
  }
  return out;
}

LinkEnv::LinkEnv(std::uint64_t seed, LinkEnvConfig cfg) : Environment(seed), cfg_(std::move(cfg)) {
  if (cfg_.antennas <= 0 || cfg_.horizon <= 0) {
    throw std::domain_error("antenna count and horizon must be positive");
  }
  if (!(cfg_.sigma2_min > 0.0) || cfg_.sigma2_max < cfg_.sigma2_min) {
    throw std::domain_error("noise variance range must be positive and ordered");
  }
  if (cfg_.p_max < cfg_.p_min || cfg_.p_min < 0.0) {
    throw std::domain_error("power range must be nonnegative and ordered");
  }
  for (int m : cfg_.modulation_orders) snr_threshold(m, cfg_.thresholds);
}

double LinkEnv::max_step_reward() const {
  const int m = *std::max_element(cfg_.modulation_orders.begin(), cfg_.modulation_orders.end());
  return std::log2(static_cast<double>(m));
}

double LinkEnv::pilot_noise_variance() const { return std::pow(10.0, -cfg_.pilot_snr_db / 10.0); }

LinkAction LinkEnv::to_link_action(const Action& action) const {
  if (action.index < 0 || action.index >= num_actions()) {
    throw std::domain_error("link action index out of range");
  }
  return {cfg_.modulation_orders[static_cast<size_t>(action.index)],
          std::clamp(action.power, cfg_.p_min, cfg_.p_max)};
}

void LinkEnv::draw_slot() {
  h_ = complex_gaussian(cfg_.antennas, 1.0, rng());
  obs_.h_hat = h_ + complex_gaussian(cfg_.antennas, pilot_noise_variance(), rng());
}

VectorXd LinkEnv::do_reset() {
  std::uniform_real_distribution<double> noise(cfg_.sigma2_min, cfg_.sigma2_max);
  obs_.sigma2 = noise(rng());
  draw_slot();
  return obs_.features();
}

StepResult LinkEnv::apply(const LinkAction& action) {
  if (action.p < cfg_.p_min || action.p > cfg_.p_max) {
    throw std::domain_error("transmit power outside [p_min, p_max]");
  }
  const double reward = link_reward(action, h_.squaredNorm(), obs_.sigma2, cfg_.thresholds);
  draw_slot();
  return {obs_.features(), reward, false};
}

StepResult LinkEnv::do_step(const Action& action) { return apply(to_link_action(action)); }

StepResult LinkEnv::step_link(const LinkAction& action) {
  StepResult r = apply(action);
  advance(r);
  return r;
}

void LinkEnv::set_realization(const VectorXcd& h, const VectorXcd& h_hat, double sigma2) {
  if (h.size() != cfg_.antennas || h_hat.size() != cfg_.antennas || !(sigma2 > 0.0)) {
    throw std::domain_error("realization does not match the link configuration");
  }
  h_ = h;
  obs_.h_hat = h_hat;
  obs_.sigma2 = sigma2;
}

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::Classical:
      return "classical";
    case EnvKind::Quantum:
      return "quantum";
    case EnvKind::Link:
      return "link";
  }
  return "unknown";
}

EnvKind parse_env_kind(const std::string& name) {
  if (name == "classical") return EnvKind::Classical;
  if (name == "quantum") return EnvKind::Quantum;
  if (name == "link") return EnvKind::Link;
  throw std::invalid_argument("unknown environment '" + name + "'");
}

}  // namespace qppg
