#include "qppg/policy_net.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qppg {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

ParamLayout::ParamLayout(NetworkShape shape) : shape_(shape) {
  if (shape_.input_dim <= 0 || shape_.num_actions <= 0) {
    throw std::domain_error("network dimensions must be positive");
  }
  if (shape_.kind == NetKind::Policy) {
    if (shape_.width <= 0) throw std::domain_error("hidden width must be positive");
    add("W1", shape_.width, shape_.input_dim);
    add("b1", shape_.width, 1);
    add("W2", shape_.width, shape_.width);
    add("b2", shape_.width, 1);
    add("W3", shape_.num_actions, shape_.width);
    add("b3", shape_.num_actions, 1);
    if (shape_.gaussian_head) {
      add("w_mu", 1, shape_.width);
      add("b_mu", 1, 1);
      add("w_sigma", 1, shape_.width);
      add("b_sigma", 1, 1);
    }
  } else {
    add("W", shape_.num_actions, shape_.input_dim);
    add("b", shape_.num_actions, 1);
  }
}

void ParamLayout::add(const std::string& name, Index rows, Index cols) {
  layers_.push_back({name, rows, cols, total_});
  total_ += rows * cols;
}

const LayerSlice& ParamLayout::layer(const std::string& name) const {
  for (const auto& l : layers_) {
    if (l.name == name) return l;
  }
  throw std::out_of_range("no layer named '" + name + "'");
}

BlockLayout ParamLayout::blocks() const {
  std::vector<Block> blocks;
  blocks.reserve(layers_.size());
  for (const auto& l : layers_) {
    blocks.push_back({l.name, l.offset, l.size()});
  }
  return BlockLayout(std::move(blocks), total_);
}

Eigen::Map<const MatrixXd> ParamLayout::view(const ParamVector& params, const std::string& name) const {
  const auto& l = layer(name);
  return {params.data() + l.offset, l.rows, l.cols};
}

Eigen::Map<MatrixXd> ParamLayout::view(ParamVector& params, const std::string& name) const {
  const auto& l = layer(name);
  return {params.data() + l.offset, l.rows, l.cols};
}

std::vector<MatrixXd> unflatten(const ParamVector& params, const ParamLayout& layout) {
  if (params.size() != layout.total()) {
    throw std::domain_error("parameter vector does not match layout");
  }
  std::vector<MatrixXd> out;
  for (const auto& l : layout.layers()) {
    out.emplace_back(layout.view(params, l.name));
  }
  return out;
}

ParamVector flatten(const std::vector<MatrixXd>& layers, const ParamLayout& layout) {
  if (layers.size() != layout.layers().size()) {
    throw std::domain_error("layer count does not match layout");
  }
  ParamVector out(layout.total());
  for (size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layout.layers()[i];
    if (layers[i].rows() != l.rows || layers[i].cols() != l.cols) {
      throw std::domain_error("layer '" + l.name + "' has the wrong shape");
    }
    layout.view(out, l.name) = layers[i];
  }
  return out;
}

ParamVector init_params(const ParamLayout& layout, Rng& rng) {
  ParamVector out = ParamVector::Zero(layout.total());
  for (const auto& l : layout.layers()) {
    const bool is_bias = l.name.front() == 'b';
    if (is_bias) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index k = 0; k < l.size(); ++k) {
      out(l.offset + k) = dist(rng);
    }
  }
  return out;
}

VectorXd softmax(const VectorXd& logits) {
  const double shift = logits.maxCoeff();
  VectorXd e = (logits.array() - shift).exp();
  return e / e.sum();
}

double softplus(double x) {
  // log(1 + e^x) without overflow
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct Activations {
  VectorXd z1, h1, z2, h2, logits;
  double mu = 0.0;
  double sigma_pre = 0.0;
};

void check_policy(const ParamVector& params, const ParamLayout& layout, const VectorXd& obs) {
  if (layout.shape().kind != NetKind::Policy) {
    throw std::domain_error("layout is not a policy network");
  }
  if (params.size() != layout.total()) {
    throw std::domain_error("parameter vector does not match layout");
  }
  if (obs.size() != layout.shape().input_dim) {
    throw std::domain_error("observation length " + std::to_string(obs.size()) + " != " +
                            std::to_string(layout.shape().input_dim));
  }
}

Activations run(const ParamVector& params, const ParamLayout& layout, const VectorXd& obs) {
  Activations a;
  a.z1 = layout.view(params, "W1") * obs + layout.view(params, "b1");
  a.h1 = a.z1.cwiseMax(0.0);
  a.z2 = layout.view(params, "W2") * a.h1 + layout.view(params, "b2");
  a.h2 = a.z2.cwiseMax(0.0);
  a.logits = layout.view(params, "W3") * a.h2 + layout.view(params, "b3");
  if (layout.shape().gaussian_head) {
    a.mu = (layout.view(params, "w_mu") * a.h2)(0) + layout.view(params, "b_mu")(0, 0);
    a.sigma_pre = (layout.view(params, "w_sigma") * a.h2)(0) + layout.view(params, "b_sigma")(0, 0);
  }
  return a;
}

}  // namespace

VectorXd features(const ParamVector& params, const ParamLayout& layout, const VectorXd& obs) {
  check_policy(params, layout, obs);
  return run(params, layout, obs).h2;
}

ActionDistribution forward(const ParamVector& params, const ParamLayout& layout, const VectorXd& obs) {
  check_policy(params, layout, obs);
  const Activations a = run(params, layout, obs);
  ActionDistribution dist{softmax(a.logits), std::nullopt};
  if (layout.shape().gaussian_head) {
    dist.power = Gaussian{a.mu, softplus(a.sigma_pre) + kMinStd};
  }
  return dist;
}

LogProbGrad logprob_and_grad(const ParamVector& params, const ParamLayout& layout, const VectorXd& obs,
                             const Action& action) {
  check_policy(params, layout, obs);
  const auto& shape = layout.shape();
  if (action.index < 0 || action.index >= shape.num_actions) {
    throw std::domain_error("action index out of range");
  }
  const Activations a = run(params, layout, obs);
  const VectorXd probs = softmax(a.logits);

  LogProbGrad out;
  out.grad = VectorXd::Zero(layout.total());
  out.logp = std::log(probs(action.index));

  // d logp / d logits = onehot(a) - probs
  VectorXd d_logits = -probs;
  d_logits(action.index) += 1.0;

  layout.view(out.grad, "W3") = d_logits * a.h2.transpose();
  layout.view(out.grad, "b3") = d_logits;
  VectorXd d_h2 = layout.view(params, "W3").transpose() * d_logits;

  if (shape.gaussian_head) {
    const double sigma = softplus(a.sigma_pre) + kMinStd;
    const double diff = action.power - a.mu;
    out.logp += -0.5 * (diff / sigma) * (diff / sigma) - std::log(sigma) -
                0.5 * std::log(2.0 * std::numbers::pi);
    const double d_mu = diff / (sigma * sigma);
    const double d_sigma = diff * diff / (sigma * sigma * sigma) - 1.0 / sigma;
    const double d_sigma_pre = d_sigma * sigmoid(a.sigma_pre);
    layout.view(out.grad, "w_mu") = d_mu * a.h2.transpose();
    layout.view(out.grad, "b_mu")(0, 0) = d_mu;
    layout.view(out.grad, "w_sigma") = d_sigma_pre * a.h2.transpose();
    layout.view(out.grad, "b_sigma")(0, 0) = d_sigma_pre;
    d_h2 += d_mu * layout.view(params, "w_mu").transpose();
    d_h2 += d_sigma_pre * layout.view(params, "w_sigma").transpose();
  }

  const VectorXd d_z2 = d_h2.cwiseProduct((a.z2.array() > 0.0).cast<double>().matrix());
  layout.view(out.grad, "W2") = d_z2 * a.h1.transpose();
  layout.view(out.grad, "b2") = d_z2;
  const VectorXd d_h1 = layout.view(params, "W2").transpose() * d_z2;
  const VectorXd d_z1 = d_h1.cwiseProduct((a.z1.array() > 0.0).cast<double>().matrix());
  layout.view(out.grad, "W1") = d_z1 * obs.transpose();
  layout.view(out.grad, "b1") = d_z1;
  return out;
}

VectorXd q_forward(const ParamVector& params, const ParamLayout& layout, const VectorXd& feats) {
  if (layout.shape().kind != NetKind::QHead) {
    throw std::domain_error("layout is not a Q head");
  }
  if (params.size() != layout.total()) {
    throw std::domain_error("parameter vector does not match layout");
  }
  if (feats.size() != layout.shape().input_dim) {
    throw std::domain_error("feature length does not match Q head");
  }
  return layout.view(params, "W") * feats + layout.view(params, "b");
}

LossGrad td_loss_and_grad(const ParamVector& params, const ParamLayout& layout,
                          const std::vector<TdSample>& batch) {
  if (batch.empty()) {
    throw std::domain_error("TD batch is empty");
  }
  LossGrad out{0.0, VectorXd::Zero(layout.total())};
  auto d_w = layout.view(out.grad, "W");
  auto d_b = layout.view(out.grad, "b");
  const double n = static_cast<double>(batch.size());
  for (const auto& s : batch) {
    const VectorXd q = q_forward(params, layout, s.features);
    if (s.action < 0 || s.action >= q.size()) {
      throw std::domain_error("action index out of range");
    }
    const double err = s.target - q(s.action);
    out.loss += err * err / n;
    // d/dQ (y - Q)^2 = -2 (y - Q)
    const double coeff = -2.0 * err / n;
    d_w.row(s.action) += coeff * s.features.transpose();
    d_b(s.action, 0) += coeff;
  }
  return out;
}

double encode_angle(double x) {
  return std::clamp(std::numbers::pi * x, -std::numbers::pi, std::numbers::pi);
}

namespace {

QubitState embed_state(const VectorXd& obs, const ParamVector& embed_params) {
  if (obs.size() > 3) {
    throw std::domain_error("quantum_embed encodes at most three observation components");
  }
  if (embed_params.size() != kEmbedParams) {
    throw std::domain_error("quantum_embed expects " + std::to_string(kEmbedParams) + " angles");
  }
  constexpr Gate encoders[3] = {Gate::Rx, Gate::Ry, Gate::Rz};
  ComplexMatrix2 u = ComplexMatrix2::Identity();
  for (Index i = 0; i < obs.size(); ++i) {
    u = gate_matrix({encoders[i], encode_angle(obs(i))}) * u;
  }
  for (int l = 0; l < kEmbedLayers; ++l) {
    u = gate_matrix({Gate::Ry, embed_params(2 * l)}) * u;
    u = gate_matrix({Gate::Rz, embed_params(2 * l + 1)}) * u;
  }
  return conjugate(QubitState::ground(), u);
}

}  // namespace

Eigen::Vector3d quantum_embed(const VectorXd& obs, const ParamVector& embed_params) {
  return embed_state(obs, embed_params).bloch();
}

MatrixXd quantum_embed_jacobian(const VectorXd& obs, const ParamVector& embed_params) {
  MatrixXd jac(3, kEmbedParams);
  const double shift = 0.5 * std::numbers::pi;
  for (int k = 0; k < kEmbedParams; ++k) {
    ParamVector plus = embed_params;
    ParamVector minus = embed_params;
    plus(k) += shift;
    minus(k) -= shift;
    jac.col(k) = 0.5 * (quantum_embed(obs, plus) - quantum_embed(obs, minus));
  }
  return jac;
}

}  // namespace qppg
