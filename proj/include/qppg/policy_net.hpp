// Small dense networks with hand-written reverse-mode gradients: a two-layer
// ReLU feature extractor feeding a categorical head (and optionally a
// Gaussian power head), a linear Q-value head, and a single-qubit embedding
// circuit for the value-based agent.
#pragma once

#include "qppg/fisher.hpp"
#include "qppg/quantum.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace qppg {

using ParamVector = Eigen::VectorXd;

enum class NetKind { Policy, QHead };

struct NetworkShape {
  NetKind kind = NetKind::Policy;
  int input_dim = 3;   // observation length (Policy) or feature length (QHead)
  int width = 16;      // hidden width, unused for QHead
  int num_actions = 5;
  bool gaussian_head = false;
};

struct LayerSlice {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index offset = 0;
  Eigen::Index size() const { return rows * cols; }
};

/// Named column-major matrices packed into one flat parameter vector.
class ParamLayout {
 public:
  explicit ParamLayout(NetworkShape shape);

  static ParamLayout policy(int input_dim, int width, int num_actions, bool gaussian_head = false) {
    return ParamLayout({NetKind::Policy, input_dim, width, num_actions, gaussian_head});
  }
  static ParamLayout q_head(int feature_dim, int num_actions) {
    return ParamLayout({NetKind::QHead, feature_dim, 0, num_actions, false});
  }

  const NetworkShape& shape() const { return shape_; }
  const std::vector<LayerSlice>& layers() const { return layers_; }
  Eigen::Index total() const { return total_; }
  const LayerSlice& layer(const std::string& name) const;

  /// One block per named layer.
  BlockLayout blocks() const;

  Eigen::Map<const Eigen::MatrixXd> view(const ParamVector& params, const std::string& name) const;
  Eigen::Map<Eigen::MatrixXd> view(ParamVector& params, const std::string& name) const;

 private:
  void add(const std::string& name, Eigen::Index rows, Eigen::Index cols);

  NetworkShape shape_;
  std::vector<LayerSlice> layers_;
  Eigen::Index total_ = 0;
};

std::vector<Eigen::MatrixXd> unflatten(const ParamVector& params, const ParamLayout& layout);
ParamVector flatten(const std::vector<Eigen::MatrixXd>& layers, const ParamLayout& layout);

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero.
ParamVector init_params(const ParamLayout& layout, Rng& rng);

struct Gaussian {
  double mean = 0.0;
  double stddev = 1.0;
};

struct ActionDistribution {
  Eigen::VectorXd probs;
  std::optional<Gaussian> power;
};

/// A discrete choice plus, for hybrid heads, the raw (unclipped) Gaussian
/// sample for the continuous component.
struct Action {
  int index = 0;
  double power = 0.0;
};

/// Added to softplus(.) so the Gaussian std stays bounded away from zero.
inline constexpr double kMinStd = 1e-3;

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
double softplus(double x);

ActionDistribution forward(const ParamVector& params, const ParamLayout& layout,
                           const Eigen::VectorXd& obs);

/// Hidden features f(s) = ReLU(W2 ReLU(W1 s + b1) + b2).
Eigen::VectorXd features(const ParamVector& params, const ParamLayout& layout,
                         const Eigen::VectorXd& obs);

struct LogProbGrad {
  double logp = 0.0;
  Eigen::VectorXd grad;
};

/// log pi(a|s) and its exact gradient with respect to every parameter.
LogProbGrad logprob_and_grad(const ParamVector& params, const ParamLayout& layout,
                             const Eigen::VectorXd& obs, const Action& action);

/// Linear Q head: W f + b.
Eigen::VectorXd q_forward(const ParamVector& params, const ParamLayout& layout,
                          const Eigen::VectorXd& features);

struct TdSample {
  Eigen::VectorXd features;
  int action = 0;
  double target = 0.0;
};

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

/// Mean squared TD error over the batch and its gradient w.r.t. the head.
LossGrad td_loss_and_grad(const ParamVector& params, const ParamLayout& layout,
                          const std::vector<TdSample>& batch);

/// Embedding circuit depth and trainable angle count.
inline constexpr int kEmbedLayers = 2;
inline constexpr int kEmbedParams = 2 * kEmbedLayers;

/// Affine map from an observation component to an encoding angle, clamped to
/// [-pi, pi].
double encode_angle(double x);

/// Angle-encodes up to three observation components with Rx, Ry, Rz applied
/// in that order to |0>, then kEmbedLayers trainable (Ry(a), Rz(b)) layers.
/// Returns the Bloch vector (<X>, <Y>, <Z>).
Eigen::Vector3d quantum_embed(const Eigen::VectorXd& obs, const ParamVector& embed_params);

/// d quantum_embed / d embed_params (3 x kEmbedParams) by the parameter-shift
/// rule.
Eigen::MatrixXd quantum_embed_jacobian(const Eigen::VectorXd& obs, const ParamVector& embed_params);

}  // namespace qppg
