// Information geometry kernels: classical Fisher information, pure-state
// (Fubini-Study) and mixed-state (SLD) quantum Fisher information, and the
// Tikhonov-regularized solves used to precondition policy gradients.
#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qppg {

/// Real symmetric positive-semidefinite information matrix.
class FisherMatrix {
 public:
  FisherMatrix() = default;
  /// Throws std::domain_error if `data` is not square, finite and symmetric
  /// within 1e-10.
  explicit FisherMatrix(Eigen::MatrixXd data);

  static FisherMatrix zero(Eigen::Index dim) { return FisherMatrix(Eigen::MatrixXd::Zero(dim, dim)); }
  static FisherMatrix identity(Eigen::Index dim) {
    return FisherMatrix(Eigen::MatrixXd::Identity(dim, dim));
  }

  const Eigen::MatrixXd& data() const { return data_; }
  Eigen::Index dim() const { return data_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return data_(i, j); }
  double min_eigenvalue() const;

 private:
  Eigen::MatrixXd data_;
};

inline constexpr double kFisherSymmetryTolerance = 1e-10;

struct Block {
  std::string name;
  Eigen::Index start = 0;
  Eigen::Index length = 0;
};

/// Ordered partition of [0, d) into named contiguous blocks.
class BlockLayout {
 public:
  /// Throws std::domain_error unless the blocks are disjoint, in order and
  /// cover [0, dim) exactly.
  BlockLayout(std::vector<Block> blocks, Eigen::Index dim);

  static BlockLayout single(Eigen::Index dim, std::string name = "all");

  const std::vector<Block>& blocks() const { return blocks_; }
  Eigen::Index dim() const { return dim_; }

 private:
  std::vector<Block> blocks_;
  Eigen::Index dim_ = 0;
};

/// Unit state vector psi(theta) with its partial derivatives d psi / d theta_i.
struct PureTangent {
  Eigen::VectorXcd value;
  std::vector<Eigen::VectorXcd> partials;
};

/// Density matrix rho(theta) with its partial derivatives.
struct MixedTangent {
  Eigen::MatrixXcd value;
  std::vector<Eigen::MatrixXcd> partials;
};

/// 4 Re[<d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi>].
FisherMatrix qfi_pure(const PureTangent& bundle);

inline constexpr double kDefaultEigCutoff = 1e-10;

/// SLD quantum Fisher information evaluated in the eigenbasis of rho:
/// sum over (k,l) with lambda_k + lambda_l > eig_cutoff of
/// 2 Re[(d_i rho)_kl (d_j rho)_lk] / (lambda_k + lambda_l).
FisherMatrix qfi_sld(const MixedTangent& bundle, double eig_cutoff = kDefaultEigCutoff);

/// Empirical mean of outer products g g^T.
FisherMatrix classical_fim(std::span<const Eigen::VectorXd> grad_logprob_samples);

/// Mean of outer products applied to v without materializing the matrix.
Eigen::VectorXd fisher_vector_product(std::span<const Eigen::VectorXd> samples,
                                      const Eigen::VectorXd& v);

/// Componentwise square root of a probability vector.
Eigen::VectorXd amplitude_embed(const Eigen::VectorXd& probs);

FisherMatrix block_diagonal_of(const FisherMatrix& fisher, const BlockLayout& layout);

enum class SolveMethod { Dense, ConjugateGradient, Auto };

/// Dimension above which SolveMethod::Auto switches to conjugate gradient.
inline constexpr Eigen::Index kDenseSolveMaxDim = 1024;

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CgOptions {
  double relative_tolerance = 1e-8;
  /// 0 means 10 * dim.
  int max_iterations = 0;
};

struct CgReport {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Solves (M + xi I) x = g. M is symmetrized before use. xi <= 0 or a
/// non-symmetric M throws std::domain_error; CG non-convergence throws
/// SolverError.
Eigen::VectorXd precondition_solve(const FisherMatrix& m, double xi, const Eigen::VectorXd& g,
                                   SolveMethod method = SolveMethod::Auto,
                                   const CgOptions& options = {});

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Conjugate gradient on (A + xi I) x = g using only products with A.
Eigen::VectorXd conjugate_gradient(const LinearOperator& apply, double xi, const Eigen::VectorXd& g,
                                   const CgOptions& options = {}, CgReport* report = nullptr);

/// Moore-Penrose solve M^+ g, discarding eigenvalues below
/// rel_cutoff * max eigenvalue. This is the xi -> 0+ limit of
/// precondition_solve restricted to the range of M.
Eigen::VectorXd pseudo_inverse_solve(const FisherMatrix& m, const Eigen::VectorXd& g,
                                     double rel_cutoff = 1e-10);

/// Central finite-difference tangents, for checking analytic derivatives.
using PureFamily = std::function<Eigen::VectorXcd(const Eigen::VectorXd&)>;
using MixedFamily = std::function<Eigen::MatrixXcd(const Eigen::VectorXd&)>;

PureTangent finite_difference_tangent(const PureFamily& family, const Eigen::VectorXd& theta,
                                      double step = 1e-5);
MixedTangent finite_difference_tangent(const MixedFamily& family, const Eigen::VectorXd& theta,
                                       double step = 1e-5);

}  // namespace qppg
