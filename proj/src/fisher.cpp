#include "qppg/fisher.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace qppg {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

FisherMatrix::FisherMatrix(MatrixXd data) : data_(std::move(data)) {
  if (data_.rows() != data_.cols()) {
    throw std::domain_error("Fisher matrix must be square");
  }
  if (!data_.allFinite()) {
    throw std::domain_error("Fisher matrix has non-finite entries");
  }
  if (data_.size() > 0) {
    const double scale = std::max(1.0, data_.cwiseAbs().maxCoeff());
    if ((data_ - data_.transpose()).cwiseAbs().maxCoeff() > kFisherSymmetryTolerance * scale) {
      throw std::domain_error("Fisher matrix is not symmetric");
    }
  }
}

double FisherMatrix::min_eigenvalue() const {
  if (data_.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(data_, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

BlockLayout::BlockLayout(std::vector<Block> blocks, Index dim) : blocks_(std::move(blocks)), dim_(dim) {
  Index cursor = 0;
  for (const auto& b : blocks_) {
    if (b.start != cursor || b.length <= 0) {
      throw std::domain_error("block '" + b.name + "' does not continue the partition at index " +
                              std::to_string(cursor));
    }
    cursor += b.length;
  }
  if (cursor != dim_) {
    throw std::domain_error("blocks cover " + std::to_string(cursor) + " of " +
                            std::to_string(dim_) + " parameters");
  }
}

BlockLayout BlockLayout::single(Index dim, std::string name) {
  return BlockLayout({Block{std::move(name), 0, dim}}, dim);
}

FisherMatrix qfi_pure(const PureTangent& bundle) {
  const VectorXcd& psi = bundle.value;
  if (std::abs(psi.norm() - 1.0) > 1e-10) {
    throw std::domain_error("qfi_pure requires a normalized state");
  }
  const auto d = static_cast<Index>(bundle.partials.size());
  // overlaps(i) = <psi|d_i psi>
  VectorXcd overlaps(d);
  for (Index i = 0; i < d; ++i) {
    const auto& di = bundle.partials[static_cast<size_t>(i)];
    if (di.size() != psi.size() || !di.allFinite()) {
      throw std::domain_error("tangent has wrong shape or non-finite entries");
    }
    overlaps(i) = psi.dot(di);
  }
  MatrixXd g(d, d);
  for (Index i = 0; i < d; ++i) {
    const auto& di = bundle.partials[static_cast<size_t>(i)];
    for (Index j = i; j < d; ++j) {
      const auto& dj = bundle.partials[static_cast<size_t>(j)];
      // <d_i psi|psi><psi|d_j psi> = conj(overlaps_i) * overlaps_j
      const std::complex<double> term = di.dot(dj) - std::conj(overlaps(i)) * overlaps(j);
      g(i, j) = g(j, i) = 4.0 * term.real();
    }
  }
  return FisherMatrix(std::move(g));
}

FisherMatrix qfi_sld(const MixedTangent& bundle, double eig_cutoff) {
  const MatrixXcd& rho = bundle.value;
  if (rho.rows() != rho.cols() || !rho.allFinite()) {
    throw std::domain_error("qfi_sld requires a finite square density matrix");
  }
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::domain_error("density matrix is not Hermitian");
  }
  const MatrixXcd herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(herm);
  const VectorXd& lambda = eig.eigenvalues();
  if (lambda.minCoeff() < -1e-10) {
    throw std::domain_error("density matrix is not positive semidefinite");
  }
  const MatrixXcd& basis = eig.eigenvectors();

  const auto d = static_cast<Index>(bundle.partials.size());
  std::vector<MatrixXcd> rotated;
  rotated.reserve(bundle.partials.size());
  for (const auto& p : bundle.partials) {
    if (p.rows() != rho.rows() || p.cols() != rho.cols() || !p.allFinite()) {
      throw std::domain_error("tangent has wrong shape or non-finite entries");
    }
    if ((p - p.adjoint()).cwiseAbs().maxCoeff() > 1e-10 || std::abs(p.trace()) > 1e-10) {
      throw std::domain_error("density-matrix derivative must be Hermitian and traceless");
    }
    rotated.push_back(basis.adjoint() * p * basis);
  }

  const Index n = rho.rows();
  MatrixXd g = MatrixXd::Zero(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = i; j < d; ++j) {
      double sum = 0.0;
      for (Index k = 0; k < n; ++k) {
        for (Index l = 0; l < n; ++l) {
          const double denom = lambda(k) + lambda(l);
          if (denom <= eig_cutoff) continue;
          sum += 2.0 * (rotated[static_cast<size_t>(i)](k, l) * rotated[static_cast<size_t>(j)](l, k)).real() /
                 denom;
        }
      }
      g(i, j) = g(j, i) = sum;
    }
  }
  return FisherMatrix(std::move(g));
}

FisherMatrix classical_fim(std::span<const VectorXd> samples) {
  if (samples.empty()) {
    throw std::domain_error("classical_fim needs at least one sample");
  }
  const Index d = samples.front().size();
  MatrixXd f = MatrixXd::Zero(d, d);
  for (const auto& s : samples) {
    if (s.size() != d || !s.allFinite()) {
      throw std::domain_error("score samples must be finite and of equal length");
    }
    f.selfadjointView<Eigen::Lower>().rankUpdate(s);
  }
  f = f.selfadjointView<Eigen::Lower>();
  f /= static_cast<double>(samples.size());
  return FisherMatrix(std::move(f));
}

VectorXd fisher_vector_product(std::span<const VectorXd> samples, const VectorXd& v) {
  if (samples.empty()) {
    throw std::domain_error("fisher_vector_product needs at least one sample");
  }
  VectorXd out = VectorXd::Zero(v.size());
  for (const auto& s : samples) {
    out += s.dot(v) * s;
  }
  return out / static_cast<double>(samples.size());
}

VectorXd amplitude_embed(const VectorXd& probs) {
  if ((probs.array() < 0.0).any()) {
    throw std::domain_error("amplitude_embed: negative probability");
  }
  if (std::abs(probs.sum() - 1.0) > 1e-10) {
    throw std::domain_error("amplitude_embed: probabilities must sum to 1");
  }
  return probs.cwiseSqrt();
}

FisherMatrix block_diagonal_of(const FisherMatrix& fisher, const BlockLayout& layout) {
  if (layout.dim() != fisher.dim()) {
    throw std::domain_error("block layout dimension does not match the Fisher matrix");
  }
  MatrixXd out = MatrixXd::Zero(fisher.dim(), fisher.dim());
  for (const auto& b : layout.blocks()) {
    out.block(b.start, b.start, b.length, b.length) =
        fisher.data().block(b.start, b.start, b.length, b.length);
  }
  return FisherMatrix(std::move(out));
}

VectorXd conjugate_gradient(const LinearOperator& apply, double xi, const VectorXd& g,
                            const CgOptions& options, CgReport* report) {
  const Index d = g.size();
  const int max_iter = options.max_iterations > 0 ? options.max_iterations : static_cast<int>(10 * d);
  VectorXd x = VectorXd::Zero(d);
  const double g_norm = g.norm();
  if (g_norm == 0.0) {
    if (report) *report = {0, 0.0};
    return x;
  }
  VectorXd r = g;
  VectorXd p = r;
  double rr = r.squaredNorm();
  for (int it = 1; it <= max_iter; ++it) {
    const VectorXd ap = apply(p) + xi * p;
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) {
      throw SolverError("conjugate gradient: operator is not positive definite");
    }
    const double step = rr / pap;
    x += step * p;
    r -= step * ap;
    const double rr_next = r.squaredNorm();
    const double rel = std::sqrt(rr_next) / g_norm;
    if (rel <= options.relative_tolerance) {
      if (report) *report = {it, rel};
      return x;
    }
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  throw SolverError("conjugate gradient did not converge in " + std::to_string(max_iter) +
                    " iterations (relative residual " + std::to_string(std::sqrt(rr) / g_norm) + ")");
}

VectorXd precondition_solve(const FisherMatrix& m, double xi, const VectorXd& g, SolveMethod method,
                            const CgOptions& options) {
  if (!(xi > 0.0) || !std::isfinite(xi)) {
    throw std::domain_error("Tikhonov strength xi must be positive");
  }
  if (g.size() != m.dim() || !g.allFinite()) {
    throw std::domain_error("gradient must be finite and match the matrix dimension");
  }
  const MatrixXd sym = 0.5 * (m.data() + m.data().transpose());
  if (method == SolveMethod::Auto) {
    method = m.dim() <= kDenseSolveMaxDim ? SolveMethod::Dense : SolveMethod::ConjugateGradient;
  }
  if (method == SolveMethod::Dense) {
    MatrixXd reg = sym;
    reg.diagonal().array() += xi;
    Eigen::LLT<MatrixXd> llt(reg);
    if (llt.info() != Eigen::Success) {
      throw SolverError("Cholesky factorization failed: M + xi I is not positive definite");
    }
    return llt.solve(g);
  }
  return conjugate_gradient([&sym](const VectorXd& v) -> VectorXd { return sym * v; }, xi, g, options);
}

VectorXd pseudo_inverse_solve(const FisherMatrix& m, const VectorXd& g, double rel_cutoff) {
  if (g.size() != m.dim()) {
    throw std::domain_error("gradient must match the matrix dimension");
  }
  const MatrixXd sym = 0.5 * (m.data() + m.data().transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym);
  const VectorXd& lambda = eig.eigenvalues();
  const double cutoff = rel_cutoff * std::max(0.0, lambda.maxCoeff());
  VectorXd coeff = eig.eigenvectors().transpose() * g;
  for (Index k = 0; k < coeff.size(); ++k) {
    coeff(k) = lambda(k) > cutoff && lambda(k) > 0.0 ? coeff(k) / lambda(k) : 0.0;
  }
  return eig.eigenvectors() * coeff;
}

PureTangent finite_difference_tangent(const PureFamily& family, const VectorXd& theta, double step) {
  PureTangent out{family(theta), {}};
  for (Index i = 0; i < theta.size(); ++i) {
    VectorXd plus = theta;
    VectorXd minus = theta;
    plus(i) += step;
    minus(i) -= step;
    out.partials.push_back((family(plus) - family(minus)) / (2.0 * step));
  }
  return out;
}

MixedTangent finite_difference_tangent(const MixedFamily& family, const VectorXd& theta, double step) {
  MixedTangent out{family(theta), {}};
  for (Index i = 0; i < theta.size(); ++i) {
    VectorXd plus = theta;
    VectorXd minus = theta;
    plus(i) += step;
    minus(i) -= step;
    MatrixXcd diff = (family(plus) - family(minus)) / (2.0 * step);
    out.partials.push_back(0.5 * (diff + diff.adjoint()));
  }
  return out;
}

}  // namespace qppg
