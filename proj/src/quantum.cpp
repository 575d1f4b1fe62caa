#include "qppg/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qppg {

namespace pauli {
ComplexMatrix2 identity() { return ComplexMatrix2::Identity(); }

ComplexMatrix2 x() {
  ComplexMatrix2 m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

ComplexMatrix2 y() {
  ComplexMatrix2 m;
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return m;
}

ComplexMatrix2 z() {
  ComplexMatrix2 m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

ComplexMatrix2 hadamard() {
  ComplexMatrix2 m;
  const double s = 1.0 / std::numbers::sqrt2;
  m << s, s, s, -s;
  return m;
}
}  // namespace pauli

void check_density_matrix(const ComplexMatrix2& rho, double tol) {
  if (!rho.allFinite()) {
    throw std::invalid_argument("density matrix has non-finite entries");
  }
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) {
    throw std::invalid_argument("density matrix is not Hermitian");
  }
  const double a = rho(0, 0).real();
  const double d = rho(1, 1).real();
  const double trace = a + d;
  if (std::abs(trace - 1.0) > tol) {
    throw std::invalid_argument("density matrix trace is " + std::to_string(trace));
  }
  const double disc = std::sqrt((a - d) * (a - d) + 4.0 * std::norm(rho(0, 1)));
  const double lambda_min = 0.5 * (trace - disc);
  if (lambda_min < -tol) {
    throw std::invalid_argument("density matrix has negative eigenvalue " +
                                std::to_string(lambda_min));
  }
  const double purity = (rho * rho).trace().real();
  if (purity < 0.5 - tol || purity > 1.0 + tol) {
    throw std::invalid_argument("density matrix purity out of range: " + std::to_string(purity));
  }
}

QubitState::QubitState() : rho_(ComplexMatrix2::Zero()) { rho_(0, 0) = 1.0; }

QubitState::QubitState(const ComplexMatrix2& rho) : rho_(rho) { check_density_matrix(rho_); }

QubitState QubitState::ground() { return QubitState(); }

QubitState QubitState::excited() {
  ComplexMatrix2 rho = ComplexMatrix2::Zero();
  rho(1, 1) = 1.0;
  return QubitState(rho, Unchecked{});
}

QubitState QubitState::maximally_mixed() {
  return QubitState(ComplexMatrix2(0.5 * ComplexMatrix2::Identity()), Unchecked{});
}

QubitState QubitState::from_amplitudes(Complex a0, Complex a1) {
  const double norm = std::sqrt(std::norm(a0) + std::norm(a1));
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw std::invalid_argument("amplitudes must be finite and nonzero");
  }
  Eigen::Vector2cd psi(a0 / norm, a1 / norm);
  return QubitState(psi * psi.adjoint());
}

QubitState QubitState::from_bloch(const Eigen::Vector3d& r) {
  const ComplexMatrix2 rho =
      0.5 * (pauli::identity() + r.x() * pauli::x() + r.y() * pauli::y() + r.z() * pauli::z());
  return QubitState(rho);
}

double QubitState::purity() const { return (rho_ * rho_).trace().real(); }

Eigen::Vector3d QubitState::bloch() const {
  return {2.0 * rho_(0, 1).real(), -2.0 * rho_(0, 1).imag(),
          rho_(0, 0).real() - rho_(1, 1).real()};
}

ComplexMatrix2 gate_matrix(const GateAction& action) {
  if (!std::isfinite(action.angle)) {
    throw std::domain_error("gate angle must be finite");
  }
  const double c = std::cos(0.5 * action.angle);
  const double s = std::sin(0.5 * action.angle);
  const Complex minus_i_s(0.0, -s);
  switch (action.gate) {
    case Gate::Rx:
      return c * pauli::identity() + minus_i_s * pauli::x();
    case Gate::Ry:
      return c * pauli::identity() + minus_i_s * pauli::y();
    case Gate::Rz:
      return c * pauli::identity() + minus_i_s * pauli::z();
    case Gate::H:
      return pauli::hadamard();
    case Gate::I:
      return pauli::identity();
  }
  throw std::domain_error("unknown gate");
}

QubitState conjugate(const QubitState& state, const ComplexMatrix2& unitary) {
  check_density_matrix(state.rho());
  ComplexMatrix2 out = unitary * state.rho() * unitary.adjoint();
  // Re-impose exact Hermiticity so rounding never accumulates across steps.
  out = 0.5 * (out + out.adjoint()).eval();
  return QubitState(out);
}

QubitState apply_gate(const QubitState& state, const GateAction& action) {
  return conjugate(state, gate_matrix(action));
}

std::string_view to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::Depolarizing:
      return "depolarizing";
    case ChannelKind::AmplitudeDamping:
      return "amplitude_damping";
    case ChannelKind::Dephasing:
      return "dephasing";
  }
  return "unknown";
}

KrausChannel::KrausChannel(ChannelKind kind, double rate, std::vector<ComplexMatrix2> ops)
    : kind_(kind), rate_(rate), ops_(std::move(ops)) {
  if (ops_.empty()) {
    throw std::invalid_argument("Kraus channel needs at least one operator");
  }
  if (completeness_error() > kStateTolerance) {
    throw std::invalid_argument("Kraus operators are not trace preserving");
  }
}

double KrausChannel::completeness_error() const {
  ComplexMatrix2 sum = ComplexMatrix2::Zero();
  for (const auto& k : ops_) {
    sum += k.adjoint() * k;
  }
  return (sum - ComplexMatrix2::Identity()).cwiseAbs().maxCoeff();
}

QubitState KrausChannel::apply(const QubitState& state) const {
  ComplexMatrix2 out = ComplexMatrix2::Zero();
  for (const auto& k : ops_) {
    out.noalias() += k * state.rho() * k.adjoint();
  }
  out = 0.5 * (out + out.adjoint()).eval();
  return QubitState(out);
}

KrausChannel make_channel(ChannelKind kind, double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw std::domain_error("channel rate must lie in [0, 1], got " + std::to_string(rate));
  }
  std::vector<ComplexMatrix2> ops;
  switch (kind) {
    case ChannelKind::Depolarizing: {
      const double w = std::sqrt(rate / 4.0);
      ops = {std::sqrt(1.0 - 0.75 * rate) * pauli::identity(), w * pauli::x(), w * pauli::y(),
             w * pauli::z()};
      break;
    }
    case ChannelKind::AmplitudeDamping: {
      ComplexMatrix2 k0 = ComplexMatrix2::Zero();
      k0(0, 0) = 1.0;
      k0(1, 1) = std::sqrt(1.0 - rate);
      ComplexMatrix2 k1 = ComplexMatrix2::Zero();
      k1(0, 1) = std::sqrt(rate);
      ops = {k0, k1};
      break;
    }
    case ChannelKind::Dephasing:
      ops = {std::sqrt(1.0 - rate) * pauli::identity(), std::sqrt(rate) * pauli::z()};
      break;
  }
  return KrausChannel(kind, rate, std::move(ops));
}

QubitState apply_channel(const QubitState& state, const KrausChannel& channel) {
  return channel.apply(state);
}

Measurement measure_collapse(const QubitState& state, Rng& rng) {
  const double p1 = std::clamp(state.population(1), 0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const int outcome = uniform(rng) < p1 ? 1 : 0;
  return {outcome, outcome == 1 ? QubitState::excited() : QubitState::ground()};
}

double excited_population(const QubitState& state) {
  // Rounding can leave rho_11 a few ulps outside [0, 1].
  return std::clamp(state.population(1), 0.0, 1.0);
}

}  // namespace qppg
