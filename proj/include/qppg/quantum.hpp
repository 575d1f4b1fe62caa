// Single-qubit density-matrix kernel: gates, Kraus channels, projective
// measurement and the excited-population observable.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace qppg {

using Complex = std::complex<double>;
using ComplexMatrix2 = Eigen::Matrix2cd;
using Rng = std::mt19937_64;

namespace pauli {
ComplexMatrix2 identity();
ComplexMatrix2 x();
ComplexMatrix2 y();
ComplexMatrix2 z();
ComplexMatrix2 hadamard();
}  // namespace pauli

/// Tolerance for algebraic identities on 2x2 matrices.
inline constexpr double kStateTolerance = 1e-12;

/// Valid single-qubit density matrix. Construction checks Hermiticity, unit
/// trace, positivity and the purity range; violations throw
/// std::invalid_argument since they indicate a corrupted state upstream.
class QubitState {
 public:
  /// |0><0|
  QubitState();
  explicit QubitState(const ComplexMatrix2& rho);

  static QubitState ground();
  static QubitState excited();
  static QubitState maximally_mixed();
  /// Pure state from amplitudes; normalizes the input.
  static QubitState from_amplitudes(Complex a0, Complex a1);
  /// State with the given Bloch vector (|r| <= 1).
  static QubitState from_bloch(const Eigen::Vector3d& r);

  const ComplexMatrix2& rho() const { return rho_; }
  double purity() const;
  Eigen::Vector3d bloch() const;
  double population(int level) const { return rho_(level, level).real(); }

 private:
  struct Unchecked {};
  QubitState(const ComplexMatrix2& rho, Unchecked) : rho_(rho) {}
  friend QubitState conjugate(const QubitState&, const ComplexMatrix2&);
  friend class KrausChannel;

  ComplexMatrix2 rho_;
};

/// Throws std::invalid_argument naming the first violated invariant.
void check_density_matrix(const ComplexMatrix2& rho, double tol = kStateTolerance);

enum class Gate : std::uint8_t { Rx, Ry, Rz, H, I };

struct GateAction {
  Gate gate = Gate::I;
  double angle = 0.0;  // radians; ignored for H and I
};

/// R_a(theta) = exp(-i theta sigma_a / 2); H = [[1,1],[1,-1]]/sqrt(2).
ComplexMatrix2 gate_matrix(const GateAction& action);

/// U rho U^dagger for an arbitrary unitary U.
QubitState conjugate(const QubitState& state, const ComplexMatrix2& unitary);
QubitState apply_gate(const QubitState& state, const GateAction& action);

enum class ChannelKind : std::uint8_t { Depolarizing, AmplitudeDamping, Dephasing };

std::string_view to_string(ChannelKind kind);

class KrausChannel {
 public:
  /// Throws std::invalid_argument when the operators are not trace preserving.
  KrausChannel(ChannelKind kind, double rate, std::vector<ComplexMatrix2> ops);

  ChannelKind kind() const { return kind_; }
  double rate() const { return rate_; }
  const std::vector<ComplexMatrix2>& ops() const { return ops_; }

  /// max |(sum_k K_k^dagger K_k - I)_ij|
  double completeness_error() const;

  QubitState apply(const QubitState& state) const;

 private:
  ChannelKind kind_;
  double rate_;
  std::vector<ComplexMatrix2> ops_;
};

/// Kraus sets: depolarizing {sqrt(1-3p/4) I, sqrt(p/4) sigma_xyz},
/// amplitude damping {diag(1, sqrt(1-g)), sqrt(g)|0><1|},
/// dephasing {sqrt(1-l) I, sqrt(l) sigma_z}. Rate outside [0,1] throws
/// std::domain_error.
KrausChannel make_channel(ChannelKind kind, double rate);

QubitState apply_channel(const QubitState& state, const KrausChannel& channel);

struct Measurement {
  int outcome = 0;
  QubitState state;
};

/// Computational-basis measurement with Born probabilities (rho_00, rho_11).
Measurement measure_collapse(const QubitState& state, Rng& rng);

/// <1|rho|1>
double excited_population(const QubitState& state);

}  // namespace qppg
