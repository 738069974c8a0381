#pragma once

// Exact evolution of two kicked tops coupled through (eps/j) J_z1 J_z2 and
// the entanglement of the first top with the second.
//
// The product-basis state is kept as a dim x dim amplitude matrix M with
// M(i1, i2) the amplitude on |m1(i1)> (x) |m2(i2)>. One step is
//   M <- P o (U1 M U2^T),   P(i1, i2) = exp(-i eps m1 m2 / j),
// so the dim^2 x dim^2 Floquet matrix is never formed.

#include <vector>

#include "kickedtop/quantum_top.hpp"
#include "kickedtop/spin.hpp"

namespace kickedtop {

struct CoupledParams {
  double j = 1.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double epsilon = 0.0;

  CoupledParams() = default;
  CoupledParams(double j_, double k1_, double k2_, double epsilon_);
  SpinBasis basis() const { return SpinBasis(j); }
};

class CoupledState {
 public:
  CoupledState(SpinBasis basis, CMatrix amplitudes);
  static CoupledState product(const SpinState& first, const SpinState& second);

  const SpinBasis& basis() const { return basis_; }
  const CMatrix& amplitudes() const { return amplitudes_; }
  double norm() const { return amplitudes_.norm(); }

  // Column-major vec(M), i.e. index i1 + dim * i2.
  CVector flattened() const;

 private:
  friend class CoupledPropagator;
  SpinBasis basis_;
  CMatrix amplitudes_;
};

// Caches U1, U2^T and the coupling phases for one parameter set. Immutable
// after construction; one instance can drive several trajectories at once.
class CoupledPropagator {
 public:
  CoupledPropagator(const OperatorMatrix& u1, const OperatorMatrix& u2, double epsilon);
  explicit CoupledPropagator(const CoupledParams& params);

  void step(CoupledState& state) const;
  const SpinBasis& basis() const { return basis_; }

 private:
  SpinBasis basis_;
  CMatrix u1_;
  CMatrix u2_transposed_;
  CMatrix phases_;
};

CMatrix coupling_phases(const SpinBasis& basis, double epsilon);

CoupledState coupled_step(const CoupledState& state, const OperatorMatrix& u1, const OperatorMatrix& u2,
                          double epsilon);

struct ReducedDensity {
  CMatrix entries;

  double trace() const;
};

// rho_1 = M M^dagger.
ReducedDensity reduced_density(const CoupledState& state);
// rho_2 = M^T conj(M).
ReducedDensity reduced_density_second(const CoupledState& state);

// 1 - Tr(rho^2) from the Frobenius norm; no eigensolver.
double linear_entropy(const ReducedDensity& rho);

// Eigenvalues of rho below this contribute nothing to the von Neumann entropy.
inline constexpr double kEigenvalueFloor = 1e-12;

double entropy_from_eigenvalues(const Eigen::VectorXd& eigenvalues);

// -sum lambda ln lambda from a Hermitian eigensolver. Throws NumericalFailure
// if the solver does not converge.
double von_neumann_entropy(const ReducedDensity& rho);

// Same quantity from the Schmidt coefficients (singular values of M).
double von_neumann_entropy(const CoupledState& state);
Eigen::VectorXd schmidt_probabilities(const CoupledState& state);

struct EntropySeries {
  std::vector<int> times;
  std::vector<double> linear;
  std::vector<double> von_neumann;  // empty when not requested
};

struct EntropyOptions {
  bool von_neumann = true;
  double norm_tolerance = 1e-12;  // allowed |norm - 1| per step
};

EntropySeries entropy_series(const CoupledParams& params, const CoherentParams& initial1,
                             const CoherentParams& initial2, int steps, EntropyOptions options = {});

}  // namespace kickedtop
