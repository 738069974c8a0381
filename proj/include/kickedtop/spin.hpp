#pragma once

// Angular-momentum algebra for a single spin j: operator matrices, Wigner
// rotation matrices about the y axis, spin coherent states and Husimi
// distributions.
//
// Basis ordering is descending in m everywhere in this library: index i holds
// |j, m = j - i>. SpinBasis::m() is the only place that encodes it.

#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "kickedtop/errors.hpp"

namespace kickedtop {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

class SpinBasis {
 public:
  // j must be a positive integer or half-integer.
  explicit SpinBasis(double j);
  static SpinBasis from_twice_j(int twice_j);

  double j() const { return 0.5 * twice_j_; }
  int twice_j() const { return twice_j_; }
  Index dim() const { return twice_j_ + 1; }

  double m(Index i) const { return j() - static_cast<double>(i); }
  // Integer-valued j+m and j-m for basis index i.
  int j_plus_m(Index i) const { return twice_j_ - static_cast<int>(i); }
  int j_minus_m(Index i) const { return static_cast<int>(i); }

  friend bool operator==(const SpinBasis&, const SpinBasis&) = default;

 private:
  int twice_j_ = 1;
};

enum class OperatorKind { hermitian, unitary, general };

struct OperatorMatrix {
  SpinBasis basis;
  CMatrix entries;
  OperatorKind kind = OperatorKind::general;

  double hermitian_defect() const;  // max |A - A^dagger|
  double unitary_defect() const;    // max |A^dagger A - I|
};

class SpinState {
 public:
  // Amplitudes must already be normalized to 1e-12; use normalized() otherwise.
  SpinState(SpinBasis basis, CVector amplitudes);
  static SpinState normalized(SpinBasis basis, CVector amplitudes);

  const SpinBasis& basis() const { return basis_; }
  const CVector& amplitudes() const { return amplitudes_; }
  double norm() const { return amplitudes_.norm(); }

 private:
  SpinBasis basis_;
  CVector amplitudes_;
};

// Point on the sphere: theta in [0, pi], phi in [-pi, pi).
struct CoherentParams {
  double theta = 0.0;
  double phi = 0.0;

  CoherentParams() = default;
  CoherentParams(double theta_, double phi_);
  // Maps any finite angles into the canonical ranges.
  static CoherentParams wrapped(double theta, double phi);
};

enum class Axis { x, y, z };

OperatorMatrix build_angular_momentum(const SpinBasis& basis, Axis axis);

// Matrix elements <j m'| exp(-i beta J_y) |j m>, evaluated through the Jacobi
// polynomial form with log-gamma prefactors. Real and orthogonal.
OperatorMatrix wigner_d(const SpinBasis& basis, double beta);

// Single element of the above; exposed for testing.
double wigner_d_element(const SpinBasis& basis, Index row, Index col, double beta);

SpinState coherent_state(const SpinBasis& basis, const CoherentParams& params);

// Q(theta, phi) = |<theta, phi | psi>|^2 at every grid point.
std::vector<double> husimi(const SpinState& state, std::span<const CoherentParams> grid);

// Uniform (theta, phi) grid: theta_i = (i + 1/2) pi / n_theta,
// phi_k = -pi + 2 pi k / n_phi. Ordered theta-major.
std::vector<CoherentParams> husimi_grid(int n_theta, int n_phi);

cplx expectation(const SpinState& state, const CMatrix& op);

}  // namespace kickedtop
