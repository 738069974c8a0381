#pragma once

// Single quantum kicked top: Floquet operator, stroboscopic evolution and
// the variance of z = J_z / j along a trajectory.

#include <vector>

#include "kickedtop/spin.hpp"

namespace kickedtop {

struct TopParams {
  double j = 1.0;
  double k = 0.0;

  TopParams() = default;
  TopParams(double j_, double k_);
  SpinBasis basis() const { return SpinBasis(j); }
};

// sigma^2(t) of z for t = times[i]; t = 0 is the initial state.
struct VarianceSeries {
  std::vector<int> times;
  std::vector<double> values;
};

// One kick period: rotation by pi/2 about y followed by the twist
// exp(-i k J_z^2 / (2j)), i.e. U_{m'm} = exp(-i k m'^2 / (2j)) d_{m'm}(pi/2).
// Accepts any real k (the k >= 0 contract lives in TopParams).
OperatorMatrix floquet_operator(const SpinBasis& basis, double k);
OperatorMatrix build_floquet(const TopParams& params);

// U^steps |psi>, as repeated matrix-vector products. Throws NumericalFailure
// if the norm drifts by more than 1e-12 per step before renormalization.
SpinState evolve(const SpinState& state, const OperatorMatrix& floquet, int steps);

// Unnormalized U^steps |psi>, for drift diagnostics.
CVector propagate(const CVector& amplitudes, const CMatrix& floquet, int steps);

struct ZMoments {
  double mean = 0.0;         // <z>
  double mean_square = 0.0;  // <z^2>
  double variance() const;
};

ZMoments z_moments(const SpinState& state);

VarianceSeries variance_series(const TopParams& params, const CoherentParams& initial, int steps);

// z|psi> with z = J_z / j applied elementwise.
CVector apply_z(const SpinBasis& basis, const CVector& amplitudes);

}  // namespace kickedtop
