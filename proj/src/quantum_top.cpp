#include "kickedtop/quantum_top.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kickedtop {

TopParams::TopParams(double j_, double k_) : j(j_), k(k_) {
  if (!(j > 0.0)) throw std::invalid_argument("spin j must be positive");
  if (!(k >= 0.0) || !std::isfinite(k)) throw std::invalid_argument("kick strength k must be finite and >= 0");
  (void)SpinBasis(j);
}

OperatorMatrix floquet_operator(const SpinBasis& basis, double k) {
  OperatorMatrix u = wigner_d(basis, 0.5 * std::numbers::pi);
  const double scale = k / (2.0 * basis.j());
  for (Index r = 0; r < basis.dim(); ++r) {
    const double m = basis.m(r);
    u.entries.row(r) *= std::polar(1.0, -scale * m * m);
  }
  u.kind = OperatorKind::unitary;
  return u;
}

OperatorMatrix build_floquet(const TopParams& params) { return floquet_operator(params.basis(), params.k); }

CVector propagate(const CVector& amplitudes, const CMatrix& floquet, int steps) {
  if (floquet.rows() != amplitudes.size() || floquet.cols() != amplitudes.size())
    throw DimensionMismatch("Floquet operator does not match state dimension");
  if (steps < 0) throw std::invalid_argument("step count must be non-negative");
  CVector v = amplitudes;
  CVector next(v.size());
  for (int s = 0; s < steps; ++s) {
    next.noalias() = floquet * v;
    v.swap(next);
  }
  return v;
}

SpinState evolve(const SpinState& state, const OperatorMatrix& floquet, int steps) {
  if (!(floquet.basis == state.basis())) throw DimensionMismatch("Floquet operator built for a different spin");
  CVector v = propagate(state.amplitudes(), floquet.entries, steps);
  const double drift = std::abs(v.norm() - 1.0);
  if (drift > 1e-12 * (steps + 1))
    throw NumericalFailure("norm drift " + std::to_string(drift) + " after " + std::to_string(steps) + " steps");
  return SpinState::normalized(state.basis(), std::move(v));
}

double ZMoments::variance() const { return std::max(0.0, mean_square - mean * mean); }

ZMoments z_moments(const SpinState& state) {
  const SpinBasis& b = state.basis();
  const double inv_j = 1.0 / b.j();
  ZMoments out;
  for (Index i = 0; i < b.dim(); ++i) {
    const double p = std::norm(state.amplitudes()(i));
    const double z = b.m(i) * inv_j;
    out.mean += p * z;
    out.mean_square += p * z * z;
  }
  return out;
}

VarianceSeries variance_series(const TopParams& params, const CoherentParams& initial, int steps) {
  if (steps < 1) throw std::invalid_argument("variance series needs at least one step");
  const OperatorMatrix u = build_floquet(params);
  SpinState psi = coherent_state(params.basis(), initial);
  VarianceSeries out;
  out.times.reserve(steps + 1);
  out.values.reserve(steps + 1);
  for (int t = 0; t <= steps; ++t) {
    if (t > 0) psi = evolve(psi, u, 1);
    out.times.push_back(t);
    out.values.push_back(std::min(1.0, z_moments(psi).variance()));
  }
  return out;
}

CVector apply_z(const SpinBasis& basis, const CVector& amplitudes) {
  CVector out(amplitudes.size());
  const double inv_j = 1.0 / basis.j();
  for (Index i = 0; i < amplitudes.size(); ++i) out(i) = amplitudes(i) * (basis.m(i) * inv_j);
  return out;
}

}  // namespace kickedtop
