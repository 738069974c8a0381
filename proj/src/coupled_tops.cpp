#include "kickedtop/coupled_tops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace kickedtop {

CoupledParams::CoupledParams(double j_, double k1_, double k2_, double epsilon_)
    : j(j_), k1(k1_), k2(k2_), epsilon(epsilon_) {
  (void)TopParams(j, k1);
  (void)TopParams(j, k2);
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("coupling epsilon must be >= 0");
}

CoupledState::CoupledState(SpinBasis basis, CMatrix amplitudes) : basis_(basis), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.rows() != basis_.dim() || amplitudes_.cols() != basis_.dim())
    throw DimensionMismatch("amplitude matrix does not match basis dimension");
  if (std::abs(amplitudes_.norm() - 1.0) > 1e-12) throw std::invalid_argument("coupled state is not normalized");
}

CoupledState CoupledState::product(const SpinState& first, const SpinState& second) {
  if (!(first.basis() == second.basis())) throw DimensionMismatch("both tops must share the same spin j");
  return CoupledState(first.basis(), first.amplitudes() * second.amplitudes().transpose());
}

CVector CoupledState::flattened() const { return amplitudes_.reshaped(); }

CMatrix coupling_phases(const SpinBasis& basis, double epsilon) {
  const Index n = basis.dim();
  const double scale = epsilon / basis.j();
  CMatrix p(n, n);
  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < n; ++r) p(r, c) = std::polar(1.0, -scale * basis.m(r) * basis.m(c));
  return p;
}

CoupledPropagator::CoupledPropagator(const OperatorMatrix& u1, const OperatorMatrix& u2, double epsilon)
    : basis_(u1.basis), u1_(u1.entries), u2_transposed_(u2.entries.transpose()),
      phases_(coupling_phases(u1.basis, epsilon)) {
  if (!(u1.basis == u2.basis)) throw DimensionMismatch("both Floquet operators must share the same spin j");
}

CoupledPropagator::CoupledPropagator(const CoupledParams& params)
    : CoupledPropagator(floquet_operator(params.basis(), params.k1), floquet_operator(params.basis(), params.k2),
                        params.epsilon) {}

void CoupledPropagator::step(CoupledState& state) const {
  if (!(state.basis_ == basis_)) throw DimensionMismatch("state and propagator dimensions differ");
  CMatrix tmp = u1_ * state.amplitudes_;
  state.amplitudes_.noalias() = tmp * u2_transposed_;
  state.amplitudes_.array() *= phases_.array();
}

CoupledState coupled_step(const CoupledState& state, const OperatorMatrix& u1, const OperatorMatrix& u2,
                          double epsilon) {
  CoupledPropagator prop(u1, u2, epsilon);
  CoupledState next = state;
  prop.step(next);
  return next;
}

double ReducedDensity::trace() const { return entries.trace().real(); }

ReducedDensity reduced_density(const CoupledState& state) {
  const CMatrix& m = state.amplitudes();
  return {m * m.adjoint()};
}

ReducedDensity reduced_density_second(const CoupledState& state) {
  const CMatrix& m = state.amplitudes();
  return {m.transpose() * m.conjugate()};
}

double linear_entropy(const ReducedDensity& rho) {
  // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
  return std::max(0.0, 1.0 - rho.entries.squaredNorm());
}

double entropy_from_eigenvalues(const Eigen::VectorXd& eigenvalues) {
  double s = 0.0;
  for (Index i = 0; i < eigenvalues.size(); ++i) {
    const double p = std::clamp(eigenvalues(i), 0.0, 1.0);
    if (p > kEigenvalueFloor) s -= p * std::log(p);
  }
  return s;
}

double von_neumann_entropy(const ReducedDensity& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.entries, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalFailure("Hermitian eigensolver did not converge");
  return entropy_from_eigenvalues(es.eigenvalues());
}

Eigen::VectorXd schmidt_probabilities(const CoupledState& state) {
  Eigen::BDCSVD<CMatrix> svd(state.amplitudes());
  if (svd.info() != Eigen::Success) throw NumericalFailure("singular value decomposition did not converge");
  return svd.singularValues().array().square();
}

double von_neumann_entropy(const CoupledState& state) { return entropy_from_eigenvalues(schmidt_probabilities(state)); }

EntropySeries entropy_series(const CoupledParams& params, const CoherentParams& initial1,
                             const CoherentParams& initial2, int steps, EntropyOptions options) {
  if (steps < 1) throw std::invalid_argument("entropy series needs at least one step");
  const SpinBasis basis = params.basis();
  const CoupledPropagator prop(params);
  CoupledState psi = CoupledState::product(coherent_state(basis, initial1), coherent_state(basis, initial2));

  EntropySeries out;
  out.times.reserve(steps + 1);
  out.linear.reserve(steps + 1);
  for (int t = 0; t <= steps; ++t) {
    if (t > 0) prop.step(psi);
    out.times.push_back(t);
    out.linear.push_back(linear_entropy(reduced_density(psi)));
    if (options.von_neumann) out.von_neumann.push_back(von_neumann_entropy(psi));
  }
  const double drift = std::abs(psi.norm() - 1.0);
  if (drift > options.norm_tolerance * (steps + 1)) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "coupled-state norm drifted by %.3g over %d steps", drift, steps);
    throw NumericalFailure(msg);
  }
  return out;
}

}  // namespace kickedtop
