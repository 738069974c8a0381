#include "kickedtop/spin.hpp"

#include <cmath>
#include <numbers>

namespace kickedtop {

namespace {

double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Jacobi polynomial P_n^{(a,b)}(x) by the forward three-term recurrence.
double jacobi(int n, int a, int b, double x) {
  if (n == 0) return 1.0;
  const double ad = a, bd = b, apb = ad + bd;
  double p_prev = 1.0;
  double p = (ad + 1.0) + 0.5 * (apb + 2.0) * (x - 1.0);
  for (int k = 1; k < n; ++k) {
    const double kd = k;
    const double two_k_apb = 2.0 * kd + apb;
    const double c1 = 2.0 * (kd + 1.0) * (kd + 1.0 + apb) * two_k_apb;
    const double c2 = (two_k_apb + 1.0) * (ad * ad - bd * bd);
    const double c3 = two_k_apb * (two_k_apb + 1.0) * (two_k_apb + 2.0);
    const double c4 = 2.0 * (kd + ad) * (kd + bd) * (two_k_apb + 2.0);
    const double p_next = ((c2 + c3 * x) * p - c4 * p_prev) / c1;
    p_prev = p;
    p = p_next;
  }
  return p;
}

// sign(x)^n as +-1, with 0^0 = 1.
double sign_power(double x, int n) { return (x < 0.0 && (n % 2) != 0) ? -1.0 : 1.0; }

}  // namespace

SpinBasis::SpinBasis(double j) {
  const double twice = 2.0 * j;
  const double rounded = std::round(twice);
  if (!(j > 0.0) || std::abs(twice - rounded) > 1e-12)
    throw std::invalid_argument("spin j must be a positive integer or half-integer");
  twice_j_ = static_cast<int>(rounded);
}

SpinBasis SpinBasis::from_twice_j(int twice_j) {
  if (twice_j <= 0) throw std::invalid_argument("spin j must be positive");
  return SpinBasis(0.5 * twice_j);
}

double OperatorMatrix::hermitian_defect() const {
  return (entries - entries.adjoint()).cwiseAbs().maxCoeff();
}

double OperatorMatrix::unitary_defect() const {
  const CMatrix g = entries.adjoint() * entries;
  return (g - CMatrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

SpinState::SpinState(SpinBasis basis, CVector amplitudes)
    : basis_(basis), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() != basis_.dim())
    throw DimensionMismatch("state length does not match basis dimension");
  if (std::abs(amplitudes_.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("state is not normalized");
}

SpinState SpinState::normalized(SpinBasis basis, CVector amplitudes) {
  const double n = amplitudes.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("cannot normalize a zero state");
  amplitudes /= n;
  return SpinState(basis, std::move(amplitudes));
}

CoherentParams::CoherentParams(double theta_, double phi_) : theta(theta_), phi(phi_) {
  using std::numbers::pi;
  if (!(theta >= 0.0 && theta <= pi)) throw std::invalid_argument("theta must lie in [0, pi]");
  if (!(phi >= -pi && phi < pi)) throw std::invalid_argument("phi must lie in [-pi, pi)");
}

CoherentParams CoherentParams::wrapped(double theta, double phi) {
  using std::numbers::pi;
  if (!std::isfinite(theta) || !std::isfinite(phi)) throw std::invalid_argument("angles must be finite");
  // Reduce theta to [0, 2pi), then fold the far hemisphere back with a phi shift.
  theta = std::fmod(theta, 2.0 * pi);
  if (theta < 0.0) theta += 2.0 * pi;
  if (theta > pi) {
    theta = 2.0 * pi - theta;
    phi += pi;
  }
  phi = std::fmod(phi + pi, 2.0 * pi);
  if (phi < 0.0) phi += 2.0 * pi;
  phi -= pi;
  if (phi >= pi) phi = -pi;
  return CoherentParams(theta, phi);
}

OperatorMatrix build_angular_momentum(const SpinBasis& basis, Axis axis) {
  const Index n = basis.dim();
  const double j = basis.j();
  CMatrix out = CMatrix::Zero(n, n);
  if (axis == Axis::z) {
    for (Index i = 0; i < n; ++i) out(i, i) = basis.m(i);
    return {basis, std::move(out), OperatorKind::hermitian};
  }
  // J+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>; m+1 sits at index i-1.
  CMatrix raise = CMatrix::Zero(n, n);
  for (Index i = 1; i < n; ++i) {
    const double m = basis.m(i);
    raise(i - 1, i) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
  }
  if (axis == Axis::x) {
    out = 0.5 * (raise + raise.adjoint());
  } else {
    out = cplx(0.0, -0.5) * (raise - raise.adjoint());
  }
  return {basis, std::move(out), OperatorKind::hermitian};
}

double wigner_d_element(const SpinBasis& basis, Index row, Index col, double beta) {
  const int two_j = basis.twice_j();
  const int jpm = basis.j_plus_m(col), jmm = basis.j_minus_m(col);
  const int jpmp = basis.j_plus_m(row), jmmp = basis.j_minus_m(row);
  const int mp_minus_m = static_cast<int>(col - row);

  const int k = std::min({jpm, jmm, jpmp, jmmp});
  int a = 0;
  int lambda = 0;
  if (k == jpm) {
    a = mp_minus_m;
    lambda = mp_minus_m;
  } else if (k == jmm) {
    a = -mp_minus_m;
  } else if (k == jpmp) {
    a = -mp_minus_m;
  } else {
    a = mp_minus_m;
    lambda = mp_minus_m;
  }
  const int b = two_j - 2 * k - a;

  const double s = std::sin(0.5 * beta);
  const double c = std::cos(0.5 * beta);
  if ((a > 0 && s == 0.0) || (b > 0 && c == 0.0)) return 0.0;
  const double p = jacobi(k, a, b, std::cos(beta));
  if (p == 0.0) return 0.0;

  double log_mag = 0.5 * (log_binomial(two_j - k, k + a) - log_binomial(k + b, b)) + std::log(std::abs(p));
  if (a > 0) log_mag += a * std::log(std::abs(s));
  if (b > 0) log_mag += b * std::log(std::abs(c));
  double sign = (lambda % 2 != 0) ? -1.0 : 1.0;
  sign *= sign_power(s, a) * sign_power(c, b) * (p < 0.0 ? -1.0 : 1.0);
  return sign * std::exp(log_mag);
}

OperatorMatrix wigner_d(const SpinBasis& basis, double beta) {
  if (!std::isfinite(beta)) throw std::invalid_argument("rotation angle must be finite");
  const Index n = basis.dim();
  CMatrix d(n, n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) d(r, c) = wigner_d_element(basis, r, c, beta);
  return {basis, std::move(d), OperatorKind::unitary};
}

SpinState coherent_state(const SpinBasis& basis, const CoherentParams& params) {
  // <j m|theta,phi> = sqrt(C(2j, j-m)) cos^{j+m}(theta/2) sin^{j-m}(theta/2) e^{i(j-m)phi}
  const int two_j = basis.twice_j();
  // cos(theta/2) written as sin((pi - theta)/2) so theta = pi gives exactly 0.
  const double s = std::sin(0.5 * params.theta);
  const double c = std::sin(0.5 * (std::numbers::pi - params.theta));
  CVector amps(basis.dim());
  for (Index i = 0; i < basis.dim(); ++i) {
    const int up = basis.j_plus_m(i), down = basis.j_minus_m(i);
    if ((down > 0 && s <= 0.0) || (up > 0 && c <= 0.0)) {
      amps(i) = 0.0;
      continue;
    }
    double log_mag = 0.5 * log_binomial(two_j, down);
    if (up > 0) log_mag += up * std::log(c);
    if (down > 0) log_mag += down * std::log(s);
    amps(i) = std::polar(std::exp(log_mag), down * params.phi);
  }
  // Exact up to rounding; renormalize to absorb it.
  return SpinState::normalized(basis, std::move(amps));
}

std::vector<double> husimi(const SpinState& state, std::span<const CoherentParams> grid) {
  if (grid.empty()) throw std::invalid_argument("Husimi grid is empty");
  std::vector<double> q;
  q.reserve(grid.size());
  for (const auto& point : grid) {
    const SpinState probe = coherent_state(state.basis(), point);
    const cplx overlap = probe.amplitudes().dot(state.amplitudes());  // conjugates the probe
    q.push_back(std::min(1.0, std::norm(overlap)));
  }
  return q;
}

std::vector<CoherentParams> husimi_grid(int n_theta, int n_phi) {
  using std::numbers::pi;
  if (n_theta < 1 || n_phi < 1) throw std::invalid_argument("Husimi grid needs at least one point per axis");
  std::vector<CoherentParams> grid;
  grid.reserve(static_cast<std::size_t>(n_theta) * n_phi);
  for (int i = 0; i < n_theta; ++i) {
    const double theta = (i + 0.5) * pi / n_theta;
    for (int k = 0; k < n_phi; ++k) grid.emplace_back(theta, -pi + 2.0 * pi * k / n_phi);
  }
  return grid;
}

cplx expectation(const SpinState& state, const CMatrix& op) {
  if (op.rows() != state.basis().dim() || op.cols() != state.basis().dim())
    throw DimensionMismatch("operator does not match state dimension");
  return state.amplitudes().dot(op * state.amplitudes());
}

}  // namespace kickedtop
