#include "kickedtop/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kickedtop {

CorrelationMatrix::CorrelationMatrix(CMatrix entries, CorrelationLabel label)
    : entries_(std::move(entries)), label_(label) {
  if (entries_.rows() != entries_.cols() || entries_.rows() < 1)
    throw DimensionMismatch("correlation matrix must be square and non-empty");
}

double CorrelationMatrix::hermitian_defect() const {
  return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
}

CorrelationMatrix correlation_matrix(const TopParams& params, const CoherentParams& initial, int horizon,
                                     CorrelationLabel label) {
  if (horizon < 1) throw std::invalid_argument("correlation horizon must be at least 1");
  const SpinBasis basis = params.basis();
  const CMatrix u = build_floquet(params).entries;
  const Index n = basis.dim();

  // psi(t) and z psi(t) for t = 1..T, stored column-wise at index t-1.
  CMatrix z_psi(n, horizon);
  std::vector<double> mean_z(horizon);
  CVector psi = coherent_state(basis, initial).amplitudes();
  CVector next(n);
  for (int t = 1; t <= horizon; ++t) {
    next.noalias() = u * psi;
    psi.swap(next);
    z_psi.col(t - 1) = apply_z(basis, psi);
    mean_z[t - 1] = psi.dot(z_psi.col(t - 1)).real();
  }

  CMatrix c(horizon, horizon);
  CVector v(n);
  for (int m = 1; m <= horizon; ++m) {
    v = z_psi.col(m - 1);
    const double diag = z_psi.col(m - 1).squaredNorm() - mean_z[m - 1] * mean_z[m - 1];
    c(m - 1, m - 1) = std::max(0.0, diag);
    for (int l = m + 1; l <= horizon; ++l) {
      next.noalias() = u * v;
      v.swap(next);
      const cplx value = z_psi.col(l - 1).dot(v) - mean_z[l - 1] * mean_z[m - 1];
      c(l - 1, m - 1) = value;
      c(m - 1, l - 1) = std::conj(value);
    }
  }
  return CorrelationMatrix(std::move(c), label);
}

CorrelationMatrix product_correlation(const CorrelationMatrix& c1, const CorrelationMatrix& c2) {
  if (c1.horizon() != c2.horizon()) throw DimensionMismatch("correlation horizons differ");
  return CorrelationMatrix(c1.entries().cwiseProduct(c2.entries()), CorrelationLabel::product);
}

double s0(double epsilon, double j) { return 2.0 * epsilon * epsilon * j * j; }

namespace {

void check_real(cplx sum, double scale, int t) {
  if (std::abs(sum.imag()) > 1e-10 * std::max(std::abs(sum.real()), scale))
    throw NumericalFailure("double sum of D up to t=" + std::to_string(t) + " has imaginary part " +
                           std::to_string(sum.imag()));
}

}  // namespace

double s_lin_pt(const CorrelationMatrix& d, double epsilon, double j, int t) {
  if (t < 0 || t > d.horizon()) throw std::out_of_range("t outside the correlation horizon");
  if (t == 0) return 0.0;
  const auto block = d.entries().topLeftCorner(t, t);
  const cplx sum = block.sum();
  check_real(sum, block.cwiseAbs().sum(), t);
  return s0(epsilon, j) * sum.real();
}

std::vector<double> s_lin_pt_series(const CorrelationMatrix& d, double epsilon, double j) {
  const int horizon = d.horizon();
  std::vector<double> out(horizon + 1, 0.0);
  const double scale = s0(epsilon, j);
  cplx sum = 0.0;
  double abs_sum = 0.0;
  for (int t = 1; t <= horizon; ++t) {
    // Grow the t x t block by its new row and column.
    sum += d(t, t);
    abs_sum += std::abs(d(t, t));
    for (int m = 1; m < t; ++m) {
      sum += d(t, m) + d(m, t);
      abs_sum += std::abs(d(t, m)) + std::abs(d(m, t));
    }
    check_real(sum, abs_sum, t);
    out[t] = scale * sum.real();
  }
  return out;
}

double PhenoParams::s0() const { return kickedtop::s0(epsilon, j); }
double PhenoParams::gamma0() const { return s0() * kD0; }

namespace {

void require_positive_gamma(double gamma) {
  if (!(gamma > 0.0)) throw DomainError("decay rate gamma must be positive");
}

double coth(double x) { return 1.0 / std::tanh(x); }

}  // namespace

double pheno_entropy(const PhenoParams& p, double t) {
  require_positive_gamma(p.gamma);
  // cosh(g) - 1 = 2 sinh^2(g/2), written that way for small gamma.
  const double sh = std::sinh(0.5 * p.gamma);
  const double transient = -std::expm1(-p.gamma * t) / (2.0 * sh * sh);
  return p.gamma0() * (coth(0.5 * p.gamma) * t - transient);
}

double pheno_rate(const PhenoParams& p) {
  require_positive_gamma(p.gamma);
  return p.gamma0() * coth(0.5 * p.gamma);
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("fit abscissa and ordinate lengths differ");
  if (x.size() < 2) throw std::invalid_argument("least squares needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("least squares abscissa has zero spread");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx, x.size()};
}

double production_rate(std::span<const int> times, std::span<const double> values, FitWindow window) {
  if (times.size() != values.size()) throw DimensionMismatch("times and values lengths differ");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= window.first && times[i] <= window.last) {
      x.push_back(times[i]);
      y.push_back(values[i]);
    }
  }
  if (x.size() < 3) throw std::invalid_argument("fit window holds fewer than three points");
  return least_squares(x, y).slope;
}

double gamma_eff(double rate, double rate0) {
  if (!(rate0 > 0.0)) throw DomainError("reference rate Gamma0 must be positive");
  const double r = rate / rate0;
  if (!(r > 1.0) || !std::isfinite(r)) throw DomainError("gamma_eff needs Gamma/Gamma0 > 1");
  // ln((r+1)/(r-1)) = log1p(2/(r-1)), accurate for large r.
  return std::log1p(2.0 / (r - 1.0));
}

double improved_rate(const PhenoParams& p) {
  require_positive_gamma(p.gamma);
  const double amplitude = (p.sigma1_sq / kSigmaSatSq) * (p.sigma2_sq / kSigmaSatSq);
  const double ratio = std::sin(0.5 * p.omega) / std::sinh(0.5 * p.gamma);
  return amplitude / (1.0 + ratio * ratio) * pheno_rate(p);
}

double flow_rate(const PhenoParams& p, double t) {
  require_positive_gamma(p.gamma);
  return 2.0 * p.s0() * kD0 / p.gamma * -std::expm1(-p.gamma * t);
}

std::vector<cplx> lag_sequence(const CorrelationMatrix& d, const LagOptions& options) {
  const int horizon = d.horizon();
  const int first = std::clamp(static_cast<int>(std::ceil(options.window_start_fraction * horizon)), 2, horizon);
  const int tau_max = first - 1;
  std::vector<cplx> seq(tau_max + 1, 0.0);
  const double count = horizon - first + 1;
  for (int tau = 0; tau <= tau_max; ++tau) {
    cplx s = 0.0;
    for (int t = first; t <= horizon; ++t) s += d(t, t - tau);
    seq[tau] = s / count;
  }
  return seq;
}

OmegaEstimate estimate_omega(const CorrelationMatrix& d, const LagOptions& options) {
  if (d.horizon() < 16) throw std::invalid_argument("omega estimation needs a horizon of at least 16");
  if (options.zero_padding < 1) throw std::invalid_argument("zero padding factor must be >= 1");
  const std::vector<cplx> seq = lag_sequence(d, options);
  const int len = static_cast<int>(seq.size()) * options.zero_padding;

  std::vector<double> magnitude(len);
  for (int k = 0; k < len; ++k) {
    const double w = 2.0 * std::numbers::pi * k / len;
    cplx f = 0.0;
    for (std::size_t tau = 0; tau < seq.size(); ++tau) f += seq[tau] * std::polar(1.0, -w * static_cast<double>(tau));
    magnitude[k] = std::abs(f);
  }
  const auto [lo, hi] = std::minmax_element(magnitude.begin(), magnitude.end());
  if (!(*hi > 0.0) || (*hi - *lo) <= 1e-12 * *hi) return {0.0, true};

  const int peak = static_cast<int>(std::distance(magnitude.begin(), hi));
  double w = 2.0 * std::numbers::pi * peak / len;
  if (w > std::numbers::pi) w -= 2.0 * std::numbers::pi;
  return {std::abs(w), false};
}

double mean_diagonal(const CorrelationMatrix& c, FitWindow window) {
  const int first = std::max(1, window.first);
  const int last = std::min(c.horizon(), window.last);
  if (last < first) throw std::invalid_argument("diagonal window is empty");
  double s = 0.0;
  for (int t = first; t <= last; ++t) s += c(t, t).real();
  return s / (last - first + 1);
}

}  // namespace kickedtop
