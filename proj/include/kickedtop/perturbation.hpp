#pragma once

// Second-order perturbative linear entropy built from correlation functions
// of the uncoupled tops, and the phenomenological rate models derived from
// an exponentially decaying (optionally oscillating) correlation.

#include <span>
#include <vector>

#include "kickedtop/quantum_top.hpp"
#include "kickedtop/spin.hpp"

namespace kickedtop {

inline constexpr double kSigmaSatSq = 1.0 / 3.0;               // uniform-sphere variance of z
inline constexpr double kD0 = kSigmaSatSq * kSigmaSatSq;       // 1/9

enum class CorrelationLabel { top1, top2, product };

// C(l, m) for 1 <= l, m <= horizon. Conjugate-symmetric with a real,
// non-negative diagonal.
class CorrelationMatrix {
 public:
  CorrelationMatrix(CMatrix entries, CorrelationLabel label);

  int horizon() const { return static_cast<int>(entries_.rows()); }
  CorrelationLabel label() const { return label_; }
  // 1-based, as in the formulas.
  cplx operator()(int l, int m) const { return entries_(l - 1, m - 1); }
  const CMatrix& entries() const { return entries_; }

  double hermitian_defect() const;

 private:
  CMatrix entries_;
  CorrelationLabel label_;
};

// C(l, m) = <psi(l)| z U^{l-m} z |psi(m)> - <z>_l <z>_m for l >= m, with
// |psi(t)> = U^t |psi(0)> and z = J_z / j; the upper triangle is filled by
// conjugate symmetry. O(T^2) matrix-vector products.
CorrelationMatrix correlation_matrix(const TopParams& params, const CoherentParams& initial, int horizon,
                                     CorrelationLabel label = CorrelationLabel::top1);

// D(l, m) = C1(l, m) C2(l, m).
CorrelationMatrix product_correlation(const CorrelationMatrix& c1, const CorrelationMatrix& c2);

double s0(double epsilon, double j);  // 2 eps^2 j^2

// S0 * sum_{l,m=1..t} D(l, m). Throws NumericalFailure if the double sum has
// a non-negligible imaginary part.
double s_lin_pt(const CorrelationMatrix& d, double epsilon, double j, int t);

// S_lin^PT(t) for t = 0..horizon in one O(T^2) pass (t = 0 gives 0).
std::vector<double> s_lin_pt_series(const CorrelationMatrix& d, double epsilon, double j);

struct PhenoParams {
  double gamma = 1.0;               // correlation decay rate per kick
  double omega = 0.0;               // oscillation frequency, rad per kick
  double sigma1_sq = kSigmaSatSq;
  double sigma2_sq = kSigmaSatSq;
  double epsilon = 0.0;
  double j = 1.0;

  double s0() const;
  double gamma0() const;  // S0 * D0
};

// S0 D0 [coth(gamma/2) t - (1 - e^{-gamma t}) / (cosh(gamma) - 1)], the exact
// value of S0 D0 sum_{l,m=1..t} e^{-gamma |l-m|}.
double pheno_entropy(const PhenoParams& p, double t);

// Gamma0 coth(gamma/2).
double pheno_rate(const PhenoParams& p);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

// Ordinary least squares on (x, y).
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

struct FitWindow {
  int first = 20;
  int last = 100;
};

// Slope of S(t) vs t over times inside [first, last] (inclusive).
// Throws std::invalid_argument for fewer than three points in the window.
double production_rate(std::span<const int> times, std::span<const double> values, FitWindow window = {});

// ln((r + 1) / (r - 1)) with r = Gamma / Gamma0; inverse of Gamma0 coth(gamma/2).
// Throws DomainError for r <= 1.
double gamma_eff(double rate, double rate0);

// [(s1/s_sat)^2 (s2/s_sat)^2 / (1 + (sin(w/2)/sinh(gamma/2))^2)] Gamma0 coth(gamma/2).
double improved_rate(const PhenoParams& p);

// (2 S0 D0 / gamma) (1 - e^{-gamma t}).
double flow_rate(const PhenoParams& p, double t);

struct LagOptions {
  double window_start_fraction = 0.5;  // average over t in [ceil(f T), T]
  int zero_padding = 4;
};

// d(tau) = mean over t in the window of D(t, t - tau), tau = 0..tau_max with
// tau_max = first window time - 1.
std::vector<cplx> lag_sequence(const CorrelationMatrix& d, const LagOptions& options = {});

struct OmegaEstimate {
  double omega = 0.0;
  bool degenerate = false;  // flat spectrum, omega reported as 0
};

// |frequency| in [0, pi] of the peak magnitude of the zero-padded DFT of the
// lag sequence. Requires horizon >= 16.
OmegaEstimate estimate_omega(const CorrelationMatrix& d, const LagOptions& options = {});

// Time average of C(l, l) over l in the window.
double mean_diagonal(const CorrelationMatrix& c, FitWindow window);

}  // namespace kickedtop
