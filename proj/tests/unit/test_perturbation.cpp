#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "doctest.h"
#include "kickedtop/coupled_tops.hpp"
#include "kickedtop/perturbation.hpp"
#include "oracles.hpp"

using namespace kickedtop;
using std::numbers::pi;

namespace {

const CoherentParams kInit(0.89, 0.63);

CorrelationMatrix synthetic(int horizon, double gamma, double omega) {
  CMatrix c(horizon, horizon);
  for (int l = 0; l < horizon; ++l)
    for (int m = 0; m < horizon; ++m)
      c(l, m) = std::exp(-gamma * std::abs(l - m)) * std::polar(1.0, omega * (l - m));
  return CorrelationMatrix(c, CorrelationLabel::product);
}

double coth(double x) { return std::cosh(x) / std::sinh(x); }

}  // namespace

TEST_CASE("correlation matrix") {
  SUBCASE("equal-time entries are the z variance") {
    const auto c = correlation_matrix({80, 3.0}, kInit, 40);
    const auto v = variance_series({80, 3.0}, kInit, 40);
    for (int t = 1; t <= 40; ++t) CHECK(std::abs(c(t, t) - v.values[t]) <= 1e-10);
    CHECK(c.hermitian_defect() <= 1e-10);
    for (int t = 1; t <= 40; ++t) {
      CHECK(std::abs(c(t, t).imag()) <= 1e-12);
      CHECK(c(t, t).real() >= -1e-12);
    }
  }
  SUBCASE("dense Heisenberg-operator oracle at j = 2") {
    const double j = 2.0;
    const int horizon = 5;
    const CMatrix u = oracle::expm_hermitian(oracle::spin_matrix(j, 'z') * oracle::spin_matrix(j, 'z'), 3.0 / (2 * j)) *
                      oracle::expm_hermitian(oracle::spin_matrix(j, 'y'), pi / 2);
    const CMatrix z = oracle::spin_matrix(j, 'z') / j;
    const CVector psi0 = coherent_state(SpinBasis(j), kInit).amplitudes();
    std::vector<CMatrix> zl;
    CMatrix ul = CMatrix::Identity(5, 5);
    for (int l = 1; l <= horizon; ++l) {
      ul = u * ul;
      zl.push_back(ul.adjoint() * z * ul);
    }
    const auto c = correlation_matrix({j, 3.0}, kInit, horizon);
    for (int l = 1; l <= horizon; ++l)
      for (int m = 1; m <= horizon; ++m) {
        const cplx want = psi0.dot(zl[l - 1] * zl[m - 1] * psi0) - psi0.dot(zl[l - 1] * psi0) * psi0.dot(zl[m - 1] * psi0);
        CAPTURE(l);
        CAPTURE(m);
        CHECK(std::abs(c(l, m) - want) <= 1e-12);
      }
  }
  SUBCASE("chaotic correlations decay within a few kicks") {
    const auto c = correlation_matrix({80, 3.0}, kInit, 80);
    for (int t : {40, 50, 60, 70}) {
      int tau = 0;
      while (tau < t - 1 && std::abs(c(t, t - tau).real()) >= 0.1 * c(t, t).real()) ++tau;
      CAPTURE(t);
      CHECK(tau <= 6);
    }
  }
  CHECK_THROWS(correlation_matrix({2, 1.0}, kInit, 0));
}

TEST_CASE("product correlation") {
  const auto c = correlation_matrix({80, 3.0}, kInit, 100);
  SUBCASE("unit second factor") {
    const CorrelationMatrix ones(CMatrix::Ones(100, 100), CorrelationLabel::top2);
    CHECK(oracle::max_abs(product_correlation(c, ones).entries() - c.entries()) == 0.0);
  }
  SUBCASE("identical tops") {
    const auto d = product_correlation(c, c);
    CHECK(d.label() == CorrelationLabel::product);
    CHECK(d.hermitian_defect() <= 1e-12);
    for (int t = 1; t <= 100; ++t) CHECK(std::abs(d(t, t) - c(t, t) * c(t, t)) <= 1e-15);
    CHECK(mean_diagonal(d, {20, 100}) == doctest::Approx(kD0).epsilon(0.15));
  }
  CHECK_THROWS_AS(product_correlation(c, correlation_matrix({80, 3.0}, kInit, 10)), DimensionMismatch);
  CHECK(kD0 == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("perturbative linear entropy") {
  SUBCASE("single term and eps^2 scaling") {
    const auto c = correlation_matrix({80, 3.0}, kInit, 30);
    const auto d = product_correlation(c, c);
    CHECK(s_lin_pt(d, 1e-4, 80, 1) == doctest::Approx(s0(1e-4, 80) * d(1, 1).real()).epsilon(1e-15));
    CHECK(s_lin_pt(d, 1e-4, 80, 0) == 0.0);
    for (int t : {5, 17, 30}) {
      const double a = s_lin_pt(d, 1e-4, 80, t), b = s_lin_pt(d, 2e-4, 80, t);
      CHECK(std::abs(b - 4.0 * a) <= 1e-12 * std::abs(b));
    }
    const auto series = s_lin_pt_series(d, 1e-4, 80);
    for (int t = 0; t <= 30; ++t) CHECK(series[t] == doctest::Approx(s_lin_pt(d, 1e-4, 80, t)).epsilon(1e-12));
    CHECK_THROWS(s_lin_pt(d, 1e-4, 80, 31));
  }
  SUBCASE("agrees with exact evolution at j = 2, eps = 1e-5") {
    const auto c = correlation_matrix({2, 3.0}, kInit, 30);
    const auto pt = s_lin_pt_series(product_correlation(c, c), 1e-5, 2);
    const auto exact = entropy_series({2, 3.0, 3.0, 1e-5}, kInit, kInit, 30, {false});
    for (int t = 1; t <= 30; ++t) {
      CAPTURE(t);
      CHECK(std::abs(pt[t] - exact.linear[t]) <= 0.05 * exact.linear[t]);
    }
  }
  SUBCASE("a broken correlation matrix is rejected") {
    CMatrix bad = CMatrix::Ones(3, 3);
    bad(0, 1) = cplx(1.0, 0.5);
    const CorrelationMatrix d(bad, CorrelationLabel::product);
    CHECK_THROWS_AS(s_lin_pt(d, 1e-4, 80, 3), NumericalFailure);
    CHECK_THROWS_AS(s_lin_pt_series(d, 1e-4, 80), NumericalFailure);
  }
  CHECK(s0(1e-4, 80) == doctest::Approx(2 * 1e-8 * 6400).epsilon(1e-15));
}

TEST_CASE("phenomenological entropy") {
  PhenoParams p;
  p.epsilon = 1e-4;
  p.j = 80;

  SUBCASE("closed form equals the double sum") {
    p.gamma = 0.8;
    CHECK(pheno_entropy(p, 50) == doctest::Approx(p.gamma0() * oracle::pheno_double_sum(0.8, 0.0, 50).real()).epsilon(1e-12));
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> g(0.05, 6.0);
    std::uniform_int_distribution<int> tt(1, 150);
    for (int i = 0; i < 20; ++i) {
      p.gamma = g(rng);
      const int t = tt(rng);
      CAPTURE(p.gamma);
      CAPTURE(t);
      CHECK(pheno_entropy(p, t) == doctest::Approx(p.gamma0() * oracle::pheno_double_sum(p.gamma, 0.0, t).real()).epsilon(1e-10));
    }
  }
  SUBCASE("asymptotic slope and strong-decay limit") {
    p.gamma = 1.3;
    CHECK(pheno_entropy(p, 401) - pheno_entropy(p, 400) == doctest::Approx(pheno_rate(p)).epsilon(1e-12));
    CHECK(pheno_rate(p) == doctest::Approx(p.gamma0() * coth(0.65)).epsilon(1e-14));
    p.gamma = 60.0;
    CHECK(pheno_entropy(p, 37) == doctest::Approx(p.gamma0() * 37).epsilon(1e-12));
  }
  SUBCASE("rate decreases with gamma") {
    double prev = std::numeric_limits<double>::infinity();
    for (double g = 0.05; g <= 10.0; g += 0.05) {
      p.gamma = g;
      const double r = pheno_rate(p);
      CHECK(r < prev);
      prev = r;
    }
  }
  p.gamma = 0.0;
  CHECK_THROWS_AS(pheno_entropy(p, 3), DomainError);
  CHECK_THROWS_AS(pheno_rate(p), DomainError);
  p.gamma = -1.0;
  CHECK_THROWS_AS(flow_rate(p, 3), DomainError);
  CHECK_THROWS_AS(improved_rate(p), DomainError);
}

TEST_CASE("production rate") {
  std::vector<int> t(129);
  std::vector<double> s(129);
  for (int i = 0; i <= 128; ++i) {
    t[i] = i;
    s[i] = 0.002 * i;
  }
  CHECK(production_rate(t, s) == doctest::Approx(0.002).epsilon(1e-12));

  PhenoParams p;
  p.gamma = 1.0;
  p.epsilon = 1e-4;
  p.j = 80;
  for (int i = 0; i <= 128; ++i) s[i] = pheno_entropy(p, i);
  CHECK(production_rate(t, s) == doctest::Approx(p.gamma0() * coth(0.5)).epsilon(0.01));

  CHECK(production_rate(t, s, {20, 22}) > 0.0);
  CHECK_THROWS(production_rate(t, s, {20, 21}));
  CHECK_THROWS(production_rate(t, s, {200, 300}));
  const std::vector<double> shorter(10, 0.0);
  CHECK_THROWS_AS(production_rate(t, shorter), DimensionMismatch);

  const std::vector<double> x{1, 2, 3, 4}, y{2.5, 0.1, 3.3, 7.0};
  const auto fit = least_squares(x, y);
  CHECK(fit.slope == doctest::Approx(oracle::ols_slope(x, y)).epsilon(1e-14));
  CHECK(fit.points == 4);
}

TEST_CASE("effective decay rate") {
  CHECK(std::abs(gamma_eff(coth(0.5), 1.0) - 1.0) <= 1e-12);
  CHECK(coth(0.5) == doctest::Approx(2.163953).epsilon(1e-6));
  for (double g = 0.1; g <= 10.0 + 1e-9; g += 0.1) {
    const double rate0 = 3.7e-5;
    CAPTURE(g);
    CHECK(std::abs(gamma_eff(rate0 * coth(g / 2), rate0) - g) <= 1e-12 * std::max(1.0, g) / std::tanh(g / 2));
  }
  CHECK(gamma_eff(1e8, 1.0) < 1e-7);
  CHECK(gamma_eff(1e8, 1.0) > 0.0);
  CHECK_THROWS_AS(gamma_eff(1.0, 1.0), DomainError);
  CHECK_THROWS_AS(gamma_eff(0.5, 1.0), DomainError);
  CHECK_THROWS_AS(gamma_eff(1.0, 0.0), DomainError);
}

TEST_CASE("improved rate") {
  PhenoParams p;
  p.epsilon = 1e-4;
  p.j = 80;
  p.gamma = 0.7;
  CHECK(improved_rate(p) == doctest::Approx(pheno_rate(p)).epsilon(1e-14));

  SUBCASE("slope of the oscillating double sum") {
    p.omega = 0.9;
    p.sigma1_sq = 0.3;
    p.sigma2_sq = 0.21;
    std::vector<double> x, y;
    for (int t = 20; t <= 100; ++t) {
      x.push_back(t);
      y.push_back(p.s0() * p.sigma1_sq * p.sigma2_sq * oracle::pheno_double_sum(p.gamma, p.omega, t).real());
    }
    CHECK(improved_rate(p) == doctest::Approx(oracle::ols_slope(x, y)).epsilon(0.01));
    const double closed = p.s0() * p.sigma1_sq * p.sigma2_sq * std::sinh(0.7) / (std::cosh(0.7) - std::cos(0.9));
    CHECK(improved_rate(p) == doctest::Approx(closed).epsilon(1e-12));
  }
  SUBCASE("omega = pi") {
    p.gamma = 4.0;
    p.omega = pi;
    const double sh = std::sinh(2.0);
    CHECK(improved_rate(p) == doctest::Approx(pheno_rate(p) / (1.0 + 1.0 / (sh * sh))).epsilon(1e-14));
  }
}

TEST_CASE("flow rate") {
  PhenoParams p;
  p.epsilon = 1e-4;
  p.j = 80;
  p.gamma = 0.5;
  const double limit = 2 * p.s0() * kD0 / p.gamma;
  CHECK(flow_rate(p, 1e4) == doctest::Approx(limit).epsilon(1e-14));
  CHECK(flow_rate(p, 2.0) == doctest::Approx(limit * (1 - std::exp(-1.0))).epsilon(1e-14));
  p.gamma = 1.0;
  const double moderate = flow_rate(p, 10);
  p.gamma = 1e6;
  CHECK(flow_rate(p, 10) / moderate < 1e-5);
}

TEST_CASE("oscillation frequency") {
  SUBCASE("synthetic oscillating decay") {
    for (double w : {0.9, 2.1}) {
      const auto est = estimate_omega(synthetic(128, 0.5, w));
      CHECK_FALSE(est.degenerate);
      CHECK(std::abs(est.omega - w) <= 2 * pi / 128);
    }
    // Sign of the rotation does not matter.
    CHECK(std::abs(estimate_omega(synthetic(128, 0.5, -0.9)).omega - 0.9) <= 2 * pi / 128);
  }
  SUBCASE("monotone real decay peaks at zero") {
    const auto est = estimate_omega(synthetic(128, 0.3, 0.0));
    CHECK(est.omega <= 2 * pi / 128);
  }
  SUBCASE("flat spectrum is flagged") {
    const CorrelationMatrix delta(CMatrix::Identity(64, 64), CorrelationLabel::product);
    const auto est = estimate_omega(delta);
    CHECK(est.degenerate);
    CHECK(est.omega == 0.0);
  }
  SUBCASE("lag sequence window") {
    const auto seq = lag_sequence(synthetic(100, 0.5, 0.0));
    REQUIRE(seq.size() == 50);
    CHECK(std::abs(seq[3] - std::exp(-1.5)) <= 1e-15);
  }
  CHECK_THROWS(estimate_omega(synthetic(15, 0.5, 0.9)));
  CHECK_THROWS(estimate_omega(synthetic(32, 0.5, 0.9), {0.5, 0}));
}
