#include <numbers>
#include <random>

#include "doctest.h"
#include "kickedtop/spin.hpp"
#include "oracles.hpp"

using namespace kickedtop;
using std::numbers::pi;

TEST_CASE("spin basis dimension and ordering") {
  SpinBasis half(0.5);
  CHECK(half.dim() == 2);
  CHECK(half.m(0) == 0.5);
  CHECK(half.m(1) == -0.5);
  SpinBasis b(80);
  CHECK(b.dim() == 161);
  CHECK(b.m(0) == 80.0);
  CHECK(b.m(160) == -80.0);
  CHECK_THROWS_AS(SpinBasis(0.3), std::invalid_argument);
  CHECK_THROWS_AS(SpinBasis(0.0), std::invalid_argument);
  CHECK_THROWS_AS(SpinBasis(-1.0), std::invalid_argument);
}

TEST_CASE("angular momentum matrices") {
  SUBCASE("J_z for j=1/2") {
    auto jz = build_angular_momentum(SpinBasis(0.5), Axis::z);
    CHECK(jz.entries(0, 0).real() == 0.5);
    CHECK(jz.entries(1, 1).real() == -0.5);
    CHECK(std::abs(jz.entries(0, 1)) == 0.0);
  }
  SUBCASE("commutator j=1") {
    SpinBasis b(1);
    auto jx = build_angular_momentum(b, Axis::x).entries;
    auto jy = build_angular_momentum(b, Axis::y).entries;
    auto jz = build_angular_momentum(b, Axis::z).entries;
    CHECK(oracle::max_abs(jx * jy - jy * jx - cplx(0, 1) * jz) <= 1e-14);
  }
  SUBCASE("commutator j=80") {
    SpinBasis b(80);
    auto jx = build_angular_momentum(b, Axis::x);
    auto jy = build_angular_momentum(b, Axis::y);
    auto jz = build_angular_momentum(b, Axis::z).entries;
    CHECK(oracle::max_abs(jx.entries * jy.entries - jy.entries * jx.entries - cplx(0, 1) * jz) <= 1e-10 * 80);
    CHECK(jx.hermitian_defect() <= 1e-12);
    CHECK(jy.hermitian_defect() <= 1e-12);
  }
  SUBCASE("matches independent ladder construction") {
    for (double j : {0.5, 1.0, 2.5, 7.0}) {
      SpinBasis b(j);
      CHECK(oracle::max_abs(build_angular_momentum(b, Axis::y).entries - oracle::spin_matrix(j, 'y')) <= 1e-14);
      CHECK(oracle::max_abs(build_angular_momentum(b, Axis::x).entries - oracle::spin_matrix(j, 'x')) <= 1e-14);
    }
  }
}

TEST_CASE("wigner d matrix") {
  SUBCASE("beta = 0 is the identity") {
    for (double j : {0.5, 3.0, 80.0}) {
      auto d = wigner_d(SpinBasis(j), 0.0);
      CHECK(oracle::max_abs(d.entries - CMatrix::Identity(d.entries.rows(), d.entries.cols())) <= 1e-13);
    }
  }
  SUBCASE("matrix exponential oracle") {
    for (double j : {0.5, 1.0, 1.5, 2.0, 4.5, 6.0}) {
      for (double beta : {pi / 2, 0.37, -1.1, 2.9}) {
        auto d = wigner_d(SpinBasis(j), beta);
        const CMatrix ref = oracle::expm_hermitian(oracle::spin_matrix(j, 'y'), beta);
        CAPTURE(j);
        CAPTURE(beta);
        CHECK(oracle::max_abs(d.entries - ref) <= 1e-12);
      }
    }
  }
  SUBCASE("direct factorial sum agrees at moderate j") {
    const double j = 6.5;
    SpinBasis b(j);
    for (Index r = 0; r < b.dim(); ++r)
      for (Index c = 0; c < b.dim(); ++c)
        CHECK(std::abs(wigner_d_element(b, r, c, 1.3) - oracle::wigner_d_direct(j, b.m(r), b.m(c), 1.3)) <= 1e-12);
  }
  SUBCASE("orthogonality at j=80 and j=100") {
    for (double j : {80.0, 100.0}) {
      auto d = wigner_d(SpinBasis(j), pi / 2);
      CHECK(d.entries.imag().cwiseAbs().maxCoeff() == 0.0);
      CHECK(d.unitary_defect() <= 1e-10);
    }
  }
  SUBCASE("composition d(b1) d(b2) = d(b1+b2)") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> angle(-pi, pi);
    for (double j : {0.5, 5.0, 80.0}) {
      SpinBasis b(j);
      for (int trial = 0; trial < 4; ++trial) {
        const double b1 = angle(rng), b2 = angle(rng);
        const CMatrix lhs = wigner_d(b, b1).entries * wigner_d(b, b2).entries;
        CAPTURE(j);
        CHECK(oracle::max_abs(lhs - wigner_d(b, b1 + b2).entries) <= 1e-10);
      }
    }
  }
  CHECK_THROWS(wigner_d(SpinBasis(1), std::numeric_limits<double>::infinity()));
}

TEST_CASE("coherent states") {
  SUBCASE("north pole is |j,j>") {
    auto s = coherent_state(SpinBasis(80), {0.0, 0.3});
    CHECK(std::abs(s.amplitudes()(0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.amplitudes().tail(160).norm() == 0.0);
  }
  SUBCASE("south pole is |j,-j>") {
    auto s = coherent_state(SpinBasis(80), {pi, 0.0});
    CHECK(std::abs(s.amplitudes()(160)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.amplitudes().head(160).norm() == 0.0);
  }
  SUBCASE("normalization and moments at random points, j=40") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> th(0.0, pi), ph(-pi, pi);
    SpinBasis b(40);
    const CMatrix jx = oracle::spin_matrix(40, 'x'), jz = oracle::spin_matrix(40, 'z');
    for (int i = 0; i < 20; ++i) {
      CoherentParams p(th(rng), ph(rng));
      auto s = coherent_state(b, p);
      CHECK(std::abs(s.norm() - 1.0) <= 1e-12);
      // Summation oracle: <J> = sum_m conj(c_m) (J c)_m.
      const double ez = s.amplitudes().dot(jz * s.amplitudes()).real() / 40;
      const double ex = s.amplitudes().dot(jx * s.amplitudes()).real() / 40;
      CHECK(std::abs(ez - std::cos(p.theta)) <= 1e-10);
      CHECK(std::abs(ex - std::sin(p.theta) * std::cos(p.phi)) <= 1e-10);
    }
  }
  SUBCASE("j=80, theta=0.89") {
    auto s = coherent_state(SpinBasis(80), {0.89, 0.63});
    double ez = 0.0;
    for (Index i = 0; i < 161; ++i) ez += std::norm(s.amplitudes()(i)) * (80.0 - i);
    CHECK(std::abs(ez / 80 - std::cos(0.89)) <= 1e-10);
  }
  CHECK_THROWS(CoherentParams(-0.1, 0.0));
  CHECK_THROWS(CoherentParams(0.5, pi));
  auto w = CoherentParams::wrapped(-0.3, 3.5);
  CHECK(w.theta == doctest::Approx(0.3));
  CHECK(w.phi == doctest::Approx(3.5 + pi - 2 * pi));
}

TEST_CASE("husimi distribution") {
  SpinBasis b(20);
  const CoherentParams centre(1.1, 0.4);
  auto psi = coherent_state(b, centre);

  SUBCASE("maximum at the centre") {
    auto grid = husimi_grid(60, 120);
    auto q = husimi(psi, grid);
    std::size_t best = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      CHECK(q[i] >= 0.0);
      CHECK(q[i] <= 1.0);
      if (q[i] > q[best]) best = i;
    }
    std::size_t nearest = 0;
    double best_dist = 1e9;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double d = std::hypot(grid[i].theta - centre.theta, grid[i].phi - centre.phi);
      if (d < best_dist) {
        best_dist = d;
        nearest = i;
      }
    }
    CHECK(best == nearest);
  }
  SUBCASE("resolution of identity by quadrature, 200x200 grid") {
    const int n = 200;
    auto grid = husimi_grid(n, n);
    auto q = husimi(psi, grid);
    const double dtheta = pi / n, dphi = 2 * pi / n;
    double integral = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) integral += q[i] * std::sin(grid[i].theta) * dtheta * dphi;
    CHECK(std::abs(integral * (2 * 20 + 1) / (4 * pi) - 1.0) <= 1e-3);
  }
  CHECK_THROWS(husimi(psi, std::span<const CoherentParams>{}));
}
