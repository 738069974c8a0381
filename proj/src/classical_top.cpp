#include "kickedtop/classical_top.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

namespace kickedtop {

namespace {

// Leaves points within a few ulps of the sphere untouched so that exact
// rotations (k = 0) stay exact.
ClassicalPoint normalized(double x, double y, double z) {
  const double r2 = x * x + y * y + z * z;
  if (std::abs(r2 - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) return {x, y, z};
  const double r = std::sqrt(r2);
  return {x / r, y / r, z / r};
}

Eigen::Vector3d project_tangent(const ClassicalPoint& p, const Eigen::Vector3d& v) {
  const Eigen::Vector3d r = p.vec();
  return v - r.dot(v) * r;
}

TangentVector initial_tangent(const ClassicalPoint& p) {
  Eigen::Vector3d v = project_tangent(p, Eigen::Vector3d(1.0, 1.0, 1.0).normalized());
  if (v.norm() < 0.1) v = project_tangent(p, Eigen::Vector3d(1.0, -1.0, 0.0).normalized());
  return {v.normalized()};
}

}  // namespace

ClassicalPoint ClassicalPoint::from_angles(const CoherentParams& p) {
  const double s = std::sin(p.theta);
  return {s * std::cos(p.phi), s * std::sin(p.phi), std::cos(p.theta)};
}

CoherentParams ClassicalPoint::angles() const {
  const double theta = std::acos(std::clamp(z, -1.0, 1.0));
  double phi = std::atan2(y, x);
  if (phi >= std::numbers::pi) phi = -std::numbers::pi;
  return CoherentParams(theta, phi);
}

double ClassicalPoint::radius() const { return std::sqrt(x * x + y * y + z * z); }

ClassicalPoint map_step(const ClassicalPoint& p, double k) {
  const double c = std::cos(k * p.x), s = std::sin(k * p.x);
  return normalized(p.z * c + p.y * s, -p.z * s + p.y * c, -p.x);
}

Eigen::Matrix3d map_jacobian(const ClassicalPoint& p, double k) {
  const double c = std::cos(k * p.x), s = std::sin(k * p.x);
  const double xn = p.z * c + p.y * s;
  const double yn = -p.z * s + p.y * c;
  Eigen::Matrix3d jac;
  jac << k * yn, s, c,
         -k * xn, c, -s,
         -1.0, 0.0, 0.0;
  return jac;
}

TangentVector push_tangent(const ClassicalPoint& p, const TangentVector& v, double k) {
  const ClassicalPoint next = map_step(p, k);
  return {project_tangent(next, map_jacobian(p, k) * v.components)};
}

ClassicalEnsemble sample_ensemble(const CoherentParams& origin, double sigma, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("ensemble needs at least one point");
  if (!(sigma > 0.0)) throw std::invalid_argument("ensemble width sigma must be positive");
  if (origin.theta - 3.0 * sigma < 0.0 || origin.theta + 3.0 * sigma > std::numbers::pi)
    throw std::invalid_argument("ensemble origin lies within 3 sigma of a pole");

  boost::random::mt19937_64 rng(seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  ClassicalEnsemble out{{}, seed, origin, sigma};
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = origin.theta + sigma * normal(rng);
    const double phi = origin.phi + sigma * normal(rng);
    const double st = std::sin(theta);
    out.points.push_back(normalized(st * std::cos(phi), st * std::sin(phi), std::cos(theta)));
  }
  return out;
}

VarianceSeries ensemble_variance_series(const ClassicalEnsemble& ensemble, double k, int steps) {
  if (steps < 1) throw std::invalid_argument("variance series needs at least one step");
  std::vector<ClassicalPoint> pts = ensemble.points;
  const double n = static_cast<double>(pts.size());
  VarianceSeries out;
  for (int t = 0; t <= steps; ++t) {
    if (t > 0)
      for (auto& p : pts) p = map_step(p, k);
    double mean = 0.0, mean_sq = 0.0;
    for (const auto& p : pts) {
      mean += p.z;
      mean_sq += p.z * p.z;
    }
    mean /= n;
    mean_sq /= n;
    out.times.push_back(t);
    out.values.push_back(std::clamp(mean_sq - mean * mean, 0.0, 1.0));
  }
  return out;
}

double finite_time_lyapunov(const ClassicalPoint& start, double k, int steps) {
  if (steps < 1) throw std::invalid_argument("Lyapunov horizon must be at least one step");
  ClassicalPoint p = start;
  TangentVector v = initial_tangent(p);
  double sum = 0.0;
  for (int t = 0; t < steps; ++t) {
    TangentVector w = push_tangent(p, v, k);
    const double growth = w.components.norm();
    if (!(growth > 0.0)) throw NumericalFailure("tangent vector collapsed");
    sum += std::log(growth);
    v.components = w.components / growth;
    p = map_step(p, k);
  }
  return sum / steps;
}

double ensemble_lyapunov(const ClassicalEnsemble& ensemble, double k, int steps) {
  double sum = 0.0;
  for (const auto& p : ensemble.points) sum += finite_time_lyapunov(p, k, steps);
  return sum / static_cast<double>(ensemble.points.size());
}

double lambda_sum(const LambdaSumInput& in) {
  const auto e1 = sample_ensemble(in.origin1, in.sigma, in.samples, in.seed);
  const auto e2 = sample_ensemble(in.origin2, in.sigma, in.samples, in.seed);
  return ensemble_lyapunov(e1, in.k1, in.steps) + ensemble_lyapunov(e2, in.k2, in.steps);
}

std::vector<OrbitPoint> poincare_section(double k, std::span<const CoherentParams> initial, int steps) {
  if (steps < 1) throw std::invalid_argument("Poincare section needs at least one step");
  std::vector<OrbitPoint> out;
  out.reserve(initial.size() * static_cast<std::size_t>(steps + 1));
  int id = 0;
  for (const auto& start : initial) {
    ClassicalPoint p = ClassicalPoint::from_angles(start);
    for (int t = 0; t <= steps; ++t) {
      if (t > 0) p = map_step(p, k);
      const CoherentParams a = p.angles();
      out.push_back({id, t, a.theta, a.phi});
    }
    ++id;
  }
  return out;
}

}  // namespace kickedtop
