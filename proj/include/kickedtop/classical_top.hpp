#pragma once

// Classical kicked-top map on the unit sphere, Gaussian ensembles in the
// (theta, phi) chart, finite-time Lyapunov exponents and Poincare output.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kickedtop/quantum_top.hpp"
#include "kickedtop/spin.hpp"

namespace kickedtop {

struct ClassicalPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 1.0;

  static ClassicalPoint from_angles(const CoherentParams& p);
  CoherentParams angles() const;
  Eigen::Vector3d vec() const { return {x, y, z}; }
  double radius() const;
};

// A tangent direction at a point on the sphere, carried as a 3-vector that
// is kept orthogonal to the radial direction.
struct TangentVector {
  Eigen::Vector3d components = Eigen::Vector3d::Zero();
};

struct ClassicalEnsemble {
  std::vector<ClassicalPoint> points;
  std::uint64_t seed = 0;
  CoherentParams origin;
  double sigma = 0.0;
};

// x' = z cos(kx) + y sin(kx), y' = -z sin(kx) + y cos(kx), z' = -x,
// then projected back onto the unit sphere.
ClassicalPoint map_step(const ClassicalPoint& p, double k);

// Analytic 3x3 Jacobian of the unprojected map at p.
Eigen::Matrix3d map_jacobian(const ClassicalPoint& p, double k);

// Pushes v forward through one step and projects it onto the tangent plane
// at the image point.
TangentVector push_tangent(const ClassicalPoint& p, const TangentVector& v, double k);

// theta and phi drawn independently from N(origin, sigma^2) without the
// sin(theta) chart Jacobian. Origins within 3 sigma of a pole are rejected.
ClassicalEnsemble sample_ensemble(const CoherentParams& origin, double sigma, std::size_t n, std::uint64_t seed);

VarianceSeries ensemble_variance_series(const ClassicalEnsemble& ensemble, double k, int steps);

// (1/T) sum_t ln |J v_t|, v renormalized each step.
double finite_time_lyapunov(const ClassicalPoint& p, double k, int steps);

double ensemble_lyapunov(const ClassicalEnsemble& ensemble, double k, int steps);

struct LambdaSumInput {
  CoherentParams origin1;
  CoherentParams origin2;
  double k1 = 0.0;
  double k2 = 0.0;
  double sigma = 0.0;
  std::size_t samples = 100;
  int steps = 100;
  std::uint64_t seed = 0;
};

// Phase-space averaged finite-time exponents of both tops, summed. Both
// ensembles are drawn with the same seed, so identical tops give 2 lambda_1.
double lambda_sum(const LambdaSumInput& in);

struct OrbitPoint {
  int orbit_id = 0;
  int t = 0;
  double theta = 0.0;
  double phi = 0.0;
};

std::vector<OrbitPoint> poincare_section(double k, std::span<const CoherentParams> initial, int steps);

}  // namespace kickedtop
