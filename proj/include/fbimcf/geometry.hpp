// Ambient half-space metrics and support-boundary geometry.
//
// Metrics live on the upper half-space {x3 >= support height} in Cartesian
// coordinates, in geometric units (G = c = 1).  Built-in families:
//   - euclidean            g = delta
//   - schwarzschild(m)     g = phi^4 delta with phi = 1 + m/|x|
//   - conformal(phi)       g = phi^4 delta for a user conformal factor
//   - general(g_ij)        arbitrary callable, derivatives by finite differences
//
// The support boundary is a rotationally symmetric surface z = beta(rho):
// a flat plane (beta = 0), a catenoid branch (beta = m*arcosh(rho/m)), or a
// user graph.  All evaluation is pure and thread-safe after construction.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <memory>

#include "fbimcf/util.hpp"

namespace fbimcf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

// Point-wise metric data in the Cartesian chart.
struct MetricEval {
  Mat3 g;
  Mat3 ginv;
  std::array<Mat3, 3> dg;  // dg[k](i,j) = d_k g_ij
  double sqrt_det = 1;
};

// Axisymmetric meridian data at (rho, z) (evaluated at azimuth 0).
struct MeridianEval {
  Mat2 a;      // meridian block [g_rr, g_rz; g_rz, g_zz]
  Mat2 ainv;
  double q;    // g_theta_theta = rho^2 * g_22(rho,0,z)
  double w;    // sqrt(det a * q): cylindrical volume density
};

class AmbientMetric {
 public:
  enum class Kind { euclidean, schwarzschild, conformal, general };

  static AmbientMetric euclidean();
  static AmbientMetric schwarzschild_halfspace(double mass);
  static AmbientMetric conformal(std::function<double(const Vec3&)> phi);
  static AmbientMetric general(std::function<Mat3(const Vec3&)> gij);

  Kind kind() const { return kind_; }
  double mass() const { return mass_; }
  bool conformal_like() const { return kind_ != Kind::general; }

  Mat3 components(const Vec3& x) const;
  MetricEval eval(const Vec3& x) const;
  MeridianEval meridian(double rho, double z) const;

  // phi with g = phi^4 g_e; 1 for the Euclidean metric.  Throws for general metrics.
  double conformal_factor(const Vec3& x) const;
  Vec3 conformal_factor_grad(const Vec3& x) const;

  // Scalar curvature: conformal fast path Sc = -8 phi^-5 lap(phi), otherwise
  // the finite-difference Christoffel pipeline.
  double scalar_curvature(const Vec3& x) const;
  // Generic pipeline regardless of kind (test oracle for the fast path).
  double scalar_curvature_fd(const Vec3& x) const;

  // FD step for metric derivatives: 1e-4 * max(1, |x|).
  static double fd_step(const Vec3& x) { return 1e-4 * std::max(1.0, x.norm()); }

 private:
  Kind kind_ = Kind::euclidean;
  double mass_ = 0;
  std::function<double(const Vec3&)> phi_;
  std::function<Mat3(const Vec3&)> gij_;
};

// Euclidean extrinsic data of the support surface at a meridian point,
// with respect to the outward normal mu (pointing out of the domain M).
struct SupportShape {
  double kappa_meridian = 0;  // A(t,t) along the meridian direction
  double kappa_rot = 0;       // A along the rotation direction
  double H = 0;               // trace
  Vec2 mu{0, -1};             // outward unit normal, meridian components
};

class SupportGeometry {
 public:
  enum class Kind { plane, catenoid, graph };

  static SupportGeometry flat_plane();
  static SupportGeometry catenoid(double mass);
  static SupportGeometry graph(std::function<double(double)> psi,
                               std::function<double(double)> dpsi, double rho_min,
                               double decay_c);

  Kind kind() const { return kind_; }
  double mass() const { return mass_; }

  double height(double rho) const;  // beta(rho)
  double slope(double rho) const;   // beta'(rho)
  double rho_min() const { return rho_min_; }
  double decay_constant() const { return decay_c_; }

  SupportShape shape_euclidean(double rho) const;
  bool contains(const Vec2& p, double tol) const;

 private:
  Kind kind_ = Kind::plane;
  double mass_ = 0;
  double rho_min_ = 0;
  double decay_c_ = 0;
  std::function<double(double)> psi_, dpsi_;
};

// Second fundamental form and mean curvature of the support with respect to
// the ambient metric g, at the boundary point x (which must lie on the
// support curve).  Curvatures are returned in the g-orthonormal
// (meridian-tangent, rotational) frame.
struct BoundaryShape {
  double kappa_meridian = 0;
  double kappa_rot = 0;
  double H = 0;
};

BoundaryShape boundary_shape(const AmbientMetric& metric, const SupportGeometry& support,
                             const Vec3& x);

// Same quantity through the generic Christoffel path (test oracle).
BoundaryShape boundary_shape_fd(const AmbientMetric& metric, const SupportGeometry& support,
                                const Vec3& x);

}  // namespace fbimcf
