#include <random>

#include "doctest.h"
#include "fbimcf/geometry.hpp"

using namespace fbimcf;

namespace {

// Golden-section minimizer for the area-radius oracle.
double golden_min(const std::function<double(double)>& f, double a, double b) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  for (int it = 0; it < 200; ++it) {
    if (f(c) < f(d))
      b = d;
    else
      a = c;
    c = b - gr * (b - a);
    d = a + gr * (b - a);
  }
  return 0.5 * (a + b);
}

std::vector<Vec3> sample_points(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> ur(0.5, 50.0), ua(0, 2 * kPi), uz(0.05, 1.0);
  std::vector<Vec3> pts;
  for (int k = 0; k < n; ++k) {
    double r = ur(rng), a = ua(rng), c = uz(rng);
    double s = std::sqrt(1 - c * c);
    pts.emplace_back(r * s * std::cos(a), r * s * std::sin(a), r * c);
  }
  return pts;
}

}  // namespace

TEST_CASE("metric symmetry and positive definiteness at random points") {
  auto metrics = {AmbientMetric::euclidean(), AmbientMetric::schwarzschild_halfspace(1.0),
                  AmbientMetric::conformal([](const Vec3& x) {
                    double r = x.norm();
                    return 1.0 + 0.7 / r + 0.2 / (r * r);
                  })};
  for (const auto& m : metrics) {
    for (const Vec3& x : sample_points(10000, 7)) {
      Mat3 g = m.components(x);
      CHECK((g - g.transpose()).norm() == doctest::Approx(0.0).epsilon(1e-14));
      Eigen::SelfAdjointEigenSolver<Mat3> es(g);
      CHECK(es.eigenvalues().minCoeff() > 0);
    }
  }
}

TEST_CASE("asymptotic decay envelope |g-delta| + |x||dg| <= c/|x|") {
  AmbientMetric m = AmbientMetric::schwarzschild_halfspace(1.0);
  double c_env = 0;
  for (double r = 2; r <= 1000; r *= 2.3) {
    Vec3 x(r * 0.6, r * 0.48, r * 0.64);
    x *= r / x.norm();
    MetricEval ev = m.eval(x);
    double dev = (ev.g - Mat3::Identity()).cwiseAbs().maxCoeff();
    double dgm = 0;
    for (int k = 0; k < 3; ++k) dgm = std::max(dgm, ev.dg[k].cwiseAbs().maxCoeff());
    c_env = std::max(c_env, (dev + x.norm() * dgm) * x.norm());
  }
  CHECK(c_env < 30.0);  // a single constant over 2 <= |x| <= 10^3
}

TEST_CASE("schwarzschild: Sc = 0, minimal disc at r = m, disc area 32 pi") {
  AmbientMetric m = AmbientMetric::schwarzschild_halfspace(1.0);
  CHECK(m.scalar_curvature(Vec3(2, 0, 0)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(m.scalar_curvature_fd(Vec3(1.3, 0.4, 0.8))) < 1e-5);

  // area radius r phi^2 is stationary exactly at r = m (analytic oracle
  // d/dr (r phi^2) = 1 - m^2/r^2).
  auto area_radius = [&](double r) { return r * std::pow(1.0 + 1.0 / r, 2); };
  double rmin = golden_min(area_radius, 0.3, 4.0);
  CHECK(rmin == doctest::Approx(1.0).epsilon(1e-6));

  // area of the half coordinate sphere r = m: quadrature of phi^4 dA_e.
  double area = 0;
  int nth = 2000;
  for (int k = 0; k < nth; ++k) {
    double th = (k + 0.5) * (0.5 * kPi) / nth;  // polar from e3
    Vec3 x(std::sin(th), 0, std::cos(th));
    double phi = m.conformal_factor(x);
    area += std::pow(phi, 4) * std::sin(th) * (0.5 * kPi / nth) * 2 * kPi;
  }
  CHECK(area == doctest::Approx(32 * kPi).epsilon(1e-6));

  CHECK_THROWS_AS(AmbientMetric::schwarzschild_halfspace(-1.0), ConfigError);
}

TEST_CASE("conformal fast path matches the FD Christoffel pipeline") {
  AmbientMetric pert = AmbientMetric::conformal([](const Vec3& x) {
    double r = x.norm();
    return 1.0 + 0.5 / r + 0.3 / (r * r);
  });
  for (Vec3 x : {Vec3(2, 0.3, 1), Vec3(5, -1, 2), Vec3(0.5, 0.2, 1.4)}) {
    double fast = pert.scalar_curvature(x);
    double fd = pert.scalar_curvature_fd(x);
    CHECK(fd == doctest::Approx(fast).epsilon(2e-4));
  }
  AmbientMetric schw = AmbientMetric::schwarzschild_halfspace(1.0);
  CHECK(std::abs(schw.scalar_curvature_fd(Vec3(2, 1, 1))) < 1e-5);
}

TEST_CASE("catenoid support: minimal, slope decay, neck angle") {
  SupportGeometry cat = SupportGeometry::catenoid(1.0);
  CHECK(std::abs(cat.shape_euclidean(2.0).H) < 1e-12);
  // slope beta' = m / sqrt(rho^2 - m^2)
  CHECK(cat.slope(10.0) == doctest::Approx(1.0 / std::sqrt(99.0)).epsilon(1e-12));
  CHECK(cat.slope(100.0) * 100.0 == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(cat.slope(10.0) * 10.0 < 1.01);
  // vertical tangent at the neck: the disc meets the surface at pi/2
  CHECK(cat.slope(1.0 + 1e-13) > 1e5);
  CHECK_THROWS_AS(SupportGeometry::catenoid(0.0), ConfigError);

  // graph decay |x||grad psi| + |x|^2 |grad^2 psi| <= c
  for (double r : {10.0, 100.0, 1000.0}) {
    SupportShape sh = cat.shape_euclidean(r);
    double envelope = r * cat.slope(r) + r * r * std::abs(sh.kappa_meridian);
    CHECK(envelope < 2.5);
  }
}

TEST_CASE("boundary_shape on the built-in pairs") {
  AmbientMetric eu = AmbientMetric::euclidean();
  SupportGeometry plane = SupportGeometry::flat_plane();
  BoundaryShape b = boundary_shape(eu, plane, Vec3(2, 0, 0));
  CHECK(b.H == doctest::Approx(0.0));
  CHECK(b.kappa_meridian == doctest::Approx(0.0));

  // catenoid at the neck: H = 0 and A < 0 in the meridian (flow-normal) direction
  SupportGeometry cat = SupportGeometry::catenoid(1.0);
  BoundaryShape bc = boundary_shape(eu, cat, Vec3(1.0, 0, 0));
  CHECK(std::abs(bc.H) < 1e-12);
  CHECK(bc.kappa_meridian < 0);
  CHECK(bc.kappa_meridian == doctest::Approx(-1.0).epsilon(1e-9));

  // Schwarzschild over the plane through the origin: totally geodesic.
  AmbientMetric schw = AmbientMetric::schwarzschild_halfspace(1.0);
  BoundaryShape bs = boundary_shape(schw, plane, Vec3(2, 0, 0));
  CHECK(std::abs(bs.H) < 1e-10);
  BoundaryShape bs_fd = boundary_shape_fd(schw, plane, Vec3(2, 0, 0));
  CHECK(std::abs(bs_fd.H) < 1e-6);

  // generic pipeline agrees with the conformal fast path off the origin
  BoundaryShape bfd = boundary_shape_fd(eu, cat, Vec3(2.0, 0, cat.height(2.0)));
  BoundaryShape bcf = boundary_shape(eu, cat, Vec3(2.0, 0, cat.height(2.0)));
  CHECK(bfd.kappa_meridian == doctest::Approx(bcf.kappa_meridian).epsilon(1e-6));
  CHECK(bfd.kappa_rot == doctest::Approx(bcf.kappa_rot).epsilon(1e-6));

  CHECK_THROWS_AS(boundary_shape(eu, plane, Vec3(1, 0, 0.5)), ConfigError);
}
