#include "fbimcf/geometry.hpp"

#include <cmath>
#include <limits>

namespace fbimcf {

namespace {

// 4th-order central difference of a scalar callable along direction k.
template <typename F>
double fd4(const F& f, Vec3 x, int k, double h) {
  Vec3 e = Vec3::Zero();
  e[k] = 1.0;
  return (-f(x + 2 * h * e) + 8 * f(x + h * e) - 8 * f(x - h * e) + f(x - 2 * h * e)) /
         (12 * h);
}

}  // namespace

AmbientMetric AmbientMetric::euclidean() {
  AmbientMetric m;
  m.kind_ = Kind::euclidean;
  return m;
}

AmbientMetric AmbientMetric::schwarzschild_halfspace(double mass) {
  if (!(mass > 0)) throw ConfigError("schwarzschild_halfspace: mass must be positive");
  AmbientMetric m;
  m.kind_ = Kind::schwarzschild;
  m.mass_ = mass;
  return m;
}

AmbientMetric AmbientMetric::conformal(std::function<double(const Vec3&)> phi) {
  AmbientMetric m;
  m.kind_ = Kind::conformal;
  m.phi_ = std::move(phi);
  return m;
}

AmbientMetric AmbientMetric::general(std::function<Mat3(const Vec3&)> gij) {
  AmbientMetric m;
  m.kind_ = Kind::general;
  m.gij_ = std::move(gij);
  return m;
}

double AmbientMetric::conformal_factor(const Vec3& x) const {
  switch (kind_) {
    case Kind::euclidean:
      return 1.0;
    case Kind::schwarzschild:
      return 1.0 + mass_ / x.norm();
    case Kind::conformal:
      return phi_(x);
    case Kind::general:
      throw std::runtime_error("conformal_factor: metric is not conformally flat");
  }
  return 1.0;
}

Vec3 AmbientMetric::conformal_factor_grad(const Vec3& x) const {
  switch (kind_) {
    case Kind::euclidean:
      return Vec3::Zero();
    case Kind::schwarzschild: {
      double r = x.norm();
      return -mass_ / (r * r * r) * x;
    }
    case Kind::conformal: {
      double h = fd_step(x);
      Vec3 g;
      for (int k = 0; k < 3; ++k) g[k] = fd4(phi_, x, k, h);
      return g;
    }
    case Kind::general:
      throw std::runtime_error("conformal_factor_grad: metric is not conformally flat");
  }
  return Vec3::Zero();
}

Mat3 AmbientMetric::components(const Vec3& x) const {
  switch (kind_) {
    case Kind::euclidean:
      return Mat3::Identity();
    case Kind::schwarzschild:
    case Kind::conformal: {
      double p = conformal_factor(x);
      double p2 = p * p;
      return (p2 * p2) * Mat3::Identity();
    }
    case Kind::general:
      return gij_(x);
  }
  return Mat3::Identity();
}

MetricEval AmbientMetric::eval(const Vec3& x) const {
  MetricEval ev;
  ev.g = components(x);
  if (conformal_like()) {
    double p = conformal_factor(x);
    Vec3 gp = conformal_factor_grad(x);
    double p3 = p * p * p;
    for (int k = 0; k < 3; ++k) ev.dg[k] = (4 * p3 * gp[k]) * Mat3::Identity();
    double p2 = p * p;
    ev.ginv = (1.0 / (p2 * p2)) * Mat3::Identity();
    ev.sqrt_det = p3 * p3;
  } else {
    double h = fd_step(x);
    for (int k = 0; k < 3; ++k) {
      Vec3 e = Vec3::Zero();
      e[k] = 1.0;
      ev.dg[k] = (-gij_(x + 2 * h * e) + 8 * gij_(x + h * e) - 8 * gij_(x - h * e) +
                  gij_(x - 2 * h * e)) /
                 (12 * h);
    }
    ev.ginv = ev.g.inverse();
    ev.sqrt_det = std::sqrt(ev.g.determinant());
  }
  return ev;
}

MeridianEval AmbientMetric::meridian(double rho, double z) const {
  // Mirrored evaluation (rho < 0) uses the even extension across the axis.
  double ar = std::abs(rho);
  Mat3 g = components(Vec3(ar, 0, z));
  MeridianEval me;
  me.a << g(0, 0), g(0, 2), g(2, 0), g(2, 2);
  me.ainv = me.a.inverse();
  me.q = rho * rho * g(1, 1);
  me.w = std::sqrt(std::max(0.0, me.a.determinant() * me.q));
  return me;
}

double AmbientMetric::scalar_curvature(const Vec3& x) const {
  switch (kind_) {
    case Kind::euclidean:
      return 0.0;
    case Kind::schwarzschild:
      return 0.0;  // phi = 1 + m/|x| is harmonic
    case Kind::conformal: {
      // Sc = -8 phi^-5 lap_e(phi), 4th-order Laplacian stencil.
      double h = 1e-3 * std::max(1.0, x.norm());
      double lap = 0;
      for (int k = 0; k < 3; ++k) {
        Vec3 e = Vec3::Zero();
        e[k] = 1.0;
        lap += (-phi_(x + 2 * h * e) + 16 * phi_(x + h * e) - 30 * phi_(x) +
                16 * phi_(x - h * e) - phi_(x - 2 * h * e)) /
               (12 * h * h);
      }
      double p = phi_(x);
      return -8.0 * lap / (p * p * p * p * p);
    }
    case Kind::general:
      return scalar_curvature_fd(x);
  }
  return 0.0;
}

namespace {

using Christoffel = std::array<Mat3, 3>;  // c[k](i,j) = Gamma^k_ij

Christoffel christoffel(const AmbientMetric& m, const Vec3& x) {
  MetricEval ev = m.eval(x);
  Christoffel c;
  for (int k = 0; k < 3; ++k) {
    c[k].setZero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int l = 0; l < 3; ++l)
          s += ev.ginv(k, l) * (ev.dg[i](j, l) + ev.dg[j](i, l) - ev.dg[l](i, j));
        c[k](i, j) = 0.5 * s;
      }
  }
  return c;
}

}  // namespace

double AmbientMetric::scalar_curvature_fd(const Vec3& x) const {
  const double h = 1e-3 * std::max(1.0, x.norm());
  std::array<Christoffel, 3> dG;  // dG[l][k](i,j) = d_l Gamma^k_ij
  for (int l = 0; l < 3; ++l) {
    Vec3 e = Vec3::Zero();
    e[l] = 1.0;
    Christoffel cp = christoffel(*this, x + h * e);
    Christoffel cm = christoffel(*this, x - h * e);
    for (int k = 0; k < 3; ++k) dG[l][k] = (cp[k] - cm[k]) / (2 * h);
  }
  Christoffel G = christoffel(*this, x);
  MetricEval ev = eval(x);
  double sc = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double rij = 0;
      for (int k = 0; k < 3; ++k) {
        rij += dG[k][k](i, j) - dG[i][k](k, j);
        for (int l = 0; l < 3; ++l)
          rij += G[k](k, l) * G[l](i, j) - G[k](i, l) * G[l](k, j);
      }
      sc += ev.ginv(i, j) * rij;
    }
  return sc;
}

// ---------------------------------------------------------------------------
// SupportGeometry

SupportGeometry SupportGeometry::flat_plane() {
  SupportGeometry s;
  s.kind_ = Kind::plane;
  return s;
}

SupportGeometry SupportGeometry::catenoid(double mass) {
  if (!(mass > 0)) throw ConfigError("catenoid: mass must be positive");
  SupportGeometry s;
  s.kind_ = Kind::catenoid;
  s.mass_ = mass;
  s.rho_min_ = mass;
  s.decay_c_ = 2 * mass;  // rho |beta'| -> m, rho^2 |beta''| -> m
  return s;
}

SupportGeometry SupportGeometry::graph(std::function<double(double)> psi,
                                       std::function<double(double)> dpsi, double rho_min,
                                       double decay_c) {
  SupportGeometry s;
  s.kind_ = Kind::graph;
  s.psi_ = std::move(psi);
  s.dpsi_ = std::move(dpsi);
  s.rho_min_ = rho_min;
  s.decay_c_ = decay_c;
  return s;
}

double SupportGeometry::height(double rho) const {
  switch (kind_) {
    case Kind::plane:
      return 0.0;
    case Kind::catenoid: {
      double t = std::max(1.0, rho / mass_);
      return mass_ * std::acosh(t);
    }
    case Kind::graph:
      return psi_(rho);
  }
  return 0.0;
}

double SupportGeometry::slope(double rho) const {
  switch (kind_) {
    case Kind::plane:
      return 0.0;
    case Kind::catenoid: {
      double d2 = rho * rho - mass_ * mass_;
      if (d2 <= 0) return std::numeric_limits<double>::infinity();
      return mass_ / std::sqrt(d2);
    }
    case Kind::graph:
      return dpsi_(rho);
  }
  return 0.0;
}

SupportShape SupportGeometry::shape_euclidean(double rho) const {
  SupportShape sh;
  switch (kind_) {
    case Kind::plane:
      sh.mu = Vec2(0, -1);
      return sh;
    case Kind::catenoid: {
      // z-parametrization rho(z) = m cosh(z/m) is regular through the neck.
      double t = height(rho) / mass_;
      double sech = 1.0 / std::cosh(t);
      sh.kappa_meridian = -sech * sech / mass_;
      sh.kappa_rot = sech * sech / mass_;
      sh.H = 0.0;
      sh.mu = Vec2(sech, -std::tanh(t));
      return sh;
    }
    case Kind::graph: {
      double b1 = dpsi_(rho);
      double h = 1e-6 * std::max(1.0, rho);
      double b2 = (dpsi_(rho + h) - dpsi_(rho - h)) / (2 * h);
      double s2 = 1 + b1 * b1;
      double s = std::sqrt(s2);
      sh.kappa_meridian = b2 / (s2 * s);
      sh.kappa_rot = b1 / (rho * s);
      sh.H = sh.kappa_meridian + sh.kappa_rot;
      sh.mu = Vec2(b1 / s, -1 / s);
      return sh;
    }
  }
  return sh;
}

bool SupportGeometry::contains(const Vec2& p, double tol) const {
  double scale = 1 + p.norm();
  if (p[0] < rho_min_ - tol * scale) return false;
  double rho = std::max(p[0], rho_min_);
  return std::abs(p[1] - height(rho)) <= tol * scale;
}

// ---------------------------------------------------------------------------
// boundary_shape

BoundaryShape boundary_shape(const AmbientMetric& metric, const SupportGeometry& support,
                             const Vec3& x) {
  Vec2 p(std::hypot(x[0], x[1]), x[2]);
  if (!support.contains(p, 1e-8))
    throw ConfigError("boundary_shape: point does not lie on the support curve");
  SupportShape se = support.shape_euclidean(p[0]);
  BoundaryShape bs;
  if (metric.conformal_like()) {
    // kappa_g = phi^-2 (kappa_e + 2 d_mu phi / phi) per principal direction.
    double phi = metric.conformal_factor(x);
    Vec3 gp = metric.conformal_factor_grad(x);
    double rho = p[0];
    Vec3 mu3 = rho > 0 ? Vec3(se.mu[0] * x[0] / rho, se.mu[0] * x[1] / rho, se.mu[1])
                       : Vec3(se.mu[0], 0, se.mu[1]);
    double dmu_logphi = mu3.dot(gp) / phi;
    double p2 = phi * phi;
    bs.kappa_meridian = (se.kappa_meridian + 2 * dmu_logphi) / p2;
    bs.kappa_rot = (se.kappa_rot + 2 * dmu_logphi) / p2;
    bs.H = bs.kappa_meridian + bs.kappa_rot;
    return bs;
  }
  return boundary_shape_fd(metric, support, x);
}

BoundaryShape boundary_shape_fd(const AmbientMetric& metric, const SupportGeometry& support,
                                const Vec3& x) {
  Vec2 p(std::hypot(x[0], x[1]), x[2]);
  if (!support.contains(p, 1e-8))
    throw ConfigError("boundary_shape_fd: point does not lie on the support curve");
  double rho = p[0], z = p[1];

  // Meridian tangent T1 and its parameter derivative, at azimuth 0.
  Vec3 T1, dT1;
  if (support.kind() == SupportGeometry::Kind::catenoid) {
    // parametrize by z: (m cosh(z/m), 0, z)
    double m = support.mass();
    T1 = Vec3(std::sinh(z / m), 0, 1);
    dT1 = Vec3(std::cosh(z / m) / m, 0, 0);
  } else {
    double b1 = support.slope(rho);
    double h = 1e-6 * std::max(1.0, rho);
    double b2 = (support.slope(rho + h) - support.slope(rho - h)) / (2 * h);
    T1 = Vec3(1, 0, b1);
    dT1 = Vec3(0, 0, b2);
  }
  Vec3 T2(0, rho, 0);      // rotation direction d_theta at azimuth 0
  Vec3 dT2(-rho, 0, 0);    // d_theta d_theta

  Vec3 x0(rho, 0, z);
  MetricEval ev = metric.eval(x0);
  Christoffel G = christoffel(metric, x0);

  // Outward unit g-normal: -ginv dF / |dF|_g with F = z - beta(rho).
  SupportShape se = support.shape_euclidean(rho);
  Vec3 n_cov(-se.mu[0], 0, -se.mu[1]);  // Euclidean covector along the inward normal
  Vec3 N = ev.ginv * n_cov;
  double nn = std::sqrt(n_cov.dot(ev.ginv * n_cov));
  N = -N / nn;

  auto second_form = [&](const Vec3& Ta, const Vec3& Tb, const Vec3& dTab) {
    Vec3 cov = dTab;
    for (int k = 0; k < 3; ++k) cov[k] += Ta.dot(G[k] * Tb);
    return -N.dot(ev.g * cov);
  };
  double A11 = second_form(T1, T1, dT1);
  double A22 = second_form(T2, T2, dT2);
  double h11 = T1.dot(ev.g * T1);
  double h22 = T2.dot(ev.g * T2);

  BoundaryShape bs;
  bs.kappa_meridian = A11 / h11;
  bs.kappa_rot = rho > 0 ? A22 / h22 : bs.kappa_meridian;
  bs.H = bs.kappa_meridian + bs.kappa_rot;
  return bs;
}

}  // namespace fbimcf
