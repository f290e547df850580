#include "fbimcf/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace fbimcf {

Curve2::Curve2(std::function<Vec2(double)> f, int n_table) : f_(std::move(f)) {
  ts_ = linspace(0, 1, n_table + 1);
  ss_.resize(ts_.size());
  ss_[0] = 0;
  Vec2 prev = f_(ts_[0]);
  for (size_t k = 1; k < ts_.size(); ++k) {
    Vec2 cur = f_(ts_[k]);
    ss_[k] = ss_[k - 1] + (cur - prev).norm();
    prev = cur;
  }
  len_ = ss_.back();
}

Vec2 Curve2::at(double s) const {
  double target = std::clamp(s, 0.0, 1.0) * len_;
  auto it = std::lower_bound(ss_.begin(), ss_.end(), target);
  if (it == ss_.begin()) return f_(ts_.front());
  if (it == ss_.end()) return f_(ts_.back());
  size_t k = size_t(it - ss_.begin());
  double s0 = ss_[k - 1], s1 = ss_[k];
  double w = (s1 > s0) ? (target - s0) / (s1 - s0) : 0.0;
  double t = ts_[k - 1] + w * (ts_[k] - ts_[k - 1]);
  return f_(t);
}

Curve2 hemisphere_meridian(double radius) {
  return Curve2([radius](double s) {
    double a = 0.5 * kPi * s;  // s=0 on the axis, s=1 on the support plane
    return Vec2(radius * std::sin(a), radius * std::cos(a));
  });
}

Curve2 neck_disc_meridian(double radius) {
  return Curve2([radius](double s) { return Vec2(radius * s, 0.0); });
}

MeridianDomain build_domain(const Curve2& initial_surface, const SupportGeometry& support,
                            double r_out, double gamma_offset) {
  MeridianDomain d;
  d.inner = initial_surface;
  d.r_out = r_out;
  d.gamma_offset = gamma_offset;
  const Vec2 x0(0, -gamma_offset);

  d.P00 = initial_surface.start();
  d.P10 = initial_surface.end();
  if (std::abs(d.P00[0]) > 1e-9 * (1 + d.P00.norm()))
    throw ConfigError("build_domain: initial surface does not reach the axis");
  if (!support.contains(d.P10, 1e-6))
    throw ConfigError("build_domain: initial surface does not reach the support curve");
  d.r0 = std::max(d.P00.norm(), d.P10.norm());

  double max_extent = 0;
  for (int k = 0; k <= 64; ++k)
    max_extent = std::max(max_extent, (d.inner.at(k / 64.0) - x0).norm());
  if (r_out <= 1.05 * max_extent)
    throw ConfigError("build_domain: R_out does not exceed the extent of the initial surface");

  // Outer/support corner: point of the support curve at distance R_out from x0.
  auto dist2 = [&](double rho) {
    Vec2 p(rho, support.height(rho));
    return (p - x0).squaredNorm() - r_out * r_out;
  };
  double lo = std::max(d.P10[0], support.rho_min());
  double hi = r_out + gamma_offset + 1;
  if (dist2(lo) >= 0) throw ConfigError("build_domain: outer arc inside the initial surface");
  double rho_c = bisect(dist2, lo, hi, 1e-13 * r_out);
  d.P11 = Vec2(rho_c, support.height(rho_c));
  d.P01 = Vec2(0, r_out - gamma_offset);

  // Acute-angle condition at the outer/support corner (tangency rejected).
  double b1 = support.slope(rho_c);
  d.corner_cos = (d.P11[1] + gamma_offset - rho_c * b1) / (r_out * std::sqrt(1 + b1 * b1));
  if (d.corner_cos < -1e-9)
    throw ConfigError("build_domain: outer arc meets the support at an obtuse angle");
  if (d.corner_cos > std::cos(5.0 * kPi / 180))
    throw ConfigError("build_domain: outer arc tangent to support");

  double a1 = std::atan2(rho_c, d.P11[1] + gamma_offset);  // polar angle from +z about x0
  d.outer = Curve2([x0, r_out, a1](double s) {
    double a = a1 * s;
    return Vec2(x0[0] + r_out * std::sin(a), x0[1] + r_out * std::cos(a));
  });

  if (support.kind() == SupportGeometry::Kind::catenoid) {
    // z-parametrization is regular through the neck.
    double m = support.mass();
    double z_i = support.height(d.P10[0]);
    double z_c = support.height(rho_c);
    d.support = Curve2([m, z_i, z_c](double s) {
      double zz = z_i + (z_c - z_i) * s;
      return Vec2(m * std::cosh(zz / m), zz);
    });
  } else {
    double rho_i = d.P10[0];
    d.support = Curve2([&support, rho_i, rho_c](double s) {
      double rho = rho_i + (rho_c - rho_i) * s;
      return Vec2(rho, support.height(rho));
    });
  }
  Vec2 p00 = d.P00, p01 = d.P01;
  d.axis = Curve2([p00, p01](double s) { return Vec2(0.0, p00[1] + (p01[1] - p00[1]) * s); });
  return d;
}

Mat2 CurvilinearGrid::jacobian(int i, int j) const {
  auto d_i = [&](int ii, int jj) {
    if (ii == 0) return (-1.5 * node(0, jj) + 2.0 * node(1, jj) - 0.5 * node(2, jj)).eval();
    if (ii == ni - 1)
      return (1.5 * node(ni - 1, jj) - 2.0 * node(ni - 2, jj) + 0.5 * node(ni - 3, jj)).eval();
    return (0.5 * (node(ii + 1, jj) - node(ii - 1, jj))).eval();
  };
  auto d_j = [&](int ii, int jj) {
    if (jj == 0) return (-1.5 * node(ii, 0) + 2.0 * node(ii, 1) - 0.5 * node(ii, 2)).eval();
    if (jj == nj - 1)
      return (1.5 * node(ii, nj - 1) - 2.0 * node(ii, nj - 2) + 0.5 * node(ii, nj - 3)).eval();
    return (0.5 * (node(ii, jj + 1) - node(ii, jj - 1))).eval();
  };
  Mat2 J;
  J.col(0) = d_i(i, j);
  J.col(1) = d_j(i, j);
  return J;
}

double CurvilinearGrid::max_cell_diameter() const {
  double m = 0;
  for (int j = 0; j + 1 < nj; ++j)
    for (int i = 0; i + 1 < ni; ++i) {
      double d1 = (node(i + 1, j + 1) - node(i, j)).norm();
      double d2 = (node(i + 1, j) - node(i, j + 1)).norm();
      m = std::max(m, std::max(d1, d2));
    }
  return m;
}

double CurvilinearGrid::min_cell_diameter() const {
  double m = std::numeric_limits<double>::infinity();
  for (int j = 0; j + 1 < nj; ++j)
    for (int i = 0; i + 1 < ni; ++i) {
      double d1 = (node(i + 1, j + 1) - node(i, j)).norm();
      double d2 = (node(i + 1, j) - node(i, j + 1)).norm();
      m = std::min(m, std::max(d1, d2));
    }
  return m;
}

double CurvilinearGrid::discrete_area() const {
  double area = 0;
  for (int j = 0; j + 1 < nj; ++j)
    for (int i = 0; i + 1 < ni; ++i) {
      Vec2 di = 0.5 * (node(i + 1, j) - node(i, j) + node(i + 1, j + 1) - node(i, j + 1));
      Vec2 dj = 0.5 * (node(i, j + 1) - node(i, j) + node(i + 1, j + 1) - node(i + 1, j));
      area += di[0] * dj[1] - di[1] * dj[0];
    }
  return area;
}

void CurvilinearGrid::dump(const std::string& path) const {
  std::ofstream out(path);
  out << "# i j rho z tag\n";
  for (int j = 0; j < nj; ++j)
    for (int i = 0; i < ni; ++i)
      out << i << " " << j << " " << num(rho[idx(i, j)]) << " " << num(z[idx(i, j)]) << " "
          << int(tag[idx(i, j)]) << "\n";
}

CurvilinearGrid transfinite_grid(const MeridianDomain& d, int ni, int nj, double stretch) {
  if (ni < 8 || nj < 8) throw ConfigError("transfinite_grid: need at least 8 nodes per side");
  if (!(stretch >= 1)) throw ConfigError("transfinite_grid: stretch factor must be >= 1");

  CurvilinearGrid g;
  g.ni = ni;
  g.nj = nj;
  g.stretch = stretch;
  g.rho.resize(size_t(ni) * nj);
  g.z.resize(size_t(ni) * nj);
  g.tag.assign(size_t(ni) * nj, EdgeTag::none);

  // Geometric node distribution in eta: spacing ratio q, largest/smallest = stretch.
  std::vector<double> w(nj);
  if (stretch == 1) {
    for (int j = 0; j < nj; ++j) w[j] = double(j) / (nj - 1);
  } else {
    double q = std::pow(stretch, 1.0 / (nj - 2));
    double qj = 1, sum = 0;
    std::vector<double> acc(nj, 0);
    for (int j = 1; j < nj; ++j) {
      sum += qj;
      acc[j] = sum;
      qj *= q;
    }
    for (int j = 0; j < nj; ++j) w[j] = acc[j] / sum;
  }

  for (int j = 0; j < nj; ++j) {
    double eta = w[j];
    for (int i = 0; i < ni; ++i) {
      double xi = double(i) / (ni - 1);
      Vec2 p = (1 - eta) * d.inner.at(xi) + eta * d.outer.at(xi) + (1 - xi) * d.axis.at(eta) +
               xi * d.support.at(eta) -
               ((1 - xi) * (1 - eta) * d.P00 + xi * (1 - eta) * d.P10 +
                (1 - xi) * eta * d.P01 + xi * eta * d.P11);
      if (i == 0) p[0] = 0;  // axis column is exact
      g.rho[g.idx(i, j)] = p[0];
      g.z[g.idx(i, j)] = p[1];
    }
  }

  for (int j = 0; j < nj; ++j) {
    g.tag[g.idx(0, j)] = EdgeTag::axis;
    g.tag[g.idx(ni - 1, j)] = EdgeTag::support;
  }
  for (int i = 0; i < ni; ++i) {
    g.tag[g.idx(i, 0)] = EdgeTag::inner;  // Dirichlet wins at corners
    g.tag[g.idx(i, nj - 1)] = EdgeTag::outer;
  }

  for (int j = 0; j + 1 < nj; ++j)
    for (int i = 0; i + 1 < ni; ++i) {
      Vec2 di = 0.5 * (g.node(i + 1, j) - g.node(i, j) + g.node(i + 1, j + 1) - g.node(i, j + 1));
      Vec2 dj = 0.5 * (g.node(i, j + 1) - g.node(i, j) + g.node(i + 1, j + 1) - g.node(i + 1, j));
      double det = di[0] * dj[1] - di[1] * dj[0];
      if (!(det > 0))
        throw ConfigError("transfinite_grid: folded cell at (" + std::to_string(i) + "," +
                          std::to_string(j) + "), det J = " + num(det));
    }
  return g;
}

}  // namespace fbimcf
