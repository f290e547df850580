#include "fbimcf/mass.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace fbimcf {

namespace {

void finish_estimate(MassEstimate& m) {
  const size_t n = m.radii.size();
  if (n == 0) throw ConfigError("mass estimate: no radii given");
  if (n == 1) {
    m.value = m.partial[0];
    m.converged = false;
    return;
  }
  // Two-term Richardson through the two largest radii; the full-fit rms is
  // the convergence diagnostic.
  double r1 = m.radii[n - 2], r2 = m.radii[n - 1];
  double p1 = m.partial[n - 2], p2 = m.partial[n - 1];
  m.value = (r2 * p2 - r1 * p1) / (r2 - r1);
  TailFit fit = fit_inverse_tail(m.radii, m.partial);
  m.fit_residual = fit.rms;
  m.converged = fit.rms <= 0.05 * (std::abs(m.value) + 0.02);
}

}  // namespace

MassEstimate adm_mass(const AmbientMetric& metric, const std::vector<double>& radii,
                      int n_theta, int n_phi) {
  if (radii.empty()) throw ConfigError("adm_mass: no radii given");
  for (size_t k = 1; k < radii.size(); ++k)
    if (!(radii[k] > radii[k - 1])) throw ConfigError("adm_mass: radii must be increasing");

  MassEstimate m;
  m.radii = radii;
  for (double r : radii) {
    // Hemisphere flux, trapezoid in the polar angle and periodic trapezoid
    // in the azimuth.
    double hemi = 0;
    const double dth = 0.5 * kPi / n_theta;
    const double dph = 2 * kPi / n_phi;
    for (int it = 0; it <= n_theta; ++it) {
      double th = it * dth;
      double wt = (it == 0 || it == n_theta) ? 0.5 : 1.0;
      double sth = std::sin(th), cth = std::cos(th);
      double ring = 0;
      for (int ip = 0; ip < n_phi; ++ip) {
        double ph = ip * dph;
        Vec3 nrm(sth * std::cos(ph), sth * std::sin(ph), cth);
        Vec3 x = r * nrm;
        MetricEval ev = metric.eval(x);
        double integrand = 0;
        for (int i = 0; i < 3; ++i) {
          double s = 0;
          for (int j = 0; j < 3; ++j) s += ev.dg[j](i, j) - ev.dg[i](j, j);
          integrand += s * nrm[i];
        }
        ring += integrand;
      }
      hemi += wt * ring * sth * dth * dph * r * r;
    }
    // Boundary circle term.
    double circ = 0;
    for (int ip = 0; ip < n_phi; ++ip) {
      double ph = ip * dph;
      Vec3 x(r * std::cos(ph), r * std::sin(ph), 0);
      Mat3 g = metric.components(x);
      circ += (g(0, 2) * std::cos(ph) + g(1, 2) * std::sin(ph)) * r * dph;
    }
    m.hemisphere_term.push_back(hemi / (16 * kPi));
    m.circle_term.push_back(circ / (16 * kPi));
    m.partial.push_back((hemi + circ) / (16 * kPi));
  }
  finish_estimate(m);
  return m;
}

MassEstimate exterior_mass(const SupportGeometry& support, const std::vector<double>& radii) {
  if (radii.empty()) throw ConfigError("exterior_mass: no radii given");
  MassEstimate m;
  m.radii = radii;
  for (size_t k = 0; k < radii.size(); ++k) {
    double r = radii[k];
    if (k > 0 && !(r > radii[k - 1]))
      throw ConfigError("exterior_mass: radii must be increasing");
    if (!(r > support.rho_min()))
      throw ConfigError("exterior_mass: radius " + num(r) + " below the graph inner radius");
    // (1/2pi) int_{dD_r} (x/|x|).grad psi dl = r psi'(r) for a rotationally
    // symmetric graph (the integrand is constant on the circle).
    m.partial.push_back(r * support.slope(r));
    m.hemisphere_term.push_back(0);
    m.circle_term.push_back(m.partial.back());
  }
  finish_estimate(m);
  return m;
}

// ---------------------------------------------------------------------------
// ChartMap

ChartMap::ChartMap(const SupportGeometry& support, std::vector<double> shells)
    : support_(support), shells_(std::move(shells)) {
  if (shells_.empty()) throw ConfigError("support_chart: no shells given");
  std::sort(shells_.begin(), shells_.end());
  double rmin_needed = std::max(3.0 * support_.rho_min(), 1.0);
  if (shells_.front() < rmin_needed)
    throw ConfigError("support_chart: shells too small; need r >= " + num(rmin_needed) +
                      " for a unique sphere/graph intersection");

  double lo = 0.45 * shells_.front(), hi = 2.6 * shells_.back();
  lo = std::max(lo, rmin_needed * 0.8);
  const int nk = 4000;
  tr_.resize(nk + 1);
  trho_.resize(nk + 1);
  tdrho_.resize(nk + 1);
  tzeta_.resize(nk + 1);
  tdzeta_.resize(nk + 1);
  for (int k = 0; k <= nk; ++k) {
    double r = lo * std::pow(hi / lo, double(k) / nk);
    tr_[k] = r;
    // Circle averages reduce to the profile itself for rotational symmetry.
    double rho = support_.height(r);
    double drho = support_.slope(r);
    trho_[k] = rho;
    tdrho_[k] = drho;
    // Contact angle: F(a) = r cos a + rho(r) - psi(r sin a) = 0 near pi/2.
    auto F = [&](double a) { return r * std::cos(a) + rho - support_.height(r * std::sin(a)); };
    double a_lo = 0.5 * kPi - 0.6, a_hi = 0.5 * kPi + 0.45;
    if (!(F(a_lo) > 0 && F(a_hi) < 0))
      throw ConfigError("support_chart: sphere misses the graph at r = " + num(r) +
                        " (shells too small)");
    double zt = bisect(F, a_lo, a_hi, 1e-12);
    tzeta_[k] = zt;
    double s = std::sin(zt), c = std::cos(zt);
    double psi_p = support_.slope(std::max(r * s, support_.rho_min() * (1 + 1e-12)));
    double Fz = -r * s - psi_p * r * c;
    double Fr = c + drho - psi_p * s;
    tdzeta_[k] = -Fr / Fz;
  }
}

double ChartMap::table_lookup(const std::vector<double>& v, const std::vector<double>& dv,
                              double r) const {
  if (r <= tr_.front()) return v.front() + dv.front() * (r - tr_.front());
  if (r >= tr_.back()) return v.back() + dv.back() * (r - tr_.back());
  auto it = std::upper_bound(tr_.begin(), tr_.end(), r);
  size_t k = size_t(it - tr_.begin()) - 1;
  double h = tr_[k + 1] - tr_[k], s = (r - tr_[k]) / h;
  // Cubic Hermite with the tabulated derivative.
  double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * v[k] + h10 * h * dv[k] + h01 * v[k + 1] + h11 * h * dv[k + 1];
}

double ChartMap::rho_shift(double r) const { return table_lookup(trho_, tdrho_, r); }

double ChartMap::rho_shift_deriv(double r) const {
  // Derivative knots carry psi'; interpolate them linearly through the table
  // by differentiating the Hermite value spline.
  if (r <= tr_.front() || r >= tr_.back()) return tdrho_[r <= tr_.front() ? 0 : tdrho_.size() - 1];
  auto it = std::upper_bound(tr_.begin(), tr_.end(), r);
  size_t k = size_t(it - tr_.begin()) - 1;
  double s = (r - tr_[k]) / (tr_[k + 1] - tr_[k]);
  return (1 - s) * tdrho_[k] + s * tdrho_[k + 1];
}

double ChartMap::zeta_tilde(double r) const { return table_lookup(tzeta_, tdzeta_, r); }

double ChartMap::zeta(double r) const { return zeta_tilde(r) * 2.0 / kPi; }

Vec3 ChartMap::forward(const Vec3& x) const {
  double r = x.norm();
  double theta = std::atan2(std::hypot(x[0], x[1]), x[2]);  // polar angle in [0, pi/2]
  double phi = std::atan2(x[1], x[0]);
  double a = zeta(r) * theta;
  return Vec3(r * std::sin(a) * std::cos(phi), r * std::sin(a) * std::sin(phi),
              r * std::cos(a) + rho_shift(r));
}

Vec3 ChartMap::inverse(const Vec3& y) const {
  double ry = y.norm();
  auto G = [&](double r) { return (y - rho_shift(r) * Vec3(0, 0, 1)).norm() - r; };
  double lo = std::max(0.2 * ry, tr_.front()), hi = 3.0 * ry;
  if (G(lo) <= 0) lo = 1e-3 * ry;
  double r = bisect(G, lo, hi, 1e-14 * ry);
  Vec3 d = y - rho_shift(r) * Vec3(0, 0, 1);
  double a = std::atan2(std::hypot(d[0], d[1]), d[2]);
  double theta = a / zeta(r);
  double phi = std::atan2(d[1], d[0]);
  return Vec3(r * std::sin(theta) * std::cos(phi), r * std::sin(theta) * std::sin(phi),
              r * std::cos(theta));
}

AmbientMetric ChartMap::pullback_metric() const {
  ChartMap chart = *this;  // value copy; the metric owns its chart
  return AmbientMetric::general([chart](const Vec3& x) {
    double h = 1e-5 * std::max(1.0, x.norm());
    Mat3 J;
    for (int k = 0; k < 3; ++k) {
      Vec3 e = Vec3::Zero();
      e[k] = 1.0;
      Vec3 d = (-chart.forward(x + 2 * h * e) + 8 * chart.forward(x + h * e) -
                8 * chart.forward(x - h * e) + chart.forward(x - 2 * h * e)) /
               (12 * h);
      J.col(k) = d;
    }
    return Mat3(J.transpose() * J);
  });
}

ChartMap support_chart(const SupportGeometry& support, const std::vector<double>& shells) {
  return ChartMap(support, shells);
}

void write_mass_csv(const MassEstimate& m, const std::string& path) {
  std::ofstream out(path);
  out << "radius,hemisphere_term,circle_term,partial_mass\n";
  for (size_t k = 0; k < m.radii.size(); ++k)
    out << num(m.radii[k]) << "," << num(m.hemisphere_term[k]) << "," << num(m.circle_term[k])
        << "," << num(m.partial[k]) << "\n";
  out << "# value=" << num(m.value) << " fit_residual=" << num(m.fit_residual)
      << " converged=" << (m.converged ? 1 : 0) << "\n";
}

}  // namespace fbimcf
