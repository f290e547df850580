#include "fbimcf/smoothflow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace fbimcf {

namespace {

// Nearest point of the support curve (by meridian parameter).
Vec2 project_to_support(const Vec2& p, const SupportGeometry& s) {
  if (s.kind() == SupportGeometry::Kind::plane) return Vec2(std::max(p[0], 0.0), 0.0);
  if (s.kind() == SupportGeometry::Kind::catenoid) {
    double m = s.mass();
    double z = std::max(p[1], 0.0);
    for (int it = 0; it < 60; ++it) {
      double ch = std::cosh(z / m), sh = std::sinh(z / m);
      double g1 = (m * ch - p[0]) * sh + (z - p[1]);
      double g2 = sh * sh + (m * ch - p[0]) * ch / m + 1;
      double step = g1 / std::max(g2, 1e-12);
      z -= step;
      z = std::max(z, 0.0);
      if (std::abs(step) < 1e-14 * (1 + z)) break;
    }
    return Vec2(m * std::cosh(z / m), z);
  }
  double rho = std::max(p[0], s.rho_min());
  for (int it = 0; it < 60; ++it) {
    double b = s.height(rho), b1 = s.slope(rho);
    double g1 = (rho - p[0]) + (b - p[1]) * b1;
    double g2 = 1 + b1 * b1;  // curvature term dropped
    double step = g1 / g2;
    rho -= step;
    rho = std::max(rho, s.rho_min());
    if (std::abs(step) < 1e-14 * (1 + rho)) break;
  }
  return Vec2(rho, s.height(rho));
}

Vec2 support_tangent(const Vec2& p, const SupportGeometry& s) {
  if (s.kind() == SupportGeometry::Kind::catenoid) {
    double m = s.mass();
    double t = p[1] / m;
    return Vec2(std::sinh(t), 1.0).normalized();
  }
  double b1 = s.slope(p[0]);
  return Vec2(1.0, b1).normalized();
}

// Ghost vertices: odd/even mirror across the axis at the start, reflection
// across the support tangent line at the end.
Vec2 ghost_axis(const ParamCurve& c) { return Vec2(-c.pts[1][0], c.pts[1][1]); }

Vec2 ghost_support(const ParamCurve& c, const SupportGeometry& s) {
  const Vec2& P = c.pts.back();
  Vec2 T = support_tangent(P, s);
  Vec2 q = c.pts[c.pts.size() - 2] - P;
  return P + 2.0 * q.dot(T) * T - q;
}

struct Derivs {
  Vec2 d1, d2;  // first and second parameter derivatives (unit index spacing)
};

Derivs central(const Vec2& a, const Vec2& b, const Vec2& c) {
  return {0.5 * (c - a), c - 2 * b + a};
}

}  // namespace

void curve_geometry(ParamCurve& c, const SupportGeometry& support) {
  const int n = int(c.pts.size());
  c.kappa_mer.assign(n, 0);
  c.kappa_rot.assign(n, 0);
  c.H.assign(n, 0);
  Vec2 ga = ghost_axis(c);
  Vec2 gs = ghost_support(c, support);
  for (int k = 0; k < n; ++k) {
    const Vec2& pm = k == 0 ? ga : c.pts[k - 1];
    const Vec2& pp = k == n - 1 ? gs : c.pts[k + 1];
    Derivs d = central(pm, c.pts[k], pp);
    double sp = d.d1.norm();
    if (sp < 1e-300) continue;
    double kf = (d.d1[0] * d.d2[1] - d.d1[1] * d.d2[0]) / (sp * sp * sp);
    c.kappa_mer[k] = -kf;  // second fundamental form w.r.t. outward (-z', rho')
    double n_rho = -d.d1[1] / sp;
    double rho = c.pts[k][0];
    c.kappa_rot[k] = rho > 1e-12 ? n_rho / rho : c.kappa_mer[k];
    c.H[k] = c.kappa_mer[k] + c.kappa_rot[k];
  }
}

double contact_angle(const ParamCurve& c, const SupportGeometry& support) {
  const int n = int(c.pts.size());
  Vec2 t_curve = (c.pts[n - 1] - c.pts[n - 2]).normalized();
  Vec2 t_sup = support_tangent(c.pts[n - 1], support);
  return std::acos(std::clamp(std::abs(t_curve.dot(t_sup)), 0.0, 1.0));
}

double curve_area(const ParamCurve& c) {
  double a = 0;
  for (size_t k = 1; k < c.pts.size(); ++k)
    a += 0.5 * (c.pts[k][0] + c.pts[k - 1][0]) * (c.pts[k] - c.pts[k - 1]).norm();
  return 2 * kPi * a;
}

double min_spacing(const ParamCurve& c) {
  double m = std::numeric_limits<double>::infinity();
  for (size_t k = 1; k < c.pts.size(); ++k)
    m = std::min(m, (c.pts[k] - c.pts[k - 1]).norm());
  return m;
}

namespace {

// Requires current curve_geometry data on c.
std::vector<Vec2> velocities(const ParamCurve& c, const FlowOptions& opts) {
  const int n = int(c.pts.size());
  std::vector<Vec2> v(n);
  for (int k = 0; k < n; ++k) {
    double H = c.H[k];
    double speed;
    if (opts.eps_speed > 0) {
      double hpow = std::pow(std::max(H, 0.0), 2.0 / opts.gamma);
      speed = 1.0 / std::sqrt(opts.eps_speed * opts.eps_speed + hpow);
    } else {
      speed = 1.0 / H;
    }
    Vec2 d1;
    if (k == 0)
      d1 = 0.5 * (c.pts[1] - Vec2(-c.pts[1][0], c.pts[1][1]));
    else if (k == n - 1)
      d1 = c.pts[n - 1] - c.pts[n - 2];
    else
      d1 = 0.5 * (c.pts[k + 1] - c.pts[k - 1]);
    Vec2 nrm(-d1[1], d1[0]);  // outward
    nrm.normalize();
    v[k] = speed * nrm;
  }
  return v;
}

void constrain(ParamCurve& c, const SupportGeometry& support) {
  c.pts.front()[0] = 0.0;  // axis endpoint slides vertically
  c.pts.back() = project_to_support(c.pts.back(), support);
}

// Catmull-Rom resampling to uniform arclength.
void resample(ParamCurve& c) {
  const int n = int(c.pts.size());
  std::vector<double> s(n, 0);
  for (int k = 1; k < n; ++k) s[k] = s[k - 1] + (c.pts[k] - c.pts[k - 1]).norm();
  double L = s[n - 1];
  std::vector<Vec2> out(n);
  out[0] = c.pts[0];
  out[n - 1] = c.pts[n - 1];
  int seg = 0;
  for (int k = 1; k + 1 < n; ++k) {
    double target = L * k / (n - 1);
    while (seg + 2 < n && s[seg + 1] < target) ++seg;
    double t = (target - s[seg]) / std::max(s[seg + 1] - s[seg], 1e-300);
    const Vec2& p1 = c.pts[seg];
    const Vec2& p2 = c.pts[seg + 1];
    const Vec2 p0 = seg > 0 ? c.pts[seg - 1] : 2 * p1 - p2;
    const Vec2 p3 = seg + 2 < n ? c.pts[seg + 2] : 2 * p2 - p1;
    double t2 = t * t, t3 = t2 * t;
    out[k] = 0.5 * ((2 * p1) + (-p0 + p2) * t + (2 * p0 - 5 * p1 + 4 * p2 - p3) * t2 +
                    (-p0 + 3 * p1 - 3 * p2 + p3) * t3);
  }
  c.pts = std::move(out);
}

// One internal substep (Heun) of size dt.
void substep(ParamCurve& c, double dt, const SupportGeometry& support, const FlowOptions& opts) {
  curve_geometry(c, support);
  std::vector<Vec2> v1 = velocities(c, opts);
  ParamCurve mid = c;
  for (size_t k = 0; k < c.pts.size(); ++k) mid.pts[k] += dt * v1[k];
  constrain(mid, support);
  curve_geometry(mid, support);
  for (double h : mid.H)
    if (!(h > 0) && opts.eps_speed == 0) throw SolveError("step_imcf: H <= 0 encountered");
  std::vector<Vec2> v2 = velocities(mid, opts);
  for (size_t k = 0; k < c.pts.size(); ++k) c.pts[k] += 0.5 * dt * (v1[k] + v2[k]);
  constrain(c, support);
  resample(c);
  c.time += dt;
}

double stable_dt(const ParamCurve& c, const FlowOptions& opts) {
  // Parabolic limit of the explicit scheme: diffusivity 1/H^2, local spacing.
  double dt = std::numeric_limits<double>::infinity();
  const int n = int(c.pts.size());
  for (int k = 0; k < n; ++k) {
    double h = (k == 0 ? (c.pts[1] - c.pts[0]).norm()
                       : (c.pts[k] - c.pts[k - 1]).norm());
    double H = opts.eps_speed > 0 ? std::max(std::abs(c.H[k]), opts.eps_speed) : c.H[k];
    dt = std::min(dt, 0.25 * opts.substep_safety * h * h * H * H);
  }
  return dt;
}

}  // namespace

ParamCurve step_imcf(const ParamCurve& c, double dt, const SupportGeometry& support,
                     const FlowOptions& opts) {
  if (c.pts.size() < 8) throw ConfigError("step_imcf: need at least 8 vertices");
  if (dt == 0) return c;
  ParamCurve cur = c;
  curve_geometry(cur, support);
  double minH = *std::min_element(cur.H.begin(), cur.H.end());
  if (!(minH > 0) && opts.eps_speed == 0)
    throw SolveError("step_imcf: H <= 0 on the initial curve");
  double minH_eff = opts.eps_speed > 0 ? std::max(minH, opts.eps_speed) : minH;
  if (dt > opts.cfl * minH_eff * min_spacing(cur) * (1 + 1e-12))
    throw ConfigError("step_imcf: dt violates the CFL bound cfl*minH*min_spacing");
  double remaining = dt;
  while (remaining > 0) {
    curve_geometry(cur, support);
    double ds = std::min(remaining, stable_dt(cur, opts));
    substep(cur, ds, support, opts);
    remaining -= ds;
  }
  return cur;
}

SingularityReport run_flow(ParamCurve start, const SupportGeometry& support,
                           const FlowOptions& opts, double t_end) {
  SingularityReport rep;
  rep.comparison_R = opts.comparison_R;
  ParamCurve c = std::move(start);
  curve_geometry(c, support);
  double minH0 = *std::min_element(c.H.begin(), c.H.end());
  if (!(minH0 > 0)) throw ConfigError("run_flow: initial curve is not strictly mean convex");
  double record_dt = opts.record_dt > 0 ? opts.record_dt : t_end / 4000;
  double last_record = -1e300;

  auto record = [&](const ParamCurve& cc) {
    rep.times.push_back(cc.time);
    rep.sup_H.push_back(*std::max_element(cc.H.begin(), cc.H.end()));
    rep.min_H.push_back(*std::min_element(cc.H.begin(), cc.H.end()));
    rep.area.push_back(curve_area(cc));
    last_record = cc.time;
  };
  record(c);

  while (true) {
    double minH = *std::min_element(c.H.begin(), c.H.end());
    double maxK = 0;
    for (size_t k = 0; k < c.H.size(); ++k)
      maxK = std::max(maxK, std::max(std::abs(c.kappa_mer[k]), std::abs(c.kappa_rot[k])));
    for (const Vec2& p : c.pts)
      rep.max_extent = std::max(rep.max_extent, (p - opts.comparison_center).norm());
    if (rep.max_extent >= opts.comparison_R) rep.reached_comparison = true;

    if (minH <= opts.h_floor_frac * minH0 && opts.eps_speed == 0) {
      rep.reason = SingularityReport::Stop::h_floor;
      break;
    }
    double spacing = (c.pts[1] - c.pts[0]).norm();
    if (maxK * spacing > opts.resolve_limit) {
      rep.reason = SingularityReport::Stop::curvature_blowup;
      break;
    }
    if (curve_area(c) >= opts.target_area) {
      rep.reason = SingularityReport::Stop::target_area;
      break;
    }
    if (c.time >= t_end) {
      rep.reason = SingularityReport::Stop::target_time;
      break;
    }
    double ds = std::min(stable_dt(c, opts), t_end - c.time);
    if (ds < opts.dt_floor) {
      rep.reason = SingularityReport::Stop::dt_underflow;
      break;
    }
    try {
      substep(c, ds, support, opts);
    } catch (const SolveError&) {
      rep.reason = SingularityReport::Stop::h_floor;
      break;
    }
    curve_geometry(c, support);
    ++rep.steps;
    if (rep.steps >= opts.max_steps) {
      rep.reason = SingularityReport::Stop::step_budget;
      break;
    }
    if (c.time - last_record >= record_dt) record(c);
  }
  if (rep.times.empty() || rep.times.back() != c.time) record(c);
  rep.t_star = c.time;
  rep.final = std::move(c);
  return rep;
}

ParamCurve hemisphere_curve(double radius, int n) {
  ParamCurve c;
  for (int k = 0; k < n; ++k) {
    double a = 0.5 * kPi * k / (n - 1);
    c.pts.emplace_back(radius * std::sin(a), radius * std::cos(a));
  }
  return c;
}

ParamCurve cap_on_catenoid(double m, double z0, int n) {
  if (!(z0 > 0)) throw ConfigError("cap_on_catenoid: offset must be positive");
  double rho0 = m * std::cosh(z0 / m);
  double centre = z0 - rho0 / std::sinh(z0 / m);
  double R = std::hypot(rho0, z0 - centre);
  double a0 = std::atan2(rho0, z0 - centre);
  ParamCurve c;
  for (int k = 0; k < n; ++k) {
    double a = a0 * k / (n - 1);
    c.pts.emplace_back(R * std::sin(a), centre + R * std::cos(a));
  }
  return c;
}

ParamCurve cap_on_plane(double H0, int n) { return hemisphere_curve(2.0 / H0, n); }

SingularityReport run_catenoid_singularity(double m, double offset, int n_vertices,
                                           FlowOptions opts, double comparison_factor,
                                           double t_end) {
  SupportGeometry cat = SupportGeometry::catenoid(m);
  ParamCurve c = cap_on_catenoid(m, offset, n_vertices);
  curve_geometry(c, cat);
  double supH0 = *std::max_element(c.H.begin(), c.H.end());
  double H0 = comparison_factor * supH0;
  if (!(supH0 < H0))
    throw ConfigError("run_catenoid_singularity: initial data violates sup H < H0");
  opts.comparison_center = Vec2(0, 0);
  opts.comparison_R = 2.0 / H0;
  SingularityReport rep = run_flow(std::move(c), cat, opts, t_end);
  rep.comparison_H0 = H0;
  return rep;
}

void write_history_csv(const SingularityReport& rep, const std::string& path) {
  std::ofstream out(path);
  out << "t,sup_H,min_H,area\n";
  for (size_t k = 0; k < rep.times.size(); ++k)
    out << num(rep.times[k]) << "," << num(rep.sup_H[k]) << "," << num(rep.min_H[k]) << ","
        << num(rep.area[k]) << "\n";
}

void write_curve(const ParamCurve& c, const std::string& path) {
  std::ofstream out(path);
  out << "# rho z\n";
  for (const Vec2& p : c.pts) out << num(p[0]) << " " << num(p[1]) << "\n";
}

}  // namespace fbimcf
