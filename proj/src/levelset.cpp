#include "fbimcf/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>

namespace fbimcf {

double LevelCurve::length_euclid() const {
  double l = 0;
  for (size_t k = 1; k < pts.size(); ++k) l += (pts[k] - pts[k - 1]).norm();
  return l;
}

LeafFields build_leaf_fields(const MbvpSolver& solver, const Field& u) {
  const CurvilinearGrid& g = solver.grid();
  const AmbientMetric& metric = solver.metric();
  const int N = int(u.size());
  LeafFields lf;
  lf.grad_norm_g = solver.grad_norm_g(u);

  Field du_rho, du_z;
  solver.nodal_gradient(u, du_rho, du_z);
  Field n_rho(N, 0), n_z(N, 0);
  for (int k = 0; k < N; ++k) {
    double m = std::hypot(du_rho[k], du_z[k]);
    if (m > 1e-14) {
      n_rho[k] = du_rho[k] / m;
      n_z[k] = du_z[k] / m;
    }
  }
  // n_rho is odd across the axis, n_z even.
  Field dnr_rho, dnr_z, dnz_rho, dnz_z;
  solver.nodal_field_gradient(n_rho, -1, dnr_rho, dnr_z);
  solver.nodal_field_gradient(n_z, +1, dnz_rho, dnz_z);

  lf.kappa_mer_g.assign(N, 0);
  lf.kappa_rot_g.assign(N, 0);
  lf.h_euclid.assign(N, 0);
  const bool conf = metric.conformal_like();
  for (int j = 0; j < g.nj; ++j)
    for (int i = 0; i < g.ni; ++i) {
      int k = g.idx(i, j);
      double km_e = dnr_rho[k] + dnz_z[k];
      double kr_e = (i == 0) ? dnr_rho[k] : n_rho[k] / g.rho[k];
      lf.h_euclid[k] = km_e + kr_e;
      if (conf) {
        Vec3 x(g.rho[k], 0, g.z[k]);
        double phi = metric.conformal_factor(x);
        Vec3 gp = metric.conformal_factor_grad(x);
        double dn_logphi = (n_rho[k] * gp[0] + n_z[k] * gp[2]) / phi;
        double p2 = phi * phi;
        lf.kappa_mer_g[k] = (km_e + 2 * dn_logphi) / p2;
        lf.kappa_rot_g[k] = (kr_e + 2 * dn_logphi) / p2;
      } else {
        lf.kappa_mer_g[k] = km_e;
        lf.kappa_rot_g[k] = kr_e;
      }
    }
  return lf;
}

namespace {

struct Extractor {
  const CurvilinearGrid& g;
  const Field& u;
  double t;

  // edge id: 2*(j*ni+i) horizontal (i,j)-(i+1,j); +1 vertical (i,j)-(i,j+1)
  int eh(int i, int j) const { return 2 * (j * g.ni + i); }
  int ev(int i, int j) const { return 2 * (j * g.ni + i) + 1; }
  bool inside(int i, int j) const { return u[g.idx(i, j)] < t; }

  struct Vertex {
    Vec2 p;
    int ia, ja, ib, jb;  // edge endpoints
    double f;            // fraction from a to b
  };
  std::unordered_map<int, int> edge_vertex;
  std::vector<Vertex> verts;
  std::vector<std::pair<int, int>> segs;  // vertex index pairs

  int vertex_on(int ia, int ja, int ib, int jb, int eid) {
    auto it = edge_vertex.find(eid);
    if (it != edge_vertex.end()) return it->second;
    double ua = u[g.idx(ia, ja)], ub = u[g.idx(ib, jb)];
    double f = (t - ua) / (ub - ua);
    f = std::clamp(f, 0.0, 1.0);
    Vertex v;
    v.p = (1 - f) * g.node(ia, ja) + f * g.node(ib, jb);
    v.ia = ia;
    v.ja = ja;
    v.ib = ib;
    v.jb = jb;
    v.f = f;
    int id = int(verts.size());
    verts.push_back(v);
    edge_vertex[eid] = id;
    return id;
  }

  void run() {
    for (int j = 0; j + 1 < g.nj; ++j)
      for (int i = 0; i + 1 < g.ni; ++i) {
        bool s00 = inside(i, j), s10 = inside(i + 1, j);
        bool s01 = inside(i, j + 1), s11 = inside(i + 1, j + 1);
        int crossings = 0;
        int vb = -1, vt = -1, vl = -1, vr = -1;
        if (s00 != s10) {
          vb = vertex_on(i, j, i + 1, j, eh(i, j));
          ++crossings;
        }
        if (s01 != s11) {
          vt = vertex_on(i, j + 1, i + 1, j + 1, eh(i, j + 1));
          ++crossings;
        }
        if (s00 != s01) {
          vl = vertex_on(i, j, i, j + 1, ev(i, j));
          ++crossings;
        }
        if (s10 != s11) {
          vr = vertex_on(i + 1, j, i + 1, j + 1, ev(i + 1, j));
          ++crossings;
        }
        if (crossings == 2) {
          int a = -1, b = -1;
          for (int v : {vb, vt, vl, vr})
            if (v >= 0) (a < 0 ? a : b) = v;
          segs.emplace_back(a, b);
        } else if (crossings == 4) {
          double centre = 0.25 * (u[g.idx(i, j)] + u[g.idx(i + 1, j)] + u[g.idx(i, j + 1)] +
                                  u[g.idx(i + 1, j + 1)]);
          if ((centre < t) == s00) {
            segs.emplace_back(vb, vr);
            segs.emplace_back(vt, vl);
          } else {
            segs.emplace_back(vb, vl);
            segs.emplace_back(vt, vr);
          }
        }
      }
  }

  // boundary class of a vertex: 0 none, 1 inner, 2 outer, 3 support, 4 axis
  int boundary_class(const Vertex& v) const {
    if (v.ja == v.jb) {  // horizontal edge
      if (v.ja == 0) return 1;
      if (v.ja == g.nj - 1) return 2;
    } else {  // vertical edge
      if (v.ia == 0) return 4;
      if (v.ia == g.ni - 1) return 3;
    }
    return 0;
  }
};

}  // namespace

LevelCurve extract_level(const MbvpSolver& solver, const Field& u, const LeafFields& fields,
                         double t, LevelSide side, double delta_jump) {
  const CurvilinearGrid& g = solver.grid();
  double te = t + (side == LevelSide::upper ? delta_jump : 0.0);

  double umin = 1e300, umax = -1e300;
  for (int j = 1; j + 1 < g.nj; ++j)
    for (int i = 0; i < g.ni; ++i) {
      umin = std::min(umin, u[g.idx(i, j)]);
      umax = std::max(umax, u[g.idx(i, j)]);
    }
  if (!(te > umin && te < umax))
    throw ConfigError("extract_level: level " + num(te) + " outside the interior range [" +
                      num(umin) + ", " + num(umax) + "]");

  Extractor ex{g, u, te};
  ex.run();
  if (ex.segs.empty()) throw std::runtime_error("extract_level: empty level set");

  // Chain segments into components.
  int nv = int(ex.verts.size());
  std::vector<std::array<int, 2>> adj(nv, {-1, -1});
  auto link = [&](int a, int b) {
    if (adj[a][0] < 0)
      adj[a][0] = b;
    else
      adj[a][1] = b;
  };
  for (auto& s : ex.segs) {
    link(s.first, s.second);
    link(s.second, s.first);
  }
  std::vector<char> used(nv, 0);
  struct Comp {
    std::vector<int> path;
    bool closed = false;
  };
  std::vector<Comp> comps;
  auto walk = [&](int start) {
    Comp c;
    int prev = -1, cur = start;
    while (cur >= 0 && !used[cur]) {
      used[cur] = 1;
      c.path.push_back(cur);
      int nxt = (adj[cur][0] != prev && adj[cur][0] >= 0) ? adj[cur][0] : adj[cur][1];
      prev = cur;
      cur = nxt;
      if (cur == start) {
        c.closed = true;
        break;
      }
    }
    comps.push_back(std::move(c));
  };
  for (int v = 0; v < nv; ++v)
    if (!used[v] && (adj[v][1] < 0)) walk(v);  // open components first
  for (int v = 0; v < nv; ++v)
    if (!used[v]) walk(v);

  // Pick the free-boundary (support<->axis) component, else the longest.
  int main_idx = -1;
  size_t best = 0;
  for (int c = 0; c < int(comps.size()); ++c) {
    const Comp& cc = comps[c];
    if (cc.closed || cc.path.size() < 2) continue;
    int b0 = ex.boundary_class(ex.verts[cc.path.front()]);
    int b1 = ex.boundary_class(ex.verts[cc.path.back()]);
    if ((b0 == 3 && b1 == 4) || (b0 == 4 && b1 == 3)) {
      main_idx = c;
      break;
    }
  }
  if (main_idx < 0) {
    for (int c = 0; c < int(comps.size()); ++c)
      if (comps[c].path.size() > best) {
        best = comps[c].path.size();
        main_idx = c;
      }
  }
  if (main_idx < 0) throw std::runtime_error("extract_level: no usable component");

  LevelCurve lc;
  lc.t = t;
  const Comp& mc = comps[main_idx];
  lc.closed = mc.closed;
  std::vector<int> path = mc.path;
  if (!mc.closed) {
    int b0 = ex.boundary_class(ex.verts[path.front()]);
    int b1 = ex.boundary_class(ex.verts[path.back()]);
    if (b1 == 3 || (b0 == 4 && b1 != 4)) std::reverse(path.begin(), path.end());
    b0 = ex.boundary_class(ex.verts[path.front()]);
    b1 = ex.boundary_class(ex.verts[path.back()]);
    lc.on_support = b0 == 3;
    lc.on_axis = b1 == 4;
  }

  auto lerp_field = [&](const Field& f, const Extractor::Vertex& v) {
    return (1 - v.f) * f[g.idx(v.ia, v.ja)] + v.f * f[g.idx(v.ib, v.jb)];
  };
  for (int vid : path) {
    const auto& v = ex.verts[vid];
    lc.pts.push_back(v.p);
    lc.H.push_back(lerp_field(fields.grad_norm_g, v));
    lc.kappa_mer.push_back(lerp_field(fields.kappa_mer_g, v));
    lc.kappa_rot.push_back(lerp_field(fields.kappa_rot_g, v));
    lc.H_euclid.push_back(lerp_field(fields.h_euclid, v));
  }

  // Euler characteristic from component topology.
  int chi = 0;
  for (int c = 0; c < int(comps.size()); ++c) {
    const Comp& cc = comps[c];
    if (cc.path.size() < 2) continue;
    if (cc.closed) {
      if (c != main_idx) ++lc.n_extra_closed;
      continue;  // torus of revolution: chi 0
    }
    int b0 = ex.boundary_class(ex.verts[cc.path.front()]);
    int b1 = ex.boundary_class(ex.verts[cc.path.back()]);
    int contrib = 0;
    if ((b0 == 3 && b1 == 4) || (b0 == 4 && b1 == 3)) contrib = 1;  // disc
    if (b0 == 4 && b1 == 4) contrib = 2;                            // sphere
    chi += contrib;
    if (c != main_idx) ++lc.n_extra_open;
  }
  lc.chi = chi;
  return lc;
}

SurfaceDiagnostics surface_quantities(const LevelCurve& curve, const AmbientMetric& metric,
                                      const SupportGeometry* support, const Vec2& ecc_center) {
  if (curve.pts.size() < 3)
    throw ConfigError("surface_quantities: curve has fewer than 3 vertices");
  const int n = int(curve.pts.size());
  SurfaceDiagnostics d;
  d.t = curve.t;
  d.euler_char = curve.chi;

  std::vector<double> rho_g(n);
  for (int k = 0; k < n; ++k) {
    MeridianEval me = metric.meridian(curve.pts[k][0], curve.pts[k][1]);
    rho_g[k] = std::sqrt(std::max(0.0, me.q));
  }
  double area = 0, w2 = 0, we = 0;
  for (int k = 0; k + 1 < n; ++k) {
    Vec2 dp = curve.pts[k + 1] - curve.pts[k];
    Vec2 mid = 0.5 * (curve.pts[k + 1] + curve.pts[k]);
    MeridianEval me = metric.meridian(mid[0], mid[1]);
    double ds_g = std::sqrt(std::max(0.0, dp.dot(me.a * dp)));
    double ds_e = dp.norm();
    area += 0.5 * (rho_g[k] + rho_g[k + 1]) * ds_g;
    w2 += 0.5 * (rho_g[k] * curve.H[k] * curve.H[k] +
                 rho_g[k + 1] * curve.H[k + 1] * curve.H[k + 1]) *
          ds_g;
    we += 0.5 *
          (curve.pts[k][0] * curve.H_euclid[k] * curve.H_euclid[k] +
           curve.pts[k + 1][0] * curve.H_euclid[k + 1] * curve.H_euclid[k + 1]) *
          ds_e;
  }
  d.area = 2 * kPi * area;
  d.willmore = 2 * kPi * w2;
  d.willmore_euclid = 2 * kPi * we;
  d.boundary_length = curve.on_support ? 2 * kPi * rho_g.front() : 0.0;
  d.hawking_mass = std::sqrt(d.area) / (2 * std::pow(8 * kPi, 1.5)) * (8 * kPi - d.willmore);

  double rmax = 0, rmin = 1e300, rsum = 0;
  for (int k = 0; k < n; ++k) {
    double r = (curve.pts[k] - ecc_center).norm();
    rmax = std::max(rmax, r);
    rmin = std::min(rmin, r);
    rsum += r;
  }
  d.eccentricity = rmin > 0 ? rmax / rmin : 1e300;
  d.mean_radius = rsum / n;
  d.shape_deviation = 0;
  for (int k = 0; k < n; ++k) {
    double r = (curve.pts[k] - ecc_center).norm();
    d.shape_deviation = std::max(d.shape_deviation, std::abs(r / d.mean_radius - 1));
  }

  if (support) {
    bool valid = true;
    d.geroch_integrand = geroch_integrand(curve, metric, *support, &valid);
    d.geroch_valid = valid;
  }
  return d;
}

double geroch_integrand(const LevelCurve& curve, const AmbientMetric& metric,
                        const SupportGeometry& support, bool* valid) {
  const int n = int(curve.pts.size());
  bool ok = true;
  for (int k = 0; k < n; ++k)
    if (!(curve.H[k] > 0)) ok = false;
  if (valid) *valid = ok;

  // g-arclength and rho_g along the curve.
  std::vector<double> s(n, 0), rho_g(n);
  for (int k = 0; k < n; ++k) {
    MeridianEval me = metric.meridian(curve.pts[k][0], curve.pts[k][1]);
    rho_g[k] = std::sqrt(std::max(0.0, me.q));
    if (k > 0) {
      Vec2 dp = curve.pts[k] - curve.pts[k - 1];
      Vec2 mid = 0.5 * (curve.pts[k] + curve.pts[k - 1]);
      MeridianEval mm = metric.meridian(mid[0], mid[1]);
      s[k] = s[k - 1] + std::sqrt(std::max(0.0, dp.dot(mm.a * dp)));
    }
  }

  std::vector<double> integrand(n, 0.0);
  for (int k = 0; k < n; ++k) {
    double aring2 = 0.5 * (curve.kappa_mer[k] - curve.kappa_rot[k]) *
                    (curve.kappa_mer[k] - curve.kappa_rot[k]);
    double sc = metric.scalar_curvature(Vec3(curve.pts[k][0], 0, curve.pts[k][1]));
    double gradH2 = 0;
    if (ok && k > 0 && k + 1 < n) {  // corner values excluded from grad H
      double dH = (curve.H[k + 1] - curve.H[k - 1]) / (s[k + 1] - s[k - 1]);
      gradH2 = 2 * dH * dH / (curve.H[k] * curve.H[k]);
    }
    integrand[k] = gradH2 + 0.5 * aring2 + sc;
  }
  double bulk = 0;
  for (int k = 0; k + 1 < n; ++k)
    bulk += 0.5 * (integrand[k] * rho_g[k] + integrand[k + 1] * rho_g[k + 1]) * (s[k + 1] - s[k]);
  bulk *= 2 * kPi;

  double boundary = 0;
  if (curve.on_support) {
    Vec2 p = curve.pts.front();
    double rho = std::max(p[0], support.rho_min());
    Vec3 x(rho, 0, support.height(rho));
    BoundaryShape bs = boundary_shape(metric, support, x);
    boundary = bs.H * 2 * kPi * rho_g.front();
  }
  return 4 * kPi * (1 - curve.chi) + bulk + boundary;
}

LevelCurve initial_surface_leaf(const Curve2& meridian, const AmbientMetric& metric,
                                const SupportGeometry& support, int n_samples) {
  LevelCurve lc;
  lc.t = 0;
  const int n = n_samples;
  // Curve2 runs axis -> support; the leaf is ordered support -> axis.
  for (int k = 0; k <= n; ++k) lc.pts.push_back(meridian.at(1.0 - double(k) / n));
  lc.on_support = support.contains(lc.pts.front(), 1e-6);
  lc.on_axis = std::abs(lc.pts.back()[0]) < 1e-9 * (1 + lc.pts.back().norm());
  lc.chi = (lc.on_support && lc.on_axis) ? 1 : 2;

  const int m = int(lc.pts.size());
  lc.H.assign(m, 0);
  lc.kappa_mer.assign(m, 0);
  lc.kappa_rot.assign(m, 0);
  lc.H_euclid.assign(m, 0);
  std::vector<double> km_e(m, 0), kr_e(m, 0);
  for (int k = 0; k < m; ++k) {
    int a = std::clamp(k, 1, m - 2);
    Vec2 p0 = lc.pts[a - 1], p1 = lc.pts[a], p2 = lc.pts[a + 1];
    Vec2 u = p1 - p0, v = p2 - p1, w = p2 - p0;
    double cross = u[0] * v[1] - u[1] * v[0];
    double denom = u.norm() * v.norm() * w.norm();
    km_e[k] = denom > 0 ? 2 * cross / denom : 0.0;
    // outward normal (z', -rho') for support->axis ordering
    Vec2 t = (k == 0 ? (lc.pts[1] - lc.pts[0]) : k == m - 1
              ? (lc.pts[m - 1] - lc.pts[m - 2])
              : (lc.pts[k + 1] - lc.pts[k - 1]));
    t.normalize();
    double n_rho = t[1];
    kr_e[k] = lc.pts[k][0] > 1e-12 ? n_rho / lc.pts[k][0] : km_e[k];
  }
  const bool conf = metric.conformal_like();
  for (int k = 0; k < m; ++k) {
    double km = km_e[k], kr = kr_e[k];
    if (conf) {
      Vec2 t = (k == 0 ? (lc.pts[1] - lc.pts[0]) : k == m - 1
                ? (lc.pts[m - 1] - lc.pts[m - 2])
                : (lc.pts[k + 1] - lc.pts[k - 1]));
      t.normalize();
      Vec2 nrm(t[1], -t[0]);
      Vec3 x(lc.pts[k][0], 0, lc.pts[k][1]);
      double phi = metric.conformal_factor(x);
      Vec3 gp = metric.conformal_factor_grad(x);
      double dn = (nrm[0] * gp[0] + nrm[1] * gp[2]) / phi;
      km = (km_e[k] + 2 * dn) / (phi * phi);
      kr = (kr_e[k] + 2 * dn) / (phi * phi);
    }
    lc.kappa_mer[k] = km;
    lc.kappa_rot[k] = kr;
    lc.H[k] = std::max(0.0, km + kr);
    lc.H_euclid[k] = km_e[k] + kr_e[k];
  }
  return lc;
}

FlowTable flow_table(const MbvpSolver& solver, const Field& u,
                     const std::vector<double>& t_schedule, const SupportGeometry& support,
                     const FlowTableOptions& opts, const Curve2* initial_meridian) {
  FlowTable table;
  LeafFields fields = build_leaf_fields(solver, u);
  const double h = solver.h_max();
  const double delta_jump = 2 * h;

  if (opts.include_initial && initial_meridian) {
    LevelCurve lc =
        initial_surface_leaf(*initial_meridian, solver.metric(), support, opts.initial_samples);
    SurfaceDiagnostics d = surface_quantities(lc, solver.metric(), &support, opts.ecc_center);
    table.rows.push_back(d);
    table.curves.push_back(std::move(lc));
  }

  double umin = 0;  // inner boundary value
  double tau = 0;
  for (int i = 0; i < solver.grid().ni; ++i)
    tau = std::max(tau, u[solver.grid().idx(i, solver.grid().nj - 1)]);

  for (double t : t_schedule) {
    if (t < umin + opts.margin_low || t > tau - opts.margin_high) continue;
    try {
      LevelCurve lc = extract_level(solver, u, fields, t);
      if (!lc.free_boundary_ok() && !lc.closed)
        table.warnings.push_back("t=" + num(t) + ": leaf does not span support to axis");
      SurfaceDiagnostics d = surface_quantities(lc, solver.metric(), &support, opts.ecc_center);
      if (opts.detect_jumps && t + delta_jump < tau - opts.margin_high) {
        LevelCurve up = extract_level(solver, u, fields, t, LevelSide::upper, delta_jump);
        SurfaceDiagnostics du_ = surface_quantities(up, solver.metric(), nullptr);
        double natural = std::exp(delta_jump);
        if (du_.area > d.area * natural * (1 + 4 * h)) {
          d.candidate_jump = true;
          table.warnings.push_back("t=" + num(t) + ": candidate jump, area ratio " +
                                   num(du_.area / d.area));
        }
      }
      table.rows.push_back(d);
      table.curves.push_back(std::move(lc));
    } catch (const std::exception& e) {
      table.warnings.push_back("t=" + num(t) + ": " + e.what());
    }
  }
  return table;
}

void write_flow_csv(const FlowTable& table, const std::string& path) {
  std::ofstream out(path);
  out << "t,area,boundary_length,willmore,hawking_mass,euler_char,eccentricity,geroch_integrand\n";
  for (const auto& d : table.rows)
    out << num(d.t) << "," << num(d.area) << "," << num(d.boundary_length) << ","
        << num(d.willmore) << "," << num(d.hawking_mass) << "," << d.euler_char << ","
        << num(d.eccentricity) << "," << num(d.geroch_integrand) << "\n";
}

void write_contour(const LevelCurve& curve, const std::string& path) {
  std::ofstream out(path);
  out << "# t rho z H\n";
  for (size_t k = 0; k < curve.pts.size(); ++k)
    out << num(curve.t) << " " << num(curve.pts[k][0]) << " " << num(curve.pts[k][1]) << " "
        << num(curve.H[k]) << "\n";
}

}  // namespace fbimcf
