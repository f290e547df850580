// Parametric rotationally symmetric smooth free-boundary inverse mean
// curvature flow: meridian polylines moving with outward normal speed 1/H
// (optionally the regularized speed 1/sqrt(eps^2 + H^(2/gamma))), with one
// endpoint sliding on the axis and one on the support curve at orthogonal
// contact.  Explicit RK2 stages with internal parabolic substepping and
// arclength reparametrization; the ambient metric is Euclidean.

#pragma once

#include <limits>
#include <vector>

#include "fbimcf/geometry.hpp"

namespace fbimcf {

struct ParamCurve {
  std::vector<Vec2> pts;  // pts[0] on the axis, pts[n-1] on the support
  double time = 0;
  // filled by curve_geometry
  std::vector<double> kappa_mer, kappa_rot, H;
};

// Curvatures w.r.t. the outward normal (-z', rho')/|.|; support-endpoint
// derivatives close with a ghost reflected across the support tangent.
void curve_geometry(ParamCurve& c, const SupportGeometry& support);

// Angle between the curve tangent and the support tangent at the contact.
double contact_angle(const ParamCurve& c, const SupportGeometry& support);

double curve_area(const ParamCurve& c);        // 2 pi int rho ds
double min_spacing(const ParamCurve& c);

struct FlowOptions {
  double cfl = 0.25;
  double eps_speed = 0;  // 0: exact 1/H; else 1/sqrt(eps^2 + H^(2/gamma))
  double gamma = 1;
  double substep_safety = 0.6;
  double h_floor_frac = 1e-4;  // stop when min H < frac * initial min H
  double dt_floor = 1e-10;
  double resolve_limit = 2.0;  // stop when max |kappa| * spacing exceeds this
  double target_area = std::numeric_limits<double>::infinity();
  long max_steps = 20000000;
  double record_dt = 0;        // 0: auto
  Vec2 comparison_center{0, 0};
  double comparison_R = std::numeric_limits<double>::infinity();
};

// One flow step of external size dt (internally substepped); dt must satisfy
// dt <= cfl * (min H) * (min spacing).  dt = 0 returns the curve unchanged.
ParamCurve step_imcf(const ParamCurve& c, double dt, const SupportGeometry& support,
                     const FlowOptions& opts);

struct SingularityReport {
  enum class Stop {
    none,
    h_floor,
    curvature_blowup,
    dt_underflow,
    target_area,
    target_time,
    step_budget
  };
  Stop reason = Stop::none;
  double t_star = 0;
  std::vector<double> times, sup_H, min_H, area;
  double comparison_H0 = 0;
  double comparison_R = 0;
  bool reached_comparison = false;
  double max_extent = 0;  // max |x - comparison centre| seen
  ParamCurve final;
  long steps = 0;
};

SingularityReport run_flow(ParamCurve start, const SupportGeometry& support,
                           const FlowOptions& opts, double t_end);

// Initial surfaces.
ParamCurve hemisphere_curve(double radius, int n);          // orthogonal on the flat plane
ParamCurve cap_on_catenoid(double m, double z0, int n);     // convex cap, contact height z0
ParamCurve cap_on_plane(double H0, int n);                  // hemisphere with mean curvature H0

// Raised convex disc over the catenoid neck; comparison sphere with
// H0 = comparison_factor * sup H(0).  Rejects initial data with sup H >= H0.
SingularityReport run_catenoid_singularity(double m, double offset, int n_vertices,
                                           FlowOptions opts, double comparison_factor = 1.2,
                                           double t_end = 20.0);

void write_history_csv(const SingularityReport& rep, const std::string& path);
void write_curve(const ParamCurve& c, const std::string& path);

}  // namespace fbimcf
