// Level-curve extraction from the discrete solution and the per-leaf
// diagnostics: area, boundary length, Willmore energies, modified Hawking
// mass, Euler characteristic, eccentricity and the Geroch integrand.
//
// Leaves Sigma_t = d{u < t} are meridian contours obtained by marching
// squares with linear interpolation; each vertex carries H = |grad u|_g and
// the principal curvatures of the axisymmetric leaf computed from the
// level-set normal field of u (conformally corrected to g).

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fbimcf/solver.hpp"

namespace fbimcf {

struct LevelCurve {
  double t = 0;
  std::vector<Vec2> pts;  // ordered support endpoint -> axis endpoint
  std::vector<double> H;          // |grad u|_g interpolated
  std::vector<double> kappa_mer;  // principal curvatures w.r.t. g
  std::vector<double> kappa_rot;
  std::vector<double> H_euclid;   // Euclidean mean curvature of the leaf

  bool on_support = false;  // first vertex lies on the SUPPORT edge
  bool on_axis = false;     // last vertex lies on the AXIS edge
  bool closed = false;      // main component is a closed loop
  int n_extra_closed = 0;   // additional closed components
  int n_extra_open = 0;     // additional open components
  int chi = 1;              // of the full level set (disc 1, sphere 2, annulus/torus 0)
  bool free_boundary_ok() const { return on_support && on_axis; }

  int euler_characteristic() const { return chi; }
  double length_euclid() const;
};

enum class LevelSide { lower, upper };

// Nodal companion fields of a solution, built once per field.
struct LeafFields {
  Field grad_norm_g;  // H = |grad u|_g
  Field kappa_mer_g, kappa_rot_g;
  Field h_euclid;
};

LeafFields build_leaf_fields(const MbvpSolver& solver, const Field& u);

// Marching-squares extraction of {u = t} (side upper evaluates at t + delta_jump).
LevelCurve extract_level(const MbvpSolver& solver, const Field& u, const LeafFields& fields,
                         double t, LevelSide side = LevelSide::lower, double delta_jump = 0);

struct SurfaceDiagnostics {
  double t = 0;
  double area = 0;             // |Sigma_t| in g
  double boundary_length = 0;  // |dSigma_t| in g
  double willmore = 0;         // int H^2 dvol_g
  double hawking_mass = 0;     // sqrt|Sigma| / (2 (8 pi)^{3/2}) (8 pi - int H^2)
  int euler_char = 1;
  double eccentricity = 1;     // R_t / r_t about the configured centre
  double geroch_integrand = 0; // bracket of the monotonicity formula
  bool geroch_valid = false;   // H > 0 held along the leaf
  double willmore_euclid = 0;  // int H_e^2 dvol_e from leaf geometry
  double mean_radius = 0;      // Euclidean mean of |x - centre| (blowdown scale)
  double shape_deviation = 0;  // sup | |x - centre|/mean_radius - 1 |
  bool candidate_jump = false;
};

SurfaceDiagnostics surface_quantities(const LevelCurve& curve, const AmbientMetric& metric,
                                      const SupportGeometry* support,
                                      const Vec2& ecc_center = Vec2(0, 0));

// Bracket of the Geroch monotonicity right-hand side:
//   4 pi (1 - chi) + int (2 |grad H|^2/H^2 + |Aring|^2/2 + Sc) + int_bdry H^dM.
// valid=false when H <= 0 somewhere (term excluded, value set to 0).
double geroch_integrand(const LevelCurve& curve, const AmbientMetric& metric,
                        const SupportGeometry& support, bool* valid = nullptr);

struct FlowTableOptions {
  double margin_low = 0.25;   // trust t >= t_min + margin_low
  double margin_high = 0.5;   // trust t <= tau - margin_high
  Vec2 ecc_center{0, 0};
  bool detect_jumps = true;
  bool include_initial = false;
  int initial_samples = 512;
};

struct FlowTable {
  std::vector<SurfaceDiagnostics> rows;
  std::vector<LevelCurve> curves;      // parallel to rows
  std::vector<std::string> warnings;
};

// Diagnostics of the analytic initial surface (exact curve geometry H).
LevelCurve initial_surface_leaf(const Curve2& meridian, const AmbientMetric& metric,
                                const SupportGeometry& support, int n_samples = 512);

FlowTable flow_table(const MbvpSolver& solver, const Field& u,
                     const std::vector<double>& t_schedule, const SupportGeometry& support,
                     const FlowTableOptions& opts,
                     const Curve2* initial_meridian = nullptr);

void write_flow_csv(const FlowTable& table, const std::string& path);
void write_contour(const LevelCurve& curve, const std::string& path);

}  // namespace fbimcf
