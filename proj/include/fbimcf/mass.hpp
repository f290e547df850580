// Mass quadratures for asymptotically flat half-spaces and support surfaces.
//
// The ADM mass of a half-space chart combines a hemisphere flux integral
// with a boundary circle term,
//   m = lim (1/16 pi) [ int_{S_r^+} (d_j g_ij - d_i g_jj) x_i/|x|
//                       + int_{dD_r} g_i3 x_i/|x| ],
// evaluated on a sequence of radii and extrapolated by a two-term fit in
// 1/r.  The exterior mass of a support graph is the circle flux of psi.
// ChartMap realises the spherical chart over an axisymmetric support graph
// (barycentre shift rho(r), azimuth rescale zeta(r)) whose pullback metric
// exhibits m_ext = 4 m_ADM.

#pragma once

#include <vector>

#include "fbimcf/geometry.hpp"

namespace fbimcf {

struct MassEstimate {
  double value = 0;
  std::vector<double> radii;
  std::vector<double> partial;          // per-radius estimates
  std::vector<double> hemisphere_term;  // already scaled by 1/16pi
  std::vector<double> circle_term;
  int fit_order = 1;        // two-term fit a + b/r
  double fit_residual = 0;  // rms misfit over all radii
  bool converged = true;
};

MassEstimate adm_mass(const AmbientMetric& metric, const std::vector<double>& radii,
                      int n_theta = 192, int n_phi = 512);

MassEstimate exterior_mass(const SupportGeometry& support, const std::vector<double>& radii);

// Spherical chart at infinity over a rotationally symmetric support graph.
class ChartMap {
 public:
  ChartMap(const SupportGeometry& support, std::vector<double> shells);

  double rho_shift(double r) const;        // barycentre shift rho(r)
  double rho_shift_deriv(double r) const;
  double zeta(double r) const;             // azimuth rescale, 2/pi * root angle
  double zeta_tilde(double r) const;       // contact angle of S_r(rho(r) e3) with the graph

  Vec3 forward(const Vec3& x) const;   // Phi
  Vec3 inverse(const Vec3& y) const;   // Phi^{-1}
  AmbientMetric pullback_metric() const;  // general metric by finite differencing Phi

  double min_shell() const { return shells_.front(); }
  const std::vector<double>& shells() const { return shells_; }

 private:
  double table_lookup(const std::vector<double>& v, const std::vector<double>& dv,
                      double r) const;
  SupportGeometry support_;
  std::vector<double> shells_;
  std::vector<double> tr_;                    // table knots (radius)
  std::vector<double> trho_, tdrho_;          // rho and rho'
  std::vector<double> tzeta_, tdzeta_;        // zeta_tilde and its derivative
};

ChartMap support_chart(const SupportGeometry& support, const std::vector<double>& shells);

void write_mass_csv(const MassEstimate& m, const std::string& path);

}  // namespace fbimcf
