// Boundary-fitted meridian grids for the solver domain.
//
// The domain is a curvilinear quadrilateral in the (rho, z) half-plane
// bounded by four tagged curves:
//   INNER    meridian of the initial surface (Dirichlet u = 0)
//   OUTER    arc of the circle |x - x0| = R_out, x0 = -Gamma e3 (Dirichlet u = tau)
//   SUPPORT  the support curve z = beta(rho)        (Neumann)
//   AXIS     the symmetry segment rho = 0
// Logical layout: xi (index i) runs from the axis (i = 0) to the support
// (i = ni-1); eta (index j) from the inner surface (j = 0) to the outer arc
// (j = nj-1).  Grids are generated by transfinite interpolation with optional
// geometric stretching toward the outer arc, and are immutable once built.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fbimcf/geometry.hpp"

namespace fbimcf {

// Parametric curve on [0,1] with numeric arclength reparametrization.
class Curve2 {
 public:
  Curve2() = default;
  explicit Curve2(std::function<Vec2(double)> f, int n_table = 2048);

  Vec2 at(double s) const;          // arclength fraction s in [0,1]
  Vec2 at_param(double t) const { return f_(t); }
  double length() const { return len_; }
  Vec2 start() const { return f_(0); }
  Vec2 end() const { return f_(1); }

 private:
  std::function<Vec2(double)> f_;
  std::vector<double> ts_, ss_;  // cumulative arclength table
  double len_ = 0;
};

// Initial-surface meridians, oriented axis endpoint -> support endpoint.
Curve2 hemisphere_meridian(double radius);  // quarter circle about the origin
Curve2 neck_disc_meridian(double radius);   // flat segment z = 0

enum class EdgeTag : std::uint8_t { none = 0, inner = 1, outer = 2, support = 3, axis = 4 };

struct MeridianDomain {
  Curve2 inner, outer;    // axis corner -> support corner
  Curve2 axis, support;   // inner corner -> outer corner
  double r0 = 1;          // inner surface scale
  double r_out = 16;
  double gamma_offset = 0;  // Gamma; outer circle centre x0 = (0, -Gamma)
  Vec2 P00, P10, P01, P11;  // inner/axis, inner/support, outer/axis, outer/support
  double corner_cos = 0;    // cosine of the outer/support corner angle
  Vec2 x0() const { return Vec2(0, -gamma_offset); }
};

MeridianDomain build_domain(const Curve2& initial_surface, const SupportGeometry& support,
                            double r_out, double gamma_offset);

struct CurvilinearGrid {
  int ni = 0, nj = 0;          // xi (axis->support), eta (inner->outer) node counts
  std::vector<double> rho, z;  // node coordinates, index k = j*ni + i
  std::vector<EdgeTag> tag;    // boundary tag per node (Dirichlet wins at corners)
  double stretch = 1;

  int idx(int i, int j) const { return j * ni + i; }
  Vec2 node(int i, int j) const { return Vec2(rho[idx(i, j)], z[idx(i, j)]); }

  // Jacobian d(rho,z)/d(i,j) at a node by central/one-sided differences.
  Mat2 jacobian(int i, int j) const;
  double max_cell_diameter() const;
  double min_cell_diameter() const;
  // Discrete area sum(det J) over cell centres (bilinear map).
  double discrete_area() const;

  void dump(const std::string& path) const;  // node table (i, j, rho, z, tag)
};

// Transfinite grid; stretch = ratio of the largest to smallest radial (eta)
// spacing, 1 for uniform.  Throws on folded cells (non-positive Jacobian).
CurvilinearGrid transfinite_grid(const MeridianDomain& d, int ni, int nj, double stretch = 1);

}  // namespace fbimcf
