// Finite-volume solver for the regularized level-set equation
//
//   div_g( grad u / sqrt(eps^2 + |grad u|_g^2) ) = (|grad u|_g^2 + delta^2)^(gamma/2)
//
// on the boundary-fitted meridian grid, with u = 0 on INNER, u = tau on
// OUTER, zero conormal flux on SUPPORT (ghost-value closure) and the
// symmetry closure on AXIS.  Axisymmetric fluxes carry the cylindrical
// volume density w = sqrt(det g) and the meridian inverse metric.
//
// Nonlinear strategy: lagged-coefficient Picard with under-relaxation,
// switching to damped Newton once the relative update is small.  Linear
// systems are solved by a sparse direct factorization; Jacobians are built
// by a colored finite-difference probe of the residual (stencil reach 2).

#pragma once

#include <Eigen/Sparse>

#include <optional>
#include <vector>

#include "fbimcf/mesh.hpp"

namespace fbimcf {

using Field = std::vector<double>;

struct SolverConfig {
  double eps = 0.05;
  double gamma = 1.0;
  double tau = 1.0;
  double grad_floor = 1e-10;   // delta in the right-hand side
  double relax = 0.7;          // Picard under-relaxation
  double newton_switch = 1e-3; // relative update threshold for the Newton phase
  double tol_residual = 1e-9;
  double tol_update = 1e-10;
  int max_iter = 200;
  bool use_newton = true;

  enum class Mode { fixed_domain, paper } mode = Mode::fixed_domain;
  double r0 = 1.0;
  double r_out = 16.0;              // must match the grid's outer radius
  std::vector<double> eps_schedule; // for continuation_solve

  double paper_r_eps() const { return 1.0 / (4.0 * eps); }
  double paper_z_eps() const { return 0.25 * std::log(paper_r_eps() / r0); }
  void validate() const;

  // Paper coupling R_eps = 1/(4 eps), tau = Z_eps (up to strictness slack).
  static SolverConfig paper_mode(double eps, double r0);
};

struct BarrierReport {
  double subsolution_violation = 0;  // max over nodes of (barrier - u)_+
  bool subsolution_regime = false;   // eps <= 1/(4R) and tau <= Z: barrier is valid
  double grad_decay_constant = 0;    // max |grad u|_g * |x - x0|_e
  double above_tau = 0;              // max (u - tau)_+
  double below_zero = 0;             // max (-u)_+
  double outer_grad_max = 0;         // max |grad u|_g over OUTER nodes
};

struct SolveResult {
  Field u;
  std::vector<double> residual_history;
  int iterations = 0;
  int newton_iterations = 0;
  int picard_fallbacks = 0;
  bool converged = false;
  double final_residual = 0;
  double final_update = 0;
  double max_grad = 0;  // max |grad u|_g (Lipschitz proxy)
  SolverConfig cfg;
  BarrierReport barrier;
};

class MbvpSolver {
 public:
  MbvpSolver(const AmbientMetric& metric, const CurvilinearGrid& grid);

  const CurvilinearGrid& grid() const { return grid_; }
  const AmbientMetric& metric() const { return metric_; }
  double h_max() const { return h_max_; }

  // Node-wise discrete F(u); Dirichlet rows carry u - bc.
  Field residual(const Field& u, const SolverConfig& cfg) const;

  Field initial_guess(const SolverConfig& cfg) const;
  SolveResult solve(const SolverConfig& cfg, const Field* warm_start = nullptr) const;
  // Fixed-domain eps continuation with warm starts; aborts on stage failure
  // and returns the partial sequence.
  std::vector<SolveResult> continuation_solve(const SolverConfig& cfg) const;

  // Nodal gradient fields (physical meridian components, then |.|_g).
  void nodal_gradient(const Field& u, Field& du_rho, Field& du_z) const;
  Field grad_norm_g(const Field& u) const;
  // Gradient of a derived nodal field; axis_parity +1 for fields even across
  // the axis, -1 for odd fields (d/dxi then equals the mirrored difference).
  void nodal_field_gradient(const Field& f, int axis_parity, Field& d_rho, Field& d_z) const;

  BarrierReport barrier_check(const SolveResult& res) const;

  int n_nodes() const { return int(grid_.rho.size()); }
  Vec2 x0() const { return Vec2(0, -gamma_offset_); }
  void set_gamma_offset(double g) { gamma_offset_ = g; }

 private:
  struct FaceData {
    double b0 = 0, b1 = 0;        // flux row of B = detJ J^-1 (w a^-1) J^-T
    double xi00 = 0, xi01 = 0, xi11 = 0;  // J^-1 a^-1 J^-T at the face
  };

  void precompute();
  // Logical gradients entering the face flux between the given nodes.
  double flux_xi(const Field& u, int i, int j, double eps, double* q2 = nullptr) const;
  double flux_eta(const Field& u, int i, int j, double eps, double* q2 = nullptr) const;
  double source(const Field& u, int i, int j, const SolverConfig& cfg) const;
  void dirichlet(Field& u, const SolverConfig& cfg) const;
  double pde_residual_norm(const Field& F) const;
  double pde_residual_rms(const Field& F) const;

  template <typename Apply>
  Eigen::SparseMatrix<double> assemble_colored(const Apply& apply) const;

  AmbientMetric metric_;  // value copy: the solver owns its geometry
  CurvilinearGrid grid_;
  double gamma_offset_ = 0;
  double h_max_ = 0;

  int ni_ = 0, nj_ = 0;
  std::vector<FaceData> fx_;  // xi-faces, index j*(ni-1)+i between (i,j),(i+1,j)
  std::vector<FaceData> fe_;  // eta-faces, index j*ni+i between (i,j),(i,j+1)
  std::vector<double> vol_;
  std::vector<double> nxi00_, nxi01_, nxi11_;  // nodal J^-1 a^-1 J^-T
  std::vector<double> ai00_, ai01_, ai11_;     // nodal meridian inverse metric
  std::vector<double> jinv_;                   // nodal J^-T (4 per node, row-major)
  std::vector<double> gb0_, gb1_;              // support-node flux row for the ghost closure
};

}  // namespace fbimcf
