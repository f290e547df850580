#include "fbimcf/solver.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace fbimcf {

void SolverConfig::validate() const {
  if (!(eps > 0)) throw ConfigError("solver: eps must be positive");
  if (!(gamma >= 1)) throw ConfigError("solver: gamma must be >= 1");
  if (!(tau >= 0)) throw ConfigError("solver: tau must be non-negative");
  if (!(relax > 0 && relax <= 1)) throw ConfigError("solver: relax must be in (0,1]");
  if (!(r_out > r0)) throw ConfigError("solver: r_out must exceed r0");
  if (mode == Mode::paper) {
    if (!(tau < 0.25 * (std::log(r_out) - std::log(r0))))
      throw ConfigError("solver: paper mode requires tau < (log R_eps - log R0)/4");
  }
}

SolverConfig SolverConfig::paper_mode(double eps, double r0) {
  SolverConfig c;
  c.mode = Mode::paper;
  c.eps = eps;
  c.r0 = r0;
  c.r_out = c.paper_r_eps();
  c.tau = c.paper_z_eps() * (1 - 1e-12);
  return c;
}

MbvpSolver::MbvpSolver(const AmbientMetric& metric, const CurvilinearGrid& grid)
    : metric_(metric), grid_(grid) {
  ni_ = grid_.ni;
  nj_ = grid_.nj;
  precompute();
}

namespace {

inline Mat2 face_b(const Mat2& Jf, const Mat2& ainv, double w) {
  double det = Jf.determinant();
  Mat2 Ji = Jf.inverse();
  return det * (Ji * (w * ainv) * Ji.transpose());
}

}  // namespace

void MbvpSolver::precompute() {
  const int N = ni_ * nj_;
  vol_.assign(N, 0);
  nxi00_.assign(N, 0);
  nxi01_.assign(N, 0);
  nxi11_.assign(N, 0);
  ai00_.assign(N, 0);
  ai01_.assign(N, 0);
  ai11_.assign(N, 0);
  jinv_.assign(size_t(N) * 4, 0);
  gb0_.assign(nj_, 0);
  gb1_.assign(nj_, 0);
  fx_.assign(size_t(ni_ - 1) * nj_, FaceData{});
  fe_.assign(size_t(ni_) * (nj_ - 1), FaceData{});
  h_max_ = grid_.max_cell_diameter();

  auto node = [&](int i, int j) { return grid_.node(i, j); };

  for (int j = 0; j < nj_; ++j)
    for (int i = 0; i < ni_; ++i) {
      int k = grid_.idx(i, j);
      Mat2 J = grid_.jacobian(i, j);
      if (i == 0) J.col(0) = Vec2(grid_.rho[grid_.idx(1, j)], 0.0);  // mirror across the axis
      double detJ = J.determinant();
      MeridianEval me = metric_.meridian(grid_.rho[k], grid_.z[k]);
      Mat2 Ji = J.inverse();
      Mat2 Xi = Ji * me.ainv * Ji.transpose();
      nxi00_[k] = Xi(0, 0);
      nxi01_[k] = Xi(0, 1);
      nxi11_[k] = Xi(1, 1);
      ai00_[k] = me.ainv(0, 0);
      ai01_[k] = me.ainv(0, 1);
      ai11_[k] = me.ainv(1, 1);
      Mat2 JiT = Ji.transpose();
      jinv_[4 * k + 0] = JiT(0, 0);
      jinv_[4 * k + 1] = JiT(0, 1);
      jinv_[4 * k + 2] = JiT(1, 0);
      jinv_[4 * k + 3] = JiT(1, 1);
      if (i == 0) {
        // Half-cell of the mirrored axis cell; w grows linearly off the axis.
        MeridianEval m1 = metric_.meridian(grid_.rho[grid_.idx(1, j)], grid_.z[grid_.idx(1, j)]);
        vol_[k] = 0.25 * m1.w * detJ;
      } else {
        vol_[k] = me.w * detJ;
      }
      if (i == ni_ - 1) {
        Mat2 B = face_b(J, me.ainv, me.w);
        gb0_[j] = B(0, 0);
        gb1_[j] = B(0, 1);
      }
    }

  auto eta_deriv = [&](int i, int j) -> Vec2 {
    if (j == 0) return (-1.5 * node(i, 0) + 2.0 * node(i, 1) - 0.5 * node(i, 2)).eval();
    if (j == nj_ - 1)
      return (1.5 * node(i, nj_ - 1) - 2.0 * node(i, nj_ - 2) + 0.5 * node(i, nj_ - 3)).eval();
    return (0.5 * (node(i, j + 1) - node(i, j - 1))).eval();
  };
  auto xi_deriv = [&](int i, int j) -> Vec2 {
    if (i == 0) return Vec2(grid_.rho[grid_.idx(1, j)], 0.0);
    if (i == ni_ - 1)
      return (1.5 * node(ni_ - 1, j) - 2.0 * node(ni_ - 2, j) + 0.5 * node(ni_ - 3, j)).eval();
    return (0.5 * (node(i + 1, j) - node(i - 1, j))).eval();
  };

  for (int j = 0; j < nj_; ++j)
    for (int i = 0; i + 1 < ni_; ++i) {
      Mat2 Jf;
      Jf.col(0) = node(i + 1, j) - node(i, j);
      Jf.col(1) = 0.5 * (eta_deriv(i, j) + eta_deriv(i + 1, j));
      Vec2 pos = 0.5 * (node(i, j) + node(i + 1, j));
      MeridianEval me = metric_.meridian(pos[0], pos[1]);
      Mat2 B = face_b(Jf, me.ainv, me.w);
      Mat2 Ji = Jf.inverse();
      Mat2 Xi = Ji * me.ainv * Ji.transpose();
      FaceData& f = fx_[size_t(j) * (ni_ - 1) + i];
      f.b0 = B(0, 0);
      f.b1 = B(0, 1);
      f.xi00 = Xi(0, 0);
      f.xi01 = Xi(0, 1);
      f.xi11 = Xi(1, 1);
    }

  for (int j = 0; j + 1 < nj_; ++j)
    for (int i = 0; i < ni_; ++i) {
      Mat2 Jf;
      Jf.col(1) = node(i, j + 1) - node(i, j);
      Jf.col(0) = 0.5 * (xi_deriv(i, j) + xi_deriv(i, j + 1));
      Vec2 pos = 0.5 * (node(i, j) + node(i, j + 1));
      if (i == 0) {
        // Quarter-offset sample keeps the degenerate axis flux consistent.
        pos = 0.75 * pos + 0.25 * (0.5 * (node(1, j) + node(1, j + 1)));
      }
      MeridianEval me = metric_.meridian(pos[0], pos[1]);
      Mat2 B = face_b(Jf, me.ainv, me.w);
      Mat2 Ji = Jf.inverse();
      Mat2 Xi = Ji * me.ainv * Ji.transpose();
      FaceData& f = fe_[size_t(j) * ni_ + i];
      f.b0 = B(1, 0);
      f.b1 = B(1, 1);
      f.xi00 = Xi(0, 0);
      f.xi01 = Xi(0, 1);
      f.xi11 = Xi(1, 1);
    }
}

double MbvpSolver::flux_xi(const Field& u, int i, int j, double eps, double* q2_out) const {
  auto U = [&](int a, int b) { return u[grid_.idx(a, b)]; };
  double d1 = U(i + 1, j) - U(i, j);
  double d2;
  if (j == 0) {
    double a = -1.5 * U(i, 0) + 2 * U(i, 1) - 0.5 * U(i, 2);
    double b = -1.5 * U(i + 1, 0) + 2 * U(i + 1, 1) - 0.5 * U(i + 1, 2);
    d2 = 0.5 * (a + b);
  } else if (j == nj_ - 1) {
    double a = 1.5 * U(i, j) - 2 * U(i, j - 1) + 0.5 * U(i, j - 2);
    double b = 1.5 * U(i + 1, j) - 2 * U(i + 1, j - 1) + 0.5 * U(i + 1, j - 2);
    d2 = 0.5 * (a + b);
  } else {
    d2 = 0.25 * (U(i, j + 1) + U(i + 1, j + 1) - U(i, j - 1) - U(i + 1, j - 1));
  }
  const FaceData& f = fx_[size_t(j) * (ni_ - 1) + i];
  double q2 = f.xi00 * d1 * d1 + 2 * f.xi01 * d1 * d2 + f.xi11 * d2 * d2;
  if (q2_out) *q2_out = q2;
  double c = 1.0 / std::sqrt(eps * eps + std::max(0.0, q2));
  return c * (f.b0 * d1 + f.b1 * d2);
}

double MbvpSolver::flux_eta(const Field& u, int i, int j, double eps, double* q2_out) const {
  auto U = [&](int a, int b) { return u[grid_.idx(a, b)]; };
  double d2 = U(i, j + 1) - U(i, j);
  double d1;
  if (i == 0) {
    d1 = 0;  // mirror symmetry across the axis
  } else if (i == ni_ - 1) {
    double a = 1.5 * U(ni_ - 1, j) - 2 * U(ni_ - 2, j) + 0.5 * U(ni_ - 3, j);
    double b = 1.5 * U(ni_ - 1, j + 1) - 2 * U(ni_ - 2, j + 1) + 0.5 * U(ni_ - 3, j + 1);
    d1 = 0.5 * (a + b);
  } else {
    d1 = 0.25 * (U(i + 1, j) + U(i + 1, j + 1) - U(i - 1, j) - U(i - 1, j + 1));
  }
  const FaceData& f = fe_[size_t(j) * ni_ + i];
  double q2 = f.xi00 * d1 * d1 + 2 * f.xi01 * d1 * d2 + f.xi11 * d2 * d2;
  if (q2_out) *q2_out = q2;
  double c = 1.0 / std::sqrt(eps * eps + std::max(0.0, q2));
  return c * (f.b0 * d1 + f.b1 * d2);
}

namespace {

// Logical gradient components at a node (mirror at the axis, one-sided at
// the other boundaries).
struct NodalDiff {
  int ni, nj;
  const Field* u;
  const CurvilinearGrid* g;
  double d1(int i, int j) const {
    auto U = [&](int a, int b) { return (*u)[g->idx(a, b)]; };
    if (i == 0) return 0.0;
    if (i == ni - 1) return 1.5 * U(i, j) - 2 * U(i - 1, j) + 0.5 * U(i - 2, j);
    return 0.5 * (U(i + 1, j) - U(i - 1, j));
  }
  double d2(int i, int j) const {
    auto U = [&](int a, int b) { return (*u)[g->idx(a, b)]; };
    if (j == 0) return -1.5 * U(i, 0) + 2 * U(i, 1) - 0.5 * U(i, 2);
    if (j == nj - 1) return 1.5 * U(i, j) - 2 * U(i, j - 1) + 0.5 * U(i, j - 2);
    return 0.5 * (U(i, j + 1) - U(i, j - 1));
  }
};

}  // namespace

double MbvpSolver::source(const Field& u, int i, int j, const SolverConfig& cfg) const {
  NodalDiff nd{ni_, nj_, &u, &grid_};
  double a = nd.d1(i, j), b = nd.d2(i, j);
  int k = grid_.idx(i, j);
  double q2 = nxi00_[k] * a * a + 2 * nxi01_[k] * a * b + nxi11_[k] * b * b;
  double s2 = std::max(0.0, q2) + cfg.grad_floor * cfg.grad_floor;
  return std::pow(s2, 0.5 * cfg.gamma);
}

void MbvpSolver::dirichlet(Field& u, const SolverConfig& cfg) const {
  for (int i = 0; i < ni_; ++i) {
    u[grid_.idx(i, 0)] = 0.0;
    u[grid_.idx(i, nj_ - 1)] = cfg.tau;
  }
}

Field MbvpSolver::residual(const Field& u, const SolverConfig& cfg) const {
  Field F(n_nodes(), 0.0);
  const double eps = cfg.eps;
  for (int j = 0; j < nj_; ++j)
    for (int i = 0; i < ni_; ++i) {
      int k = grid_.idx(i, j);
      EdgeTag t = grid_.tag[k];
      if (t == EdgeTag::inner) {
        F[k] = u[k];
        continue;
      }
      if (t == EdgeTag::outer) {
        F[k] = u[k] - cfg.tau;
        continue;
      }
      double div;
      if (i == 0) {
        div = 2 * flux_xi(u, 0, j, eps) + flux_eta(u, 0, j, eps) - flux_eta(u, 0, j - 1, eps);
      } else if (i == ni_ - 1) {
        // Ghost values kill the conormal flux at the support nodes.
        auto U = [&](int a, int b) { return u[grid_.idx(a, b)]; };
        auto d2c = [&](int l) {
          if (l == 0) return -1.5 * U(ni_ - 1, 0) + 2 * U(ni_ - 1, 1) - 0.5 * U(ni_ - 1, 2);
          if (l == nj_ - 1)
            return 1.5 * U(ni_ - 1, l) - 2 * U(ni_ - 1, l - 1) + 0.5 * U(ni_ - 1, l - 2);
          return 0.5 * (U(ni_ - 1, l + 1) - U(ni_ - 1, l - 1));
        };
        auto ghost = [&](int l) { return U(ni_ - 2, l) - 2 * (gb1_[l] / gb0_[l]) * d2c(l); };
        double d1v = ghost(j) - U(ni_ - 1, j);
        double d2v = 0.25 * (U(ni_ - 1, j + 1) + ghost(j + 1) - U(ni_ - 1, j - 1) - ghost(j - 1));
        int kk = grid_.idx(ni_ - 1, j);
        double q2 = nxi00_[kk] * d1v * d1v + 2 * nxi01_[kk] * d1v * d2v + nxi11_[kk] * d2v * d2v;
        double cv = 1.0 / std::sqrt(eps * eps + std::max(0.0, q2));
        double phi_v = cv * (gb0_[j] * d1v + gb1_[j] * d2v);
        div = phi_v - flux_xi(u, ni_ - 2, j, eps) + flux_eta(u, ni_ - 1, j, eps) -
              flux_eta(u, ni_ - 1, j - 1, eps);
      } else {
        div = flux_xi(u, i, j, eps) - flux_xi(u, i - 1, j, eps) + flux_eta(u, i, j, eps) -
              flux_eta(u, i, j - 1, eps);
      }
      F[k] = div / vol_[k] - source(u, i, j, cfg);
      if (!std::isfinite(F[k]))
        throw SolveError("residual: non-finite value at node (" + std::to_string(i) + "," +
                         std::to_string(j) + ")");
    }
  return F;
}

double MbvpSolver::pde_residual_norm(const Field& F) const {
  double m = 0;
  for (int j = 1; j + 1 < nj_; ++j)
    for (int i = 0; i < ni_; ++i) m = std::max(m, std::abs(F[grid_.idx(i, j)]));
  return m;
}

double MbvpSolver::pde_residual_rms(const Field& F) const {
  double s = 0;
  int n = 0;
  for (int j = 1; j + 1 < nj_; ++j)
    for (int i = 0; i < ni_; ++i, ++n) {
      double v = F[grid_.idx(i, j)];
      s += v * v;
    }
  return std::sqrt(s / std::max(n, 1));
}

Field MbvpSolver::initial_guess(const SolverConfig& cfg) const {
  Field u(n_nodes(), 0.0);
  const Vec2 c = x0();
  for (int k = 0; k < n_nodes(); ++k) {
    double r = (Vec2(grid_.rho[k], grid_.z[k]) - c).norm();
    double v;
    if (cfg.mode == SolverConfig::Mode::paper) {
      v = std::max(0.0, 0.25 * (std::log(std::max(r, 1e-12)) - std::log(cfg.r_out)) + cfg.tau);
    } else {
      v = cfg.tau * std::log(std::max(r, 1e-12) / cfg.r0) / std::log(cfg.r_out / cfg.r0);
    }
    u[k] = std::clamp(v, 0.0, cfg.tau);
  }
  dirichlet(u, cfg);
  return u;
}

template <typename Apply>
Eigen::SparseMatrix<double> MbvpSolver::assemble_colored(const Apply& apply) const {
  const int N = n_nodes(), C = 5;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(size_t(N) * 14);
  Field basis(N, 0.0);
  for (int a = 0; a < C; ++a)
    for (int b = 0; b < C; ++b) {
      std::fill(basis.begin(), basis.end(), 0.0);
      for (int j = b; j < nj_; j += C)
        for (int i = a; i < ni_; i += C) basis[grid_.idx(i, j)] = 1.0;
      Field out = apply(basis);
      for (int j = 0; j < nj_; ++j)
        for (int i = 0; i < ni_; ++i) {
          int r = grid_.idx(i, j);
          if (out[r] == 0.0) continue;
          // The unique colored node within the stencil reach of this row.
          int ii = -1, jj = -1;
          for (int d = -2; d <= 2; ++d) {
            int c1 = i + d;
            if (c1 >= 0 && c1 < ni_ && c1 % C == a) ii = c1;
            int c2 = j + d;
            if (c2 >= 0 && c2 < nj_ && c2 % C == b) jj = c2;
          }
          if (ii < 0 || jj < 0) continue;
          trips.emplace_back(r, grid_.idx(ii, jj), out[r]);
        }
    }
  Eigen::SparseMatrix<double> A(N, N);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

SolveResult MbvpSolver::solve(const SolverConfig& cfg, const Field* warm_start) const {
  cfg.validate();
  SolveResult res;
  res.cfg = cfg;
  Field u = warm_start ? *warm_start : initial_guess(cfg);
  if (int(u.size()) != n_nodes()) throw ConfigError("solve: warm start has wrong size");
  dirichlet(u, cfg);

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  const double upd_scale = std::max(1.0, cfg.tau);
  double last_update = 1.0;
  bool newton_phase = false;

  // Frozen-coefficient linear operator for the Picard step.
  std::vector<double> cx(fx_.size()), ce(fe_.size()), cv(nj_);
  auto freeze = [&](const Field& uf) {
    double q2;
    for (int j = 0; j < nj_; ++j)
      for (int i = 0; i + 1 < ni_; ++i) {
        flux_xi(uf, i, j, cfg.eps, &q2);
        cx[size_t(j) * (ni_ - 1) + i] = 1.0 / std::sqrt(cfg.eps * cfg.eps + std::max(0.0, q2));
      }
    for (int j = 0; j + 1 < nj_; ++j)
      for (int i = 0; i < ni_; ++i) {
        flux_eta(uf, i, j, cfg.eps, &q2);
        ce[size_t(j) * ni_ + i] = 1.0 / std::sqrt(cfg.eps * cfg.eps + std::max(0.0, q2));
      }
    NodalDiff nd{ni_, nj_, &uf, &grid_};
    for (int j = 0; j < nj_; ++j) {
      int k = grid_.idx(ni_ - 1, j);
      double a = nd.d1(ni_ - 1, j), b = nd.d2(ni_ - 1, j);
      double q = nxi00_[k] * a * a + 2 * nxi01_[k] * a * b + nxi11_[k] * b * b;
      cv[j] = 1.0 / std::sqrt(cfg.eps * cfg.eps + std::max(0.0, q));
    }
  };

  auto linear_apply = [&](const Field& v) -> Field {
    Field out(n_nodes(), 0.0);
    auto V = [&](int a, int b) { return v[grid_.idx(a, b)]; };
    auto lflux_xi = [&](int i, int j) {
      double d1 = V(i + 1, j) - V(i, j);
      double d2;
      if (j == 0)
        d2 = 0.5 * ((-1.5 * V(i, 0) + 2 * V(i, 1) - 0.5 * V(i, 2)) +
                    (-1.5 * V(i + 1, 0) + 2 * V(i + 1, 1) - 0.5 * V(i + 1, 2)));
      else if (j == nj_ - 1)
        d2 = 0.5 * ((1.5 * V(i, j) - 2 * V(i, j - 1) + 0.5 * V(i, j - 2)) +
                    (1.5 * V(i + 1, j) - 2 * V(i + 1, j - 1) + 0.5 * V(i + 1, j - 2)));
      else
        d2 = 0.25 * (V(i, j + 1) + V(i + 1, j + 1) - V(i, j - 1) - V(i + 1, j - 1));
      const FaceData& f = fx_[size_t(j) * (ni_ - 1) + i];
      return cx[size_t(j) * (ni_ - 1) + i] * (f.b0 * d1 + f.b1 * d2);
    };
    auto lflux_eta = [&](int i, int j) {
      double d2 = V(i, j + 1) - V(i, j);
      double d1;
      if (i == 0)
        d1 = 0;
      else if (i == ni_ - 1)
        d1 = 0.5 * ((1.5 * V(ni_ - 1, j) - 2 * V(ni_ - 2, j) + 0.5 * V(ni_ - 3, j)) +
                    (1.5 * V(ni_ - 1, j + 1) - 2 * V(ni_ - 2, j + 1) + 0.5 * V(ni_ - 3, j + 1)));
      else
        d1 = 0.25 * (V(i + 1, j) + V(i + 1, j + 1) - V(i - 1, j) - V(i - 1, j + 1));
      const FaceData& f = fe_[size_t(j) * ni_ + i];
      return ce[size_t(j) * ni_ + i] * (f.b0 * d1 + f.b1 * d2);
    };
    for (int j = 0; j < nj_; ++j)
      for (int i = 0; i < ni_; ++i) {
        int k = grid_.idx(i, j);
        EdgeTag t = grid_.tag[k];
        if (t == EdgeTag::inner || t == EdgeTag::outer) {
          out[k] = v[k];
          continue;
        }
        double div;
        if (i == 0) {
          div = 2 * lflux_xi(0, j) + lflux_eta(0, j) - lflux_eta(0, j - 1);
        } else if (i == ni_ - 1) {
          auto d2c = [&](int l) {
            if (l == 0) return -1.5 * V(ni_ - 1, 0) + 2 * V(ni_ - 1, 1) - 0.5 * V(ni_ - 1, 2);
            if (l == nj_ - 1)
              return 1.5 * V(ni_ - 1, l) - 2 * V(ni_ - 1, l - 1) + 0.5 * V(ni_ - 1, l - 2);
            return 0.5 * (V(ni_ - 1, l + 1) - V(ni_ - 1, l - 1));
          };
          auto ghost = [&](int l) { return V(ni_ - 2, l) - 2 * (gb1_[l] / gb0_[l]) * d2c(l); };
          double d1v = ghost(j) - V(ni_ - 1, j);
          double d2v =
              0.25 * (V(ni_ - 1, j + 1) + ghost(j + 1) - V(ni_ - 1, j - 1) - ghost(j - 1));
          double phi_v = cv[j] * (gb0_[j] * d1v + gb1_[j] * d2v);
          div = phi_v - lflux_xi(ni_ - 2, j) + lflux_eta(ni_ - 1, j) - lflux_eta(ni_ - 1, j - 1);
        } else {
          div = lflux_xi(i, j) - lflux_xi(i - 1, j) + lflux_eta(i, j) - lflux_eta(i, j - 1);
        }
        out[k] = div / vol_[k];
      }
    return out;
  };

  const int N = n_nodes();
  Eigen::VectorXd rhs(N), sol(N);
  Field F = residual(u, cfg);
  double rnorm = pde_residual_norm(F);
  double rrms = pde_residual_rms(F);
  res.residual_history.push_back(rnorm);

  // Pseudo-transient damping: both phases solve the backward-Euler step of
  // the relaxation flow du/dtau = F(u) with per-row steps 1/dtau_k =
  // sigma |diag|.  sigma shrinks with the residual (switched evolution
  // relaxation), recovering plain Picard / Newton near the solution.
  double sigma = std::max(0.0, 1.0 - cfg.relax);
  const double sigma_min = 1e-14;

  // Shift the diagonal and return the per-row shifts.
  auto apply_shift = [&](Eigen::SparseMatrix<double>& A, double sg, std::vector<double>& shift) {
    shift.assign(N, 0.0);
    if (sg <= 0) return;
    for (int j = 0; j < nj_; ++j)
      for (int i = 0; i < ni_; ++i) {
        int k = grid_.idx(i, j);
        EdgeTag t = grid_.tag[k];
        if (t == EdgeTag::inner || t == EdgeTag::outer) continue;
        double d = A.coeff(k, k);
        shift[k] = -sg * std::abs(d);
        A.coeffRef(k, k) += shift[k];
      }
  };

  std::vector<double> shift;
  for (int it = 0; it < cfg.max_iter; ++it) {
    if (rnorm < cfg.tol_residual && last_update < cfg.tol_update) {
      res.converged = true;
      break;
    }
    bool stepped = false;
    double rn = rnorm, du = 0;
    if (newton_phase) {
      const double dstep = 1e-7 * upd_scale;
      auto newton_apply = [&](const Field& v) -> Field {
        Field up(N);
        for (int k = 0; k < N; ++k) up[k] = u[k] + dstep * v[k];
        Field Fp = residual(up, cfg);
        Field out(N);
        for (int k = 0; k < N; ++k) out[k] = (Fp[k] - F[k]) / dstep;
        return out;
      };
      Eigen::SparseMatrix<double> J = assemble_colored(newton_apply);
      apply_shift(J, sigma, shift);
      lu.compute(J);
      if (lu.info() == Eigen::Success) {
        for (int k = 0; k < N; ++k) rhs[k] = -F[k];
        sol = lu.solve(rhs);
        double lambda = 1.0;
        for (int ls = 0; ls < 6 && !stepped; ++ls, lambda *= 0.5) {
          Field ut(N);
          for (int k = 0; k < N; ++k) ut[k] = u[k] + lambda * sol[k];
          dirichlet(ut, cfg);
          Field Ft;
          try {
            Ft = residual(ut, cfg);
          } catch (const SolveError&) {
            continue;
          }
          double rt = pde_residual_rms(Ft);
          if (rt < rrms) {
            du = 0;
            for (int k = 0; k < N; ++k) du = std::max(du, std::abs(ut[k] - u[k]));
            u = std::move(ut);
            F = std::move(Ft);
            rn = rt;
            ++res.newton_iterations;
            stepped = true;
          }
        }
      }
      if (!stepped) {
        newton_phase = false;
        ++res.picard_fallbacks;
        sigma = std::max(sigma * 4, 0.05);
      }
    }
    if (!stepped) {
      freeze(u);
      Eigen::SparseMatrix<double> A = assemble_colored(linear_apply);
      apply_shift(A, sigma, shift);
      lu.compute(A);
      if (lu.info() != Eigen::Success) throw SolveError("solve: singular Picard operator");
      for (int j = 0; j < nj_; ++j)
        for (int i = 0; i < ni_; ++i) {
          int k = grid_.idx(i, j);
          EdgeTag t = grid_.tag[k];
          if (t == EdgeTag::inner)
            rhs[k] = 0;
          else if (t == EdgeTag::outer)
            rhs[k] = cfg.tau;
          else
            rhs[k] = source(u, i, j, cfg) + shift[k] * u[k];
        }
      sol = lu.solve(rhs);
      Field un(N), Fn;
      double lambda = 1.0;
      for (int ls = 0; ls < 8 && !stepped; ++ls, lambda *= 0.5) {
        du = 0;
        for (int k = 0; k < N; ++k) {
          un[k] = u[k] + lambda * (sol[k] - u[k]);
          du = std::max(du, std::abs(un[k] - u[k]));
        }
        dirichlet(un, cfg);
        try {
          Fn = residual(un, cfg);
        } catch (const SolveError&) {
          continue;
        }
        double rt = pde_residual_rms(Fn);
        if (getenv("FB_DBG")) fprintf(stderr, "picard it=%d sigma=%.3g lambda=%.3g rrms=%.5g rt=%.5g\n", it, sigma, lambda, rrms, rt);
        if (rt < rrms * (1 + 1e-12) || sigma > 1e3) {
          u = std::move(un);
          F = std::move(Fn);
          rn = rt;
          stepped = true;
        }
      }
      if (!stepped) {
        sigma = std::min(sigma <= 0 ? 0.05 : sigma * 6, 1e4);
        res.residual_history.push_back(rnorm);
        ++res.iterations;
        continue;  // retry with stronger damping
      }
      if (cfg.use_newton && du / upd_scale < cfg.newton_switch) newton_phase = true;
    }
    last_update = du / upd_scale;
    sigma = std::max(sigma_min, sigma * std::clamp(rn / std::max(rrms, 1e-300), 0.02, 1.0));
    rrms = rn;
    rnorm = pde_residual_norm(F);
    res.residual_history.push_back(rnorm);
    ++res.iterations;
  }
  res.final_residual = rnorm;
  res.final_update = last_update;
  res.u = std::move(u);
  Field gn = grad_norm_g(res.u);
  res.max_grad = *std::max_element(gn.begin(), gn.end());
  res.barrier = barrier_check(res);
  return res;
}

std::vector<SolveResult> MbvpSolver::continuation_solve(const SolverConfig& cfg) const {
  if (cfg.eps_schedule.empty()) throw ConfigError("continuation: empty eps schedule");
  for (size_t k = 1; k < cfg.eps_schedule.size(); ++k)
    if (!(cfg.eps_schedule[k] < cfg.eps_schedule[k - 1]))
      throw ConfigError("continuation: eps schedule must be strictly decreasing");
  std::vector<SolveResult> out;
  const Field* warm = nullptr;
  for (double e : cfg.eps_schedule) {
    SolverConfig stage = cfg;
    stage.eps = e;
    stage.eps_schedule.clear();
    SolveResult r = solve(stage, warm);
    bool ok = r.converged;
    out.push_back(std::move(r));
    if (!ok) break;  // stage failure aborts the schedule
    warm = &out.back().u;
  }
  return out;
}

void MbvpSolver::nodal_gradient(const Field& u, Field& du_rho, Field& du_z) const {
  du_rho.assign(n_nodes(), 0);
  du_z.assign(n_nodes(), 0);
  NodalDiff nd{ni_, nj_, &u, &grid_};
  for (int j = 0; j < nj_; ++j)
    for (int i = 0; i < ni_; ++i) {
      int k = grid_.idx(i, j);
      double a = nd.d1(i, j), b = nd.d2(i, j);
      du_rho[k] = jinv_[4 * k + 0] * a + jinv_[4 * k + 1] * b;
      du_z[k] = jinv_[4 * k + 2] * a + jinv_[4 * k + 3] * b;
    }
}

void MbvpSolver::nodal_field_gradient(const Field& f, int axis_parity, Field& d_rho,
                                      Field& d_z) const {
  d_rho.assign(n_nodes(), 0);
  d_z.assign(n_nodes(), 0);
  NodalDiff nd{ni_, nj_, &f, &grid_};
  for (int j = 0; j < nj_; ++j)
    for (int i = 0; i < ni_; ++i) {
      int k = grid_.idx(i, j);
      double a = (i == 0 && axis_parity < 0) ? f[grid_.idx(1, j)] : nd.d1(i, j);
      double b = nd.d2(i, j);
      d_rho[k] = jinv_[4 * k + 0] * a + jinv_[4 * k + 1] * b;
      d_z[k] = jinv_[4 * k + 2] * a + jinv_[4 * k + 3] * b;
    }
}

Field MbvpSolver::grad_norm_g(const Field& u) const {
  Field g(n_nodes(), 0);
  NodalDiff nd{ni_, nj_, &u, &grid_};
  for (int j = 0; j < nj_; ++j)
    for (int i = 0; i < ni_; ++i) {
      int k = grid_.idx(i, j);
      double a = nd.d1(i, j), b = nd.d2(i, j);
      double q2 = nxi00_[k] * a * a + 2 * nxi01_[k] * a * b + nxi11_[k] * b * b;
      g[k] = std::sqrt(std::max(0.0, q2));
    }
  return g;
}

BarrierReport MbvpSolver::barrier_check(const SolveResult& res) const {
  const SolverConfig& cfg = res.cfg;
  BarrierReport br;
  double R = cfg.mode == SolverConfig::Mode::paper ? cfg.paper_r_eps() : cfg.r_out;
  br.subsolution_regime = cfg.eps <= 1.0 / (4 * R) * (1 + 1e-12) &&
                          cfg.tau <= 0.25 * std::log(R / cfg.r0) * (1 + 1e-12);
  Field gn = grad_norm_g(res.u);
  const Vec2 c = x0();
  for (int k = 0; k < n_nodes(); ++k) {
    double r = (Vec2(grid_.rho[k], grid_.z[k]) - c).norm();
    double barrier = std::max(0.0, 0.25 * (std::log(std::max(r, 1e-12)) - std::log(R)) + cfg.tau);
    br.subsolution_violation = std::max(br.subsolution_violation, barrier - res.u[k]);
    br.grad_decay_constant = std::max(br.grad_decay_constant, gn[k] * r);
    br.above_tau = std::max(br.above_tau, res.u[k] - cfg.tau);
    br.below_zero = std::max(br.below_zero, -res.u[k]);
    if (grid_.tag[k] == EdgeTag::outer) br.outer_grad_max = std::max(br.outer_grad_max, gn[k]);
  }
  br.subsolution_violation = std::max(0.0, br.subsolution_violation);
  return br;
}

}  // namespace fbimcf
