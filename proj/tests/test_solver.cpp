#include <algorithm>

#include "doctest.h"
#include "fbimcf/experiment.hpp"
#include "fbimcf/solver.hpp"
#include "radial_oracle.hpp"

using namespace fbimcf;

namespace {

MbvpSolver make_euclid_solver(int n, double r_out = 16.0, double r0 = 1.0) {
  AmbientMetric m = AmbientMetric::euclidean();
  SupportGeometry plane = SupportGeometry::flat_plane();
  MeridianDomain dom = build_domain(hemisphere_meridian(r0), plane, r_out, 0.0);
  CurvilinearGrid grid = transfinite_grid(dom, n, n, r_out / r0);
  return MbvpSolver(m, grid);
}

Field eval_on_grid(const CurvilinearGrid& g, const std::function<double(double, double)>& f) {
  Field u(g.rho.size());
  for (size_t k = 0; k < u.size(); ++k) u[k] = f(g.rho[k], g.z[k]);
  return u;
}

// Analytic residual of the manufactured solution u = rho^2 + z^2 = r^2.
double mms_exact_F(double r, double eps, double delta, double gamma) {
  double S = std::sqrt(eps * eps + 4 * r * r);
  double div = 6.0 / S - 8.0 * r * r / (S * S * S);
  return div - std::pow(4 * r * r + delta * delta, 0.5 * gamma);
}

}  // namespace

TEST_CASE("manufactured solution: discrete operator is second order") {
  SolverConfig cfg;
  cfg.eps = 0.1;
  cfg.grad_floor = 1e-10;
  std::vector<double> errs, errs_bdry;
  for (int n : {24, 48, 96}) {
    MbvpSolver s = make_euclid_solver(n);
    const CurvilinearGrid& g = s.grid();
    Field u = eval_on_grid(g, [](double rho, double z) { return rho * rho + z * z; });
    Field F = s.residual(u, cfg);
    double err = 0, err_bdry = 0;
    for (int j = 1; j + 1 < g.nj; ++j)
      for (int i = 0; i < g.ni; ++i) {
        double r = std::hypot(g.rho[g.idx(i, j)], g.z[g.idx(i, j)]);
        double e = std::abs(F[g.idx(i, j)] - mms_exact_F(r, cfg.eps, cfg.grad_floor, cfg.gamma));
        if (i >= 1 && i + 1 < g.ni)
          err = std::max(err, e);
        else
          err_bdry = std::max(err_bdry, e);
      }
    errs.push_back(err);
    errs_bdry.push_back(err_bdry);
  }
  CHECK(errs[1] / errs[0] < 0.35);  // ~ 4x reduction per halving
  CHECK(errs[2] / errs[1] < 0.35);
  CHECK(errs_bdry[2] < errs_bdry[0]);  // closures converge as well
  CHECK(errs_bdry[2] < 0.1);
}

TEST_CASE("constant field: residual equals the gradient-floor source") {
  MbvpSolver s = make_euclid_solver(32);
  SolverConfig cfg;
  cfg.eps = 0.05;
  cfg.grad_floor = 1e-10;
  Field u(s.n_nodes(), 0.7);
  Field F = s.residual(u, cfg);
  const CurvilinearGrid& g = s.grid();
  for (int j = 1; j + 1 < g.nj; ++j)
    for (int i = 0; i < g.ni; ++i)
      CHECK(std::abs(F[g.idx(i, j)]) <= cfg.grad_floor * (1 + 1e-9));
}

TEST_CASE("exact hemisphere solution: residual vanishes at second order") {
  // u = 2 log|x| solves the eps = 0, gamma = 1 equation exactly.
  SolverConfig cfg;
  cfg.eps = 0.0;
  cfg.grad_floor = 0.0;
  std::vector<double> errs;
  for (int n : {24, 48, 96}) {
    MbvpSolver s = make_euclid_solver(n);
    const CurvilinearGrid& g = s.grid();
    Field u = eval_on_grid(g, [](double rho, double z) { return std::log(rho * rho + z * z); });
    Field F = s.residual(u, cfg);
    double err = 0;
    for (int j = 1; j + 1 < g.nj; ++j)
      for (int i = 1; i + 1 < g.ni; ++i) err = std::max(err, std::abs(F[g.idx(i, j)]));
    errs.push_back(err);
  }
  CHECK(errs[1] / errs[0] < 0.35);
  CHECK(errs[2] / errs[1] < 0.35);
}

TEST_CASE("solve: Euclidean hemisphere with natural outer data") {
  MbvpSolver s = make_euclid_solver(48);
  SolverConfig cfg;
  cfg.tau = 2 * std::log(16.0);
  cfg.eps_schedule = {0.2, 0.1, 0.05};
  auto stages = s.continuation_solve(cfg);
  REQUIRE(stages.size() == 3);
  for (const auto& st : stages) {
    CHECK(st.converged);
    CHECK(st.barrier.below_zero <= 1e-10);  // discrete maximum principle
    CHECK(st.barrier.above_tau <= 1e-10);
  }
  // Cauchy sequence in eps
  double d01 = 0, d12 = 0;
  for (int k = 0; k < s.n_nodes(); ++k) {
    d01 = std::max(d01, std::abs(stages[0].u[k] - stages[1].u[k]));
    d12 = std::max(d12, std::abs(stages[1].u[k] - stages[2].u[k]));
  }
  CHECK(d12 < d01);
  // Lipschitz proxy bounded across stages, close to the exact value 2/r0 = 2.
  for (const auto& st : stages) CHECK(st.max_grad < 2.5);

  const CurvilinearGrid& g = s.grid();
  double err = 0;
  for (int k = 0; k < s.n_nodes(); ++k) {
    double r = std::hypot(g.rho[k], g.z[k]);
    err = std::max(err, std::abs(stages.back().u[k] - 2 * std::log(r)));
  }
  CHECK(err < 0.15);
  CHECK(stages.back().barrier.grad_decay_constant > 1.6);
  CHECK(stages.back().barrier.grad_decay_constant < 2.4);
}

TEST_CASE("solve agrees with the independent 1D radial oracle") {
  SUBCASE("euclidean") {
    MbvpSolver s = make_euclid_solver(64);
    SolverConfig cfg;
    cfg.tau = 2 * std::log(16.0);
    cfg.eps = 0.05;
    SolveResult res = s.solve(cfg);
    REQUIRE(res.converged);

    radial_oracle::Problem p;
    p.r0 = 1;
    p.R = 16;
    p.eps = 0.05;
    p.tau = cfg.tau;
    auto rn = radial_oracle::nodes(p);
    auto ru = radial_oracle::solve(p);
    const CurvilinearGrid& g = s.grid();
    double err = 0;
    for (int k = 0; k < s.n_nodes(); ++k) {
      double r = std::hypot(g.rho[k], g.z[k]);
      err = std::max(err, std::abs(res.u[k] - radial_oracle::eval(p, rn, ru, r)));
    }
    CHECK(err < 0.02);
  }
  SUBCASE("schwarzschild") {
    AmbientMetric m = AmbientMetric::schwarzschild_halfspace(1.0);
    MeridianDomain dom =
        build_domain(hemisphere_meridian(1.0), SupportGeometry::flat_plane(), 16.0, 0.0);
    CurvilinearGrid grid = transfinite_grid(dom, 64, 64, 16.0);
    MbvpSolver s(m, grid);
    auto R = [](double r) { return r + 2 + 1.0 / r; };  // area radius, m = 1
    SolverConfig cfg;
    cfg.tau = 2 * std::log(R(16.0) / 4.0);
    cfg.eps = 0.05;
    SolveResult res = s.solve(cfg);
    REQUIRE(res.converged);

    radial_oracle::Problem p;
    p.r0 = 1;
    p.R = 16;
    p.eps = 0.05;
    p.tau = cfg.tau;
    p.phi = [](double r) { return 1.0 + 1.0 / r; };
    auto rn = radial_oracle::nodes(p);
    auto ru = radial_oracle::solve(p);
    double err = 0;
    for (int k = 0; k < s.n_nodes(); ++k) {
      double r = std::hypot(s.grid().rho[k], s.grid().z[k]);
      err = std::max(err, std::abs(res.u[k] - radial_oracle::eval(p, rn, ru, r)));
    }
    CHECK(err < 0.02);
  }
}

TEST_CASE("scale covariance: lambda-dilated domain with eps/lambda") {
  MbvpSolver sa = make_euclid_solver(40, 16.0, 1.0);
  MbvpSolver sb = make_euclid_solver(40, 32.0, 2.0);
  SolverConfig ca;
  ca.tau = 2 * std::log(16.0);
  ca.eps = 0.1;
  ca.r_out = 16;
  SolverConfig cb = ca;
  cb.eps = 0.05;
  cb.r0 = 2;
  cb.r_out = 32;
  SolveResult ra = sa.solve(ca);
  SolveResult rb = sb.solve(cb);
  REQUIRE(ra.converged);
  REQUIRE(rb.converged);
  double err = 0;
  for (int k = 0; k < sa.n_nodes(); ++k) err = std::max(err, std::abs(ra.u[k] - rb.u[k]));
  CHECK(err < 1e-6);  // grids are exact lambda-dilates node by node
}

TEST_CASE("comparison principle: larger tau gives a node-wise larger solution") {
  MbvpSolver s = make_euclid_solver(32);
  SolverConfig c1;
  c1.tau = 2.0;
  c1.eps = 0.1;
  SolverConfig c2 = c1;
  c2.tau = 2.5;
  SolveResult r1 = s.solve(c1);
  SolveResult r2 = s.solve(c2);
  REQUIRE(r1.converged);
  REQUIRE(r2.converged);
  double worst = 0;
  for (int k = 0; k < s.n_nodes(); ++k) worst = std::max(worst, r1.u[k] - r2.u[k]);
  CHECK(worst <= 1e-8);
}

TEST_CASE("paper mode: subsolution barrier and outer gradient bound") {
  double eps = 1.0 / 64.0;  // R_eps = 16
  SolverConfig cfg = SolverConfig::paper_mode(eps, 1.0);
  CHECK(cfg.r_out == doctest::Approx(16.0));
  MbvpSolver s = make_euclid_solver(48, cfg.r_out, 1.0);
  SolveResult res = s.solve(cfg);
  REQUIRE(res.converged);
  CHECK(res.barrier.subsolution_regime);
  CHECK(res.barrier.subsolution_violation < 0.05);
  CHECK(res.barrier.below_zero <= 1e-10);
  CHECK(res.barrier.above_tau <= 1e-10);
  // |grad u| <= c/(4 R_eps) on the outer boundary with c <= 2
  CHECK(res.barrier.outer_grad_max <= 2.0 / (4 * cfg.paper_r_eps()));
}

TEST_CASE("config validation and non-convergence diagnostics") {
  SolverConfig cfg;
  cfg.eps = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SolverConfig{};
  cfg.mode = SolverConfig::Mode::paper;
  cfg.eps = 1.0 / 64;
  cfg.r_out = 16;
  cfg.tau = 0.75;  // >= Z_eps = log(16)/4
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  MbvpSolver s = make_euclid_solver(24);
  SolverConfig c2;
  c2.eps = 0.2;
  c2.tau = 2.0;
  c2.max_iter = 2;  // forces non-convergence
  SolveResult r = s.solve(c2);
  CHECK(!r.converged);
  CHECK(r.residual_history.size() >= 2);
}
