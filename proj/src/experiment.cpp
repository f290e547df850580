#include "fbimcf/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace fbimcf {

Experiment Experiment::make(const ExperimentConfig& cfg) {
  cfg.validate();
  Experiment ex;
  ex.cfg = cfg;
  ex.metric = cfg.metric == "schwarzschild" ? AmbientMetric::schwarzschild_halfspace(cfg.mass)
                                            : AmbientMetric::euclidean();
  ex.support = cfg.support == "catenoid" ? SupportGeometry::catenoid(cfg.support_mass)
                                         : SupportGeometry::flat_plane();
  std::string initial = cfg.initial;
  if (initial == "minimal_disc")
    initial = cfg.metric == "schwarzschild" ? "hemisphere" : "neck_disc";
  if (initial == "hemisphere") {
    ex.r0 = cfg.initial == "minimal_disc" ? cfg.mass : cfg.radius;
    ex.initial = hemisphere_meridian(ex.r0);
  } else {
    ex.r0 = cfg.support_mass;
    ex.initial = neck_disc_meridian(ex.r0);
  }

  double r_out = cfg.r_out;
  if (cfg.mode == "paper") {
    if (cfg.eps_schedule.size() != 1)
      throw ConfigError("config: paper mode runs a single eps (schedule of length 1)");
    r_out = 1.0 / (4.0 * cfg.eps_schedule.back());
    if (!(r_out > 2 * ex.r0))
      throw ConfigError("config: paper mode needs eps small enough that R_eps > 2 r0");
  }
  ex.domain = build_domain(ex.initial, ex.support, r_out, cfg.gamma_offset);
  double stretch = cfg.stretch > 0 ? cfg.stretch : std::max(1.0, r_out / ex.r0);
  ex.grid = transfinite_grid(ex.domain, cfg.ni, cfg.nj, stretch);
  ex.solver = std::make_unique<MbvpSolver>(ex.metric, ex.grid);
  ex.solver->set_gamma_offset(cfg.gamma_offset);
  return ex;
}

double Experiment::area_radius(double r) const {
  double phi = metric.conformal_factor(Vec3(r, 0, 0));
  return r * phi * phi;
}

double Experiment::natural_tau() const {
  double r_out = domain.r_out;
  if (cfg.support == "catenoid")
    return std::log(2 * r_out * r_out / (cfg.support_mass * cfg.support_mass)) - 0.5;
  if (cfg.metric == "schwarzschild")
    return 2 * std::log(area_radius(r_out) / area_radius(r0));
  return 2 * std::log(r_out / r0);
}

SolverConfig Experiment::solver_config() const {
  SolverConfig sc;
  sc.eps = cfg.eps_schedule.back();
  sc.eps_schedule = cfg.eps_schedule;
  sc.gamma = cfg.gamma;
  sc.grad_floor = cfg.grad_floor;
  sc.relax = cfg.relax;
  sc.max_iter = cfg.max_iter;
  sc.tol_residual = cfg.tol_residual;
  sc.tol_update = cfg.tol_update;
  sc.use_newton = cfg.newton;
  sc.r0 = r0;
  sc.r_out = domain.r_out;
  if (cfg.mode == "paper") {
    sc.mode = SolverConfig::Mode::paper;
    sc.tau = cfg.tau > 0 ? cfg.tau : sc.paper_z_eps() * (1 - 1e-12);
  } else {
    sc.mode = SolverConfig::Mode::fixed_domain;
    sc.tau = cfg.tau > 0 ? cfg.tau : natural_tau();
  }
  sc.validate();
  return sc;
}

std::vector<double> Experiment::t_schedule(double tau) const {
  double stop = cfg.t_stop > 0 ? cfg.t_stop : tau - cfg.margin_high;
  std::vector<double> ts;
  for (double t = cfg.t_start; t <= stop + 1e-12; t += cfg.t_step) ts.push_back(t);
  return ts;
}

FlowTableOptions Experiment::flow_options() const {
  FlowTableOptions fo;
  fo.margin_low = cfg.margin_low;
  fo.margin_high = cfg.margin_high;
  fo.ecc_center = Vec2(0, -cfg.lambda_center);
  fo.include_initial = true;
  return fo;
}

std::optional<double> Experiment::exact_u(const Vec2& p) const {
  if (cfg.tau > 0 || cfg.support == "catenoid" || cfg.gamma_offset != 0) return std::nullopt;
  double r = p.norm();
  if (cfg.metric == "schwarzschild")
    return 2 * std::log(area_radius(r) / area_radius(r0));
  return 2 * std::log(r / r0);
}

double sup_error_offset_adjusted(const Experiment& ex, const Field& u) {
  const CurvilinearGrid& g = ex.solver->grid();
  double lo = 1e300, hi = -1e300;
  for (int k = 0; k < int(u.size()); ++k) {
    auto ue = ex.exact_u(Vec2(g.rho[k], g.z[k]));
    if (!ue) return -1;
    double d = u[k] - *ue;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return 0.5 * (hi - lo);  // best additive offset halves the spread
}

PipelineResult run_pipeline(const Experiment& ex, bool with_masses, bool with_checks) {
  PipelineResult pr;
  SolverConfig sc = ex.solver_config();
  if (sc.mode == SolverConfig::Mode::paper) {
    pr.stages.push_back(ex.solver->solve(sc));
  } else {
    pr.stages = ex.solver->continuation_solve(sc);
  }
  if (pr.stages.empty() || !pr.stages.back().converged) {
    std::string hist;
    for (double r : pr.stages.empty() ? std::vector<double>{} : pr.stages.back().residual_history)
      hist += " " + num(r);
    throw SolveError("solver did not converge; residual history:" + hist);
  }
  const SolveResult& fin = pr.stages.back();

  pr.table = flow_table(*ex.solver, fin.u, ex.t_schedule(sc.tau), ex.support,
                        ex.flow_options(), &ex.initial);

  if (with_masses) {
    if (ex.cfg.support == "catenoid") {
      ChartMap chart = support_chart(ex.support, ex.cfg.chart_shells);
      AmbientMetric pulled = chart.pullback_metric();
      pr.adm = adm_mass(pulled, ex.cfg.chart_shells, 128, 256);
      pr.ext = exterior_mass(ex.support, ex.cfg.mass_radii);
    } else {
      pr.adm = adm_mass(ex.metric, ex.cfg.mass_radii);
    }
  }

  if (with_checks) {
    VerificationReport& rep = pr.report;
    rep.add("max_principle", std::max(fin.barrier.above_tau, fin.barrier.below_zero), 1e-10);
    FlowCheckTols ft;
    ft.area_rel = ex.cfg.tol_area_rel;
    ft.mono = ex.cfg.tol_mono;
    ft.geroch = ex.cfg.geroch_coef * (ex.solver->h_max() + sc.eps);
    check_flow(rep, pr.table.rows, ft);
    if (pr.adm) {
      PenroseTols pt;
      pt.tol = ex.cfg.tol_penrose;
      if (pr.table.rows.empty() || pr.table.rows.front().t != 0)
        throw SolveError("verify: missing initial-surface row");
      check_penrose(rep, *pr.adm, pr.table.rows.front(), pr.table.rows, pr.ext, pt);
    }
    if (ex.cfg.blowdown) {
      BlowdownTols bt;
      bt.shape = ex.cfg.tol_shape;
      bt.ecc_trend = ex.cfg.tol_ecc_trend;
      bt.t_late = ex.cfg.t_late;
      bt.grad_decay_cap = ex.cfg.grad_decay_cap;
      check_blowdown(rep, pr.table.rows, fin.barrier.grad_decay_constant, bt);
    }
  }
  return pr;
}

void write_artifacts(const Experiment& ex, const PipelineResult& pr, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const SolveResult& fin = pr.final();
  const CurvilinearGrid& g = ex.solver->grid();

  {
    std::ofstream out(out_dir + "/field.txt");
    out << "# i j rho z u grad_norm_g\n";
    Field gn = ex.solver->grad_norm_g(fin.u);
    for (int j = 0; j < g.nj; ++j)
      for (int i = 0; i < g.ni; ++i) {
        int k = g.idx(i, j);
        out << i << " " << j << " " << num(g.rho[k]) << " " << num(g.z[k]) << " "
            << num(fin.u[k]) << " " << num(gn[k]) << "\n";
      }
  }
  {
    std::ofstream out(out_dir + "/barrier.txt");
    const BarrierReport& b = fin.barrier;
    out << "subsolution_violation " << num(b.subsolution_violation) << "\n"
        << "subsolution_regime " << (b.subsolution_regime ? 1 : 0) << "\n"
        << "grad_decay_constant " << num(b.grad_decay_constant) << "\n"
        << "above_tau " << num(b.above_tau) << "\n"
        << "below_zero " << num(b.below_zero) << "\n"
        << "outer_grad_max " << num(b.outer_grad_max) << "\n"
        << "max_grad " << num(fin.max_grad) << "\n";
  }
  write_flow_csv(pr.table, out_dir + "/flow.csv");
  for (size_t k = 0; k < pr.table.curves.size(); ++k)
    write_contour(pr.table.curves[k], out_dir + "/contour_" + num(pr.table.rows[k].t, "%.4f") +
                                          ".txt");
  if (pr.adm) write_mass_csv(*pr.adm, out_dir + "/masses.csv");
  if (pr.ext) write_mass_csv(*pr.ext, out_dir + "/exterior_mass.csv");
  if (!pr.report.entries.empty()) {
    std::ofstream out(out_dir + "/report.txt");
    out << pr.report.to_text();
  }
  if (ex.cfg.dump_grid) g.dump(out_dir + "/grid.txt");
  if (!pr.table.warnings.empty()) {
    std::ofstream out(out_dir + "/warnings.txt");
    for (const auto& w : pr.table.warnings) out << w << "\n";
  }
}

std::vector<ConvergenceRow> convergence_study(const ExperimentConfig& cfg, int levels) {
  std::vector<ConvergenceRow> rows;
  for (int l = 0; l < levels; ++l) {
    double scale = std::pow(2.0, l) / std::pow(2.0, levels - 1);  // ... 1/4, 1/2, 1
    ExperimentConfig c = cfg;
    c.ni = std::max(8, int(std::lround(cfg.ni * scale)));
    c.nj = std::max(8, int(std::lround(cfg.nj * scale)));
    double eps_fin = cfg.eps_schedule.back() / scale;
    if (cfg.mode == "paper") {
      c.eps_schedule = {cfg.eps_schedule.back()};  // paper couples R_eps = 1/(4 eps)
    } else {
      c.eps_schedule.clear();
      for (double e = 8 * eps_fin; e > eps_fin * 1.5; e /= 2) c.eps_schedule.push_back(e);
      c.eps_schedule.push_back(eps_fin);
    }
    Experiment ex = Experiment::make(c);
    SolverConfig sc = ex.solver_config();
    SolveResult res;
    if (sc.mode == SolverConfig::Mode::paper) {
      res = ex.solver->solve(sc);
    } else {
      auto stages = ex.solver->continuation_solve(sc);
      if (stages.empty() || !stages.back().converged)
        throw SolveError("convergence_study: stage failed at level " + std::to_string(l));
      res = std::move(stages.back());
    }
    ConvergenceRow row;
    row.ni = c.ni;
    row.nj = c.nj;
    row.eps = sc.eps;
    row.h = ex.solver->h_max();
    row.err_exact = sup_error_offset_adjusted(ex, res.u);
    row.subsol_violation = res.barrier.subsolution_violation;
    row.subsol_constant = res.barrier.subsolution_violation / row.h;
    row.grad_decay = res.barrier.grad_decay_constant;
    if (sc.mode == SolverConfig::Mode::paper)
      row.outer_grad_ratio = res.barrier.outer_grad_max * 4 * sc.paper_r_eps();
    rows.push_back(row);
  }
  return rows;
}

void write_convergence_csv(const std::vector<ConvergenceRow>& rows, const std::string& path) {
  std::ofstream out(path);
  out << "ni,nj,eps,h,err_exact,subsol_violation,subsol_constant,grad_decay,outer_grad_ratio\n";
  for (const auto& r : rows)
    out << r.ni << "," << r.nj << "," << num(r.eps) << "," << num(r.h) << "," << num(r.err_exact)
        << "," << num(r.subsol_violation) << "," << num(r.subsol_constant) << ","
        << num(r.grad_decay) << "," << num(r.outer_grad_ratio) << "\n";
}

}  // namespace fbimcf
