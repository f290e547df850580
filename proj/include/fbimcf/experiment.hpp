// Experiment assembly: configuration -> metric, support, domain, grid,
// solver, and the standard pipelines behind the CLI subcommands.

#pragma once

#include <memory>
#include <optional>

#include "fbimcf/config.hpp"
#include "fbimcf/levelset.hpp"
#include "fbimcf/mass.hpp"
#include "fbimcf/smoothflow.hpp"
#include "fbimcf/solver.hpp"
#include "fbimcf/verify.hpp"

namespace fbimcf {

struct Experiment {
  ExperimentConfig cfg;
  AmbientMetric metric = AmbientMetric::euclidean();
  SupportGeometry support = SupportGeometry::flat_plane();
  Curve2 initial;
  double r0 = 1;  // initial surface scale
  MeridianDomain domain;
  CurvilinearGrid grid;
  std::unique_ptr<MbvpSolver> solver;

  static Experiment make(const ExperimentConfig& cfg);

  double natural_tau() const;
  SolverConfig solver_config() const;
  std::vector<double> t_schedule(double tau) const;
  FlowTableOptions flow_options() const;

  // Exact radial solution (Euclidean / Schwarzschild at the natural tau).
  std::optional<double> exact_u(const Vec2& p) const;
  // Area radius of the coordinate sphere r (conformal metrics).
  double area_radius(double r) const;
};

struct PipelineResult {
  std::vector<SolveResult> stages;
  FlowTable table;
  std::optional<MassEstimate> adm;
  std::optional<MassEstimate> ext;
  VerificationReport report;
  const SolveResult& final() const { return stages.back(); }
};

// Continuation solve + flow table (+ masses and checks when requested).
PipelineResult run_pipeline(const Experiment& ex, bool with_masses, bool with_checks);

void write_artifacts(const Experiment& ex, const PipelineResult& pr, const std::string& out_dir);

// Refinement/continuation study used by the convergence subcommand.
struct ConvergenceRow {
  int ni = 0, nj = 0;
  double eps = 0, h = 0;
  double err_exact = -1;        // inf-norm vs the exact solution, offset-adjusted
  double subsol_violation = 0;  // paper-mode barrier deficit
  double subsol_constant = 0;   // violation / h
  double grad_decay = 0;        // max |grad u|_g |x - x0|
  double outer_grad_ratio = 0;  // max outer |grad u|_g * 4 R_eps (paper mode)
};

std::vector<ConvergenceRow> convergence_study(const ExperimentConfig& cfg, int levels = 3);
void write_convergence_csv(const std::vector<ConvergenceRow>& rows, const std::string& path);

// Error of u against the exact solution after fitting an additive offset.
double sup_error_offset_adjusted(const Experiment& ex, const Field& u);

}  // namespace fbimcf
