// fbimcf: experiment runner for the free-boundary inverse-mean-curvature
// level-set solver on asymptotically flat half-spaces.
//
// Subcommands:
//   solve        continuation solve, dump field + barrier report
//   flow         solve + leaf diagnostics CSV + contour files
//   masses       ADM / exterior mass quadrature CSV
//   smooth       parametric smooth flow histories
//   verify       full pipeline + verification report (exit 0 iff all PASS)
//   convergence  refinement study table
//
// Exit codes: 0 ok, 1 verification failure, 2 config error, 3 solver failure.

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fbimcf/experiment.hpp"

using namespace fbimcf;

namespace {

int usage() {
  std::cerr << "usage: fbimcf <solve|flow|masses|smooth|verify|convergence> --config FILE"
               " [--out DIR]\n";
  return 2;
}

void run_smooth(const ExperimentConfig& cfg, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  FlowOptions fo;
  SingularityReport rep;
  if (cfg.smooth_kind == "catenoid_singularity") {
    rep = run_catenoid_singularity(cfg.support_mass, cfg.smooth_offset, cfg.smooth_n, fo, 1.2,
                                   cfg.smooth_t_end);
  } else if (cfg.smooth_kind == "plane_control") {
    ParamCurve cat = cap_on_catenoid(cfg.support_mass, cfg.smooth_offset, cfg.smooth_n);
    SupportGeometry catsup = SupportGeometry::catenoid(cfg.support_mass);
    curve_geometry(cat, catsup);
    double h0 = *std::max_element(cat.H.begin(), cat.H.end());
    ParamCurve start = cap_on_plane(h0, cfg.smooth_n);
    rep = run_flow(std::move(start), SupportGeometry::flat_plane(), fo, cfg.smooth_t_end);
  } else {
    ParamCurve start = hemisphere_curve(cfg.radius, cfg.smooth_n);
    rep = run_flow(std::move(start), SupportGeometry::flat_plane(), fo, cfg.smooth_t_end);
  }
  write_history_csv(rep, out_dir + "/smooth_history.csv");
  write_curve(rep.final, out_dir + "/smooth_final.txt");
  const char* reasons[] = {"none",        "h_floor",     "curvature_blowup", "dt_underflow",
                           "target_area", "target_time", "step_budget"};
  std::cout << "smooth " << cfg.smooth_kind << ": t_star=" << num(rep.t_star)
            << " stop=" << reasons[int(rep.reason)] << " steps=" << rep.steps
            << " supH_end=" << num(rep.sup_H.back());
  if (rep.comparison_H0 > 0)
    std::cout << " H0=" << num(rep.comparison_H0)
              << " reached_comparison=" << (rep.reached_comparison ? 1 : 0);
  std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return usage();
  std::string cmd = argv[1];
  std::string config_path, out_override;
  for (int a = 2; a < argc; ++a) {
    if (!std::strcmp(argv[a], "--config") && a + 1 < argc)
      config_path = argv[++a];
    else if (!std::strcmp(argv[a], "--out") && a + 1 < argc)
      out_override = argv[++a];
    else {
      std::cerr << "unknown argument: " << argv[a] << "\n";
      return 2;
    }
  }
  if (config_path.empty()) return usage();

  try {
    ExperimentConfig cfg = parse_config_file(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    const std::string out = cfg.out_dir;

    if (cmd == "masses") {
      std::filesystem::create_directories(out);
      if (cfg.support == "catenoid") {
        SupportGeometry sup = SupportGeometry::catenoid(cfg.support_mass);
        ChartMap chart = support_chart(sup, cfg.chart_shells);
        MassEstimate adm = adm_mass(chart.pullback_metric(), cfg.chart_shells, 128, 256);
        MassEstimate ext = exterior_mass(sup, cfg.mass_radii);
        write_mass_csv(adm, out + "/masses.csv");
        write_mass_csv(ext, out + "/exterior_mass.csv");
        std::cout << "m_ADM(pullback)=" << num(adm.value) << " m_ext=" << num(ext.value) << "\n";
      } else {
        AmbientMetric m = cfg.metric == "schwarzschild"
                              ? AmbientMetric::schwarzschild_halfspace(cfg.mass)
                              : AmbientMetric::euclidean();
        MassEstimate adm = adm_mass(m, cfg.mass_radii);
        write_mass_csv(adm, out + "/masses.csv");
        std::cout << "m_ADM=" << num(adm.value) << " residual=" << num(adm.fit_residual) << "\n";
      }
      return 0;
    }
    if (cmd == "smooth") {
      run_smooth(cfg, out);
      return 0;
    }
    if (cmd == "convergence") {
      auto rows = convergence_study(cfg);
      std::filesystem::create_directories(out);
      write_convergence_csv(rows, out + "/convergence.csv");
      for (const auto& r : rows)
        std::cout << "grid " << r.ni << "x" << r.nj << " eps=" << num(r.eps) << " h=" << num(r.h)
                  << " err=" << num(r.err_exact) << " subsol_C=" << num(r.subsol_constant)
                  << " grad_decay=" << num(r.grad_decay) << "\n";
      return 0;
    }

    Experiment ex = Experiment::make(cfg);
    if (cmd == "solve") {
      PipelineResult pr = run_pipeline(ex, false, false);
      write_artifacts(ex, pr, out);
      const BarrierReport& b = pr.final().barrier;
      std::cout << "solve: eps=" << num(pr.final().cfg.eps)
                << " iters=" << pr.final().iterations
                << " residual=" << num(pr.final().final_residual)
                << " max_grad=" << num(pr.final().max_grad)
                << " subsol_violation=" << num(b.subsolution_violation) << "\n";
      return 0;
    }
    if (cmd == "flow") {
      PipelineResult pr = run_pipeline(ex, false, false);
      write_artifacts(ex, pr, out);
      std::cout << "flow: " << pr.table.rows.size() << " leaves, warnings="
                << pr.table.warnings.size() << "\n";
      return 0;
    }
    if (cmd == "verify") {
      PipelineResult pr = run_pipeline(ex, true, true);
      write_artifacts(ex, pr, out);
      std::cout << pr.report.to_text();
      return pr.report.all_pass() ? 0 : 1;
    }
    return usage();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SolveError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
