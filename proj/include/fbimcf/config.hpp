// Flat key=value experiment configuration (schema=1).  Unknown keys are
// rejected; cross-field consistency is validated before a run starts.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "fbimcf/util.hpp"

namespace fbimcf {

struct ExperimentConfig {
  // geometry
  std::string metric = "euclidean";  // euclidean | schwarzschild
  double mass = 1.0;                 // schwarzschild parameter
  std::string support = "plane";     // plane | catenoid
  double support_mass = 1.0;
  std::string initial = "hemisphere";  // hemisphere | neck_disc | minimal_disc
  double radius = 1.0;                 // initial surface scale
  double r_out = 16.0;
  double gamma_offset = 0.0;

  // grid
  int ni = 128, nj = 128;
  double stretch = -1;  // < 0: auto (r_out / radius)

  // solver
  std::vector<double> eps_schedule{0.2, 0.1, 0.05, 0.025, 0.0125};
  double gamma = 1.0;
  double tau = -1;  // < 0: auto (natural outer value)
  std::string mode = "fixed";  // fixed | paper
  double grad_floor = 1e-10;
  double relax = 0.7;
  int max_iter = 200;
  double tol_residual = 1e-9;
  double tol_update = 1e-10;
  bool newton = true;

  // flow table
  double t_start = 0.25, t_step = 0.25;
  double t_stop = -1;  // < 0: auto (tau - margin_high)
  double margin_low = 0.25, margin_high = 0.5;
  double lambda_center = 0.0;  // eccentricity balls centred at -lambda e3

  // masses
  std::vector<double> mass_radii{50, 100, 200, 400};
  std::vector<double> chart_shells{40, 80, 160};

  // verification tolerances
  double tol_area_rel = 0.02;
  double tol_mono = 0.01;
  double geroch_coef = 2.0;  // geroch slack = coef * (h + eps_final)
  double tol_penrose = 0.01;
  double tol_shape = 0.05;
  double tol_ecc_trend = 0.02;
  double grad_decay_cap = 4.0;
  bool blowdown = true;
  double t_late = 3.0;

  // smoothflow
  std::string smooth_kind = "hemisphere";  // hemisphere | catenoid_singularity | plane_control
  int smooth_n = 200;
  double smooth_dt = 1e-3;
  double smooth_t_end = 1.0;
  double smooth_offset = 0.05;

  // io
  std::string out_dir = "out";
  bool dump_grid = false;

  void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

}  // namespace fbimcf
