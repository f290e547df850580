// Pass/fail property checks assembled from flow tables and mass estimates:
// exponential area growth, Hawking-mass monotonicity, the discrete Geroch
// inequality, the Penrose inequalities, blowdown roundness and gradient
// decay.  Every check is normalized to "measured <= bound" with
// slack = bound - measured, so reports are exactly recomputable.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fbimcf/levelset.hpp"
#include "fbimcf/mass.hpp"

namespace fbimcf {

struct CheckEntry {
  std::string name;
  double measured = 0;
  double bound = 0;
  double slack = 0;  // bound - measured
  bool pass = false;
};

struct VerificationReport {
  std::vector<CheckEntry> entries;
  void add(const std::string& name, double measured, double bound);
  bool all_pass() const;
  std::string to_text() const;  // one line per check
};

struct FlowCheckTols {
  double area_rel = 0.02;  // | |S_t| e^-t / |S_0| - 1 |
  double mono = 0.01;      // backward steps of m_H
  double geroch = 0.02;    // RHS_trapezoid - dm_H per consecutive pair
};

void check_flow(VerificationReport& rep, const std::vector<SurfaceDiagnostics>& rows,
                const FlowCheckTols& tols);

struct PenroseTols {
  double tol = 0.01;
};

// sigma0: diagnostics of the free-boundary minimal leaf; m_ext optional.
void check_penrose(VerificationReport& rep, const MassEstimate& adm,
                   const SurfaceDiagnostics& sigma0, const std::vector<SurfaceDiagnostics>& rows,
                   const std::optional<MassEstimate>& ext, const PenroseTols& tols);

struct BlowdownTols {
  double shape = 0.05;          // sup | |x|/mean - 1 | of late rescaled leaves
  double ecc_trend = 0.02;      // eccentricity increase allowance after t >= 1
  double t_late = 3.0;          // leaves with t >= t_late are "late"
  double grad_decay_cap = 4.0;  // bound on max |grad u|_g |x - x0|
};

void check_blowdown(VerificationReport& rep, const std::vector<SurfaceDiagnostics>& rows,
                    double grad_decay_constant, const BlowdownTols& tols);

}  // namespace fbimcf
