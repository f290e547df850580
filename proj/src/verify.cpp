#include "fbimcf/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fbimcf {

void VerificationReport::add(const std::string& name, double measured, double bound) {
  CheckEntry e;
  e.name = name;
  e.measured = measured;
  e.bound = bound;
  e.slack = bound - measured;
  e.pass = e.slack >= 0;
  entries.push_back(e);
}

bool VerificationReport::all_pass() const {
  for (const auto& e : entries)
    if (!e.pass) return false;
  return true;
}

std::string VerificationReport::to_text() const {
  std::ostringstream os;
  for (const auto& e : entries)
    os << e.name << " measured=" << num(e.measured) << " bound=" << num(e.bound)
       << " slack=" << num(e.slack) << " " << (e.pass ? "PASS" : "FAIL") << "\n";
  return os.str();
}

void check_flow(VerificationReport& rep, const std::vector<SurfaceDiagnostics>& rows,
                const FlowCheckTols& tols) {
  if (rows.size() < 3) throw ConfigError("check_flow: need at least 3 table rows");

  double ref = rows.front().area * std::exp(-rows.front().t);
  double worst_area = 0;
  for (const auto& r : rows)
    worst_area = std::max(worst_area, std::abs(r.area * std::exp(-r.t) / ref - 1));
  rep.add("area_growth", worst_area, tols.area_rel);

  double worst_mono = 0;
  for (size_t k = 0; k + 1 < rows.size(); ++k)
    worst_mono = std::max(worst_mono, rows[k].hawking_mass - rows[k + 1].hawking_mass);
  rep.add("hawking_monotone", std::max(0.0, worst_mono), tols.mono);

  // Discrete Geroch inequality: dm_H >= trapezoid of the RHS, per pair.
  double worst_geroch = 0;
  int pairs = 0;
  const double pref_den = std::pow(16 * kPi, 1.5);
  for (size_t k = 0; k + 1 < rows.size(); ++k) {
    if (!rows[k].geroch_valid || !rows[k + 1].geroch_valid) continue;
    double fa = std::sqrt(2 * rows[k].area) / pref_den * rows[k].geroch_integrand;
    double fb = std::sqrt(2 * rows[k + 1].area) / pref_den * rows[k + 1].geroch_integrand;
    double rhs = 0.5 * (fa + fb) * (rows[k + 1].t - rows[k].t);
    double lhs = rows[k + 1].hawking_mass - rows[k].hawking_mass;
    worst_geroch = std::max(worst_geroch, rhs - lhs);
    ++pairs;
  }
  if (pairs > 0) rep.add("geroch_inequality", std::max(0.0, worst_geroch), tols.geroch);
}

void check_penrose(VerificationReport& rep, const MassEstimate& adm,
                   const SurfaceDiagnostics& sigma0, const std::vector<SurfaceDiagnostics>& rows,
                   const std::optional<MassEstimate>& ext, const PenroseTols& tols) {
  double rhs = std::sqrt(sigma0.area / (32 * kPi));
  rep.add("penrose", rhs - adm.value, tols.tol);
  if (ext) {
    double rhs_s = std::sqrt(sigma0.area / (2 * kPi));
    rep.add("penrose_support", rhs_s - ext->value, tols.tol);
  }
  double sup_mh = -1e300;
  for (const auto& r : rows) sup_mh = std::max(sup_mh, r.hawking_mass);
  rep.add("sup_hawking_vs_adm", sup_mh - adm.value, tols.tol);
}

void check_blowdown(VerificationReport& rep, const std::vector<SurfaceDiagnostics>& rows,
                    double grad_decay_constant, const BlowdownTols& tols) {
  double late_shape = 0;
  bool any_late = false;
  for (const auto& r : rows)
    if (r.t >= tols.t_late) {
      late_shape = std::max(late_shape, r.shape_deviation);
      any_late = true;
    }
  if (any_late) rep.add("blowdown_shape", late_shape, tols.shape);

  double worst_trend = 0;
  const SurfaceDiagnostics* prev = nullptr;
  for (const auto& r : rows) {
    if (r.t < 1.0) continue;
    if (prev) worst_trend = std::max(worst_trend, r.eccentricity - prev->eccentricity);
    prev = &r;
  }
  if (prev) rep.add("eccentricity_trend", std::max(0.0, worst_trend), tols.ecc_trend);

  rep.add("gradient_decay", grad_decay_constant, tols.grad_decay_cap);
}

}  // namespace fbimcf
