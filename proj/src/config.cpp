#include "fbimcf/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

namespace fbimcf {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (...) {
    throw ConfigError("config: bad numeric value for " + key + ": '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  double d = to_double(key, v);
  if (d != int(d)) throw ConfigError("config: expected integer for " + key);
  return int(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("config: expected 0/1 for " + key);
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig c;
  std::map<std::string, std::function<void(const std::string&)>> setters;
  auto d = [&](const char* k, double* p) { setters[k] = [k, p](const std::string& v) { *p = to_double(k, v); }; };
  auto i = [&](const char* k, int* p) { setters[k] = [k, p](const std::string& v) { *p = to_int(k, v); }; };
  auto b = [&](const char* k, bool* p) { setters[k] = [k, p](const std::string& v) { *p = to_bool(k, v); }; };
  auto s = [&](const char* k, std::string* p) { setters[k] = [p](const std::string& v) { *p = v; }; };
  auto l = [&](const char* k, std::vector<double>* p) {
    setters[k] = [k, p](const std::string& v) { *p = to_list(k, v); };
  };

  s("metric", &c.metric);
  d("mass", &c.mass);
  s("support", &c.support);
  d("support_mass", &c.support_mass);
  s("initial", &c.initial);
  d("radius", &c.radius);
  d("r_out", &c.r_out);
  d("gamma_offset", &c.gamma_offset);
  i("ni", &c.ni);
  i("nj", &c.nj);
  d("stretch", &c.stretch);
  l("eps_schedule", &c.eps_schedule);
  d("gamma", &c.gamma);
  d("tau", &c.tau);
  s("mode", &c.mode);
  d("grad_floor", &c.grad_floor);
  d("relax", &c.relax);
  i("max_iter", &c.max_iter);
  d("tol_residual", &c.tol_residual);
  d("tol_update", &c.tol_update);
  b("newton", &c.newton);
  d("t_start", &c.t_start);
  d("t_step", &c.t_step);
  d("t_stop", &c.t_stop);
  d("margin_low", &c.margin_low);
  d("margin_high", &c.margin_high);
  d("lambda_center", &c.lambda_center);
  l("mass_radii", &c.mass_radii);
  l("chart_shells", &c.chart_shells);
  d("tol_area_rel", &c.tol_area_rel);
  d("tol_mono", &c.tol_mono);
  d("geroch_coef", &c.geroch_coef);
  d("tol_penrose", &c.tol_penrose);
  d("tol_shape", &c.tol_shape);
  d("tol_ecc_trend", &c.tol_ecc_trend);
  d("grad_decay_cap", &c.grad_decay_cap);
  b("blowdown", &c.blowdown);
  d("t_late", &c.t_late);
  s("smooth_kind", &c.smooth_kind);
  i("smooth_n", &c.smooth_n);
  d("smooth_dt", &c.smooth_dt);
  d("smooth_t_end", &c.smooth_t_end);
  d("smooth_offset", &c.smooth_offset);
  s("out_dir", &c.out_dir);
  b("dump_grid", &c.dump_grid);

  std::stringstream ss(text);
  std::string line;
  bool schema_seen = false;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " is not key=value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (!schema_seen) {
      if (key != "schema" || val != "1")
        throw ConfigError("config: first entry must be schema=1");
      schema_seen = true;
      continue;
    }
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second(val);
  }
  if (!schema_seen) throw ConfigError("config: missing schema=1 header");
  c.validate();
  return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void ExperimentConfig::validate() const {
  if (metric != "euclidean" && metric != "schwarzschild")
    throw ConfigError("config: metric must be euclidean or schwarzschild");
  if (support != "plane" && support != "catenoid")
    throw ConfigError("config: support must be plane or catenoid");
  if (initial != "hemisphere" && initial != "neck_disc" && initial != "minimal_disc")
    throw ConfigError("config: initial must be hemisphere, neck_disc or minimal_disc");
  if (metric == "schwarzschild" && !(mass > 0)) throw ConfigError("config: mass must be positive");
  if (support == "catenoid" && !(support_mass > 0))
    throw ConfigError("config: support_mass must be positive");
  if (initial == "neck_disc" && support != "catenoid")
    throw ConfigError("config: neck_disc start requires the catenoid support");
  if (initial == "minimal_disc") {
    if (metric == "schwarzschild" && support != "plane")
      throw ConfigError("config: the Schwarzschild minimal disc lives over the flat plane");
    if (metric == "euclidean" && support != "catenoid")
      throw ConfigError("config: minimal_disc requires the Schwarzschild metric or the catenoid support");
  }
  if (initial == "hemisphere" && !(radius > 0)) throw ConfigError("config: radius must be positive");
  if (support == "catenoid" && metric != "euclidean")
    throw ConfigError("config: the catenoid support is Euclidean-only");
  if (!(r_out > 0)) throw ConfigError("config: r_out must be positive");
  if (ni < 8 || nj < 8) throw ConfigError("config: grid must be at least 8x8");
  if (eps_schedule.empty()) throw ConfigError("config: eps_schedule must not be empty");
  for (size_t k = 1; k < eps_schedule.size(); ++k)
    if (!(eps_schedule[k] < eps_schedule[k - 1]))
      throw ConfigError("config: eps_schedule must be strictly decreasing");
  if (mode != "fixed" && mode != "paper") throw ConfigError("config: mode must be fixed or paper");
  if (!(gamma >= 1)) throw ConfigError("config: gamma must be >= 1");
  if (!(t_step > 0)) throw ConfigError("config: t_step must be positive");
  if (smooth_kind != "hemisphere" && smooth_kind != "catenoid_singularity" &&
      smooth_kind != "plane_control")
    throw ConfigError("config: unknown smooth_kind");
}

}  // namespace fbimcf
