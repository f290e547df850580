// Small shared utilities: error types, root finding, numeric formatting.

#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbimcf {

inline constexpr double kPi = 3.14159265358979323846;

// Configuration / precondition violations surfaced to the CLI as exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Solver non-convergence, surfaced as exit code 3.
struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string num(double v, const char* fmt = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * (n == 1 ? 0.0 : double(i) / (n - 1));
  return v;
}

// Bisection for a bracketed root; f(a) and f(b) must have opposite signs.
inline double bisect(const std::function<double(double)>& f, double a, double b,
                     double xtol, int max_iter = 200) {
  double fa = f(a), fb = f(b);
  if (fa == 0) return a;
  if (fb == 0) return b;
  if (fa * fb > 0) throw std::runtime_error("bisect: root not bracketed");
  for (int i = 0; i < max_iter && (b - a) > xtol; ++i) {
    double m = 0.5 * (a + b), fm = f(m);
    if (fm == 0) return m;
    if (fa * fm < 0) {
      b = m;
      fb = fm;
    } else {
      a = m;
      fa = fm;
    }
  }
  return 0.5 * (a + b);
}

// Least-squares fit y = a + b/x; returns {a, b, rms residual}.
struct TailFit {
  double a = 0, b = 0, rms = 0;
};

inline TailFit fit_inverse_tail(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = int(x.size());
  double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
  for (int i = 0; i < n; ++i) {
    double u = 1.0 / x[i];
    s0 += 1;
    s1 += u;
    s2 += u * u;
    t0 += y[i];
    t1 += y[i] * u;
  }
  double det = s0 * s2 - s1 * s1;
  TailFit f;
  if (std::abs(det) < 1e-300) {
    f.a = t0 / std::max(1.0, s0);
    return f;
  }
  f.a = (s2 * t0 - s1 * t1) / det;
  f.b = (s0 * t1 - s1 * t0) / det;
  double r2 = 0;
  for (int i = 0; i < n; ++i) {
    double e = y[i] - (f.a + f.b / x[i]);
    r2 += e * e;
  }
  f.rms = std::sqrt(r2 / n);
  return f;
}

}  // namespace fbimcf
