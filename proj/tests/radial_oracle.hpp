// Independent 1D radial oracle for the regularized level-set equation with a
// radial conformal factor phi(r):
//
//   (1/(phi^6 r^2)) d/dr( phi^2 r^2 u' / sqrt(eps^2 + phi^-4 u'^2) )
//       = (phi^-4 u'^2 + delta^2)^(gamma/2),   u(r0) = 0, u(R) = tau.
//
// Finite volumes on a log-spaced 1D mesh with damped Newton and a Thomas
// solve; deliberately separate from the 2D implementation it checks.

#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace radial_oracle {

struct Problem {
  double r0 = 1, R = 16, eps = 0.05, tau = 1, gamma = 1, delta = 1e-10;
  std::function<double(double)> phi = [](double) { return 1.0; };
  int n = 4000;
};

inline std::vector<double> nodes(const Problem& p) {
  std::vector<double> r(p.n + 1);
  for (int i = 0; i <= p.n; ++i)
    r[i] = p.r0 * std::pow(p.R / p.r0, double(i) / p.n);
  return r;
}

inline std::vector<double> residual(const Problem& p, const std::vector<double>& r,
                                    const std::vector<double>& u) {
  const int n = p.n;
  std::vector<double> F(n + 1, 0.0);
  auto flux = [&](int i) {  // between i and i+1
    double rm = 0.5 * (r[i] + r[i + 1]);
    double ph = p.phi(rm);
    double du = (u[i + 1] - u[i]) / (r[i + 1] - r[i]);
    double q2 = du * du / std::pow(ph, 4);
    return ph * ph * rm * rm * du / std::sqrt(p.eps * p.eps + q2);
  };
  for (int i = 1; i < n; ++i) {
    double ph = p.phi(r[i]);
    double vol = std::pow(ph, 6) * r[i] * r[i] * 0.5 * (r[i + 1] - r[i - 1]);
    double du = (u[i + 1] - u[i - 1]) / (r[i + 1] - r[i - 1]);
    double q2 = du * du / std::pow(ph, 4);
    double S = std::pow(q2 + p.delta * p.delta, 0.5 * p.gamma);
    F[i] = (flux(i) - flux(i - 1)) / vol - S;
  }
  F[0] = u[0];
  F[n] = u[n] - p.tau;
  return F;
}

inline std::vector<double> solve(const Problem& p) {
  std::vector<double> r = nodes(p);
  const int n = p.n;
  std::vector<double> u(n + 1);
  for (int i = 0; i <= n; ++i)
    u[i] = p.tau * std::log(r[i] / p.r0) / std::log(p.R / p.r0);

  auto norm_inf = [&](const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };

  std::vector<double> lo(n + 1), di(n + 1), up(n + 1), rhs(n + 1), F0;
  for (int it = 0; it < 200; ++it) {
    F0 = residual(p, r, u);
    double f0 = norm_inf(F0);
    if (f0 < 1e-12) break;
    // Tridiagonal Jacobian by three-coloring finite differences.
    const double h = 1e-8 * std::max(1.0, p.tau);
    std::fill(lo.begin(), lo.end(), 0.0);
    std::fill(di.begin(), di.end(), 0.0);
    std::fill(up.begin(), up.end(), 0.0);
    for (int c = 0; c < 3; ++c) {
      std::vector<double> up_ = u;
      for (int i = c; i <= n; i += 3) up_[i] += h;
      std::vector<double> F1 = residual(p, r, up_);
      for (int i = 0; i <= n; ++i) {
        double d = (F1[i] - F0[i]) / h;
        if (d == 0) continue;
        if ((i % 3) == c)
          di[i] = d;
        else if (i >= 1 && ((i - 1) % 3) == c)
          lo[i] = d;  // column i-1
        else if (i + 1 <= n && ((i + 1) % 3) == c)
          up[i] = d;  // column i+1
      }
    }
    for (int i = 0; i <= n; ++i) rhs[i] = -F0[i];
    // Thomas solve.
    std::vector<double> cp(n + 1), dp(n + 1);
    cp[0] = up[0] / di[0];
    dp[0] = rhs[0] / di[0];
    for (int i = 1; i <= n; ++i) {
      double m = di[i] - lo[i] * cp[i - 1];
      cp[i] = up[i] / m;
      dp[i] = (rhs[i] - lo[i] * dp[i - 1]) / m;
    }
    std::vector<double> delta(n + 1);
    delta[n] = dp[n];
    for (int i = n - 1; i >= 0; --i) delta[i] = dp[i] - cp[i] * delta[i + 1];

    double lambda = 1.0;
    bool ok = false;
    for (int ls = 0; ls < 30; ++ls, lambda *= 0.5) {
      std::vector<double> ut = u;
      for (int i = 0; i <= n; ++i) ut[i] += lambda * delta[i];
      if (norm_inf(residual(p, r, ut)) < f0) {
        u = std::move(ut);
        ok = true;
        break;
      }
    }
    if (!ok) throw std::runtime_error("radial oracle: line search failed");
  }
  return u;
}

// Interpolated value u(r).
inline double eval(const Problem& p, const std::vector<double>& r, const std::vector<double>& u,
                   double rq) {
  if (rq <= r.front()) return u.front();
  if (rq >= r.back()) return u.back();
  auto it = std::upper_bound(r.begin(), r.end(), rq);
  size_t k = size_t(it - r.begin()) - 1;
  double w = (rq - r[k]) / (r[k + 1] - r[k]);
  return (1 - w) * u[k] + w * u[k + 1];
}

}  // namespace radial_oracle
