#pragma once

// Independent reference computations for the tests: finite differences,
// closed-form metrics and a fixed-step RK4 integrator. None of these use jets.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using ScalarFn = std::function<double(const Vec&)>;

/// Nested central differences over `vars` (one entry per derivative).
inline double central(const ScalarFn& f, Vec p, std::vector<int> vars, double h) {
  if (vars.empty()) return f(p);
  const int v = vars.back();
  vars.pop_back();
  Vec a = p, b = p;
  a[v] += h;
  b[v] -= h;
  return (central(f, a, vars, h) - central(f, b, vars, h)) / (2.0 * h);
}

/// One Richardson step on top of `central`; error O(h^4).
inline double partial(const ScalarFn& f, const Vec& p, const std::vector<int>& vars, double h) {
  return (4.0 * central(f, p, vars, 0.5 * h) - central(f, p, vars, h)) / 3.0;
}

inline double rel_err(double a, double b, double floor = 1.0) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Funk-type metric on the unit ball, written out directly.
inline double funk(const Vec& a, const Vec& x, const Vec& y) {
  double xx = 0, yy = 0, xy = 0, ay = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx += x[i] * x[i];
    yy += y[i] * y[i];
    xy += x[i] * y[i];
    ay += a[i] * y[i];
  }
  return (std::sqrt(yy - (xx * yy - xy * xy)) + xy + ay) / (1.0 - xx);
}

/// Metric-tensor function x -> g_ij(x) for Riemannian oracles.
using MetricFn = std::function<std::vector<Vec>(const Vec&)>;

/// Christoffel symbols of the second kind by central differences of g.
inline std::vector<std::vector<Vec>> christoffel(const MetricFn& g, const Vec& x, double h = 1e-5) {
  const std::size_t n = x.size();
  std::vector<std::vector<Vec>> dg(n, std::vector<Vec>(n, Vec(n)));  // dg[k][i][j] = d_k g_ij
  for (std::size_t k = 0; k < n; ++k) {
    Vec a = x, b = x;
    a[k] += h;
    b[k] -= h;
    const auto ga = g(a), gb = g(b);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) dg[k][i][j] = (ga[i][j] - gb[i][j]) / (2 * h);
  }
  auto g0 = g(x);
  // 2x2 / 3x3 inverse via Gauss-Jordan.
  std::vector<Vec> inv(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    const double piv = g0[c][c];
    for (std::size_t j = 0; j < n; ++j) {
      g0[c][j] /= piv;
      inv[c][j] /= piv;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = g0[r][c];
      for (std::size_t j = 0; j < n; ++j) {
        g0[r][j] -= f * g0[c][j];
        inv[r][j] -= f * inv[c][j];
      }
    }
  }
  std::vector<std::vector<Vec>> G(n, std::vector<Vec>(n, Vec(n, 0.0)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l)
          G[i][j][k] += 0.5 * inv[i][l] * (dg[j][l][k] + dg[k][l][j] - dg[l][j][k]);
  return G;
}

/// Classic fixed-step RK4 on y' = f(t, y).
inline Vec rk4(const std::function<Vec(double, const Vec&)>& f, Vec y, double t0, double t1, int steps) {
  const double h = (t1 - t0) / steps;
  double t = t0;
  auto axpy = [](const Vec& a, double s, const Vec& b) {
    Vec r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += s * b[i];
    return r;
  };
  for (int k = 0; k < steps; ++k) {
    const Vec k1 = f(t, y);
    const Vec k2 = f(t + h / 2, axpy(y, h / 2, k1));
    const Vec k3 = f(t + h / 2, axpy(y, h / 2, k2));
    const Vec k4 = f(t + h, axpy(y, h, k3));
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    t += h;
  }
  return y;
}

}  // namespace oracle
