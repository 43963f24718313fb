#include "finsler/transport.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "finsler/analysis.hpp"
#include "finsler/curvature.hpp"

namespace finsler {

std::string_view to_string(TransportMode mode) {
  switch (mode) {
    case TransportMode::CurveVelocity: return "curve-velocity";
    case TransportMode::Transported: return "transported";
    case TransportMode::Supported: return "supported";
  }
  return "unknown";
}

namespace {

using Vec = std::vector<double>;

// Raised by right-hand sides whose stage point is not evaluable (outside the
// chart or outside the metric's domain); the step is retried smaller.
struct StageOutside {};

// Dormand-Prince 5(4) with an optional acceptance gate on the new state.
class DormandPrince {
 public:
  using Rhs = std::function<void(double, const Vec&, Vec&)>;
  using Gate = std::function<bool(const Vec&)>;
  using Observer = std::function<void(double, const Vec&)>;
  /// Called on step collapse with (t, y); true means the curve is at the chart boundary.
  using ExitProbe = std::function<bool(double, const Vec&)>;

  DormandPrince(Rhs rhs, const IntegratorOptions& opts) : rhs_(std::move(rhs)), opts_(opts) {}

  void set_gate(Gate gate) { gate_ = std::move(gate); }
  void set_exit_probe(ExitProbe probe) { probe_ = std::move(probe); }

  int accepted() const { return accepted_; }
  int rejected() const { return rejected_; }

  /// Integrates from 0 to t_end, calling `observe` at t = 0, at every
  /// accepted step (or on the sample grid) and at t_end.
  Vec run(Vec y, double t_end, const Observer& observe) {
    const int n = static_cast<int>(y.size());
    const double dir = t_end >= 0.0 ? 1.0 : -1.0;
    const double span = std::abs(t_end);
    double t = 0.0;
    double h = std::min(opts_.initial_step, span > 0.0 ? span : opts_.initial_step);
    observe(0.0, y);
    if (span == 0.0) return y;

    std::vector<double> grid;
    if (opts_.samples > 0) {
      for (int k = 1; k <= opts_.samples; ++k) grid.push_back(span * k / opts_.samples);
    } else {
      grid.push_back(span);
    }
    std::size_t next = 0;
    Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y5(n);
    bool last_outside = false;  // a stage left the chart since the last accepted step
    int steps = 0;
    while (next < grid.size()) {
      if (++steps > opts_.max_steps) throw Error(ErrorCode::StepFailure, "step budget exhausted");
      const double target = grid[next];
      bool hits = false;
      if (t + h >= target * (1.0 - 1e-14)) {
        h = target - t;
        hits = true;
      }
      bool ok = true;
      bool gate_ok = true;
      double err = 0.0;
      try {
        stage(k1, t, y, {}, {}, h, dir);
        stage(k2, t + h / 5, y, {&k1}, {1.0 / 5}, h, dir);
        stage(k3, t + 3 * h / 10, y, {&k1, &k2}, {3.0 / 40, 9.0 / 40}, h, dir);
        stage(k4, t + 4 * h / 5, y, {&k1, &k2, &k3}, {44.0 / 45, -56.0 / 15, 32.0 / 9}, h, dir);
        stage(k5, t + 8 * h / 9, y, {&k1, &k2, &k3, &k4},
              {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729}, h, dir);
        stage(k6, t + h, y, {&k1, &k2, &k3, &k4, &k5},
              {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656}, h, dir);
        combine(y5, y, {&k1, &k3, &k4, &k5, &k6}, {35.0 / 384, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
                h);
        eval(k7, t + h, y5, dir);
        for (int i = 0; i < n; ++i) {
          const double e = h * (71.0 / 57600 * k1[i] - 71.0 / 16695 * k3[i] + 71.0 / 1920 * k4[i] -
                                17253.0 / 339200 * k5[i] + 22.0 / 525 * k6[i] - 1.0 / 40 * k7[i]);
          const double sc = opts_.atol + opts_.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
          err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / n);
        gate_ok = err > 1.0 || !gate_ || gate_(y5);
      } catch (const StageOutside&) {
        ok = false;
        last_outside = true;
      }
      if (ok && err <= 1.0 && gate_ok) {
        last_outside = false;
        ++accepted_;
        t += h;
        y = y5;
        if (hits) {
          t = target;
          observe(dir * t, y);
          ++next;
        } else if (opts_.samples == 0) {
          observe(dir * t, y);
        }
        const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        h *= std::clamp(fac, 0.2, 5.0);
      } else {
        ++rejected_;
        if (!ok) {
          h *= 0.25;
        } else if (err > 1.0) {
          h *= std::clamp(0.9 * std::pow(err, -0.25), 0.1, 0.5);
        } else {
          h *= 0.5;
        }
      }
      if (h < opts_.min_step) {
        if (last_outside || (probe_ && probe_(dir * t, y))) {
          throw ChartExitError(dir * t, "curve leaves the chart");
        }
        throw Error(ErrorCode::StepFailure, "step size fell below the minimum at t = " + std::to_string(dir * t));
      }
    }
    return y;
  }

 private:
  // Integrates in s = |t|; the stage vectors are derivatives in s.
  void eval(Vec& out, double s, const Vec& y, double dir) {
    rhs_(dir * s, y, out);
    for (double& v : out) v *= dir;
  }

  void combine(Vec& out, const Vec& y, std::initializer_list<const Vec*> ks, std::initializer_list<double> ws,
               double h) {
    out = y;
    auto w = ws.begin();
    for (const Vec* k : ks) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += h * (*w) * (*k)[i];
      ++w;
    }
  }

  void stage(Vec& out, double t, const Vec& y, std::initializer_list<const Vec*> ks, std::initializer_list<double> ws,
             double h, double dir) {
    Vec tmp;
    combine(tmp, y, ks, ws, h);
    eval(out, t, tmp, dir);
  }

  Rhs rhs_;
  IntegratorOptions opts_;
  Gate gate_;
  ExitProbe probe_;
  int accepted_ = 0;
  int rejected_ = 0;
};

// True if the chart-straight continuation x + dir tau v leaves the chart for a
// tau small against the time scale.
bool leaves_soon(const MetricInstance& m, const Vec& s, int n, double dir) {
  constexpr double kTau = 1e-6;
  Vec x(s.begin(), s.begin() + n);
  for (int i = 0; i < n; ++i) x[i] += dir * kTau * s[n + i];
  return !m.chart().contains(x);
}

void require_point(const MetricInstance& m, const Vec& x) {
  if (!m.chart().contains(x)) throw StageOutside{};
}

// Spray coefficients G^i(x, v); optionally N^i_j(x, v).
void spray_at(const MetricInstance& m, const Vec& x, const Vec& v, Vec& G, TensorBlock* N = nullptr,
              TensorBlock* Gamma = nullptr) {
  require_point(m, x);
  const int order = Gamma ? jet_order::kSpray : (N ? 3 : 2);
  try {
    FieldEngine e(m, PointState{x, v}, order);
    const JetTensor& g = e.G();
    for (int i = 0; i < m.dimension(); ++i) G[i] = g(i).value();
    if (N) *N = values(e.N());
    if (Gamma) *Gamma = values(e.Gamma());
  } catch (const Error& err) {
    if (err.code() == ErrorCode::OutOfChart || err.code() == ErrorCode::DomainError) throw StageOutside{};
    throw;
  }
}

double metric_value(const MetricInstance& m, const Vec& x, const Vec& v) {
  try {
    return m.value(x, v);
  } catch (const Error& err) {
    if (err.code() == ErrorCode::DomainError) throw StageOutside{};
    throw;
  }
}

double euclid(const Vec& v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

void check_shape(const MetricInstance& m, const Vec& v, const char* what) {
  if (static_cast<int>(v.size()) != m.dimension()) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + " has the wrong dimension");
  }
}

}  // namespace

GeodesicSolution integrate_geodesic(const MetricInstance& m, const std::vector<double>& x0,
                                    const std::vector<double>& y0, double t_end, const IntegratorOptions& opts,
                                    bool unit_speed) {
  check_shape(m, x0, "x0");
  check_shape(m, y0, "y0");
  if (euclid(y0) == 0.0) throw Error(ErrorCode::ZeroVector, "initial velocity vanishes");
  m.require_in_chart(x0);
  const int n = m.dimension();
  Vec v0 = y0;
  double F0 = m.value(x0, v0);
  if (unit_speed) {
    for (double& a : v0) a /= F0;
    F0 = 1.0;
  }

  GeodesicSolution sol;
  sol.F0 = F0;
  sol.unit_speed = unit_speed;
  Vec G(n);
  DormandPrince dp(
      [&](double, const Vec& s, Vec& ds) {
        const Vec x(s.begin(), s.begin() + n), v(s.begin() + n, s.end());
        spray_at(m, x, v, G);
        ds.resize(2 * n);
        for (int i = 0; i < n; ++i) {
          ds[i] = v[i];
          ds[n + i] = -2.0 * G[i];
        }
      },
      opts);
  dp.set_gate([&](const Vec& s) {
    const Vec x(s.begin(), s.begin() + n), v(s.begin() + n, s.end());
    if (!m.chart().contains(x)) return false;
    return std::abs(metric_value(m, x, v) - F0) <= opts.drift_tol * F0;
  });
  dp.set_exit_probe([&](double, const Vec& s) { return leaves_soon(m, s, n, t_end < 0.0 ? -1.0 : 1.0); });
  Vec s0(x0);
  s0.insert(s0.end(), v0.begin(), v0.end());
  dp.run(s0, t_end, [&](double t, const Vec& s) {
    sol.times.push_back(t);
    sol.x.emplace_back(s.begin(), s.begin() + n);
    sol.v.emplace_back(s.begin() + n, s.end());
    sol.max_drift = std::max(sol.max_drift, std::abs(m.value(sol.x.back(), sol.v.back()) - F0) / F0);
  });
  sol.accepted = dp.accepted();
  sol.rejected = dp.rejected();
  return sol;
}

TransportResult parallel_transport(const MetricInstance& m, const Curve& curve, const std::vector<double>& w0,
                                   TransportMode mode, const IntegratorOptions& opts,
                                   std::optional<std::vector<double>> support0) {
  const int n = m.dimension();
  check_shape(m, curve.start, "curve start");
  check_shape(m, curve.direction, "curve direction");
  check_shape(m, w0, "w0");
  m.require_in_chart(curve.start);
  const bool geodesic = curve.kind == Curve::Kind::Geodesic;
  const bool supported = mode == TransportMode::Supported;
  Vec y0 = support0.value_or(w0);
  check_shape(m, y0, "support");
  if (mode != TransportMode::CurveVelocity && euclid(mode == TransportMode::Transported ? w0 : y0) == 0.0) {
    throw Error(ErrorCode::VanishingVector, "nonlinear transport needs a nonzero reference vector");
  }
  if (euclid(curve.direction) == 0.0) throw Error(ErrorCode::ZeroVector, "curve direction vanishes");

  // State layout: [x, xdot]? (geodesic only) | V | Y? (supported only)
  const int off_v = geodesic ? 2 * n : 0;
  const int off_y = off_v + n;
  const int size = off_y + (supported ? n : 0);
  const double vanish = 1e-12 * std::max(euclid(w0), euclid(y0));

  auto position = [&](double t, const Vec& s, Vec& x, Vec& xd) {
    if (geodesic) {
      x.assign(s.begin(), s.begin() + n);
      xd.assign(s.begin() + n, s.begin() + 2 * n);
    } else {
      x = curve.start;
      for (int i = 0; i < n; ++i) x[i] += t * curve.direction[i];
      xd = curve.direction;
    }
  };

  Vec G(n), x(n), xd(n), V(n), Y(n);
  TensorBlock N, Gamma;
  DormandPrince dp(
      [&](double t, const Vec& s, Vec& ds) {
        position(t, s, x, xd);
        require_point(m, x);
        ds.assign(size, 0.0);
        if (geodesic) {
          spray_at(m, x, xd, G);
          for (int i = 0; i < n; ++i) {
            ds[i] = xd[i];
            ds[n + i] = -2.0 * G[i];
          }
        }
        V.assign(s.begin() + off_v, s.begin() + off_v + n);
        switch (mode) {
          case TransportMode::CurveVelocity:
            spray_at(m, x, xd, G, &N);
            for (int i = 0; i < n; ++i) {
              for (int j = 0; j < n; ++j) ds[off_v + i] -= N(i, j) * V[j];
            }
            break;
          case TransportMode::Transported:
            if (euclid(V) <= vanish) throw Error(ErrorCode::VanishingVector, "transported vector vanished");
            spray_at(m, x, V, G, &N);
            for (int i = 0; i < n; ++i) {
              for (int j = 0; j < n; ++j) ds[off_v + i] -= N(i, j) * xd[j];
            }
            break;
          case TransportMode::Supported:
            Y.assign(s.begin() + off_y, s.begin() + off_y + n);
            if (euclid(Y) <= vanish) throw Error(ErrorCode::VanishingVector, "support vector vanished");
            spray_at(m, x, Y, G, &N, &Gamma);
            for (int i = 0; i < n; ++i) {
              for (int j = 0; j < n; ++j) {
                ds[off_y + i] -= N(i, j) * xd[j];
                for (int k = 0; k < n; ++k) ds[off_v + i] -= Gamma(i, j, k) * V[j] * xd[k];
              }
            }
            break;
        }
      },
      opts);

  Vec s0;
  if (geodesic) {
    s0 = curve.start;
    s0.insert(s0.end(), curve.direction.begin(), curve.direction.end());
  }
  s0.insert(s0.end(), w0.begin(), w0.end());
  if (supported) s0.insert(s0.end(), y0.begin(), y0.end());

  if (geodesic) {
    dp.set_exit_probe([&](double, const Vec& s) { return leaves_soon(m, s, n, curve.length < 0.0 ? -1.0 : 1.0); });
  }
  TransportResult res;
  res.mode = mode;
  dp.run(s0, curve.length, [&](double t, const Vec& s) {
    Vec px(n), pxd(n);
    position(t, s, px, pxd);
    Vec pv(s.begin() + off_v, s.begin() + off_v + n);
    Vec ref = pxd;
    if (mode == TransportMode::Transported) ref = pv;
    if (supported) {
      ref.assign(s.begin() + off_y, s.begin() + off_y + n);
      res.support.push_back(ref);
    }
    const TensorBlock g = fundamental_tensor(m, PointState{px, ref}).g;
    double len = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) len += g(i, j) * pv[i] * pv[j];
    }
    res.times.push_back(t);
    res.x.push_back(std::move(px));
    res.xdot.push_back(std::move(pxd));
    res.V.push_back(std::move(pv));
    res.length.push_back(std::sqrt(len));
  });
  return res;
}

namespace {

struct LoopState {
  Vec V;
  Vec Y;
};

// Runs the four sides starting at `corners[0]`; returns the end state.
LoopState run_loop(const MetricInstance& m, const std::vector<Vec>& corners, LoopState s, TransportMode mode,
                   const IntegratorOptions& opts) {
  for (std::size_t k = 0; k < 4; ++k) {
    const Vec& a = corners[k];
    const Vec& b = corners[(k + 1) % 4];
    Curve seg;
    seg.kind = Curve::Kind::Segment;
    seg.start = a;
    seg.direction.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) seg.direction[i] = b[i] - a[i];
    seg.length = 1.0;
    const TransportResult r =
        parallel_transport(m, seg, s.V, mode, opts, mode == TransportMode::Supported ? std::optional<Vec>(s.Y) : std::nullopt);
    s.V = r.V.back();
    if (mode == TransportMode::Supported) s.Y = r.support.back();
  }
  return s;
}

double ref_length(const MetricInstance& m, const Vec& x, const Vec& V, const Vec& ref) {
  const TensorBlock g = fundamental_tensor(m, PointState{x, ref}).g;
  double len = 0.0;
  for (std::size_t i = 0; i < V.size(); ++i) {
    for (std::size_t j = 0; j < V.size(); ++j) len += g(i, j) * V[i] * V[j];
  }
  return std::sqrt(len);
}

}  // namespace

ParallelogramExperiment parallelogram_holonomy(const MetricInstance& m, const std::vector<double>& x0,
                                               const std::vector<double>& u, const std::vector<double>& v,
                                               const std::vector<double>& w0, const std::vector<double>& eps_list,
                                               TransportMode mode, std::optional<std::vector<double>> support0,
                                               const IntegratorOptions& opts) {
  const int n = m.dimension();
  check_shape(m, x0, "x0");
  check_shape(m, u, "u");
  check_shape(m, v, "v");
  check_shape(m, w0, "w0");
  {
    const double uu = euclid(u), vv = euclid(v);
    double uv = 0.0;
    for (int i = 0; i < n; ++i) uv += u[i] * v[i];
    if (uu == 0.0 || vv == 0.0 || std::abs(uv) >= (1.0 - 1e-12) * uu * vv) {
      throw Error(ErrorCode::BadConfig, "parallelogram sides must be linearly independent");
    }
  }
  if (eps_list.empty()) throw Error(ErrorCode::BadConfig, "no eps values given");

  ParallelogramExperiment ex;
  ex.x0 = x0;
  ex.u = u;
  ex.v = v;
  ex.w0 = w0;
  ex.mode = mode;
  ex.support0 = support0.value_or(u);
  ex.eps = eps_list;

  IntegratorOptions o = opts;
  o.samples = 0;
  for (double eps : eps_list) {
    if (!(eps > 0.0)) throw Error(ErrorCode::BadConfig, "eps values must be positive");
    std::vector<Vec> corners(4, x0);
    for (int i = 0; i < n; ++i) {
      corners[1][i] += eps * u[i];
      corners[2][i] += eps * (u[i] + v[i]);
      corners[3][i] += eps * v[i];
    }
    for (const Vec& c : corners) {
      if (!m.chart().contains(c)) throw ChartExitError(0.0, "parallelogram corner leaves the chart");
    }
    const LoopState start{w0, ex.support0};
    const LoopState end = run_loop(m, corners, start, mode, o);
    auto reference = [&](const LoopState& s) {
      switch (mode) {
        case TransportMode::Transported: return s.V;
        case TransportMode::Supported: return s.Y;
        case TransportMode::CurveVelocity: break;
      }
      return u;
    };
    const double l0 = ref_length(m, x0, start.V, reference(start));
    Vec closing(v);
    for (double& a : closing) a = -a;
    const double l1 = ref_length(m, x0, end.V, mode == TransportMode::CurveVelocity ? closing : reference(end));
    ex.defect.push_back(std::abs(l1 - l0));

    // Reversed loop from the forward end state must return to the start.
    std::vector<Vec> rev = {corners[0], corners[3], corners[2], corners[1]};
    const LoopState back = run_loop(m, rev, end, mode, o);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(back.V[i] - w0[i]));
    ex.reversal_residual = std::max(ex.reversal_residual, worst / std::max(euclid(w0), 1e-300));
  }

  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < ex.eps.size(); ++k) {
    if (ex.defect[k] > 0.0) {
      lx.push_back(std::log(ex.eps[k]));
      ly.push_back(std::log(ex.defect[k]));
    }
  }
  if (lx.size() >= 2) {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
      sxy += (lx[k] - mx) * (ly[k] - my);
      sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    if (sxx > 0.0) ex.exponent = sxy / sxx;
  }
  return ex;
}

ScalarFlow scalar_flows(const MetricInstance& m, const GeodesicSolution& geod, const std::vector<std::string>& quantities,
                        std::optional<double> c) {
  ScalarFlow flow;
  flow.times = geod.times;
  flow.c = c;
  for (const auto& q : quantities) {
    if (q != "phi" && q != "L_norm" && q != "mu" && q != "p" && q != "c") {
      throw Error(ErrorCode::BadConfig, "unknown flow quantity '" + q + "'");
    }
    flow.status[q] = "ok";
  }
  auto wants = [&](const char* q) { return flow.status.count(q) && flow.status[q] == "ok"; };
  auto push = [&](const std::string& col, double v) { flow.columns[col].push_back(v); };
  auto fail = [&](const std::string& q, const Error& err, std::initializer_list<const char*> cols) {
    flow.status[q] = err.what();
    for (const char* col : cols) flow.columns.erase(col);
  };

  for (std::size_t k = 0; k < geod.times.size(); ++k) {
    FieldEngine e(m, PointState{geod.x[k], geod.v[k]}, jet_order::kBianchi);
    const double F = e.F().value();
    if (wants("phi") || wants("L_norm")) {
      const Jet phi = landsberg_square_jet(e);
      const double pv = phi.value();
      if (wants("phi")) {
        const double pd = e.along_y(phi).value();
        push("F", F);
        push("phi", pv);
        push("phi_dot", pd);
        if (c) {
          const double full = 2.0 * *c * F * pv;
          const double half = *c * F * pv;
          push("phi_law_residual", std::abs(pd - full) / std::max({std::abs(pd), std::abs(full), 1e-300}));
          push("phi_half_law_residual", std::abs(pd - half) / std::max({std::abs(pd), std::abs(half), 1e-300}));
        }
      }
      push("L_norm", std::sqrt(std::max(pv, 0.0)));
    }
    if (wants("mu")) {
      try {
        const Jet mu = mu_jet(e);
        push("mu", mu.value());
        push("mu_dot", e.along_y(mu).value());
      } catch (const Error& err) {
        fail("mu", err, {"mu", "mu_dot"});
      }
    }
    if (wants("p")) {
      try {
        const Jet p = characteristic_jet(e);
        push("p", p.value());
        push("p_dot", e.along_y(p).value());
      } catch (const Error& err) {
        fail("p", err, {"p", "p_dot"});
      }
    }
    if (wants("c")) {
      try {
        const Jet cj = relative_stretch_jet(e);
        push("c", cj.value());
        push("c_dot", e.along_y(cj).value());
      } catch (const Error& err) {
        fail("c", err, {"c", "c_dot"});
      }
    }
  }
  return flow;
}

}  // namespace finsler
