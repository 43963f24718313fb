#include "finsler/suites.hpp"

#include <algorithm>
#include <cmath>

namespace finsler {

namespace {

std::vector<PointState> sample_states(const MetricInstance& m, int count, std::uint64_t seed) {
  std::vector<PointState> out;
  for (auto& s : sample_points(m, count, seed)) out.push_back(PointState{std::move(s.x), std::move(s.y)});
  return out;
}

/// max |T . y| relative to F max |T|, for fields that annihilate y.
double annihilation_residual(const TensorBlock& contracted, const TensorBlock& t, double F, double floor) {
  return max_abs(contracted) / std::max(F * max_abs(t), floor);
}

TensorBlock contract_last(const TensorBlock& t, const std::vector<double>& y) {
  std::vector<Slot> val(t.valence().begin(), t.valence().end() - 1);
  TensorBlock out(t.dim(), val, 0.0);
  const std::size_t n = static_cast<std::size_t>(t.dim());
  for (std::size_t f = 0; f < out.size(); ++f) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += t[f * n + k] * y[k];
    out[f] = s;
  }
  return out;
}

void add(SuiteResult& r, std::string check, int point, double residual, double tol, std::string note = {}) {
  const bool ok = std::isfinite(residual) && residual <= tol;
  r.rows.push_back(SuiteRow{std::move(check), point, residual, tol, ok, std::move(note)});
  r.pass = r.pass && ok;
}

void add_vacuous(SuiteResult& r, std::string check, int point, double tol, std::string note) {
  r.rows.push_back(SuiteRow{std::move(check), point, 0.0, tol, true, "vacuous: " + note});
}

SuiteResult identities(const MetricInstance& m, const SuiteOptions& o) {
  SuiteResult r{"identities"};
  const double tol = o.tol.identity, floor = o.tol.floor;
  const auto pts = sample_states(m, o.samples, o.seed);
  for (int k = 0; k < static_cast<int>(pts.size()); ++k) {
    const PointState& p = pts[k];
    FieldEngine e(m, p, jet_order::kStretch);
    const double F = e.F().value();
    const TensorBlock g = values(e.g()), C = values(e.C()), h = values(e.h());
    const TensorBlock G = values(e.G()), N = values(e.N()), Gamma = values(e.Gamma());
    const TensorBlock B = values(e.B()), L = values(e.L());

    std::vector<double> y2 = p.y;
    for (double& v : y2) v *= 2.0;
    FieldEngine e2(m, PointState{p.x, y2}, jet_order::kSpray);
    add(r, "homogeneity_F", k, std::abs(e2.F().value() - 2.0 * F) / (2.0 * F), tol);
    add(r, "homogeneity_g", k, relative_residual(values(e2.g()), g, floor), tol);
    add(r, "homogeneity_C", k, relative_residual(2.0 * values(e2.C()), C, floor), tol);
    add(r, "homogeneity_G", k, relative_residual(values(e2.G()), 4.0 * G, floor), tol);

    const TensorBlock gyy = contract_last(contract_last(g, p.y), p.y);
    add(r, "euler_g_yy", k, std::abs(gyy[0] - F * F) / (F * F), tol);
    add(r, "C_y", k, annihilation_residual(contract_last(C, p.y), C, F, floor), tol);
    add(r, "h_y", k, annihilation_residual(contract_last(h, p.y), h, F, floor), tol);
    add(r, "B_y", k, annihilation_residual(contract_last(B, p.y), B, F, floor), tol);
    add(r, "L_y", k, annihilation_residual(contract_last(L, p.y), L, F, floor), tol);
    add(r, "N_y_2G", k, relative_residual(contract_last(N, p.y), 2.0 * G, floor), tol);
    add(r, "Gamma_yy_2G", k, relative_residual(contract_last(contract_last(Gamma, p.y), p.y), 2.0 * G, floor), tol);
    add(r, "C_symmetry", k, std::max(symmetry_residual(C, 0, 1), symmetry_residual(C, 1, 2)), tol);
    add(r, "L_symmetry", k, std::max(symmetry_residual(L, 0, 1), symmetry_residual(L, 1, 2)), tol);
    add(r, "B_symmetry", k, std::max(symmetry_residual(B, 1, 2), symmetry_residual(B, 2, 3)), tol);

    add(r, "F_horizontal", k, max_abs(values(e.horizontal(e.F()))) / std::max(F, floor), tol);
    add(r, "g_vertical_2C", k, relative_residual(values(e.vertical(e.g())), 2.0 * C, floor), tol);
    add(r, "g_horizontal_minus_2L", k, relative_residual(values(e.horizontal(e.g())), -2.0 * L, floor), tol);
  }
  return r;
}

SuiteResult bianchi(const MetricInstance& m, const SuiteOptions& o) {
  SuiteResult r{"bianchi"};
  const double tol = o.tol.identity, floor = o.tol.floor;
  const auto pts = sample_states(m, o.samples, o.seed);
  for (int k = 0; k < static_cast<int>(pts.size()); ++k) {
    FieldEngine e(m, pts[k], jet_order::kBianchi);
    const int n = e.dim();
    // R^i_{j kl.m} stored as (i, j, k, l, m); B_|k stored as (i, j, m, l, k).
    const TensorBlock Rv = values(e.vertical(e.R()));
    const TensorBlock hB = values(e.horizontal(e.B()));
    TensorBlock rhs(n, Rv.valence(), 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int kk = 0; kk < n; ++kk)
          for (int l = 0; l < n; ++l)
            for (int mm = 0; mm < n; ++mm) rhs(i, j, kk, l, mm) = hB(i, j, mm, l, kk) - hB(i, j, mm, kk, l);
    add(r, "R_vertical_vs_B_horizontal", k, relative_residual(Rv, rhs, floor), tol);

    const TensorBlock Bv = values(e.vertical(e.B()));
    TensorBlock swapped(n, Bv.valence(), 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int kk = 0; kk < n; ++kk)
          for (int l = 0; l < n; ++l)
            for (int mm = 0; mm < n; ++mm) swapped(i, j, kk, l, mm) = Bv(i, j, kk, mm, l);
    add(r, "B_vertical_symmetry", k, relative_residual(Bv, swapped, floor), tol);

    // Sigma_jmkl = y_i R_j^i_kl.m
    const TensorBlock Sigma = values(e.Sigma());
    const TensorBlock yl = values(e.y_lower());
    TensorBlock route(n, lower(4), 0.0);
    for (int j = 0; j < n; ++j)
      for (int mm = 0; mm < n; ++mm)
        for (int kk = 0; kk < n; ++kk)
          for (int l = 0; l < n; ++l) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += yl(i) * Rv(i, j, kk, l, mm);
            route(j, mm, kk, l) = s;
          }
    add(r, "stretch_vs_R_vertical", k, relative_residual(Sigma, route, floor), tol);
  }
  return r;
}

SuiteResult landsberg_routes(const MetricInstance& m, const SuiteOptions& o) {
  SuiteResult r{"landsberg-routes"};
  const double tol = o.tol.identity, floor = o.tol.floor;
  const auto pts = sample_states(m, o.samples, o.seed);
  for (int k = 0; k < static_cast<int>(pts.size()); ++k) {
    FieldEngine e(m, pts[k], jet_order::kBerwald);
    add(r, "L_contraction_vs_C_derivative", k, relative_residual(values(e.L()), values(e.L_from_C()), floor), tol);
    add(r, "J_trace_vs_I_derivative", k, relative_residual(values(e.J()), values(e.J_from_I()), floor), tol);
  }
  return r;
}

SuiteResult constant_flag(const MetricInstance& m, const SuiteOptions& o) {
  SuiteResult r{"constant-flag"};
  const auto pts = sample_states(m, o.samples, o.seed);
  try {
    const TheoremCheckResult chk = check_constant_flag_chain(m, pts, o.tol.identity, o.tol.fit_spread);
    r.parameters = chk.parameters;
    for (int k = 0; k < static_cast<int>(chk.samples.size()); ++k) {
      const auto& s = chk.samples[k];
      for (const char* id : {"a", "b", "c", "d"}) {
        auto it = s.values.find(id);
        if (it != s.values.end()) add(r, std::string("identity_") + id, k, it->second, chk.tolerance);
        else
          add_vacuous(r, std::string("identity_") + id, k, chk.tolerance,
                      s.values.count("b") ? "c undefined or zero" : "Cartan torsion vanishes");
      }
    }
    if (auto it = chk.parameters.find("c_spread"); it != chk.parameters.end())
      add(r, "c_spread", -1, it->second, o.tol.fit_spread);
  } catch (const Error& err) {
    if (err.code() != ErrorCode::NotConstantCurvature) throw;
    r.rows.push_back(SuiteRow{"flag_curvature_constant", -1, 1.0, o.tol.fit_spread, false, err.what()});
    r.pass = false;
  }
  return r;
}

/// c fitted at the start of a trajectory, or the override.
struct StartFit {
  double c = 0.0;
  bool hypothesis = true;
  std::string note;
};

StartFit start_fit(const MetricInstance& m, const PointState& p, const SuiteOptions& o) {
  StartFit s;
  if (o.c) {
    s.c = *o.c;
    return s;
  }
  try {
    const RelativeStretchFit f = fit_relative_stretch(m, p, o.tol.zero);
    s.c = f.c;
    if (f.residual > o.tol.identity) {
      s.hypothesis = false;
      s.note = "relative-stretch fit residual " + std::to_string(f.residual);
    }
  } catch (const Error& err) {
    if (err.code() != ErrorCode::UndefinedFit) throw;
    s.note = "c undefined, using 0";
  }
  return s;
}

GeodesicSolution trajectory(const MetricInstance& m, const PointState& p, const SuiteOptions& o) {
  IntegratorOptions io;
  io.samples = o.time_samples;
  return integrate_geodesic(m, p.x, p.y, o.t_end, io, true);
}

SuiteResult theorem3(const MetricInstance& m, const SuiteOptions& o) {
  if (m.dimension() != 2) throw Error(ErrorCode::DimensionError, "suite 'theorem3' needs n = 2");
  SuiteResult r{"theorem3"};
  const auto pts = sample_states(m, o.geodesics, o.seed);
  for (int k = 0; k < static_cast<int>(pts.size()); ++k) {
    const StartFit sf = start_fit(m, pts[k], o);
    if (!sf.hypothesis) {
      add_vacuous(r, "Q_times_C", k, o.tol.identity, sf.note);
      continue;
    }
    const GeodesicSolution geod = trajectory(m, pts[k], o);
    const TheoremCheckResult chk = check_theorem3_condition(m, geod, sf.c, o.tol.identity);
    r.parameters["c_" + std::to_string(k)] = sf.c;
    if (chk.verdict == "vacuous") add_vacuous(r, "Q_times_C", k, chk.tolerance, "principal scalar vanishes");
    else add(r, "Q_times_C", k, chk.residual, chk.tolerance, chk.verdict);
  }
  return r;
}

SuiteResult flows(const MetricInstance& m, const SuiteOptions& o) {
  SuiteResult r{"flows"};
  const double tol = o.tol.identity, floor = o.tol.floor;
  const auto pts = sample_states(m, o.geodesics, o.seed);
  for (int k = 0; k < static_cast<int>(pts.size()); ++k) {
    const StartFit sf = start_fit(m, pts[k], o);
    if (!sf.hypothesis) {
      add_vacuous(r, "phi_law", k, tol, sf.note);
      continue;
    }
    r.parameters["c_" + std::to_string(k)] = sf.c;
    const GeodesicSolution geod = trajectory(m, pts[k], o);
    std::vector<std::string> qs{"phi"};
    if (m.dimension() == 2) qs.push_back("mu");
    const ScalarFlow flow = scalar_flows(m, geod, qs, sf.c);
    const auto& F = flow.columns.at("F");
    const auto& phi = flow.columns.at("phi");
    const auto& pd = flow.columns.at("phi_dot");
    double full = 0.0, half = 0.0;
    for (std::size_t t = 0; t < phi.size(); ++t) {
      const double a = 2.0 * sf.c * F[t] * phi[t], b = sf.c * F[t] * phi[t];
      full = std::max(full, std::abs(pd[t] - a) / std::max({std::abs(pd[t]), std::abs(a), floor}));
      half = std::max(half, std::abs(pd[t] - b) / std::max({std::abs(pd[t]), std::abs(b), floor}));
    }
    add(r, "phi_law", k, full, tol, "phi_dot = 2 c F phi");
    add(r, "phi_half_law", k, half, tol, "phi_dot = c F phi");
    if (m.dimension() == 2) {
      if (flow.status.at("mu") != "ok") {
        add_vacuous(r, "mu_flow", k, tol, flow.status.at("mu"));
        continue;
      }
      const auto& mu = flow.columns.at("mu");
      double worst = 0.0;
      for (std::size_t t = 0; t < mu.size(); ++t) {
        const double ref = mu_closed_form(mu[0], sf.c, flow.times[t]);
        worst = std::max(worst, std::abs(mu[t] - ref) / std::max({std::abs(ref), std::abs(mu[t]), floor}));
      }
      add(r, "mu_flow", k, worst, tol);
    }
  }
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"identities", "bianchi", "landsberg-routes",
                                              "constant-flag", "theorem3", "flows"};
  return names;
}

double mu_closed_form(double mu0, double c, double t) {
  const double a = 0.5 * c;
  const double growth = std::abs(a) < 1e-14 ? t : std::expm1(a * t) / a;
  return mu0 * std::exp(a * t) / (1.0 + mu0 * growth);
}

SuiteResult run_suite(const MetricInstance& m, const std::string& suite, const SuiteOptions& opts) {
  if (suite == "identities") return identities(m, opts);
  if (suite == "bianchi") return bianchi(m, opts);
  if (suite == "landsberg-routes") return landsberg_routes(m, opts);
  if (suite == "constant-flag") return constant_flag(m, opts);
  if (suite == "theorem3") return theorem3(m, opts);
  if (suite == "flows") return flows(m, opts);
  throw Error(ErrorCode::BadConfig, "unknown suite '" + suite + "'");
}

}  // namespace finsler
