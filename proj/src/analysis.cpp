#include "finsler/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "finsler/transport.hpp"

namespace finsler {

namespace {

template <class S>
S zero_like(const S& like) {
  return like * 0.0;
}

// Frobenius inner product over matching shapes; works for doubles and jets.
template <class S>
S frob(const BasicTensor<S>& a, const BasicTensor<S>& b) {
  S acc = a[0] * b[0];
  for (std::size_t i = 1; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <class S>
S g_inner_upper(const BasicTensor<S>& g, const std::vector<S>& a, const std::vector<S>& b) {
  const int n = g.dim();
  S acc = zero_like(a[0]);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) acc += g(i, j) * a[i] * b[j];
  }
  return acc;
}

}  // namespace

// ---------------------------------------------------------------------------
// Classification

ClassificationVerdict classify(const MetricInstance& m, int samples, std::uint64_t seed,
                               const ClassThresholds& th) {
  ClassificationVerdict out;
  out.seed = seed;
  double rC = 0, rB = 0, rL = 0, rJ = 0, rS = 0, rQ = 0, rE = 0;
  for (const auto& sp : sample_points(m, samples, seed)) {
    PointState p{sp.x, sp.y};
    FieldEngine e(m, p, jet_order::kBianchi);
    const double F = e.F().value();
    rC = std::max(rC, F * max_abs(values(e.C())));
    rB = std::max(rB, F * max_abs(values(e.B())));
    rL = std::max(rL, max_abs(values(e.L())));
    rJ = std::max(rJ, max_abs(values(e.J())));
    rS = std::max(rS, max_abs(values(e.Sigma())));
    rQ = std::max(rQ, F * max_abs(values(e.vertical(e.R()))));
    rE = std::max(rE, F * max_abs(values(e.E())));
    out.points.push_back(std::move(p));
  }
  auto flag = [](double r, double t) { return ClassFlag{r <= t, r, t}; };
  out.flags["riemannian"] = flag(rC, th.riemannian);
  out.flags["berwald"] = flag(rB, th.berwald);
  out.flags["landsberg"] = flag(rL, th.landsberg);
  out.flags["weak_landsberg"] = flag(rJ, th.weak_landsberg);
  out.flags["stretch"] = flag(rS, th.stretch);
  out.flags["r_quadratic"] = flag(rQ, th.r_quadratic);
  out.flags["weak_berwald"] = flag(rE, th.weak_berwald);

  const std::pair<const char*, const char*> chain[] = {
      {"riemannian", "berwald"},    {"berwald", "landsberg"},      {"landsberg", "stretch"},
      {"landsberg", "weak_landsberg"}, {"berwald", "weak_berwald"}, {"riemannian", "r_quadratic"},
  };
  for (const auto& [a, b] : chain) {
    const ClassFlag& fa = out.flags[a];
    const ClassFlag& fb = out.flags[b];
    if (fa.value && fb.residual > th.chain_inflation * fb.threshold) {
      out.chain_violations.push_back(std::string(a) + " => " + b);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Relative stretch

std::string relative_stretch_sign_label(double c, double zero) {
  if (std::abs(c) <= zero) return "zero";
  return c < 0.0 ? "relatively nonnegative" : "relatively non-positive";
}

RelativeStretchFit fit_relative_stretch(const TensorBlock& sigma, const TensorBlock& design, double zero) {
  if (sigma.size() != design.size()) throw Error(ErrorCode::ShapeMismatch, "stretch and design blocks differ in shape");
  if (!(max_abs(design) > zero)) {
    throw Error(ErrorCode::UndefinedFit, "design tensor F(C_|l - C_|k) vanishes; c is undefined");
  }
  RelativeStretchFit fit;
  const double dd = inner(design, design);
  fit.c = inner(sigma, design) / dd;
  fit.design_norm = std::sqrt(dd);
  fit.sigma_norm = frobenius(sigma);
  const double scale = std::max(fit.sigma_norm, std::abs(fit.c) * fit.design_norm);
  fit.residual = scale > 0.0 ? frobenius(sigma - fit.c * design) / scale : 0.0;
  fit.per_point = {fit.c};
  fit.sign_label = relative_stretch_sign_label(fit.c, zero);
  return fit;
}

RelativeStretchFit fit_relative_stretch(const MetricInstance& m, const PointState& p, double zero) {
  FieldEngine e(m, p, jet_order::kStretch);
  return fit_relative_stretch(values(e.Sigma()), values(e.stretch_design()), zero);
}

RelativeStretchFit fit_relative_stretch(const MetricInstance& m, const std::vector<PointState>& points,
                                        double zero) {
  if (points.empty()) throw Error(ErrorCode::BadConfig, "no points to fit");
  RelativeStretchFit out;
  out.design_norm = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto& p : points) {
    const RelativeStretchFit f = fit_relative_stretch(m, p, zero);
    out.per_point.push_back(f.c);
    sum += f.c;
    out.residual = std::max(out.residual, f.residual);
    out.design_norm = std::min(out.design_norm, f.design_norm);
    out.sigma_norm = std::max(out.sigma_norm, f.sigma_norm);
  }
  out.c = sum / static_cast<double>(points.size());
  const auto [lo, hi] = std::minmax_element(out.per_point.begin(), out.per_point.end());
  out.spread = *hi - *lo;
  out.sign_label = relative_stretch_sign_label(out.c, zero);
  return out;
}

RelativeStretchProfile relative_stretch_profile(const MetricInstance& m, int xs, int ys, std::uint64_t seed,
                                                double threshold) {
  if (xs < 1 || ys < 1) throw Error(ErrorCode::BadConfig, "profile needs at least one point and one direction");
  RelativeStretchProfile prof;
  prof.threshold = threshold;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = m.dimension();
  double gmin = std::numeric_limits<double>::infinity(), gmax = -gmin;
  for (const auto& base : sample_points(m, xs, seed)) {
    double fmin = std::numeric_limits<double>::infinity(), fmax = -fmin;
    for (int k = 0; k < ys; ++k) {
      std::vector<double> y(n);
      double norm = 0.0;
      do {
        norm = 0.0;
        for (double& v : y) {
          v = normal(rng);
          norm += v * v;
        }
      } while (norm < 1e-12);
      for (double& v : y) v /= std::sqrt(norm);
      PointState p{base.x, y};
      const double c = fit_relative_stretch(m, p).c;
      prof.points.push_back(p);
      prof.c.push_back(c);
      fmin = std::min(fmin, c);
      fmax = std::max(fmax, c);
    }
    prof.fiber_spread = std::max(prof.fiber_spread, fmax - fmin);
    gmin = std::min(gmin, fmin);
    gmax = std::max(gmax, fmax);
  }
  prof.global_spread = gmax - gmin;
  prof.isotropic = prof.fiber_spread <= threshold;
  prof.constant = prof.global_spread <= threshold;
  double mean = 0.0;
  for (double c : prof.c) mean += c;
  prof.sign_label = relative_stretch_sign_label(mean / static_cast<double>(prof.c.size()));
  return prof;
}

// ---------------------------------------------------------------------------
// Semi-C-reducibility

namespace {

// Model pieces X = (I h)_sym / (n+1) and T = I I I / |I|^2.
template <class S>
void semi_c_model(const BasicTensor<S>& I, const BasicTensor<S>& h, const S& I2, BasicTensor<S>& X,
                  BasicTensor<S>& T) {
  const int n = I.dim();
  X = BasicTensor<S>(n, lower(3), zero_like(I[0]));
  T = X;
  const double w = 1.0 / (n + 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        X(i, j, k) = (I(i) * h(j, k) + I(j) * h(i, k) + I(k) * h(i, j)) * w;
        T(i, j, k) = I(i) * I(j) * I(k) / I2;
      }
    }
  }
}

template <class S>
S mean_cartan_norm2(const BasicTensor<S>& I, const BasicTensor<S>& gi) {
  const int n = I.dim();
  S acc = zero_like(I[0]);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) acc += gi(i, j) * I(i) * I(j);
  }
  return acc;
}

template <class S>
BasicTensor<S> diff(const BasicTensor<S>& a, const BasicTensor<S>& b) {
  BasicTensor<S> r = a;
  for (std::size_t i = 0; i < a.size(); ++i) r[i] -= b[i];
  return r;
}

double value_of(double v) { return v; }
double value_of(const Jet& v) { return v.value(); }

template <class S>
S semi_c_p(const BasicTensor<S>& C, const BasicTensor<S>& I, const BasicTensor<S>& h, const BasicTensor<S>& gi,
           double F, double zero, S* I2_out, BasicTensor<S>* X_out, BasicTensor<S>* T_out) {
  if (C.dim() < 3) throw Error(ErrorCode::DimensionError, "semi-C-reducibility needs n >= 3");
  const S I2 = mean_cartan_norm2(I, gi);
  if (!(value_of(I2) * F * F > zero)) {
    throw Error(ErrorCode::RiemannianPoint, "mean Cartan torsion vanishes; the point is Riemannian");
  }
  BasicTensor<S> X, T;
  semi_c_model(I, h, I2, X, T);
  const BasicTensor<S> XT = diff(X, T);
  const S den = frob(XT, XT);
  if (!(value_of(den) > 1e-30)) throw Error(ErrorCode::UndefinedFit, "semi-C model pieces coincide");
  const S p = frob(diff(C, T), XT) / den;
  if (I2_out) *I2_out = I2;
  if (X_out) *X_out = std::move(X);
  if (T_out) *T_out = std::move(T);
  return p;
}

}  // namespace

SemiCFit fit_semi_c_reducible(const TensorBlock& C, const TensorBlock& I, const TensorBlock& h,
                              const TensorBlock& g_inv, double F, double zero) {
  double I2 = 0.0;
  TensorBlock X, T;
  SemiCFit fit;
  fit.p = semi_c_p(C, I, h, g_inv, F, zero, &I2, &X, &T);
  fit.q = 1.0 - fit.p;
  fit.I_norm2 = I2;
  TensorBlock model = X;
  for (std::size_t i = 0; i < model.size(); ++i) model[i] = fit.p * X[i] + fit.q * T[i];
  const double scale = frobenius(C);
  fit.residual = scale > 0.0 ? frobenius(C - model) / scale : 0.0;
  return fit;
}

SemiCFit fit_semi_c_reducible(const MetricInstance& m, const PointState& p, double zero) {
  if (m.dimension() < 3) throw Error(ErrorCode::DimensionError, "semi-C-reducibility needs n >= 3");
  FieldEngine e(m, p, jet_order::kMetric);
  return fit_semi_c_reducible(values(e.C()), values(e.I()), values(e.h()), values(e.g_inv()), e.F().value(), zero);
}

// ---------------------------------------------------------------------------
// Jet-level scalars

Jet relative_stretch_jet(FieldEngine& e, double zero) {
  const JetTensor& S = e.Sigma();
  const JetTensor& D = e.stretch_design();
  if (!(max_abs(values(D)) > zero)) {
    throw Error(ErrorCode::UndefinedFit, "design tensor F(C_|l - C_|k) vanishes; c is undefined");
  }
  return frob(S, D) / frob(D, D);
}

Jet characteristic_jet(FieldEngine& e, double zero) {
  return semi_c_p<Jet>(e.C(), e.I(), e.h(), e.g_inv(), e.F().value(), zero, nullptr, nullptr, nullptr);
}

namespace {

struct FrameJets {
  std::vector<Jet> ell;
  std::vector<Jet> m;
  Jet I;
};

FrameJets frame_jets(FieldEngine& e, int orientation) {
  if (e.dim() != 2) throw Error(ErrorCode::DimensionError, "the Berwald frame is defined for n = 2");
  const Jet& F = e.F();
  const JetTensor& g = e.g();
  const JetTensor& C = e.C();
  FrameJets f;
  f.ell = {e.y()[0] / F, e.y()[1] / F};
  std::vector<Jet> v = {-f.ell[1], f.ell[0]};
  const Jet gvl = g_inner_upper(g, v, f.ell);
  std::vector<Jet> mt = {v[0] - gvl * f.ell[0], v[1] - gvl * f.ell[1]};
  const Jet norm = sqrt(g_inner_upper(g, mt, mt));
  const double sgn = orientation < 0 ? -1.0 : 1.0;
  f.m = {sgn * mt[0] / norm, sgn * mt[1] / norm};
  Jet acc = zero_like(F);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int k = 0; k < 2; ++k) acc += C(i, j, k) * f.m[i] * f.m[j] * f.m[k];
    }
  }
  f.I = F * acc;
  return f;
}

Jet mu_from_frame(FieldEngine& e, const FrameJets& f, double zero) {
  if (!(std::abs(f.I.value()) > zero)) {
    throw Error(ErrorCode::RiemannianPoint, "principal scalar vanishes; mu is undefined");
  }
  const JetTensor dI = e.horizontal(f.I);
  return (dI(0) * f.ell[0] + dI(1) * f.ell[1]) / f.I;
}

}  // namespace

Jet principal_scalar_jet(FieldEngine& e, int orientation) { return frame_jets(e, orientation).I; }

Jet mu_jet(FieldEngine& e, double zero) { return mu_from_frame(e, frame_jets(e, 1), zero); }

Jet landsberg_square_jet(FieldEngine& e) {
  const JetTensor& L = e.L();
  const JetTensor& gi = e.g_inv();
  const int n = e.dim();
  // Raise one index at a time: L^i_jk, then L^ij_k, then L^ijk.
  JetTensor a = L, b = L;
  for (int slot = 0; slot < 3; ++slot) {
    for (std::size_t f = 0; f < a.size(); ++f) {
      std::vector<int> idx = a.unflatten(f);
      const int i = idx[slot];
      Jet acc = zero_like(L[0]);
      for (int r = 0; r < n; ++r) {
        idx[slot] = r;
        acc += gi(i, r) * a[a.flat_index(std::span<const int>(idx))];
      }
      b[f] = std::move(acc);
    }
    a = b;
  }
  return frob(a, L);
}

BerwaldFrame2D berwald_frame(const MetricInstance& m, const PointState& p, bool require_mu, int orientation) {
  if (m.dimension() != 2) throw Error(ErrorCode::DimensionError, "the Berwald frame is defined for n = 2");
  FieldEngine e(m, p, jet_order::kBerwald);
  const FrameJets f = frame_jets(e, orientation);
  BerwaldFrame2D out;
  out.ell = {f.ell[0].value(), f.ell[1].value()};
  out.m = {f.m[0].value(), f.m[1].value()};
  out.I_scalar = f.I.value();

  const TensorBlock g = values(e.g());
  const TensorBlock C = values(e.C());
  const double F = e.F().value();
  auto gform = [&](const std::vector<double>& a, const std::vector<double>& b) {
    return g(0, 0) * a[0] * b[0] + g(0, 1) * a[0] * b[1] + g(1, 0) * a[1] * b[0] + g(1, 1) * a[1] * b[1];
  };
  out.frame_residual = std::max({std::abs(gform(out.ell, out.ell) - 1.0), std::abs(gform(out.m, out.m) - 1.0),
                                 std::abs(gform(out.ell, out.m))});
  const double ml[2] = {g(0, 0) * out.m[0] + g(0, 1) * out.m[1], g(1, 0) * out.m[0] + g(1, 1) * out.m[1]};
  TensorBlock model(2, lower(3), 0.0);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int k = 0; k < 2; ++k) model(i, j, k) = out.I_scalar / F * ml[i] * ml[j] * ml[k];
    }
  }
  const double cn = frobenius(C);
  out.reconstruction_residual = cn > 0.0 ? frobenius(C - model) / cn : frobenius(model);

  const JetTensor dv = e.vertical(f.I);
  out.I_vert = F * (dv(0).value() * out.m[0] + dv(1).value() * out.m[1]);

  const double zero = 1e-12;
  if (std::abs(out.I_scalar) > zero) {
    const double mu = mu_from_frame(e, f, zero).value();
    out.mu = mu;
    out.landsberg_residual = relative_residual(values(e.L()), (mu * F) * C, 1e-300);
  } else if (require_mu) {
    throw Error(ErrorCode::RiemannianPoint, "principal scalar vanishes; mu is undefined");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checks

namespace {

std::string combine_verdict(const std::vector<TheoremCheckSample>& samples, const char* all_vacuous) {
  bool any_fail = false, all_vac = true, all_deg = true;
  for (const auto& s : samples) {
    if (s.status == "fail") any_fail = true;
    if (s.status != "vacuous") all_vac = false;
    if (s.status != "vacuous" && s.status != "degenerate") all_deg = false;
  }
  if (any_fail) return "fail";
  if (all_vac) return all_vacuous;
  if (all_deg) return "degenerate";
  return "pass";
}

}  // namespace

TheoremCheckResult check_characteristic_constancy(const MetricInstance& m, const GeodesicSolution& geod) {
  TheoremCheckResult r;
  r.id = "characteristic-constancy";
  std::optional<double> p0;
  double drift = 0.0, max_dp = 0.0;
  for (std::size_t k = 0; k < geod.times.size(); ++k) {
    TheoremCheckSample s;
    s.t = geod.times[k];
    FieldEngine e(m, PointState{geod.x[k], geod.v[k]}, 5);
    try {
      const Jet p = characteristic_jet(e);
      const double pd = e.along_y(p).value();
      const SemiCFit fit = fit_semi_c_reducible(values(e.C()), values(e.I()), values(e.h()), values(e.g_inv()),
                                                e.F().value());
      s.values = {{"p", p.value()}, {"q", 1.0 - p.value()}, {"p_dot", pd}, {"fit_residual", fit.residual}};
      if (!p0) p0 = p.value();
      drift = std::max(drift, std::abs(p.value() - *p0));
      max_dp = std::max(max_dp, std::abs(pd));
      s.residual = std::abs(p.value() - *p0);
      s.status = "ok";
    } catch (const Error& err) {
      if (err.code() != ErrorCode::RiemannianPoint) throw;
      s.status = "vacuous";
    }
    r.samples.push_back(std::move(s));
  }
  r.residuals = {{"p_drift", drift}, {"p_dot_max", max_dp}};
  r.residual = drift;
  r.verdict = combine_verdict(r.samples, "vacuous");
  if (r.verdict == "pass") r.verdict = "report";
  r.pass = true;
  return r;
}

TheoremCheckResult check_theorem3_condition(const MetricInstance& m, const GeodesicSolution& geod, double c,
                                            double tolerance) {
  if (m.dimension() != 2) throw Error(ErrorCode::DimensionError, "the principal-scalar condition needs n = 2");
  TheoremCheckResult r;
  r.id = "principal-scalar-condition";
  r.tolerance = tolerance;
  r.parameters["c"] = c;
  const double zero = 1e-10;
  for (std::size_t k = 0; k < geod.times.size(); ++k) {
    TheoremCheckSample s;
    s.t = geod.times[k];
    FieldEngine e(m, PointState{geod.x[k], geod.v[k]}, jet_order::kBianchi);
    const double F = e.F().value();
    const double cn = F * frobenius(values(e.C()));
    const FrameJets f = frame_jets(e, 1);
    s.values = {{"F", F}, {"C_norm", cn}, {"I", f.I.value()}};
    if (cn <= zero || std::abs(f.I.value()) <= zero) {
      s.status = "vacuous";
    } else {
      const Jet mu = mu_from_frame(e, f, zero);
      const double mv = mu.value();
      const double md = e.along_y(mu).value();
      const double Q = 2.0 * md + 2.0 * mv * mv * F - c * mv * F;
      const double scale = std::max({std::abs(2.0 * md), std::abs(2.0 * mv * mv * F), std::abs(c * mv * F), 1e-300});
      s.values["mu"] = mv;
      s.values["mu_dot"] = md;
      s.values["Q"] = Q;
      s.residual = std::abs(Q) * cn / scale;
      if (std::abs(mv) <= zero) {
        s.residual = std::abs(Q) * cn;
        s.status = s.residual <= tolerance ? "degenerate" : "fail";
      } else {
        s.status = s.residual <= tolerance ? "ok" : "fail";
      }
    }
    r.residual = std::max(r.residual, s.residual);
    r.samples.push_back(std::move(s));
  }
  r.residuals["Q_times_C"] = r.residual;
  r.verdict = combine_verdict(r.samples, "vacuous");
  r.pass = r.verdict != "fail";
  return r;
}

FlagCurvatureSurvey survey_flag_curvature(const MetricInstance& m, const std::vector<PointState>& points,
                                          int flags_per_point, std::uint64_t seed) {
  FlagCurvatureSurvey out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = m.dimension();
  for (const auto& p : points) {
    FieldEngine e(m, p, jet_order::kSpray);
    for (int k = 0; k < flags_per_point; ++k) {
      for (int attempt = 0;; ++attempt) {
        std::vector<double> u(n);
        for (double& v : u) v = normal(rng);
        try {
          out.values.push_back(flag_curvature(e, u));
          break;
        } catch (const Error& err) {
          if (err.code() != ErrorCode::DegenerateFlag || attempt > 100) throw;
        }
      }
    }
  }
  if (out.values.empty()) throw Error(ErrorCode::BadConfig, "no flags to survey");
  double sum = 0.0;
  for (double v : out.values) sum += v;
  out.mean = sum / static_cast<double>(out.values.size());
  const auto [lo, hi] = std::minmax_element(out.values.begin(), out.values.end());
  out.spread = *hi - *lo;
  return out;
}

TheoremCheckResult check_constant_flag_chain(const MetricInstance& m, const std::vector<PointState>& points,
                                             double tolerance, double spread_tol) {
  TheoremCheckResult r;
  r.id = "constant-flag-chain";
  r.tolerance = tolerance;
  const FlagCurvatureSurvey survey = survey_flag_curvature(m, points, 5, 1);
  if (survey.spread > spread_tol) {
    throw Error(ErrorCode::NotConstantCurvature,
                "flag curvature spread " + std::to_string(survey.spread) + " exceeds " + std::to_string(spread_tol));
  }
  const double lambda = survey.mean;
  r.parameters["lambda"] = lambda;
  r.parameters["lambda_spread"] = survey.spread;

  const int n = m.dimension();
  const double floor = Tolerances{}.floor;
  std::optional<double> c_first;
  double c_min = std::numeric_limits<double>::infinity(), c_max = -c_min;
  double ra = 0, rb = 0, rc = 0, rd = 0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    TheoremCheckSample s;
    s.t = static_cast<double>(k);
    FieldEngine e(m, points[k], jet_order::kStretch);
    const double F = e.F().value();
    const TensorBlock g = values(e.g());
    const TensorBlock R = values(e.R());
    TensorBlock Ra(n, mixed(1, 3), 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int kk = 0; kk < n; ++kk) {
          for (int l = 0; l < n; ++l) {
            Ra(i, j, kk, l) = lambda * (g(j, l) * (i == kk) - g(j, kk) * (i == l));
          }
        }
      }
    }
    const double a = relative_residual(R, Ra, floor);
    s.values["a"] = a;
    s.residual = a;
    ra = std::max(ra, a);

    const TensorBlock C = values(e.C());
    if (F * max_abs(C) <= Tolerances{}.zero) {
      s.status = a <= tolerance ? "vacuous" : "fail";
      r.samples.push_back(std::move(s));
      continue;
    }
    const TensorBlock yl = values(e.y_lower());
    const TensorBlock Sigma = values(e.Sigma());
    TensorBlock Sb(n, lower(4), 0.0);
    for (int j = 0; j < n; ++j) {
      for (int mm = 0; mm < n; ++mm) {
        for (int kk = 0; kk < n; ++kk) {
          for (int l = 0; l < n; ++l) {
            Sb(j, mm, kk, l) = 2.0 * lambda * (C(j, l, mm) * yl(kk) - C(j, kk, mm) * yl(l));
          }
        }
      }
    }
    const TensorBlock design = values(e.stretch_design());
    // Sigma and the design tensor share degree and shape; |D| sets the scale of (b).
    const double b = relative_residual(Sigma, Sb, std::max(floor, max_abs(design)));
    s.values["b"] = b;
    rb = std::max(rb, b);
    s.residual = std::max(a, b);
    std::optional<double> c;
    try {
      c = fit_relative_stretch(Sigma, design).c;
    } catch (const Error& err) {
      if (err.code() != ErrorCode::UndefinedFit) throw;
    }
    // (c) and (d) divide by c.
    if (!c || std::abs(*c) <= Tolerances{}.zero) {
      s.status = s.residual <= tolerance ? "ok" : "fail";
      r.samples.push_back(std::move(s));
      continue;
    }
    c_first = c_first.value_or(*c);
    c_min = std::min(c_min, *c);
    c_max = std::max(c_max, *c);
    const double w = 2.0 * lambda / *c * F;
    const TensorBlock L = values(e.L());
    const double cc = relative_residual(L, (-w) * C, floor);
    const TensorBlock J = values(e.J());
    const double d = relative_residual(J, (-w) * values(e.I()), floor);
    s.values["c"] = cc;
    s.values["d"] = d;
    s.values["c_fit"] = *c;
    s.residual = std::max({a, b, cc, d});
    s.status = s.residual <= tolerance ? "ok" : "fail";
    rc = std::max(rc, cc);
    rd = std::max(rd, d);
    r.samples.push_back(std::move(s));
  }
  r.residuals = {{"a", ra}, {"b", rb}, {"c", rc}, {"d", rd}};
  r.residual = std::max({ra, rb, rc, rd});
  if (c_first) {
    r.parameters["c"] = 0.5 * (c_min + c_max);
    r.parameters["c_spread"] = c_max - c_min;
  }
  r.verdict = combine_verdict(r.samples, "vacuous");
  // Identity (a) is checked even where (b)-(d) are vacuous.
  if (r.verdict == "vacuous" && ra <= tolerance) r.verdict = "pass";
  r.pass = r.verdict != "fail";
  return r;
}

TheoremCheckResult check_corollary_condition(const MetricInstance& m, const GeodesicSolution& geod, double lambda,
                                             const RelativeStretchFit& cfit, double tolerance) {
  TheoremCheckResult r;
  r.id = "corollary-consistency";
  r.tolerance = tolerance;
  r.parameters["lambda"] = lambda;
  r.parameters["c"] = cfit.c;
  double w_min = std::numeric_limits<double>::infinity(), w_max = -w_min;
  for (std::size_t k = 0; k < geod.times.size(); ++k) {
    TheoremCheckSample s;
    s.t = geod.times[k];
    FieldEngine e(m, PointState{geod.x[k], geod.v[k]}, jet_order::kBianchi);
    const double F = e.F().value();
    const double cn = F * frobenius(values(e.C()));
    s.values = {{"F", F}, {"C_norm", cn}};
    if (cn <= Tolerances{}.zero) {
      s.status = "vacuous";
      r.samples.push_back(std::move(s));
      continue;
    }
    const Jet cj = relative_stretch_jet(e);
    const double c = cj.value();
    const double cd = e.along_y(cj).value();
    const double W = 2.0 * c * cd + c * c * F + 4.0 * lambda * F;
    const double inner_term = cd + 2.0 * lambda * F / c;
    const double bracket = -lambda * F * F - (2.0 * lambda * F / c) * inner_term;
    const double scale = std::max({std::abs(lambda * F * F), std::abs(2.0 * lambda * F / c) *
                                                                 (std::abs(cd) + std::abs(2.0 * lambda * F / c)),
                                   1e-300});
    s.values["c"] = c;
    s.values["c_dot"] = cd;
    s.values["W"] = W;
    s.values["bracket"] = bracket;
    s.residual = std::abs(bracket) * cn / scale;
    s.status = s.residual <= tolerance ? "ok" : "fail";
    w_min = std::min(w_min, W);
    w_max = std::max(w_max, W);
    r.residual = std::max(r.residual, s.residual);
    r.samples.push_back(std::move(s));
  }
  r.residuals["consistency"] = r.residual;
  if (w_min <= w_max) {
    r.parameters["W_min"] = w_min;
    r.parameters["W_max"] = w_max;
  }
  r.verdict = combine_verdict(r.samples, "degenerate");
  r.pass = r.verdict != "fail";
  return r;
}

}  // namespace finsler
