#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "finsler/analysis.hpp"
#include "finsler/transport.hpp"

using namespace finsler;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::StepFailure;
}

MetricSpec custom(int n, std::string expr) {
  MetricSpec s;
  s.dimension = n;
  s.family = MetricFamily::Custom;
  s.expression = std::move(expr);
  return s;
}

const MetricSpec kMinkowski2 = custom(2, "(y1^4 + y2^4 + 0.5*abs2(y)^2)^(1/4) + 0.1*y1");

std::vector<PointState> points(const MetricInstance& m, int count, std::uint64_t seed) {
  std::vector<PointState> out;
  for (auto& s : sample_points(m, count, seed)) out.push_back(PointState{s.x, s.y});
  return out;
}

GeodesicSolution unit_geodesic(const MetricInstance& m, std::vector<double> x0, std::vector<double> y0, double t = 1.0) {
  IntegratorOptions o;
  o.samples = 10;
  return integrate_geodesic(m, x0, y0, t, o, true);
}

}  // namespace

TEST_CASE("classify") {
  const ClassificationVerdict e = classify(build_metric(euclidean_spec(2)), 10, 1);
  for (const auto& [name, flag] : e.flags) {
    CAPTURE(name);
    CHECK(flag.value);
  }
  CHECK(e.flags.size() == 7);
  CHECK(e.chain_violations.empty());

  const ClassificationVerdict s = classify(build_metric(sphere_spec(2)), 10, 1);
  for (const char* name : {"riemannian", "berwald", "landsberg", "r_quadratic", "stretch"}) CHECK(s.flags.at(name).value);

  const ClassificationVerdict f = classify(build_metric(funk_spec({0, 0})), 10, 1);
  for (const char* name : {"riemannian", "berwald", "landsberg", "stretch", "weak_landsberg"}) {
    CAPTURE(name);
    CHECK_FALSE(f.flags.at(name).value);
  }

  const ClassificationVerdict r = classify(build_metric(randers_constant_spec({0.2, 0, 0})), 10, 1);
  CHECK_FALSE(r.flags.at("riemannian").value);
  CHECK(r.flags.at("berwald").value);
  CHECK(r.flags.at("landsberg").value);
  CHECK(r.flags.at("stretch").value);

  const ClassificationVerdict again = classify(build_metric(funk_spec({0, 0})), 10, 1);
  for (const auto& [name, flag] : f.flags) CHECK(again.flags.at(name).residual == flag.residual);
}

TEST_CASE("property: classification respects the implication chain") {
  for (const auto& spec : {euclidean_spec(3), sphere_spec(3), funk_spec({0, 0, 0}), funk_spec({0.2, 0}),
                           randers_constant_spec({0.2, 0, 0}), kMinkowski2}) {
    const ClassificationVerdict v = classify(build_metric(spec), 8, 2);
    CHECK(v.chain_violations.empty());
    CHECK(v.points.size() == 8);
  }
}

TEST_CASE("relative stretch fit") {
  const MetricInstance f = build_metric(funk_spec({0, 0}));
  const RelativeStretchFit fit = fit_relative_stretch(f, points(f, 20, 3));
  CHECK(std::abs(fit.c + 1.0) <= 1e-4);
  CHECK(fit.residual <= 1e-6);
  CHECK(fit.spread <= 1e-4);
  CHECK(fit.per_point.size() == 20);
  CHECK(fit.sign_label == relative_stretch_sign_label(-1.0));

  const MetricInstance s = build_metric(sphere_spec(2));
  CHECK(code_of([&] { fit_relative_stretch(s, points(s, 1, 1)[0]); }) == ErrorCode::UndefinedFit);

  // The shifted family is reported per point; its spread is measured, not assumed.
  const MetricInstance fa = build_metric(funk_spec({0.2, 0}));
  const RelativeStretchFit fita = fit_relative_stretch(fa, points(fa, 10, 3));
  CHECK(fita.per_point.size() == 10);
  for (double c : fita.per_point) CHECK(std::isfinite(c));
  CHECK(fita.spread >= 0.0);
}

TEST_CASE("property: relative stretch fit is scale equivariant") {
  const MetricInstance f = build_metric(funk_spec({0, 0, 0}));
  for (const auto& p : points(f, 5, 4)) {
    FieldEngine e(f, p, jet_order::kStretch);
    const TensorBlock sigma = values(e.Sigma()), design = values(e.stretch_design());
    const double c = fit_relative_stretch(sigma, design).c;
    CHECK(std::abs(fit_relative_stretch(2.0 * sigma, 2.0 * design).c - c) <= 1e-12);
    const RelativeStretchFit exact = fit_relative_stretch(3.0 * design, design);
    CHECK(exact.c == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(exact.residual <= 1e-14);
  }
  CHECK(code_of([] {
          const TensorBlock z(2, lower(4), 0.0);
          fit_relative_stretch(z, z);
        }) == ErrorCode::UndefinedFit);
}

TEST_CASE("relative stretch sign labels keep the raw sign") {
  CHECK(relative_stretch_sign_label(-1.0) == "relatively nonnegative");
  CHECK(relative_stretch_sign_label(2.0) == "relatively non-positive");
  CHECK(relative_stretch_sign_label(0.0) == "zero");
}

TEST_CASE("relative stretch profile on the Funk metric is constant") {
  const RelativeStretchProfile p = relative_stretch_profile(build_metric(funk_spec({0, 0})), 4, 4, 5);
  CHECK(p.c.size() == 16);
  CHECK(p.isotropic);
  CHECK(p.constant);
  CHECK(p.global_spread <= 1e-4);
}

TEST_CASE("semi-C-reducible fit") {
  const MetricInstance r = build_metric(randers_constant_spec({0.2, 0, 0}));
  for (const auto& p : points(r, 5, 6)) {
    const SemiCFit fit = fit_semi_c_reducible(r, p);
    CHECK(fit.residual <= 1e-6);
    CHECK(fit.p + fit.q == 1.0);
    CHECK(fit.I_norm2 > 0.0);
  }
  CHECK(code_of([] {
          const MetricInstance s = build_metric(sphere_spec(3));
          fit_semi_c_reducible(s, PointState{{0.1, 0.2, 0.0}, {1, 0, 0}});
        }) == ErrorCode::RiemannianPoint);
  CHECK(code_of([] {
          const MetricInstance f = build_metric(funk_spec({0, 0}));
          fit_semi_c_reducible(f, PointState{{0.1, 0.2}, {1, 0}});
        }) == ErrorCode::DimensionError);
}

TEST_CASE("property: semi-C fit recovers synthetic C-reducible and rank-one tensors") {
  const MetricInstance f = build_metric(funk_spec({0, 0, 0}));
  const int n = 3;
  for (const auto& pt : points(f, 4, 7)) {
    const FundamentalTensor ft = fundamental_tensor(f, pt);
    const TensorBlock I = cartan_tensor(f, pt).I;
    double I2 = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) I2 += ft.g_inv(i, j) * I(i) * I(j);
    TensorBlock Cred(n, lower(3), 0.0), Crank(n, lower(3), 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          Cred(i, j, k) = (I(i) * ft.h(j, k) + I(j) * ft.h(i, k) + I(k) * ft.h(i, j)) / (n + 1);
          Crank(i, j, k) = I(i) * I(j) * I(k) / I2;
        }
    const SemiCFit a = fit_semi_c_reducible(Cred, I, ft.h, ft.g_inv, ft.F);
    CHECK(std::abs(a.p - 1.0) <= 1e-10);
    CHECK(a.residual <= 1e-10);
    const SemiCFit b = fit_semi_c_reducible(Crank, I, ft.h, ft.g_inv, ft.F);
    CHECK(std::abs(b.q - 1.0) <= 1e-10);
  }
}

TEST_CASE("Berwald frame") {
  const MetricInstance e = build_metric(euclidean_spec(2));
  const PointState pe{{0.1, 0.2}, {1.0, 2.0}};
  const BerwaldFrame2D fe = berwald_frame(e, pe);
  CHECK(std::abs(fe.I_scalar) <= 1e-12);
  CHECK_FALSE(fe.mu.has_value());
  CHECK(fe.frame_residual <= 1e-10);
  CHECK(code_of([&] { berwald_frame(e, pe, true); }) == ErrorCode::RiemannianPoint);
  CHECK(code_of([] {
          const MetricInstance s = build_metric(sphere_spec(3));
          berwald_frame(s, PointState{{0, 0, 0}, {1, 0, 0}});
        }) == ErrorCode::DimensionError);

  const MetricInstance f = build_metric(funk_spec({0, 0}));
  for (const auto& p : points(f, 10, 8)) {
    const BerwaldFrame2D a = berwald_frame(f, p, true, 1), b = berwald_frame(f, p, true, -1);
    CHECK(a.frame_residual <= 1e-10);
    CHECK(a.reconstruction_residual <= 1e-8);
    CHECK(a.ell[0] * a.m[1] - a.ell[1] * a.m[0] > 0.0);
    CHECK(b.m[0] == doctest::Approx(-a.m[0]));
    CHECK(b.m[1] == doctest::Approx(-a.m[1]));
    CHECK(b.I_scalar == doctest::Approx(-a.I_scalar));
    REQUIRE(a.mu.has_value());
    REQUIRE(b.mu.has_value());
    CHECK(*a.mu == doctest::Approx(*b.mu).epsilon(1e-12));
  }
}

TEST_CASE("property: 2-D frames reconstruct C and satisfy L = mu F C") {
  for (const auto& spec : {funk_spec({0, 0}), funk_spec({0.2, 0}), kMinkowski2}) {
    const MetricInstance m = build_metric(spec);
    for (const auto& p : points(m, 6, 9)) {
      const BerwaldFrame2D fr = berwald_frame(m, p);
      CHECK(fr.reconstruction_residual <= 1e-8);
      REQUIRE(fr.landsberg_residual.has_value());
      CHECK(*fr.landsberg_residual <= 1e-7);
    }
  }
}

TEST_CASE("constant flag curvature chain") {
  const MetricInstance f = build_metric(funk_spec({0, 0, 0}));
  const TheoremCheckResult r = check_constant_flag_chain(f, points(f, 6, 10));
  CHECK(r.pass);
  CHECK(r.verdict == "pass");
  CHECK(r.residual <= 1e-5);
  CHECK(r.parameters.at("lambda") == doctest::Approx(-0.25).epsilon(1e-6));
  CHECK(r.parameters.at("c") == doctest::Approx(-1.0).epsilon(1e-6));
  for (const char* id : {"a", "b", "c", "d"}) CHECK(r.residuals.at(id) <= 1e-5);

  const MetricInstance e = build_metric(euclidean_spec(3));
  const TheoremCheckResult re = check_constant_flag_chain(e, points(e, 4, 10));
  CHECK(re.pass);
  CHECK(std::abs(re.parameters.at("lambda")) <= 1e-12);

  const MetricInstance s = build_metric(sphere_spec(3));
  const TheoremCheckResult rs = check_constant_flag_chain(s, points(s, 4, 10));
  CHECK(rs.pass);
  CHECK(rs.parameters.at("lambda") == doctest::Approx(1.0).epsilon(1e-6));
  for (const auto& sample : rs.samples) CHECK(sample.status == "vacuous");

  const MetricInstance fa = build_metric(funk_spec({0.2, 0}));
  CHECK(code_of([&] { check_constant_flag_chain(fa, points(fa, 6, 10)); }) == ErrorCode::NotConstantCurvature);
}

TEST_CASE("principal scalar condition along 2-D geodesics") {
  const MetricInstance f = build_metric(funk_spec({0, 0}));
  const double c = fit_relative_stretch(f, points(f, 5, 11)).c;
  const TheoremCheckResult r = check_theorem3_condition(f, unit_geodesic(f, {0.1, -0.1}, {1.0, 0.3}), c);
  CHECK(r.pass);
  CHECK(r.verdict == "pass");
  CHECK(r.residual <= 1e-5);
  CHECK(r.samples.size() == 11);
  for (const auto& s : r.samples) CHECK(s.values.count("mu") == 1);

  const MetricInstance sp = build_metric(sphere_spec(2));
  CHECK(check_theorem3_condition(sp, unit_geodesic(sp, {0, 0}, {1, 0}), 0.0).verdict == "vacuous");

  const MetricInstance mk = build_metric(kMinkowski2);
  const TheoremCheckResult rm = check_theorem3_condition(mk, unit_geodesic(mk, {0, 0}, {1, 0.4}), 0.0);
  CHECK(rm.verdict == "degenerate");
  CHECK(rm.pass);

  const MetricInstance f3 = build_metric(funk_spec({0, 0, 0}));
  CHECK(code_of([&] { check_theorem3_condition(f3, unit_geodesic(f3, {0, 0, 0}, {1, 0, 0}), -1.0); }) ==
        ErrorCode::DimensionError);
}

TEST_CASE("W-condition consistency and characteristic scalar along geodesics") {
  const MetricInstance f = build_metric(funk_spec({0, 0, 0}));
  const auto pts = points(f, 5, 12);
  const RelativeStretchFit cfit = fit_relative_stretch(f, pts);
  const double lambda = survey_flag_curvature(f, pts, 3, 1).mean;
  const GeodesicSolution g = unit_geodesic(f, {0.1, 0.0, -0.1}, {0.3, 1.0, 0.2});
  const TheoremCheckResult r = check_corollary_condition(f, g, lambda, cfit);
  CHECK(r.pass);
  CHECK(r.residual <= 1e-5);
  for (const auto& s : r.samples) CHECK(std::abs(s.values.at("c_dot")) <= 1e-6);

  const MetricInstance s = build_metric(sphere_spec(3));
  const TheoremCheckResult rs = check_corollary_condition(s, unit_geodesic(s, {0, 0, 0}, {1, 0, 0}), 1.0, cfit);
  CHECK(rs.verdict == "degenerate");

  const TheoremCheckResult p = check_characteristic_constancy(f, g);
  CHECK(p.verdict == "report");
  CHECK(p.residuals.count("p_drift") == 1);

  const MetricInstance r3 = build_metric(randers_constant_spec({0.2, 0, 0}));
  const TheoremCheckResult pr = check_characteristic_constancy(r3, unit_geodesic(r3, {0, 0, 0}, {0.3, 1.0, 0.2}));
  CHECK(pr.residuals.at("p_drift") <= 1e-8);
  CHECK(check_characteristic_constancy(s, unit_geodesic(s, {0, 0, 0}, {1, 0, 0})).verdict == "vacuous");
}
