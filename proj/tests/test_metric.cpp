#include <cmath>
#include <vector>

#include "doctest.h"
#include "finsler/curvature.hpp"
#include "finsler/metric.hpp"
#include "oracles.hpp"

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

MetricSpec randers_curved() {
  MetricSpec s;
  s.dimension = 3;
  s.family = MetricFamily::Randers;
  s.a = {{"1+x1^2/4", "x1*x2/8", "0"}, {"x1*x2/8", "1+x2^2/4", "0"}, {"0", "0", "1+x3^2/4"}};
  s.b = {"0.1+0.05*x2", "0.05*sin(x1)", "0.05*x3"};
  return s;
}

std::vector<MetricSpec> shipped() {
  return {euclidean_spec(2), euclidean_spec(3),      sphere_spec(2),     sphere_spec(3),
          funk_spec({0, 0}), funk_spec({0.2, 0}),    funk_spec({0, 0, 0}), randers_constant_spec({0.2, 0, 0}),
          randers_curved(),  custom(2, "(y1^4 + y2^4 + 0.5*abs2(y)^2)^(1/4)")};
}

}  // namespace

TEST_CASE("build_metric evaluates each family") {
  const MetricInstance e = build_metric(euclidean_spec(2));
  CHECK(e.value(std::vector<double>{0, 0}, std::vector<double>{3, 4}) == doctest::Approx(5.0));
  const MetricInstance f = build_metric(funk_spec({0, 0}));
  CHECK(f.value(std::vector<double>{0, 0}, std::vector<double>{1, 0}) == doctest::Approx(1.0));
  CHECK(f.chart().kind == Chart::Kind::Ball);

  const MetricInstance r = build_metric(randers_constant_spec({0.2, 0, 0}));
  CHECK(r.value(std::vector<double>{0, 0, 0}, std::vector<double>{1, 0, 0}) == doctest::Approx(1.2));
  CHECK(r.value(std::vector<double>{0, 0, 0}, std::vector<double>{-1, 0, 0}) == doctest::Approx(0.8));

  const MetricInstance s = build_metric(sphere_spec(2));
  CHECK(s.value(std::vector<double>{0, 0}, std::vector<double>{1, 0}) == doctest::Approx(2.0));
}

TEST_CASE("jet evaluation agrees with scalar evaluation") {
  for (const auto& spec : shipped()) {
    const MetricInstance m = build_metric(spec);
    for (const auto& p : sample_points(m, 5, 2)) {
      const auto seeds = seed_variables(p.x, p.y, JetConfig{.n = m.dimension(), .order = 2});
      const std::vector<Jet> xj(seeds.begin(), seeds.begin() + m.dimension()), yj(seeds.begin() + m.dimension(), seeds.end());
      const double v = m.value(p.x, p.y);
      CHECK(std::abs(m.value(xj, yj).value() - v) <= 1e-14 * std::max(1.0, v));
    }
  }
}

TEST_CASE("spec validation errors") {
  MetricSpec asym = euclidean_spec(2);
  asym.a[0][1] = "0.1";
  CHECK(code_of([&] { build_metric(asym); }) == ErrorCode::SpecError);

  CHECK(code_of([] { build_metric(funk_spec({0.8, 0.7})); }) == ErrorCode::SpecError);
  CHECK(code_of([] { build_metric(custom(2, "sqrt(y1^2 + ")); }) == ErrorCode::SpecError);
  CHECK(code_of([] { build_metric(custom(2, "")); }) == ErrorCode::SpecError);
  CHECK(code_of([] { build_metric(custom(2, "y3")); }) == ErrorCode::SpecError);
  CHECK(code_of([] { build_metric(custom(2, "sqrt(abs2(y)) + q*y1")); }) == ErrorCode::SpecError);
  MetricSpec declared = custom(2, "sqrt(abs2(y)) + q*y1");
  declared.scalar_params["q"] = 0.1;
  CHECK_NOTHROW(build_metric(declared));

  MetricSpec one = euclidean_spec(2);
  one.dimension = 1;
  CHECK(code_of([&] { build_metric(one); }) == ErrorCode::SpecError);

  MetricSpec ydep = euclidean_spec(2);
  ydep.a[0][0] = "1 + y1^2";
  CHECK(code_of([&] { build_metric(ydep); }) == ErrorCode::SpecError);

  MetricSpec bshort = randers_constant_spec({0.2, 0, 0});
  bshort.b.pop_back();
  CHECK(code_of([&] { build_metric(bshort); }) == ErrorCode::SpecError);
}

TEST_CASE("funk_metric closed form") {
  const std::vector<double> a0{0, 0};
  CHECK(funk_metric(a0, std::vector<double>{0, 0}, std::vector<double>{0, 2}) == doctest::Approx(2.0));
  CHECK(funk_metric(a0, std::vector<double>{0.5, 0}, std::vector<double>{1, 0}) == doctest::Approx(2.0));
  CHECK(code_of([&] { funk_metric(a0, std::vector<double>{1, 0}, std::vector<double>{1, 0}); }) == ErrorCode::OutOfChart);
  CHECK(code_of([&] { funk_metric(a0, std::vector<double>{0.1, 0}, std::vector<double>{0, 0}); }) == ErrorCode::ZeroVector);
  const MetricInstance f = build_metric(funk_spec({0, 0}));
  CHECK(code_of([&] { f.require_in_chart(std::vector<double>{0.6, 0.9}); }) == ErrorCode::OutOfChart);
}

TEST_CASE("validate: Euclidean passes at round-off") {
  const ValidationReport r = validate(build_metric(euclidean_spec(3)), 20, 9);
  CHECK(r.pass);
  CHECK(r.max_homogeneity_residual <= 1e-12);
  CHECK(r.min_eigenvalue > 0.0);
  CHECK(r.samples.size() == 60);
  for (const auto& s : r.samples) CHECK(s.euler_residual <= 1e-12);
}

TEST_CASE("validate: shifted Funk metric is strongly convex on its sampling ball") {
  const ValidationReport r = validate(build_metric(funk_spec({0.3, 0})), 50, 4);
  CHECK(r.pass);
  CHECK(r.min_eigenvalue > 0.0);
}

TEST_CASE("validate: a Randers form that grows past norm 1 is localised") {
  MetricSpec s;
  s.dimension = 2;
  s.family = MetricFamily::Randers;
  s.a = {{"1", "0"}, {"0", "1"}};
  s.b = {"3*x1", "0"};
  const ValidationReport r = validate(build_metric(s), 40, 1);
  CHECK_FALSE(r.pass);
  REQUIRE(r.first_failure.has_value());
  const ValidationSample& bad = r.samples[*r.first_failure];
  CHECK_FALSE(bad.ok);
  CHECK(bad.min_eigenvalue <= 0.0);
  CHECK(std::abs(3.0 * bad.x[0]) >= 1.0);
  for (std::size_t k = 0; k < *r.first_failure; ++k) CHECK(r.samples[k].ok);
}

TEST_CASE("validate: quartic norm passes or localises its degenerate samples") {
  const MetricInstance m = build_metric(custom(2, "(y1^4 + y2^4)^(1/4)"));
  const ValidationReport r = validate(m, 30, 6);
  if (!r.pass) {
    REQUIRE(r.first_failure.has_value());
    CHECK(r.samples[*r.first_failure].min_eigenvalue <= 0.0);
  }
  // On an axis the Hessian of F^2 is singular.
  CHECK(code_of([&] { fundamental_tensor(m, PointState{{0, 0}, {1, 0}}); }) == ErrorCode::SingularMetric);
  const FundamentalTensor g = fundamental_tensor(m, PointState{{0, 0}, {1, 1}});
  CHECK(g.min_eigenvalue > 0.0);
}

TEST_CASE("property: Euler identity g(y, y) = F^2 for every shipped family") {
  for (const auto& spec : shipped()) {
    const MetricInstance m = build_metric(spec);
    for (const auto& p : sample_points(m, 8, 3)) {
      const FundamentalTensor ft = fundamental_tensor(m, PointState{p.x, p.y});
      double gyy = 0.0;
      for (int i = 0; i < m.dimension(); ++i)
        for (int j = 0; j < m.dimension(); ++j) gyy += ft.g(i, j) * p.y[i] * p.y[j];
      CHECK(std::abs(gyy - ft.F * ft.F) <= 1e-10 * ft.F * ft.F);
    }
  }
}

TEST_CASE("property: Cartan torsion vanishes on Riemannian inputs") {
  for (const auto& spec : {euclidean_spec(2), sphere_spec(2), sphere_spec(3)}) {
    const MetricInstance m = build_metric(spec);
    for (const auto& p : sample_points(m, 8, 5)) {
      const CartanData c = cartan_tensor(m, PointState{p.x, p.y});
      CHECK(max_abs(c.C) <= 1e-10);
      CHECK(max_abs(c.I) <= 1e-10);
    }
  }
}

TEST_CASE("sample_points is deterministic and stays in the sampling ball") {
  const MetricInstance m = build_metric(funk_spec({0, 0, 0}));
  const auto a = sample_points(m, 25, 42), b = sample_points(m, 25, 42), c = sample_points(m, 25, 43);
  REQUIRE(a.size() == 25);
  bool differs = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].x == b[k].x);
    CHECK(a[k].y == b[k].y);
    differs = differs || a[k].x != c[k].x;
    double r2 = 0, y2 = 0;
    for (int i = 0; i < 3; ++i) {
      r2 += a[k].x[i] * a[k].x[i];
      y2 += a[k].y[i] * a[k].y[i];
    }
    CHECK(std::sqrt(r2) <= m.chart().sample_radius);
    CHECK(y2 == doctest::Approx(1.0));
  }
  CHECK(differs);
}
