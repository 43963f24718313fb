#include <cmath>
#include <vector>

#include "doctest.h"
#include "finsler/analysis.hpp"
#include "finsler/transport.hpp"
#include "oracles.hpp"

using namespace finsler;

namespace {

using Vec = std::vector<double>;

MetricSpec custom(int n, std::string expr) {
  MetricSpec s;
  s.dimension = n;
  s.family = MetricFamily::Custom;
  s.expression = std::move(expr);
  return s;
}

MetricSpec berwald2() {
  MetricSpec s = custom(2,
                        "(sqrt(abs2(y)-(abs2(x)*abs2(y)-dot(x,y)^2))+dot(x,y))^2/"
                        "((1-abs2(x))^2*sqrt(abs2(y)-(abs2(x)*abs2(y)-dot(x,y)^2)))");
  Chart c;
  c.kind = Chart::Kind::Ball;
  c.radius = 1.0;
  c.sample_radius = 0.5;
  s.chart = c;
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

IntegratorOptions sampled(int n) {
  IntegratorOptions o;
  o.samples = n;
  return o;
}

/// Inverse stereographic projection onto the unit sphere in R^(n+1).
Vec to_sphere(const Vec& x) {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  Vec X;
  for (double v : x) X.push_back(2.0 * v / (1.0 + r2));
  X.push_back((1.0 - r2) / (1.0 + r2));
  return X;
}

double dist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double norm(const Vec& a) { return dist(a, Vec(a.size(), 0.0)); }

}  // namespace

TEST_CASE("Euclidean geodesics are straight lines") {
  const MetricInstance e = build_metric(euclidean_spec(3));
  const Vec x0{0.1, -0.2, 0.3}, y0{1.0, 0.5, -2.0};
  const GeodesicSolution g = integrate_geodesic(e, x0, y0, 2.0, sampled(20));
  REQUIRE(g.times.size() == 21);
  for (std::size_t k = 0; k < g.times.size(); ++k) {
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(g.x[k][i] - (x0[i] + g.times[k] * y0[i])) <= 1e-10);
      CHECK(std::abs(g.v[k][i] - y0[i]) <= 1e-10);
    }
  }
  CHECK(g.max_drift <= 1e-12);
}

TEST_CASE("sphere geodesics follow great circles") {
  const MetricInstance s = build_metric(sphere_spec(2));
  for (const auto& [x0, y0] : std::vector<std::pair<Vec, Vec>>{{{0, 0}, {1, 0.5}}, {{0.3, -0.4}, {-0.2, 1.0}}}) {
    const GeodesicSolution g = integrate_geodesic(s, x0, y0, 2.0, sampled(20), true);
    CHECK(g.unit_speed);
    CHECK(g.max_drift <= 1e-7);
    // X(s) = cos(s) X0 + sin(s) T0 with T0 the unit tangent of the lifted curve.
    const Vec X0 = to_sphere(x0);
    const double h = 1e-6;
    Vec xp = x0, xm = x0;
    for (int i = 0; i < 2; ++i) {
      xp[i] += h * g.v[0][i];
      xm[i] -= h * g.v[0][i];
    }
    Vec T0(3);
    const Vec Xp = to_sphere(xp), Xm = to_sphere(xm);
    for (int i = 0; i < 3; ++i) T0[i] = (Xp[i] - Xm[i]) / (2 * h);
    const double tn = norm(T0);
    CHECK(tn == doctest::Approx(1.0).epsilon(1e-8));
    for (double& v : T0) v /= tn;
    for (std::size_t k = 0; k < g.times.size(); ++k) {
      const double t = g.times[k];
      Vec ref(3);
      for (int i = 0; i < 3; ++i) ref[i] = std::cos(t) * X0[i] + std::sin(t) * T0[i];
      CHECK(dist(to_sphere(g.x[k]), ref) <= 1e-7);
    }
  }
  // Through the origin the chart image is x(s) = tan(s/2) y0/|y0|.
  const GeodesicSolution g = integrate_geodesic(s, {0, 0}, {0.6, 0.8}, 1.5, sampled(15), true);
  for (std::size_t k = 0; k < g.times.size(); ++k) {
    const double r = std::tan(g.times[k] / 2);
    CHECK(std::abs(g.x[k][0] - 0.6 * r) <= 1e-9);
    CHECK(std::abs(g.x[k][1] - 0.8 * r) <= 1e-9);
  }
}

TEST_CASE("Funk geodesics are chart-straight and conserve F") {
  for (const auto& a : {Vec{0, 0}, Vec{0, 0, 0}}) {
    const MetricInstance f = build_metric(funk_spec(a));
    const std::size_t n = a.size();
    Vec x0(n, 0.0), y0(n, 0.0);
    x0[0] = 0.2;
    y0[0] = 0.3;
    y0[1] = 1.0;
    const GeodesicSolution g = integrate_geodesic(f, x0, y0, 1.0, sampled(20), true);
    CHECK(g.max_drift <= 1e-7);
    for (std::size_t k = 0; k < g.times.size(); ++k) {
      const Vec& x = g.x[k];
      const double u0 = x[0] - x0[0], u1 = x[1] - x0[1];
      CHECK(std::abs(u0 * y0[1] - u1 * y0[0]) <= 1e-6);
      for (std::size_t i = 2; i < n; ++i) CHECK(std::abs(x[i]) <= 1e-10);
      CHECK(std::abs(f.value(g.x[k], g.v[k]) - 1.0) <= 1e-7);
    }
  }
}

TEST_CASE("geodesics leaving the chart raise ChartExit") {
  const MetricInstance f = build_metric(funk_spec({0, 0}));
  try {
    integrate_geodesic(f, {0, 0}, {1, 0}, -5.0);
    FAIL("expected ChartExit");
  } catch (const ChartExitError& e) {
    CHECK(e.code() == ErrorCode::ChartExit);
    CHECK(e.time() < 0.0);
    CHECK(e.time() > -5.0);
  }
}

TEST_CASE("property: geodesic time reversal and the first integral") {
  for (const auto& spec : {funk_spec({0, 0}), funk_spec({0.2, 0}), randers_curved(), sphere_spec(3)}) {
    const MetricInstance m = build_metric(spec);
    for (const auto& p : sample_points(m, 3, 21)) {
      const GeodesicSolution fwd = integrate_geodesic(m, p.x, p.y, 0.5);
      CHECK(fwd.max_drift <= 1e-7);
      const GeodesicSolution back = integrate_geodesic(m, fwd.x.back(), fwd.v.back(), -0.5);
      CHECK(dist(back.x.back(), p.x) <= 1e-6);
      CHECK(dist(back.v.back(), p.y) <= 1e-6);
    }
  }
}

TEST_CASE("parallel transport") {
  const MetricInstance e = build_metric(euclidean_spec(2));
  const Curve seg{Curve::Kind::Segment, {0.1, 0.2}, {0.5, -0.3}, 1.0};
  for (auto mode : {TransportMode::CurveVelocity, TransportMode::Transported, TransportMode::Supported}) {
    const TransportResult r = parallel_transport(e, seg, {0.7, 0.4}, mode);
    CHECK(r.V.back()[0] == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(r.V.back()[1] == doctest::Approx(0.4).epsilon(1e-14));
  }

  // Metric compatibility on a Riemannian metric; both modes agree there.
  const MetricInstance s = build_metric(sphere_spec(2));
  const Curve arc{Curve::Kind::Segment, {-0.3, 0.2}, {0.8, 0.4}, 1.0};
  const TransportResult lin = parallel_transport(s, arc, {0.3, 1.0}, TransportMode::CurveVelocity, sampled(10));
  const TransportResult non = parallel_transport(s, arc, {0.3, 1.0}, TransportMode::Transported, sampled(10));
  for (std::size_t k = 0; k < lin.V.size(); ++k) {
    const double g0 = s.value(lin.x[0], lin.V[0]), gk = s.value(lin.x[k], lin.V[k]);
    CHECK(std::abs(gk - g0) <= 1e-8 * g0);
    CHECK(dist(lin.V[k], non.V[k]) <= 1e-9);
  }

  // Funk geodesics are auto-parallel.
  const MetricInstance f = build_metric(funk_spec({0, 0}));
  const Curve geo{Curve::Kind::Geodesic, {0.1, -0.2}, {0.4, 0.9}, 1.0};
  const TransportResult ap = parallel_transport(f, geo, {0.4, 0.9}, TransportMode::CurveVelocity, sampled(10));
  for (std::size_t k = 0; k < ap.V.size(); ++k) {
    const Vec& V = ap.V[k];
    const Vec& xd = ap.xdot[k];
    CHECK(std::abs(V[0] * xd[1] - V[1] * xd[0]) <= 1e-6 * norm(V) * norm(xd));
  }
}

TEST_CASE("property: linear-mode transport is linear") {
  const MetricInstance f = build_metric(funk_spec({0, 0, 0}));
  const Curve seg{Curve::Kind::Segment, {0.1, 0.0, -0.1}, {0.3, 0.2, 0.1}, 1.0};
  const Vec u{1, 0, 0.5}, v{-0.2, 1, 0.3};
  const double a = 0.7, b = -1.3;
  Vec w(3);
  for (int i = 0; i < 3; ++i) w[i] = a * u[i] + b * v[i];
  const auto tu = parallel_transport(f, seg, u, TransportMode::CurveVelocity).V.back();
  const auto tv = parallel_transport(f, seg, v, TransportMode::CurveVelocity).V.back();
  const auto tw = parallel_transport(f, seg, w, TransportMode::CurveVelocity).V.back();
  for (int i = 0; i < 3; ++i) CHECK(std::abs(tw[i] - (a * tu[i] + b * tv[i])) <= 1e-9);
}

TEST_CASE("parallelogram length defect") {
  const Vec eps{0.2, 0.1, 0.05};
  const MetricInstance e = build_metric(euclidean_spec(2));
  const ParallelogramExperiment pe = parallelogram_holonomy(e, {0, 0}, {1, 0}, {0, 1}, {0.3, 0.7}, eps);
  for (double d : pe.defect) CHECK(d == 0.0);
  CHECK(pe.reversal_residual <= 1e-12);

  const MetricInstance s = build_metric(sphere_spec(2));
  const ParallelogramExperiment ps = parallelogram_holonomy(s, {0.1, 0.1}, {1, 0}, {0, 1}, {0.3, 0.7}, eps);
  for (double d : ps.defect) CHECK(d <= 1e-9);

  const MetricInstance f = build_metric(funk_spec({0, 0}));
  const ParallelogramExperiment pf = parallelogram_holonomy(f, {0.1, 0.1}, {1, 0}, {0, 1}, {0.3, 0.7}, eps);
  REQUIRE(pf.exponent.has_value());
  CHECK(*pf.exponent >= 2.0);
  CHECK(pf.defect[0] > pf.defect[2]);
  CHECK(pf.reversal_residual <= 1e-8);

  // Locally Minkowski: the defect sits at round-off, far below the Funk defect.
  const MetricInstance mk = build_metric(custom(2, "(y1^4 + y2^4 + 0.5*abs2(y)^2)^(1/4) + 0.1*y1"));
  const ParallelogramExperiment pm = parallelogram_holonomy(mk, {0.1, 0.1}, {1, 0}, {0, 1}, {0.3, 0.7}, eps);
  for (std::size_t k = 0; k < eps.size(); ++k) CHECK(pm.defect[k] <= eps[k] * pf.defect[k]);
}

TEST_CASE("property: parallelogram defect is symmetric under swapping the sides") {
  const Vec eps{0.1, 0.05};
  for (const auto& spec : {funk_spec({0, 0}), sphere_spec(2)}) {
    const MetricInstance m = build_metric(spec);
    const auto a = parallelogram_holonomy(m, {0.1, -0.1}, {1, 0.2}, {-0.3, 1}, {0.5, 0.5}, eps,
                                          TransportMode::Transported);
    const auto b = parallelogram_holonomy(m, {0.1, -0.1}, {-0.3, 1}, {1, 0.2}, {0.5, 0.5}, eps,
                                          TransportMode::Transported);
    for (std::size_t k = 0; k < eps.size(); ++k) CHECK(std::abs(a.defect[k] - b.defect[k]) <= 1e-8);
  }
}

TEST_CASE("scalar flows") {
  // Funk: phi' = c F phi holds; the doubled rate is off by exactly one half.
  const MetricInstance f = build_metric(funk_spec({0, 0}));
  const GeodesicSolution g = integrate_geodesic(f, {0.1, 0.0}, {0.2, 1.0}, 1.0, sampled(10), true);
  const ScalarFlow fl = scalar_flows(f, g, {"phi", "c", "mu"}, -1.0);
  CHECK(fl.status.at("phi") == "ok");
  for (std::size_t k = 0; k < fl.times.size(); ++k) {
    CHECK(fl.columns.at("phi")[k] > 0.0);
    CHECK(fl.columns.at("phi_half_law_residual")[k] <= 1e-10);
    CHECK(fl.columns.at("phi_law_residual")[k] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(fl.columns.at("c")[k] == doctest::Approx(-1.0).epsilon(1e-8));
    CHECK(std::abs(fl.columns.at("c_dot")[k]) <= 1e-8);
  }

  const MetricInstance s = build_metric(sphere_spec(3));
  const ScalarFlow fs = scalar_flows(s, integrate_geodesic(s, {0, 0, 0}, {1, 0, 0}, 1.0, sampled(5)), {"phi", "mu"});
  for (double v : fs.columns.at("phi")) CHECK(v == doctest::Approx(0.0));
  CHECK(fs.status.at("mu") != "ok");
  CHECK(fs.columns.count("mu") == 0);
}

TEST_CASE("mu flow agrees with an RK4 integration of mu' = -mu^2 F") {
  const MetricInstance m = build_metric(berwald2());
  const GeodesicSolution g = integrate_geodesic(m, {0.1, -0.1}, {0.6, 0.8}, 1.0, sampled(10), true);
  const ScalarFlow fl = scalar_flows(m, g, {"mu"});
  REQUIRE(fl.status.at("mu") == "ok");
  const auto& mu = fl.columns.at("mu");
  REQUIRE(std::abs(mu[0]) > 1e-3);
  for (std::size_t k = 1; k < fl.times.size(); ++k) {
    const Vec ref = oracle::rk4([](double, const Vec& u) { return Vec{-u[0] * u[0]}; }, {mu[0]}, 0.0, fl.times[k], 200);
    CHECK(std::abs(mu[k] - ref[0]) <= 1e-4);
  }
}
