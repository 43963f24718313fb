#include "finsler/metric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "finsler/curvature.hpp"

namespace finsler {

std::string_view to_string(MetricFamily family) {
  switch (family) {
    case MetricFamily::Riemannian: return "riemannian";
    case MetricFamily::Randers: return "randers";
    case MetricFamily::Funk: return "funk";
    case MetricFamily::Custom: return "custom";
  }
  return "unknown";
}

bool Chart::contains(std::span<const double> x) const {
  switch (kind) {
    case Kind::Whole:
      return true;
    case Kind::Ball: {
      double r2 = 0.0;
      for (double v : x) r2 += v * v;
      return r2 < radius * radius;
    }
    case Kind::Box:
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > lower.at(i) && x[i] < upper.at(i))) return false;
      }
      return true;
  }
  return false;
}

struct MetricInstance::Impl {
  MetricSpec spec;
  Chart chart;
  std::vector<expr::NodePtr> a;  // row-major n x n
  std::vector<expr::NodePtr> b;
  expr::NodePtr custom;

  template <class T>
  T quadratic_form(std::span<const T> x, std::span<const T> y) const {
    const int n = spec.dimension;
    const expr::Env<T> env{x, y, &spec.scalar_params, &spec.vector_params};
    T acc = expr::eval(*a[0], env) * y[0] * y[0];
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == 0 && j == 0) continue;
        acc += expr::eval(*a[i * n + j], env) * y[i] * y[j];
      }
    }
    return acc;
  }

  template <class T>
  T evaluate(std::span<const T> x, std::span<const T> y) const {
    using std::sqrt;
    const int n = spec.dimension;
    switch (spec.family) {
      case MetricFamily::Riemannian:
      case MetricFamily::Randers: {
        const T q = quadratic_form(x, y);
        if constexpr (std::is_same_v<T, double>) {
          if (!(q > 0.0)) throw Error(ErrorCode::DomainError, "a_ij y^i y^j is not positive");
        }
        T f = sqrt(q);
        if (spec.family == MetricFamily::Randers) {
          const expr::Env<T> env{x, y, &spec.scalar_params, &spec.vector_params};
          for (int i = 0; i < n; ++i) f += expr::eval(*b[i], env) * y[i];
        }
        return f;
      }
      case MetricFamily::Funk: {
        T xx = x[0] * x[0], yy = y[0] * y[0], xy = x[0] * y[0], ay = spec.funk_a[0] * y[0];
        for (int i = 1; i < n; ++i) {
          xx += x[i] * x[i];
          yy += y[i] * y[i];
          xy += x[i] * y[i];
          ay += spec.funk_a[i] * y[i];
        }
        const T inner = yy - (xx * yy - xy * xy);
        if constexpr (std::is_same_v<T, double>) {
          if (!(inner > 0.0)) throw Error(ErrorCode::DomainError, "funk radicand is not positive");
        }
        return (sqrt(inner) + xy + ay) / (1.0 - xx);
      }
      case MetricFamily::Custom: {
        const expr::Env<T> env{x, y, &spec.scalar_params, &spec.vector_params};
        return expr::eval(*custom, env);
      }
    }
    throw Error(ErrorCode::SpecError, "unknown metric family");
  }
};

const MetricSpec& MetricInstance::spec() const { return impl_->spec; }
const Chart& MetricInstance::chart() const { return impl_->chart; }

double MetricInstance::value(std::span<const double> x, std::span<const double> y) const {
  return impl_->evaluate<double>(x, y);
}

Jet MetricInstance::value(std::span<const Jet> x, std::span<const Jet> y) const { return impl_->evaluate<Jet>(x, y); }

void MetricInstance::require_in_chart(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(dimension())) {
    throw Error(ErrorCode::ShapeMismatch, "point has " + std::to_string(x.size()) + " coordinates, expected " +
                                              std::to_string(dimension()));
  }
  if (!impl_->chart.contains(x)) throw Error(ErrorCode::OutOfChart, "point lies outside the metric's chart");
}

namespace {

bool depends_on_y(const expr::Node& n) {
  if (n.kind == expr::NodeKind::Coordinate && n.name == "y") return true;
  if (n.kind == expr::NodeKind::Vector && n.name == "y") return true;
  for (const auto& a : n.args) {
    if (depends_on_y(*a)) return true;
  }
  return false;
}

const expr::Node* first_unbound(const expr::Node& n, const MetricSpec& spec) {
  if (n.kind == expr::NodeKind::Named && !spec.scalar_params.count(n.name)) return &n;
  for (const auto& a : n.args) {
    if (const expr::Node* u = first_unbound(*a, spec)) return u;
  }
  return nullptr;
}

expr::NodePtr compile(const std::string& src, const MetricSpec& spec, const std::string& what, bool allow_y) {
  expr::ParseOptions opts;
  opts.dimension = spec.dimension;
  for (const auto& [name, _] : spec.vector_params) opts.vector_names.push_back(name);
  opts.vector_names.push_back("x");
  expr::NodePtr ast;
  try {
    ast = expr::parse(src, opts);
  } catch (const SyntaxError& e) {
    throw Error(ErrorCode::SpecError, what + ": " + e.what());
  }
  if (const expr::Node* u = first_unbound(*ast, spec)) {
    throw Error(ErrorCode::SpecError, what + ": parameter '" + u->name + "' is not declared in params");
  }
  if (!allow_y && depends_on_y(*ast)) throw Error(ErrorCode::SpecError, what + " must not depend on y");
  return ast;
}

}  // namespace

MetricInstance build_metric(const MetricSpec& spec) {
  const int n = spec.dimension;
  if (n < 2 || 2 * n > MonomialBasis::kMaxVars) {
    throw Error(ErrorCode::SpecError, "dimension must lie in 2.." + std::to_string(MonomialBasis::kMaxVars / 2));
  }
  for (const auto& [name, v] : spec.vector_params) {
    if (static_cast<int>(v.size()) != n) throw Error(ErrorCode::SpecError, "vector parameter " + name + " has wrong size");
  }

  auto impl = std::make_shared<MetricInstance::Impl>();
  impl->spec = spec;

  switch (spec.family) {
    case MetricFamily::Riemannian:
    case MetricFamily::Randers: {
      if (static_cast<int>(spec.a.size()) != n) throw Error(ErrorCode::SpecError, "a must be an n x n matrix");
      for (int i = 0; i < n; ++i) {
        if (static_cast<int>(spec.a[i].size()) != n) throw Error(ErrorCode::SpecError, "a must be an n x n matrix");
        for (int j = 0; j < n; ++j) {
          impl->a.push_back(compile(spec.a[i][j], spec, "a[" + std::to_string(i) + "][" + std::to_string(j) + "]", false));
        }
      }
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          if (!(*impl->a[i * n + j] == *impl->a[j * n + i])) {
            throw Error(ErrorCode::SpecError,
                        "a is not symmetric at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
          }
        }
      }
      if (spec.family == MetricFamily::Randers) {
        if (static_cast<int>(spec.b.size()) != n) throw Error(ErrorCode::SpecError, "b must have n entries");
        for (int i = 0; i < n; ++i) impl->b.push_back(compile(spec.b[i], spec, "b[" + std::to_string(i) + "]", false));
      }
      break;
    }
    case MetricFamily::Funk: {
      if (static_cast<int>(spec.funk_a.size()) != n) throw Error(ErrorCode::SpecError, "funk_a must have n entries");
      double a2 = 0.0;
      for (double v : spec.funk_a) a2 += v * v;
      if (!(a2 < 1.0)) throw Error(ErrorCode::SpecError, "funk_a must satisfy |a| < 1");
      break;
    }
    case MetricFamily::Custom:
      if (spec.expression.empty()) throw Error(ErrorCode::SpecError, "custom metric needs an expression");
      impl->custom = compile(spec.expression, spec, "expression", true);
      break;
  }

  if (spec.chart) {
    impl->chart = *spec.chart;
    if (impl->chart.kind == Chart::Kind::Box &&
        (static_cast<int>(impl->chart.lower.size()) != n || static_cast<int>(impl->chart.upper.size()) != n)) {
      throw Error(ErrorCode::SpecError, "box chart bounds must have n entries");
    }
  } else if (spec.family == MetricFamily::Funk) {
    impl->chart = Chart{.kind = Chart::Kind::Ball, .radius = 1.0, .sample_radius = 0.5};
  }

  MetricInstance m;
  m.impl_ = std::move(impl);
  return m;
}

double funk_metric(std::span<const double> a, std::span<const double> x, std::span<const double> y) {
  if (a.size() != x.size() || x.size() != y.size()) throw Error(ErrorCode::ShapeMismatch, "funk_metric sizes differ");
  double xx = 0, yy = 0, xy = 0, ay = 0, aa = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx += x[i] * x[i];
    yy += y[i] * y[i];
    xy += x[i] * y[i];
    ay += a[i] * y[i];
    aa += a[i] * a[i];
  }
  if (!(xx < 1.0)) throw Error(ErrorCode::OutOfChart, "funk metric requires |x| < 1");
  if (!(aa < 1.0)) throw Error(ErrorCode::SpecError, "funk metric requires |a| < 1");
  if (yy == 0.0) throw Error(ErrorCode::ZeroVector, "funk metric requires y != 0");
  return (std::sqrt(yy - (xx * yy - xy * xy)) + xy + ay) / (1.0 - xx);
}

namespace {

std::vector<std::vector<std::string>> identity_strings(int n, const std::string& diag) {
  std::vector<std::vector<std::string>> a(n, std::vector<std::string>(n, "0"));
  for (int i = 0; i < n; ++i) a[i][i] = diag;
  return a;
}

}  // namespace

MetricSpec euclidean_spec(int n) {
  MetricSpec s;
  s.dimension = n;
  s.family = MetricFamily::Riemannian;
  s.a = identity_strings(n, "1");
  return s;
}

MetricSpec sphere_spec(int n) {
  MetricSpec s;
  s.dimension = n;
  s.family = MetricFamily::Riemannian;
  s.a = identity_strings(n, "4/(1+abs2(x))^2");
  return s;
}

MetricSpec randers_constant_spec(std::vector<double> b) {
  MetricSpec s;
  s.dimension = static_cast<int>(b.size());
  s.family = MetricFamily::Randers;
  s.a = identity_strings(s.dimension, "1");
  for (double v : b) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    s.b.emplace_back(buf);
  }
  return s;
}

MetricSpec funk_spec(std::vector<double> a) {
  MetricSpec s;
  s.dimension = static_cast<int>(a.size());
  s.family = MetricFamily::Funk;
  s.funk_a = std::move(a);
  return s;
}

std::vector<SamplePoint> sample_points(const MetricInstance& m, int count, std::uint64_t seed) {
  const int n = m.dimension();
  const Chart& chart = m.chart();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<SamplePoint> out;
  out.reserve(count);
  for (int s = 0; s < count; ++s) {
    SamplePoint p{std::vector<double>(n), std::vector<double>(n)};
    for (int attempt = 0;; ++attempt) {
      if (attempt > 100000) throw Error(ErrorCode::OutOfChart, "could not sample a point inside the chart");
      double r2 = 0.0;
      for (double& v : p.x) {
        v = chart.sample_radius * unit(rng);
        r2 += v * v;
      }
      if (r2 < chart.sample_radius * chart.sample_radius && chart.contains(p.x)) break;
    }
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : p.y) {
        v = normal(rng);
        norm += v * v;
      }
    } while (norm < 1e-12);
    norm = std::sqrt(norm);
    for (double& v : p.y) v /= norm;
    out.push_back(std::move(p));
  }
  return out;
}

ValidationReport validate(const MetricInstance& m, int samples, std::uint64_t seed, double tolerance) {
  if (samples < 1) throw Error(ErrorCode::BadConfig, "validate needs at least one sample");
  ValidationReport report;
  report.tolerance = tolerance;
  report.min_eigenvalue = std::numeric_limits<double>::infinity();
  const double lambdas[] = {0.5, 1.0, 2.0};
  for (const auto& p : sample_points(m, samples, seed)) {
    for (double lambda : lambdas) {
      ValidationSample s;
      s.x = p.x;
      s.y = p.y;
      for (double& v : s.y) v *= lambda;
      s.lambda = lambda;
      try {
        const double f1 = m.value(p.x, p.y);
        const double fl = m.value(s.x, s.y);
        s.homogeneity_residual = std::abs(fl - lambda * f1) / std::abs(lambda * f1);
        FieldEngine engine(m, PointState{s.x, s.y}, 2);
        const TensorBlock g = values(engine.g());
        s.min_eigenvalue = min_eigenvalue(g);
        double gyy = 0.0;
        for (int i = 0; i < m.dimension(); ++i) {
          for (int j = 0; j < m.dimension(); ++j) gyy += g(i, j) * s.y[i] * s.y[j];
        }
        s.euler_residual = std::abs(gyy - fl * fl) / (fl * fl);
        s.ok = f1 > 0.0 && s.homogeneity_residual <= tolerance && s.euler_residual <= tolerance &&
               s.min_eigenvalue > 0.0;
      } catch (const Error&) {
        s.ok = false;
        s.min_eigenvalue = -std::numeric_limits<double>::infinity();
      }
      report.max_homogeneity_residual = std::max(report.max_homogeneity_residual, s.homogeneity_residual);
      report.min_eigenvalue = std::min(report.min_eigenvalue, s.min_eigenvalue);
      if (!s.ok && !report.first_failure) report.first_failure = report.samples.size();
      report.samples.push_back(std::move(s));
    }
  }
  report.pass = !report.first_failure.has_value();
  return report;
}

}  // namespace finsler
