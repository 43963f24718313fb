#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "finsler/expr.hpp"
#include "finsler/jet.hpp"

namespace finsler {

enum class MetricFamily { Riemannian, Randers, Funk, Custom };

std::string_view to_string(MetricFamily family);

/// Coordinate domain of a metric instance. Sampling draws x from the ball of
/// radius `sample_radius` intersected with the domain.
struct Chart {
  enum class Kind { Whole, Ball, Box };
  Kind kind = Kind::Whole;
  double radius = 1.0;          // Ball
  std::vector<double> lower;    // Box
  std::vector<double> upper;    // Box
  double sample_radius = 1.0;

  bool contains(std::span<const double> x) const;
};

struct MetricSpec {
  int dimension = 2;
  MetricFamily family = MetricFamily::Riemannian;
  /// riemannian / randers: a_ij as expression sources (plain numbers allowed).
  std::vector<std::vector<std::string>> a;
  /// randers: b_i expression sources.
  std::vector<std::string> b;
  /// funk: the constant vector a with |a| < 1.
  std::vector<double> funk_a;
  /// custom: F(x, y) source.
  std::string expression;
  std::map<std::string, double> scalar_params;
  std::map<std::string, std::vector<double>> vector_params;
  std::optional<Chart> chart;
};

/// An evaluable Finsler metric. Immutable and cheap to copy.
class MetricInstance {
 public:
  const MetricSpec& spec() const;
  int dimension() const { return spec().dimension; }
  MetricFamily family() const { return spec().family; }
  const Chart& chart() const;

  double value(std::span<const double> x, std::span<const double> y) const;
  Jet value(std::span<const Jet> x, std::span<const Jet> y) const;

  /// Throws OutOfChart if x lies outside the chart.
  void require_in_chart(std::span<const double> x) const;

 private:
  struct Impl;
  friend MetricInstance build_metric(const MetricSpec& spec);
  std::shared_ptr<const Impl> impl_;
};

/// Validates `spec` and compiles it. Throws SpecError.
MetricInstance build_metric(const MetricSpec& spec);

/// Closed-form Funk-type metric on the unit ball:
/// (sqrt(|y|^2 - (|x|^2|y|^2 - <x,y>^2)) + <x,y> + <a,y>) / (1 - |x|^2).
double funk_metric(std::span<const double> a, std::span<const double> x, std::span<const double> y);

// Convenience constructors used by tests, the CLI and the bindings.
MetricSpec euclidean_spec(int n);
MetricSpec sphere_spec(int n);  // stereographic chart of the unit sphere, K = 1
MetricSpec randers_constant_spec(std::vector<double> b);
MetricSpec funk_spec(std::vector<double> a);

struct SamplePoint {
  std::vector<double> x;
  std::vector<double> y;
};

/// Deterministic sampling: x uniform in the chart's sampling ball, y uniform
/// on the Euclidean unit sphere.
std::vector<SamplePoint> sample_points(const MetricInstance& m, int count, std::uint64_t seed);

struct ValidationSample {
  std::vector<double> x;
  std::vector<double> y;
  double lambda = 1.0;
  double homogeneity_residual = 0.0;  // |F(x, lambda y) - lambda F(x, y)| / (lambda F)
  double min_eigenvalue = 0.0;        // of g at (x, lambda y)
  double euler_residual = 0.0;        // |g(y, y) - F^2| / F^2
  bool ok = true;
};

struct ValidationReport {
  std::vector<ValidationSample> samples;
  double max_homogeneity_residual = 0.0;
  double min_eigenvalue = 0.0;
  std::optional<std::size_t> first_failure;
  double tolerance = 1e-10;
  bool pass = true;
};

ValidationReport validate(const MetricInstance& m, int samples, std::uint64_t seed, double tolerance = 1e-10);

}  // namespace finsler
