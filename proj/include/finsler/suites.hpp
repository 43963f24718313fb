#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finsler/analysis.hpp"
#include "finsler/transport.hpp"

namespace finsler {

struct SuiteOptions {
  int samples = 10;
  std::uint64_t seed = 1;
  Tolerances tol{};
  /// Geodesic suites: number of trajectories and unit-speed length.
  int geodesics = 3;
  double t_end = 1.0;
  int time_samples = 20;
  /// Overrides the fitted relative-stretch ratio in geodesic suites.
  std::optional<double> c;
};

/// One row of a residual table. `point` indexes the sample (or trajectory).
struct SuiteRow {
  std::string check;
  int point = 0;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  std::string note;
};

struct SuiteResult {
  std::string suite;
  std::vector<SuiteRow> rows;
  std::map<std::string, double> parameters;
  bool pass = true;
};

const std::vector<std::string>& suite_names();

/// Runs one named suite: identities, bianchi, landsberg-routes,
/// constant-flag, theorem3 or flows. Throws BadConfig for an unknown name
/// and DimensionError when the suite needs n = 2.
SuiteResult run_suite(const MetricInstance& m, const std::string& suite, const SuiteOptions& opts = {});

/// mu(t) solving mu' = mu (c/2 - mu) at unit speed; c = 0 gives mu0 / (1 + t mu0).
double mu_closed_form(double mu0, double c, double t);

}  // namespace finsler
