#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finsler/metric.hpp"

namespace finsler {

struct IntegratorOptions {
  double rtol = 1e-11;
  double atol = 1e-12;
  double initial_step = 1e-2;
  double min_step = 1e-10;
  int max_steps = 200000;
  /// Steps whose relative drift of the first integral exceeds this are rejected.
  double drift_tol = 1e-9;
  /// When > 0, states are recorded on a uniform grid of this many intervals
  /// instead of at every accepted step.
  int samples = 0;
};

struct GeodesicSolution {
  std::vector<double> times;
  std::vector<std::vector<double>> x;
  std::vector<std::vector<double>> v;
  double F0 = 0.0;
  double max_drift = 0.0;  // max |F(x, v) - F0| / F0 over recorded states
  bool unit_speed = false;
  int accepted = 0;
  int rejected = 0;
};

/// Integrates x'' + 2 G(x, x') = 0 from t = 0 to t_end (either sign).
/// Throws ChartExitError when the curve leaves the chart and StepFailure
/// when the step size collapses.
GeodesicSolution integrate_geodesic(const MetricInstance& m, const std::vector<double>& x0,
                                    const std::vector<double>& y0, double t_end, const IntegratorOptions& opts = {},
                                    bool unit_speed = false);

enum class TransportMode {
  /// dV/dt = -Gamma(x, x') V x' : linear, reference vector = curve velocity.
  CurveVelocity,
  /// dV/dt = -N(x, V) x' : nonlinear, reference vector = V itself.
  Transported,
  /// dV/dt = -Gamma(x, Y) V x' with Y transported nonlinearly alongside.
  Supported,
};

std::string_view to_string(TransportMode mode);

/// A chart-straight segment x(t) = start + t * direction, or the geodesic
/// with initial data (start, direction); both on t in [0, length].
struct Curve {
  enum class Kind { Segment, Geodesic };
  Kind kind = Kind::Segment;
  std::vector<double> start;
  std::vector<double> direction;
  double length = 1.0;
};

struct TransportResult {
  TransportMode mode = TransportMode::CurveVelocity;
  std::vector<double> times;
  std::vector<std::vector<double>> x;
  std::vector<std::vector<double>> xdot;
  std::vector<std::vector<double>> V;
  std::vector<std::vector<double>> support;  // Supported mode only
  /// sqrt(g_ref(V, V)) with ref = x', V or Y according to the mode.
  std::vector<double> length;
};

/// Throws VanishingVector if V (or Y) collapses in a nonlinear mode.
TransportResult parallel_transport(const MetricInstance& m, const Curve& curve, const std::vector<double>& w0,
                                   TransportMode mode, const IntegratorOptions& opts = {},
                                   std::optional<std::vector<double>> support0 = std::nullopt);

struct ParallelogramExperiment {
  std::vector<double> x0, u, v, w0, support0;
  TransportMode mode = TransportMode::Supported;
  std::vector<double> eps;
  std::vector<double> defect;  // |len_end - len_start| per eps
  /// Slope of log defect against log eps; absent when fewer than two
  /// defects are positive.
  std::optional<double> exponent;
  /// Largest |V| error after running the reversed loop from the forward end state.
  double reversal_residual = 0.0;
};

/// Transports w0 around x0 -> x0+eps u -> x0+eps(u+v) -> x0+eps v -> x0.
/// In Supported mode the support starts at `support0` (default u).
ParallelogramExperiment parallelogram_holonomy(const MetricInstance& m, const std::vector<double>& x0,
                                               const std::vector<double>& u, const std::vector<double>& v,
                                               const std::vector<double>& w0, const std::vector<double>& eps_list,
                                               TransportMode mode = TransportMode::Supported,
                                               std::optional<std::vector<double>> support0 = std::nullopt,
                                               const IntegratorOptions& opts = {});

/// Time series of scalar fields along a geodesic. Columns present depend on
/// the requested quantities:
///   phi        F, phi, phi_dot, L_norm, and with c: phi_law_residual
///              (phi_dot vs 2cF phi) and phi_half_law_residual (vs cF phi)
///   L_norm     L_norm
///   mu         mu, mu_dot (n = 2)
///   p          p, p_dot (n >= 3)
///   c          c, c_dot
/// A quantity that cannot be evaluated records its error in `status` and
/// its columns are dropped.
struct ScalarFlow {
  std::vector<double> times;
  std::map<std::string, std::vector<double>> columns;
  std::map<std::string, std::string> status;  // "ok" or the error message
  std::optional<double> c;
};

ScalarFlow scalar_flows(const MetricInstance& m, const GeodesicSolution& geod, const std::vector<std::string>& quantities,
                        std::optional<double> c = std::nullopt);

}  // namespace finsler
