#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finsler/curvature.hpp"

namespace finsler {

struct GeodesicSolution;

// ---------------------------------------------------------------------------
// Classification

struct ClassFlag {
  bool value = false;
  double residual = 0.0;
  double threshold = 0.0;
};

struct ClassThresholds {
  double riemannian = 1e-8;
  double berwald = 1e-8;
  double landsberg = 1e-8;
  double weak_landsberg = 1e-8;
  double stretch = 1e-8;
  double r_quadratic = 1e-8;
  double weak_berwald = 1e-8;
  double chain_inflation = 10.0;
};

/// Flags keyed by riemannian, berwald, landsberg, weak_landsberg, stretch,
/// r_quadratic, weak_berwald. Residuals are max-norms over the samples,
/// scaled by powers of F to be homogeneous of degree 0.
struct ClassificationVerdict {
  std::map<std::string, ClassFlag> flags;
  std::vector<PointState> points;
  std::uint64_t seed = 0;
  /// Violations of riemannian => berwald => landsberg => stretch (and the
  /// weak variants), each naming the implication that failed.
  std::vector<std::string> chain_violations;
};

ClassificationVerdict classify(const MetricInstance& m, int samples, std::uint64_t seed,
                               const ClassThresholds& thresholds = {});

// ---------------------------------------------------------------------------
// Relative stretch: Sigma = c F (C_ijk|l - C_ijl|k)

struct RelativeStretchFit {
  double c = 0.0;
  double residual = 0.0;       // worst relative misfit ||Sigma - cD|| / max(||Sigma||, |c| ||D||)
  double design_norm = 0.0;    // ||D|| (Frobenius), smallest over points
  double sigma_norm = 0.0;     // ||Sigma||, largest over points
  std::vector<double> per_point;
  double spread = 0.0;         // max - min of per-point c
  std::string sign_label;      // see relative_stretch_sign_label
};

/// Closed-form 1-D least squares on one pair of blocks. Throws UndefinedFit
/// when the design block is below `zero`.
RelativeStretchFit fit_relative_stretch(const TensorBlock& sigma, const TensorBlock& design, double zero = 1e-9);
RelativeStretchFit fit_relative_stretch(const MetricInstance& m, const PointState& p, double zero = 1e-9);
RelativeStretchFit fit_relative_stretch(const MetricInstance& m, const std::vector<PointState>& points,
                                        double zero = 1e-9);

/// c < 0 reads "relatively nonnegative", c > 0 "relatively non-positive",
/// |c| <= zero "zero". The raw sign is always reported next to it.
std::string relative_stretch_sign_label(double c, double zero = 1e-9);

struct RelativeStretchProfile {
  std::vector<PointState> points;
  std::vector<double> c;
  double fiber_spread = 0.0;   // largest spread of c over y at fixed x
  double global_spread = 0.0;  // spread of c over all samples
  bool isotropic = false;      // fiber_spread <= threshold
  bool constant = false;       // global_spread <= threshold
  double threshold = 1e-3;
  std::string sign_label;
};

/// Samples `xs` base points and `ys` directions per base point.
RelativeStretchProfile relative_stretch_profile(const MetricInstance& m, int xs, int ys, std::uint64_t seed,
                                                double threshold = 1e-3);

// ---------------------------------------------------------------------------
// Semi-C-reducibility: C = p/(n+1) (I h)_sym + q/|I|^2 I I I, p + q = 1

struct SemiCFit {
  double p = 0.0;
  double q = 0.0;
  double residual = 0.0;
  double I_norm2 = 0.0;
};

/// Block-level fit from C, I, h and g^-1 at one point.
SemiCFit fit_semi_c_reducible(const TensorBlock& C, const TensorBlock& I, const TensorBlock& h,
                              const TensorBlock& g_inv, double F, double zero = 1e-12);
SemiCFit fit_semi_c_reducible(const MetricInstance& m, const PointState& p, double zero = 1e-12);

// ---------------------------------------------------------------------------
// 2-D Berwald frame

struct BerwaldFrame2D {
  std::vector<double> ell;
  std::vector<double> m;
  double I_scalar = 0.0;
  std::optional<double> mu;  // I_|i ell^i / I; absent when I vanishes
  double I_vert = 0.0;       // F I_.i m^i
  double reconstruction_residual = 0.0;  // ||C - F^-1 I m m m|| / ||C||
  double frame_residual = 0.0;           // max of |g(l,l)-1|, |g(m,m)-1|, |g(l,m)|
  std::optional<double> landsberg_residual;  // ||L - mu F C|| relative, when mu exists
};

/// orientation = +1 picks det[ell m] > 0, -1 the opposite. Throws
/// DimensionError for n != 2 and RiemannianPoint if `require_mu` and I
/// vanishes.
BerwaldFrame2D berwald_frame(const MetricInstance& m, const PointState& p, bool require_mu = false,
                             int orientation = 1);

// ---------------------------------------------------------------------------
// Jet-level scalars, used for derivatives along geodesics.

/// c(x, y) as a jet of order engine.order() - 6.
Jet relative_stretch_jet(FieldEngine& e, double zero = 1e-9);
/// p(x, y) as a jet of order engine.order() - 3 (n >= 3).
Jet characteristic_jet(FieldEngine& e, double zero = 1e-12);
/// Principal scalar I and mu for n = 2 as jets.
Jet principal_scalar_jet(FieldEngine& e, int orientation = 1);
Jet mu_jet(FieldEngine& e, double zero = 1e-12);
/// phi = L^ijk L_ijk.
Jet landsberg_square_jet(FieldEngine& e);

// ---------------------------------------------------------------------------
// Identity checks over point sets and geodesics

struct TheoremCheckSample {
  double t = 0.0;
  std::map<std::string, double> values;
  double residual = 0.0;
  std::string status;  // "ok", "fail", "vacuous", "degenerate"
};

struct TheoremCheckResult {
  std::string id;
  std::vector<TheoremCheckSample> samples;
  std::map<std::string, double> parameters;
  std::map<std::string, double> residuals;  // per identity, worst over samples
  double residual = 0.0;
  double tolerance = 0.0;
  std::string verdict;  // "pass", "fail", "vacuous", "degenerate", "report"
  bool pass = false;
};

/// Samples p(t) along the geodesic and reports its drift and p' = p_|s y^s.
TheoremCheckResult check_characteristic_constancy(const MetricInstance& m, const GeodesicSolution& geod);

/// Q = 2 mu' + 2 mu^2 F - c mu F along a 2-D geodesic, and the product Q ||C||.
TheoremCheckResult check_theorem3_condition(const MetricInstance& m, const GeodesicSolution& geod, double c,
                                            double tolerance = 1e-5);

/// Measured flag curvature over a point set. Throws NotConstantCurvature if
/// the spread exceeds `spread_tol`.
struct FlagCurvatureSurvey {
  std::vector<double> values;
  double mean = 0.0;
  double spread = 0.0;
};
FlagCurvatureSurvey survey_flag_curvature(const MetricInstance& m, const std::vector<PointState>& points,
                                          int flags_per_point, std::uint64_t seed);

/// Identities (a)-(d) of the constant-flag-curvature chain at each point,
/// with lambda measured over the points and c fitted.
TheoremCheckResult check_constant_flag_chain(const MetricInstance& m, const std::vector<PointState>& points,
                                             double tolerance = 1e-5, double spread_tol = 1e-4);

/// Consistency of the two second-derivative expressions for C along a
/// geodesic, [-lambda F^2 - (2 lambda F / c)(c' + 2 lambda F / c)] C = 0,
/// plus W = 2cc' + c^2 F + 4 lambda F.
TheoremCheckResult check_corollary_condition(const MetricInstance& m, const GeodesicSolution& geod, double lambda,
                                             const RelativeStretchFit& cfit, double tolerance = 1e-5);

}  // namespace finsler
