#pragma once

// Curvature tensors of a Finsler metric at a point (x, y) of the punctured
// tangent bundle.
//
// Every quantity is produced as a field of jets in the 2n coordinates
// (x, y) around the point, so h- and v-covariant derivatives are exact
// coefficient shifts. The jet order bounds how many derivatives remain:
// F^2 at order K gives g and C at K-2 / K-3, the spray at K-2, B at K-5,
// the stretch tensor at K-6 and the vertical derivative of the hh-curvature
// at K-7. Asking for more than the engine was seeded with throws
// OrderExceeded.
//
// Index conventions (storage order):
//   g_ij, h_ij, C_ijk, L_ijk, Sigma_ijkl, I_k, J_k, E_jk   all lower
//   G^i, N^i_j, Gamma^i_jk, B^i_jkl, R^i_k                   upper first
//   R_j^i_kl (hh-curvature) stored as R(i, j, k, l)
//   derivative indices are appended last, e.g. hB(i, j, k, l, m) = B^i_jkl|m

#include <functional>
#include <optional>
#include <vector>

#include "finsler/jet.hpp"
#include "finsler/metric.hpp"
#include "finsler/tensor.hpp"

namespace finsler {

struct PointState {
  std::vector<double> x;
  std::vector<double> y;
};

struct Tolerances {
  double identity = 1e-6;    // default relative tolerance for identities
  double floor = 1e-6;       // scale floor for relative residuals
  double zero = 1e-9;        // a tensor with max-norm below this counts as zero
  double fit_spread = 1e-4;  // allowed spread of fitted scalars
};

/// Jet orders needed by the different levels of the tower.
namespace jet_order {
inline constexpr int kMetric = 3;    // g, h, C, I
inline constexpr int kSpray = 4;     // G, N, Gamma, R^i_k
inline constexpr int kBerwald = 5;   // B, E, L, J
inline constexpr int kStretch = 6;   // Sigma, R_j^i_kl, B_|k
inline constexpr int kBianchi = 7;   // R_j^i_kl.m, derivatives of fitted scalars
}  // namespace jet_order

/// All tensor fields of one metric around one point. Fields are computed on
/// first use and cached; one engine should not be shared between threads.
class FieldEngine {
 public:
  FieldEngine(const MetricInstance& metric, const PointState& point, int order = jet_order::kBianchi);

  int dim() const noexcept { return n_; }
  int order() const noexcept { return order_; }
  const MetricInstance& metric() const noexcept { return metric_; }
  const PointState& point() const noexcept { return point_; }

  const std::vector<Jet>& x() const noexcept { return x_; }
  const std::vector<Jet>& y() const noexcept { return y_; }
  const Jet& F();
  const Jet& F2();

  const JetTensor& y_upper();
  const JetTensor& y_lower();
  const JetTensor& g();
  const JetTensor& g_inv();
  const JetTensor& h();
  const JetTensor& C();
  const JetTensor& I();
  const JetTensor& G();
  const JetTensor& N();
  const JetTensor& Gamma();
  const JetTensor& B();
  const JetTensor& E();
  const JetTensor& R1();
  const JetTensor& R();
  /// Landsberg tensor via -1/2 y_m B^m_ijk.
  const JetTensor& L();
  /// Landsberg tensor via C_ijk|s y^s.
  const JetTensor& L_from_C();
  /// Mean Landsberg via g^ij L_ijk.
  const JetTensor& J();
  /// Mean Landsberg via I_k|s y^s.
  const JetTensor& J_from_I();
  const JetTensor& Sigma();
  /// F (C_ijk|l - C_ijl|k), the design tensor of the relative-stretch fit.
  const JetTensor& stretch_design();

  /// h-covariant derivative with respect to the Berwald connection; appends
  /// one lower index.
  JetTensor horizontal(const JetTensor& t);
  /// f_|l as a rank-1 lower field.
  JetTensor horizontal(const Jet& f);
  /// Vertical derivative d/dy^l; appends one lower index.
  JetTensor vertical(const JetTensor& t);
  JetTensor vertical(const Jet& f);

  /// T_..|s y^s and f_|s y^s.
  JetTensor along_y(const JetTensor& t);
  Jet along_y(const Jet& f);

  /// Contract a field with y^s on its last slot.
  JetTensor contract_last_with_y(const JetTensor& t);

  Jet constant(double v) const { return Jet::constant(basis_, v); }

 private:
  const Jet& F2_dy(int l);
  const Jet& F2_dx(int l);

  MetricInstance metric_;
  PointState point_;
  int n_;
  int order_;
  BasisPtr basis_;
  std::vector<Jet> x_;
  std::vector<Jet> y_;

  std::optional<Jet> F_, F2_;
  std::vector<Jet> F2_dy_, F2_dx_;
  std::optional<JetTensor> y_upper_, y_lower_, g_, g_inv_, h_, C_, I_, G_, N_, Gamma_, B_, E_, R1_, R_, L_,
      L_from_C_, J_, J_from_I_, Sigma_, design_;
};

struct FundamentalTensor {
  double F = 0.0;
  TensorBlock g;
  TensorBlock g_inv;
  TensorBlock h;
  double min_eigenvalue = 0.0;
};

struct CartanData {
  TensorBlock C;
  TensorBlock I;
};

struct SprayData {
  TensorBlock G;      // G^i
  TensorBlock N;      // N^i_j
  TensorBlock Gamma;  // Gamma^i_jk
};

struct BerwaldData {
  TensorBlock B;
  TensorBlock E;
};

struct RiemannData {
  TensorBlock R1;  // R^i_k
  TensorBlock R;   // R_j^i_kl stored as (i, j, k, l)
};

struct LandsbergData {
  TensorBlock L;
  double route_residual = 0.0;  // B-contraction vs C_|s y^s
};

struct MeanLandsbergData {
  TensorBlock J;
  double route_residual = 0.0;  // g^ij L_ijk vs I_k|s y^s
};

struct StretchData {
  TensorBlock Sigma;
  double antisymmetry_residual = 0.0;  // Sigma_ijkl + Sigma_ijlk
  double bianchi_residual = 0.0;       // Sigma_jmkl vs y_i R_j^i_kl.m
};

/// Smallest eigenvalue of a symmetric block (rank 2).
double min_eigenvalue(const TensorBlock& sym);

FundamentalTensor fundamental_tensor(const MetricInstance& m, const PointState& p);
CartanData cartan_tensor(const MetricInstance& m, const PointState& p);
SprayData spray(const MetricInstance& m, const PointState& p);
BerwaldData berwald_curvature(const MetricInstance& m, const PointState& p);
RiemannData riemann_curvature(const MetricInstance& m, const PointState& p);

/// h-covariant derivative of the field produced by `field` (recomputed on
/// the jet-seeded neighbourhood of p).
TensorBlock horizontal_derivative(const MetricInstance& m, const PointState& p,
                                  const std::function<JetTensor(FieldEngine&)>& field,
                                  int order = jet_order::kBianchi);

/// Throws CrossCheckFailure if the two routes differ by more than `route_tol`.
LandsbergData landsberg_tensor(const MetricInstance& m, const PointState& p, double route_tol = 1e-6);
MeanLandsbergData mean_landsberg(const MetricInstance& m, const PointState& p, double route_tol = 1e-6);
/// Throws CrossCheckFailure if the definition and the Bianchi route differ by more than `route_tol`.
StretchData stretch_tensor(const MetricInstance& m, const PointState& p, double route_tol = 1e-5);

/// K(y, u) = g_y(u, R_y u) / (g_y(y,y) g_y(u,u) - g_y(y,u)^2). Throws DegenerateFlag if u is parallel to y.
double flag_curvature(const MetricInstance& m, const PointState& p, std::span<const double> u);
double flag_curvature(FieldEngine& engine, std::span<const double> u);

struct CurvatureBundle {
  PointState point;
  double F = 0.0;
  TensorBlock g, g_inv, h, C, I, G, N, Gamma, B, E, R1, R, L, J, Sigma;
  double landsberg_route_residual = 0.0;
  double mean_landsberg_route_residual = 0.0;
  double stretch_bianchi_residual = 0.0;
  double stretch_antisymmetry_residual = 0.0;
};

/// Evaluates the whole tower at p without throwing on route disagreement.
CurvatureBundle compute_bundle(const MetricInstance& m, const PointState& p, const Tolerances& tol = {});
CurvatureBundle compute_bundle(FieldEngine& engine, const Tolerances& tol = {});

}  // namespace finsler
