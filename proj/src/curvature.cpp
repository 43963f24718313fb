#include "finsler/curvature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace finsler {

namespace {

// Gauss-Jordan inverse of a rank-2 jet field, pivoting on |value|.
JetTensor jet_inverse(const JetTensor& a) {
  const int n = a.dim();
  std::vector<Jet> m(a.data());
  JetTensor inv(n, mixed(2, 0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) inv(i, j) = Jet::constant_like(a[0], i == j ? 1.0 : 0.0);
  }
  auto at = [n](std::vector<Jet>& v, int i, int j) -> Jet& { return v[i * n + j]; };
  std::vector<Jet>& r = inv.data();
  double scale = 0.0;
  for (const Jet& v : m) scale = std::max(scale, std::abs(v.value()));
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int i = col + 1; i < n; ++i) {
      if (std::abs(at(m, i, col).value()) > std::abs(at(m, piv, col).value())) piv = i;
    }
    if (!(std::abs(at(m, piv, col).value()) > 1e-14 * scale)) {
      throw Error(ErrorCode::SingularMetric, "fundamental tensor is singular");
    }
    if (piv != col) {
      for (int j = 0; j < n; ++j) {
        std::swap(at(m, piv, j), at(m, col, j));
        std::swap(at(r, piv, j), at(r, col, j));
      }
    }
    const Jet p = reciprocal(at(m, col, col));
    for (int j = 0; j < n; ++j) {
      at(m, col, j) = at(m, col, j) * p;
      at(r, col, j) = at(r, col, j) * p;
    }
    for (int i = 0; i < n; ++i) {
      if (i == col) continue;
      const Jet f = at(m, i, col);
      for (int j = 0; j < n; ++j) {
        at(m, i, j) -= f * at(m, col, j);
        at(r, i, j) -= f * at(r, col, j);
      }
    }
  }
  return inv;
}

std::vector<Slot> with_lower(std::vector<Slot> v) {
  v.push_back(Slot::Lower);
  return v;
}

}  // namespace

FieldEngine::FieldEngine(const MetricInstance& metric, const PointState& point, int order)
    : metric_(metric), point_(point), n_(metric.dimension()), order_(order) {
  if (static_cast<int>(point.x.size()) != n_ || static_cast<int>(point.y.size()) != n_) {
    throw Error(ErrorCode::ShapeMismatch, "point dimension does not match the metric");
  }
  metric_.require_in_chart(point.x);
  auto vars = seed_variables(point.x, point.y, JetConfig{n_, order, 0.0});
  basis_ = vars[0].basis();
  x_.assign(vars.begin(), vars.begin() + n_);
  y_.assign(vars.begin() + n_, vars.end());
}

const Jet& FieldEngine::F() {
  if (!F_) {
    F_ = metric_.value(std::span<const Jet>(x_), std::span<const Jet>(y_));
    if (!(F_->value() > 0.0)) throw Error(ErrorCode::DomainError, "F is not positive at the point");
  }
  return *F_;
}

const Jet& FieldEngine::F2() {
  if (!F2_) F2_ = F() * F();
  return *F2_;
}

const Jet& FieldEngine::F2_dy(int l) {
  if (F2_dy_.empty()) {
    for (int k = 0; k < n_; ++k) F2_dy_.push_back(F2().derivative(n_ + k));
  }
  return F2_dy_[l];
}

const Jet& FieldEngine::F2_dx(int l) {
  if (F2_dx_.empty()) {
    for (int k = 0; k < n_; ++k) F2_dx_.push_back(F2().derivative(k));
  }
  return F2_dx_[l];
}

const JetTensor& FieldEngine::y_upper() {
  if (!y_upper_) {
    JetTensor t(n_, mixed(1, 0));
    for (int i = 0; i < n_; ++i) t(i) = y_[i];
    y_upper_ = std::move(t);
  }
  return *y_upper_;
}

const JetTensor& FieldEngine::y_lower() {
  if (!y_lower_) {
    JetTensor t(n_, lower(1));
    for (int i = 0; i < n_; ++i) t(i) = 0.5 * F2_dy(i);
    y_lower_ = std::move(t);
  }
  return *y_lower_;
}

const JetTensor& FieldEngine::g() {
  if (!g_) {
    JetTensor t(n_, lower(2));
    for (int i = 0; i < n_; ++i) {
      for (int j = i; j < n_; ++j) {
        t(i, j) = 0.5 * F2_dy(i).derivative(n_ + j);
        t(j, i) = t(i, j);
      }
    }
    t.symmetries = {"symmetric(0,1)"};
    g_ = std::move(t);
  }
  return *g_;
}

const JetTensor& FieldEngine::g_inv() {
  if (!g_inv_) {
    g_inv_ = jet_inverse(g());
    g_inv_->symmetries = {"symmetric(0,1)"};
  }
  return *g_inv_;
}

const JetTensor& FieldEngine::h() {
  if (!h_) {
    const JetTensor& gg = g();
    const JetTensor& yl = y_lower();
    const Jet inv = reciprocal(F2());
    JetTensor t(n_, lower(2));
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) t(i, j) = gg(i, j) - yl(i) * yl(j) * inv;
    }
    t.symmetries = {"symmetric(0,1)"};
    h_ = std::move(t);
  }
  return *h_;
}

const JetTensor& FieldEngine::C() {
  if (!C_) {
    const JetTensor& gg = g();
    JetTensor t(n_, lower(3));
    for (int i = 0; i < n_; ++i) {
      for (int j = i; j < n_; ++j) {
        for (int k = j; k < n_; ++k) {
          const Jet v = 0.5 * gg(i, j).derivative(n_ + k);
          t(i, j, k) = v;
          t(i, k, j) = v;
          t(j, i, k) = v;
          t(j, k, i) = v;
          t(k, i, j) = v;
          t(k, j, i) = v;
        }
      }
    }
    t.symmetries = {"symmetric(0,1,2)"};
    C_ = std::move(t);
  }
  return *C_;
}

const JetTensor& FieldEngine::I() {
  if (!I_) {
    const JetTensor& gi = g_inv();
    const JetTensor& c = C();
    JetTensor t(n_, lower(1));
    for (int k = 0; k < n_; ++k) {
      Jet acc = gi(0, 0) * c(0, 0, k);
      for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
          if (i || j) acc += gi(i, j) * c(i, j, k);
        }
      }
      t(k) = acc;
    }
    I_ = std::move(t);
  }
  return *I_;
}

const JetTensor& FieldEngine::G() {
  if (!G_) {
    // G^i = 1/4 g^il (d2F2/dx^k dy^l y^k - dF2/dx^l)
    std::vector<Jet> rhs(n_);
    for (int l = 0; l < n_; ++l) {
      Jet acc = -F2_dx(l);
      for (int k = 0; k < n_; ++k) acc += F2_dy(l).derivative(k) * y_[k];
      rhs[l] = acc;
    }
    const JetTensor& gi = g_inv();
    JetTensor t(n_, mixed(1, 0));
    for (int i = 0; i < n_; ++i) {
      Jet acc = gi(i, 0) * rhs[0];
      for (int l = 1; l < n_; ++l) acc += gi(i, l) * rhs[l];
      t(i) = 0.25 * acc;
    }
    G_ = std::move(t);
  }
  return *G_;
}

const JetTensor& FieldEngine::N() {
  if (!N_) {
    const JetTensor& gg = G();
    JetTensor t(n_, mixed(1, 1));
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) t(i, j) = gg(i).derivative(n_ + j);
    }
    N_ = std::move(t);
  }
  return *N_;
}

const JetTensor& FieldEngine::Gamma() {
  if (!Gamma_) {
    const JetTensor& nn = N();
    JetTensor t(n_, mixed(1, 2));
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        for (int k = j; k < n_; ++k) {
          t(i, j, k) = nn(i, j).derivative(n_ + k);
          t(i, k, j) = t(i, j, k);
        }
      }
    }
    t.symmetries = {"symmetric(1,2)"};
    Gamma_ = std::move(t);
  }
  return *Gamma_;
}

const JetTensor& FieldEngine::B() {
  if (!B_) {
    const JetTensor& gm = Gamma();
    JetTensor t(n_, mixed(1, 3));
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        for (int k = j; k < n_; ++k) {
          for (int l = k; l < n_; ++l) {
            const Jet v = gm(i, j, k).derivative(n_ + l);
            t(i, j, k, l) = v;
            t(i, j, l, k) = v;
            t(i, k, j, l) = v;
            t(i, k, l, j) = v;
            t(i, l, j, k) = v;
            t(i, l, k, j) = v;
          }
        }
      }
    }
    t.symmetries = {"symmetric(1,2,3)"};
    B_ = std::move(t);
  }
  return *B_;
}

const JetTensor& FieldEngine::E() {
  if (!E_) {
    const JetTensor& b = B();
    JetTensor t(n_, lower(2));
    for (int j = 0; j < n_; ++j) {
      for (int k = 0; k < n_; ++k) {
        Jet acc = b(0, j, k, 0);
        for (int m = 1; m < n_; ++m) acc += b(m, j, k, m);
        t(j, k) = 0.5 * acc;
      }
    }
    t.symmetries = {"symmetric(0,1)"};
    E_ = std::move(t);
  }
  return *E_;
}

const JetTensor& FieldEngine::R1() {
  if (!R1_) {
    const JetTensor& gg = G();
    const JetTensor& nn = N();
    const JetTensor& gm = Gamma();
    JetTensor t(n_, mixed(1, 1));
    for (int i = 0; i < n_; ++i) {
      for (int k = 0; k < n_; ++k) {
        Jet acc = 2.0 * gg(i).derivative(k);
        for (int j = 0; j < n_; ++j) {
          acc -= y_[j] * nn(i, k).derivative(j);
          acc += 2.0 * gg(j) * gm(i, j, k);
          acc -= nn(i, j) * nn(j, k);
        }
        t(i, k) = acc;
      }
    }
    R1_ = std::move(t);
  }
  return *R1_;
}

const JetTensor& FieldEngine::R() {
  if (!R_) {
    const JetTensor& r1 = R1();
    // D(i, k, l) = dR^i_k/dy^l - dR^i_l/dy^k
    JetTensor d(n_, mixed(1, 2));
    for (int i = 0; i < n_; ++i) {
      for (int k = 0; k < n_; ++k) {
        for (int l = 0; l < n_; ++l) d(i, k, l) = r1(i, k).derivative(n_ + l) - r1(i, l).derivative(n_ + k);
      }
    }
    JetTensor t(n_, mixed(1, 3));
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        for (int k = 0; k < n_; ++k) {
          for (int l = 0; l < n_; ++l) t(i, j, k, l) = d(i, k, l).derivative(n_ + j) / 3.0;
        }
      }
    }
    t.symmetries = {"antisymmetric(2,3)"};
    R_ = std::move(t);
  }
  return *R_;
}

const JetTensor& FieldEngine::L() {
  if (!L_) {
    const JetTensor& b = B();
    const JetTensor& yl = y_lower();
    JetTensor t(n_, lower(3));
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        for (int k = 0; k < n_; ++k) {
          Jet acc = yl(0) * b(0, i, j, k);
          for (int m = 1; m < n_; ++m) acc += yl(m) * b(m, i, j, k);
          t(i, j, k) = -0.5 * acc;
        }
      }
    }
    t.symmetries = {"symmetric(0,1,2)"};
    L_ = std::move(t);
  }
  return *L_;
}

const JetTensor& FieldEngine::L_from_C() {
  if (!L_from_C_) {
    L_from_C_ = along_y(C());
    L_from_C_->symmetries = {"symmetric(0,1,2)"};
  }
  return *L_from_C_;
}

const JetTensor& FieldEngine::J() {
  if (!J_) {
    const JetTensor& gi = g_inv();
    const JetTensor& l = L();
    JetTensor t(n_, lower(1));
    for (int k = 0; k < n_; ++k) {
      Jet acc = gi(0, 0) * l(0, 0, k);
      for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
          if (i || j) acc += gi(i, j) * l(i, j, k);
        }
      }
      t(k) = acc;
    }
    J_ = std::move(t);
  }
  return *J_;
}

const JetTensor& FieldEngine::J_from_I() {
  if (!J_from_I_) J_from_I_ = along_y(I());
  return *J_from_I_;
}

const JetTensor& FieldEngine::Sigma() {
  if (!Sigma_) {
    const JetTensor hl = horizontal(L());
    JetTensor t(n_, lower(4));
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        for (int k = 0; k < n_; ++k) {
          for (int l = 0; l < n_; ++l) t(i, j, k, l) = 2.0 * (hl(i, j, k, l) - hl(i, j, l, k));
        }
      }
    }
    t.symmetries = {"symmetric(0,1)", "antisymmetric(2,3)"};
    Sigma_ = std::move(t);
  }
  return *Sigma_;
}

const JetTensor& FieldEngine::stretch_design() {
  if (!design_) {
    const JetTensor hc = horizontal(C());
    const Jet& f = F();
    JetTensor t(n_, lower(4));
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        for (int k = 0; k < n_; ++k) {
          for (int l = 0; l < n_; ++l) t(i, j, k, l) = f * (hc(i, j, k, l) - hc(i, j, l, k));
        }
      }
    }
    t.symmetries = {"symmetric(0,1)", "antisymmetric(2,3)"};
    design_ = std::move(t);
  }
  return *design_;
}

JetTensor FieldEngine::horizontal(const JetTensor& t) {
  const JetTensor& nn = N();
  const JetTensor& gm = Gamma();
  const int rank = t.rank();
  JetTensor out(n_, with_lower(t.valence()));
  out.symmetries = {};
  for (std::size_t f = 0; f < t.size(); ++f) {
    const std::vector<int> idx = t.unflatten(f);
    std::vector<Jet> dy(n_);
    for (int m = 0; m < n_; ++m) dy[m] = t[f].derivative(n_ + m);
    for (int l = 0; l < n_; ++l) {
      Jet acc = t[f].derivative(l);
      for (int m = 0; m < n_; ++m) acc -= nn(m, l) * dy[m];
      for (int s = 0; s < rank; ++s) {
        std::vector<int> other = idx;
        for (int m = 0; m < n_; ++m) {
          other[s] = m;
          const Jet& tm = t[t.flat_index(std::span<const int>(other))];
          if (t.valence()[s] == Slot::Upper) {
            acc += tm * gm(idx[s], m, l);
          } else {
            acc -= tm * gm(m, idx[s], l);
          }
        }
      }
      out[f * n_ + l] = std::move(acc);
    }
  }
  return out;
}

JetTensor FieldEngine::horizontal(const Jet& f) {
  JetTensor t(n_, lower(0));
  t[0] = f;
  return horizontal(t);
}

JetTensor FieldEngine::vertical(const JetTensor& t) {
  JetTensor out(n_, with_lower(t.valence()));
  for (std::size_t f = 0; f < t.size(); ++f) {
    for (int l = 0; l < n_; ++l) out[f * n_ + l] = t[f].derivative(n_ + l);
  }
  return out;
}

JetTensor FieldEngine::vertical(const Jet& f) {
  JetTensor t(n_, lower(0));
  t[0] = f;
  return vertical(t);
}

JetTensor FieldEngine::contract_last_with_y(const JetTensor& t) {
  if (t.rank() < 1) throw Error(ErrorCode::ShapeMismatch, "cannot contract a scalar with y");
  std::vector<Slot> v(t.valence().begin(), t.valence().end() - 1);
  JetTensor out(n_, v);
  for (std::size_t f = 0; f < out.size(); ++f) {
    Jet acc = t[f * n_] * y_[0];
    for (int s = 1; s < n_; ++s) acc += t[f * n_ + s] * y_[s];
    out[f] = std::move(acc);
  }
  return out;
}

JetTensor FieldEngine::along_y(const JetTensor& t) { return contract_last_with_y(horizontal(t)); }

Jet FieldEngine::along_y(const Jet& f) { return contract_last_with_y(horizontal(f))[0]; }

double min_eigenvalue(const TensorBlock& sym) {
  if (sym.rank() != 2) throw Error(ErrorCode::ShapeMismatch, "min_eigenvalue needs a rank-2 block");
  const int n = sym.dim();
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = 0.5 * (sym(i, j) + sym(j, i));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

FundamentalTensor fundamental_tensor(const MetricInstance& m, const PointState& p) {
  FieldEngine e(m, p, 2);
  FundamentalTensor out;
  out.F = e.F().value();
  out.g = values(e.g());
  out.min_eigenvalue = min_eigenvalue(out.g);
  if (!(out.min_eigenvalue > 0.0)) {
    throw Error(ErrorCode::SingularMetric, "fundamental tensor is not positive definite (min eigenvalue " +
                                               std::to_string(out.min_eigenvalue) + ")");
  }
  out.g_inv = values(e.g_inv());
  out.h = values(e.h());
  return out;
}

CartanData cartan_tensor(const MetricInstance& m, const PointState& p) {
  FieldEngine e(m, p, jet_order::kMetric);
  return {values(e.C()), values(e.I())};
}

SprayData spray(const MetricInstance& m, const PointState& p) {
  FieldEngine e(m, p, jet_order::kSpray);
  return {values(e.G()), values(e.N()), values(e.Gamma())};
}

BerwaldData berwald_curvature(const MetricInstance& m, const PointState& p) {
  FieldEngine e(m, p, jet_order::kBerwald);
  return {values(e.B()), values(e.E())};
}

RiemannData riemann_curvature(const MetricInstance& m, const PointState& p) {
  FieldEngine e(m, p, jet_order::kStretch);
  return {values(e.R1()), values(e.R())};
}

TensorBlock horizontal_derivative(const MetricInstance& m, const PointState& p,
                                  const std::function<JetTensor(FieldEngine&)>& field, int order) {
  FieldEngine e(m, p, order);
  return values(e.horizontal(field(e)));
}

namespace {

TensorBlock bianchi_stretch(FieldEngine& e) {
  const JetTensor dr = e.vertical(e.R());
  const JetTensor& yl = e.y_lower();
  const int n = e.dim();
  TensorBlock out(n, lower(4), 0.0);
  for (int j = 0; j < n; ++j) {
    for (int m = 0; m < n; ++m) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          double acc = 0.0;
          for (int i = 0; i < n; ++i) acc += yl(i).value() * dr(i, j, k, l, m).value();
          out(j, m, k, l) = acc;
        }
      }
    }
  }
  return out;
}

void require_route(double residual, double tol, const char* what) {
  if (residual > tol) {
    throw Error(ErrorCode::CrossCheckFailure,
                std::string(what) + " routes disagree (relative residual " + std::to_string(residual) + ")");
  }
}

}  // namespace

LandsbergData landsberg_tensor(const MetricInstance& m, const PointState& p, double route_tol) {
  FieldEngine e(m, p, jet_order::kBerwald);
  LandsbergData out;
  out.L = values(e.L());
  out.route_residual = relative_residual(out.L, values(e.L_from_C()), Tolerances{}.floor);
  require_route(out.route_residual, route_tol, "Landsberg");
  return out;
}

MeanLandsbergData mean_landsberg(const MetricInstance& m, const PointState& p, double route_tol) {
  FieldEngine e(m, p, jet_order::kBerwald);
  MeanLandsbergData out;
  out.J = values(e.J());
  out.route_residual = relative_residual(out.J, values(e.J_from_I()), Tolerances{}.floor);
  require_route(out.route_residual, route_tol, "mean Landsberg");
  return out;
}

StretchData stretch_tensor(const MetricInstance& m, const PointState& p, double route_tol) {
  FieldEngine e(m, p, jet_order::kBianchi);
  StretchData out;
  out.Sigma = values(e.Sigma());
  out.antisymmetry_residual = symmetry_residual(out.Sigma, 2, 3, true);
  out.bianchi_residual = relative_residual(out.Sigma, bianchi_stretch(e), Tolerances{}.floor);
  require_route(out.bianchi_residual, route_tol, "stretch");
  return out;
}

double flag_curvature(FieldEngine& engine, std::span<const double> u) {
  const int n = engine.dim();
  if (static_cast<int>(u.size()) != n) throw Error(ErrorCode::ShapeMismatch, "flag pole has wrong dimension");
  const TensorBlock g = values(engine.g());
  const TensorBlock r = values(engine.R1());
  const auto& y = engine.point().y;
  auto form = [&](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) s += g(i, j) * a[i] * b[j];
    }
    return s;
  };
  std::vector<double> ru(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) ru[i] += r(i, k) * u[k];
  }
  const double yy = form(y, y), uu = form(u, u), yu = form(y, u);
  const double denom = yy * uu - yu * yu;
  if (!(denom > 1e-12 * yy * uu)) throw Error(ErrorCode::DegenerateFlag, "flag pole is parallel to y");
  return form(u, ru) / denom;
}

double flag_curvature(const MetricInstance& m, const PointState& p, std::span<const double> u) {
  FieldEngine e(m, p, jet_order::kSpray);
  return flag_curvature(e, u);
}

CurvatureBundle compute_bundle(FieldEngine& e, const Tolerances& tol) {
  CurvatureBundle b;
  b.point = e.point();
  b.F = e.F().value();
  b.g = values(e.g());
  b.g_inv = values(e.g_inv());
  b.h = values(e.h());
  b.C = values(e.C());
  b.I = values(e.I());
  b.G = values(e.G());
  b.N = values(e.N());
  b.Gamma = values(e.Gamma());
  b.B = values(e.B());
  b.E = values(e.E());
  b.R1 = values(e.R1());
  b.R = values(e.R());
  b.L = values(e.L());
  b.J = values(e.J());
  b.Sigma = values(e.Sigma());
  b.landsberg_route_residual = relative_residual(b.L, values(e.L_from_C()), tol.floor);
  b.mean_landsberg_route_residual = relative_residual(b.J, values(e.J_from_I()), tol.floor);
  b.stretch_antisymmetry_residual = symmetry_residual(b.Sigma, 2, 3, true);
  b.stretch_bianchi_residual = relative_residual(b.Sigma, bianchi_stretch(e), tol.floor);
  return b;
}

CurvatureBundle compute_bundle(const MetricInstance& m, const PointState& p, const Tolerances& tol) {
  FieldEngine e(m, p, jet_order::kBianchi);
  return compute_bundle(e, tol);
}

}  // namespace finsler
