#include "finsler/jet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <unordered_map>

namespace finsler {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::OrderExceeded: return "OrderExceeded";
    case ErrorCode::LexError: return "LexError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ArityError: return "ArityError";
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::SpecError: return "SpecError";
    case ErrorCode::OutOfChart: return "OutOfChart";
    case ErrorCode::SingularMetric: return "SingularMetric";
    case ErrorCode::CrossCheckFailure: return "CrossCheckFailure";
    case ErrorCode::DegenerateFlag: return "DegenerateFlag";
    case ErrorCode::UndefinedFit: return "UndefinedFit";
    case ErrorCode::RiemannianPoint: return "RiemannianPoint";
    case ErrorCode::DimensionError: return "DimensionError";
    case ErrorCode::NotConstantCurvature: return "NotConstantCurvature";
    case ErrorCode::ChartExit: return "ChartExit";
    case ErrorCode::StepFailure: return "StepFailure";
    case ErrorCode::VanishingVector: return "VanishingVector";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// MultiIndex

MultiIndex::MultiIndex(std::vector<int> exponents) : exponents_(std::move(exponents)) {
  for (int e : exponents_) {
    if (e < 0) throw Error(ErrorCode::BadConfig, "negative exponent in multi-index");
    order_ += e;
  }
}

MultiIndex MultiIndex::unit(int n_vars, int var, int power) {
  std::vector<int> e(static_cast<std::size_t>(n_vars), 0);
  e.at(static_cast<std::size_t>(var)) = power;
  return MultiIndex(std::move(e));
}

double MultiIndex::factorial() const {
  double f = 1.0;
  for (int e : exponents_) {
    for (int k = 2; k <= e; ++k) f *= k;
  }
  return f;
}

MultiIndex MultiIndex::operator+(const MultiIndex& other) const {
  if (other.n_vars() != n_vars()) throw Error(ErrorCode::ShapeMismatch, "multi-index size");
  std::vector<int> e = exponents_;
  for (std::size_t i = 0; i < e.size(); ++i) e[i] += other.exponents_[i];
  return MultiIndex(std::move(e));
}

// ---------------------------------------------------------------------------
// MonomialBasis

namespace {

constexpr std::uint32_t kNoIndex = std::numeric_limits<std::uint32_t>::max();

template <class Exps>
std::uint64_t pack(const Exps& e, int n_vars) {
  std::uint64_t key = 0;
  for (int v = 0; v < n_vars; ++v) key |= static_cast<std::uint64_t>(e[v]) << (4 * v);
  return key;
}

// All exponent vectors of total degree d, lexicographically descending.
void compositions(int d, int n_vars, std::vector<std::uint8_t>& out) {
  std::vector<std::uint8_t> cur(static_cast<std::size_t>(n_vars), 0);
  auto rec = [&](auto&& self, int var, int remaining) -> void {
    if (var == n_vars - 1) {
      cur[var] = static_cast<std::uint8_t>(remaining);
      out.insert(out.end(), cur.begin(), cur.end());
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      cur[var] = static_cast<std::uint8_t>(e);
      self(self, var + 1, remaining - e);
    }
  };
  rec(rec, 0, d);
}

}  // namespace

MonomialBasis::MonomialBasis(int n_vars, int order) : n_vars_(n_vars), order_(order) {
  if (n_vars < 1 || n_vars > kMaxVars) throw Error(ErrorCode::BadConfig, "jet variable count out of range");
  if (order < 0 || order > kMaxOrder) throw Error(ErrorCode::BadConfig, "jet order out of range");

  offsets_.push_back(0);
  for (int d = 0; d <= order; ++d) {
    compositions(d, n_vars, exponents_);
    offsets_.push_back(exponents_.size() / static_cast<std::size_t>(n_vars));
  }
  const std::size_t total = offsets_.back();
  if (total >= kNoIndex) throw Error(ErrorCode::BadConfig, "jet basis too large");

  degrees_.resize(total);
  std::unordered_map<std::uint64_t, std::uint32_t> lookup;
  lookup.reserve(total * 2);
  for (int d = 0; d <= order; ++d) {
    for (std::size_t i = offsets_[d]; i < offsets_[d + 1]; ++i) {
      degrees_[i] = d;
      lookup.emplace(pack(exponents_.data() + i * n_vars, n_vars), static_cast<std::uint32_t>(i));
    }
  }

  shift_.assign(total * static_cast<std::size_t>(n_vars), kNoIndex);
  std::vector<std::uint8_t> tmp(static_cast<std::size_t>(n_vars));
  for (std::size_t i = 0; i < offsets_[order]; ++i) {
    for (int v = 0; v < n_vars; ++v) {
      std::copy_n(exponents_.data() + i * n_vars, n_vars, tmp.begin());
      ++tmp[v];
      shift_[i * n_vars + v] = lookup.at(pack(tmp, n_vars));
    }
  }

  // parent(j) = j - e_v for the first nonzero slot v of j.
  std::vector<std::uint32_t> parent(total, kNoIndex);
  std::vector<int> parent_var(total, -1);
  for (std::size_t j = 1; j < total; ++j) {
    const std::uint8_t* e = exponents_.data() + j * n_vars;
    int v = 0;
    while (e[v] == 0) ++v;
    std::copy_n(e, n_vars, tmp.begin());
    --tmp[v];
    parent[j] = lookup.at(pack(tmp, n_vars));
    parent_var[j] = v;
  }

  product_start_.resize(total);
  std::size_t running = 0;
  for (std::size_t i = 0; i < total; ++i) {
    product_start_[i] = running;
    running += count(order - degrees_[i]);
  }
  products_.resize(running);
  for (std::size_t i = 0; i < total; ++i) {
    std::uint32_t* row = products_.data() + product_start_[i];
    const std::size_t len = count(order - degrees_[i]);
    row[0] = static_cast<std::uint32_t>(i);
    for (std::size_t j = 1; j < len; ++j) {
      row[j] = shift_[static_cast<std::size_t>(row[parent[j]]) * n_vars + parent_var[j]];
    }
  }
}

std::shared_ptr<const MonomialBasis> MonomialBasis::get(int n_vars, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const MonomialBasis>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{n_vars, order}];
  if (!slot) slot = std::make_shared<const MonomialBasis>(n_vars, order);
  return slot;
}

std::size_t MonomialBasis::index_of(const MultiIndex& alpha) const {
  if (alpha.n_vars() != n_vars_) throw Error(ErrorCode::ShapeMismatch, "multi-index has wrong variable count");
  if (alpha.order() > order_) {
    throw Error(ErrorCode::OrderExceeded, "multi-index order " + std::to_string(alpha.order()) +
                                              " exceeds basis order " + std::to_string(order_));
  }
  // Walk from the constant monomial using the shift table.
  std::size_t idx = 0;
  for (int v = 0; v < n_vars_; ++v) {
    for (int k = 0; k < alpha[v]; ++k) idx = shifted(idx, v);
  }
  return idx;
}

// ---------------------------------------------------------------------------
// Jet

namespace {

void check_compatible(const Jet& a, const Jet& b) {
  if (!a.valid() || !b.valid()) throw Error(ErrorCode::ShapeMismatch, "uninitialised jet");
  if (a.basis() != b.basis()) {
    throw Error(ErrorCode::ShapeMismatch, "jets built from different configurations (" +
                                              std::to_string(a.n_vars()) + " vs " +
                                              std::to_string(b.n_vars()) + " variables)");
  }
}

}  // namespace

Jet::Jet(BasisPtr basis, int order) : basis_(std::move(basis)), order_(order) {
  if (order_ < 0 || order_ > basis_->order()) order_ = basis_->order();
  coeffs_.assign(basis_->count(order_), 0.0);
}

Jet Jet::constant(BasisPtr basis, double value, int order) {
  Jet j(std::move(basis), order);
  j.coeffs_[0] = value;
  return j;
}

Jet Jet::variable(BasisPtr basis, int var, double value, int order) {
  Jet j(std::move(basis), order);
  if (var < 0 || var >= j.n_vars()) throw Error(ErrorCode::BadConfig, "variable index out of range");
  j.coeffs_[0] = value;
  if (j.order_ >= 1) j.coeffs_[j.basis_->shifted(0, var)] = 1.0;
  return j;
}

Jet Jet::constant_like(const Jet& like, double value) { return constant(like.basis_, value, like.order_); }

double Jet::coefficient(const MultiIndex& alpha) const {
  if (alpha.order() > order_) {
    throw Error(ErrorCode::OrderExceeded, "requested order " + std::to_string(alpha.order()) +
                                              " exceeds jet order " + std::to_string(order_));
  }
  return coeffs_[basis_->index_of(alpha)];
}

double Jet::partial(const MultiIndex& alpha) const { return coefficient(alpha) * alpha.factorial(); }

Jet Jet::derivative(int var) const {
  if (order_ == 0) throw Error(ErrorCode::OrderExceeded, "derivative of an order-0 jet");
  if (var < 0 || var >= n_vars()) throw Error(ErrorCode::BadConfig, "variable index out of range");
  Jet r(basis_, order_ - 1);
  const auto& B = *basis_;
  for (std::size_t i = 0; i < r.coeffs_.size(); ++i) {
    const std::size_t up = B.shifted(i, var);
    r.coeffs_[i] = (B.exponents(i)[var] + 1) * coeffs_[up];
  }
  return r;
}

Jet Jet::truncated(int order) const {
  Jet r = *this;
  if (order < r.order_) {
    r.order_ = std::max(order, 0);
    r.coeffs_.resize(basis_->count(r.order_));
  }
  return r;
}

double Jet::max_abs_nonconstant() const {
  double m = 0.0;
  for (std::size_t i = 1; i < coeffs_.size(); ++i) m = std::max(m, std::abs(coeffs_[i]));
  return m;
}

Jet& Jet::operator+=(const Jet& other) {
  check_compatible(*this, other);
  order_ = std::min(order_, other.order_);
  coeffs_.resize(basis_->count(order_));
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& other) {
  check_compatible(*this, other);
  order_ = std::min(order_, other.order_);
  coeffs_.resize(basis_->count(order_));
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  check_compatible(a, b);
  const int k = std::min(a.order_, b.order_);
  Jet r(a.basis_, k);
  const auto& B = *a.basis_;
  const std::size_t n = B.count(k);
  const double* bc = b.coeffs_.data();
  double* rc = r.coeffs_.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double ai = a.coeffs_[i];
    if (ai == 0.0) continue;
    const std::size_t len = B.count(k - B.degree(i));
    const std::uint32_t* row = B.product_row(i);
    for (std::size_t j = 0; j < len; ++j) rc[row[j]] += ai * bc[j];
  }
  return r;
}

Jet& Jet::operator*=(const Jet& other) { return *this = *this * other; }

Jet operator/(const Jet& a, const Jet& b) {
  check_compatible(a, b);
  return a * reciprocal(b);
}

Jet& Jet::operator/=(const Jet& other) { return *this = *this / other; }

Jet operator/(double s, const Jet& a) { return reciprocal(a) * s; }

Jet& Jet::operator+=(double s) {
  coeffs_[0] += s;
  return *this;
}

Jet& Jet::operator-=(double s) {
  coeffs_[0] -= s;
  return *this;
}

Jet& Jet::operator*=(double s) {
  for (double& c : coeffs_) c *= s;
  return *this;
}

Jet& Jet::operator/=(double s) {
  if (s == 0.0) throw Error(ErrorCode::DivisionByZero, "jet divided by zero scalar");
  for (double& c : coeffs_) c /= s;
  return *this;
}

Jet Jet::operator-() const {
  Jet r = *this;
  for (double& c : r.coeffs_) c = -c;
  return r;
}

Jet Jet::compose(std::span<const double> series) const {
  Jet t = *this;
  t.coeffs_[0] = 0.0;
  Jet r = constant(basis_, series[order_], order_);
  for (int m = order_ - 1; m >= 0; --m) {
    r = r * t;
    r.coeffs_[0] += series[m];
  }
  return r;
}

Jet reciprocal(const Jet& a) {
  const double a0 = a.value();
  if (a0 == 0.0) throw Error(ErrorCode::DivisionByZero, "jet with zero value in denominator");
  std::vector<double> s(a.order_ + 1);
  s[0] = 1.0 / a0;
  for (int m = 1; m <= a.order_; ++m) s[m] = -s[m - 1] / a0;
  return a.compose(s);
}

Jet pow(const Jet& a, double p) {
  const double a0 = a.value();
  const bool integral = std::floor(p) == p && std::abs(p) < 64;
  if (integral && p >= 0) {
    int e = static_cast<int>(p);
    Jet result = Jet::constant_like(a, 1.0);
    Jet base = a;
    while (e > 0) {
      if (e & 1) result = result * base;
      e >>= 1;
      if (e) base = base * base;
    }
    return result;
  }
  if (integral ? a0 == 0.0 : a0 <= 0.0) {
    throw Error(ErrorCode::DomainError, "pow of a jet with value " + std::to_string(a0));
  }
  std::vector<double> s(a.order_ + 1);
  s[0] = std::pow(a0, p);
  for (int m = 1; m <= a.order_; ++m) s[m] = s[m - 1] * (p - m + 1) / (m * a0);
  return a.compose(s);
}

Jet sqrt(const Jet& a) {
  if (!(a.value() > 0.0)) throw Error(ErrorCode::DomainError, "sqrt of a jet with non-positive value");
  return pow(a, 0.5);
}

Jet exp(const Jet& a) {
  std::vector<double> s(a.order_ + 1);
  s[0] = std::exp(a.value());
  for (int m = 1; m <= a.order_; ++m) s[m] = s[m - 1] / m;
  return a.compose(s);
}

Jet log(const Jet& a) {
  const double a0 = a.value();
  if (!(a0 > 0.0)) throw Error(ErrorCode::DomainError, "log of a jet with non-positive value");
  std::vector<double> s(a.order_ + 1);
  s[0] = std::log(a0);
  double inv_pow = 1.0;
  for (int m = 1; m <= a.order_; ++m) {
    inv_pow /= a0;
    s[m] = ((m % 2) ? 1.0 : -1.0) * inv_pow / m;
  }
  return a.compose(s);
}

namespace {

// Taylor series of sin (phase 0) or cos (phase 1) about a0.
std::vector<double> trig_series(double a0, int order, int phase) {
  const double sv = std::sin(a0);
  const double cv = std::cos(a0);
  const double cycle[4] = {sv, cv, -sv, -cv};
  std::vector<double> s(order + 1);
  double fact = 1.0;
  for (int m = 0; m <= order; ++m) {
    if (m > 0) fact *= m;
    s[m] = cycle[(m + phase) % 4] / fact;
  }
  return s;
}

}  // namespace

Jet sin(const Jet& a) { return a.compose(trig_series(a.value(), a.order_, 0)); }
Jet cos(const Jet& a) { return a.compose(trig_series(a.value(), a.order_, 1)); }

// ---------------------------------------------------------------------------

std::vector<Jet> seed_variables(std::span<const double> x0, std::span<const double> y0, const JetConfig& cfg) {
  if (cfg.order < 1) throw Error(ErrorCode::BadConfig, "jet order must be at least 1");
  if (cfg.n < 1 || 2 * cfg.n > MonomialBasis::kMaxVars) throw Error(ErrorCode::BadConfig, "dimension out of range");
  if (x0.size() != static_cast<std::size_t>(cfg.n) || y0.size() != static_cast<std::size_t>(cfg.n)) {
    throw Error(ErrorCode::ShapeMismatch, "point coordinates do not match dimension");
  }
  if (std::all_of(y0.begin(), y0.end(), [](double v) { return v == 0.0; })) {
    throw Error(ErrorCode::ZeroVector, "tangent vector y must be nonzero");
  }
  auto basis = MonomialBasis::get(2 * cfg.n, cfg.order);
  std::vector<Jet> vars;
  vars.reserve(2 * cfg.n);
  for (int i = 0; i < cfg.n; ++i) vars.push_back(Jet::variable(basis, i, x0[i]));
  for (int i = 0; i < cfg.n; ++i) vars.push_back(Jet::variable(basis, cfg.n + i, y0[i]));
  return vars;
}

Jet jet_arith(const Jet& a, const Jet& b, JetOp op) {
  switch (op) {
    case JetOp::Add: return a + b;
    case JetOp::Sub: return a - b;
    case JetOp::Mul: return a * b;
    case JetOp::Div: return a / b;
  }
  throw Error(ErrorCode::BadConfig, "unknown jet operation");
}

Jet jet_func(const Jet& a, JetFunc f, double exponent) {
  switch (f) {
    case JetFunc::Sqrt: return sqrt(a);
    case JetFunc::Exp: return exp(a);
    case JetFunc::Log: return log(a);
    case JetFunc::Sin: return sin(a);
    case JetFunc::Cos: return cos(a);
    case JetFunc::PowConst: return pow(a, exponent);
  }
  throw Error(ErrorCode::BadConfig, "unknown jet function");
}

double extract_partial(const Jet& a, const MultiIndex& idx) { return a.partial(idx); }

Jet pruned(Jet a, double tol) {
  if (tol <= 0.0) return a;
  for (std::size_t i = 1; i < a.coeffs_.size(); ++i) {
    if (std::abs(a.coeffs_[i]) <= tol) a.coeffs_[i] = 0.0;
  }
  return a;
}

}  // namespace finsler
