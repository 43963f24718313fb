#pragma once

// Truncated multivariate Taylor expansions ("jets").
//
// A jet in m variables truncated at total order K stores the Taylor
// coefficients f_alpha = (d^alpha f)(p) / alpha! for all |alpha| <= K.
// Coefficients live in a dense vector laid out in graded order, so the
// monomials of degree <= d always form a prefix. A jet may carry a lower
// truncation order than its basis; binary operations truncate to the
// smaller of the two.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "finsler/error.hpp"

namespace finsler {

class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> exponents);

  /// Unit multi-index e_var in `n_vars` variables, optionally scaled.
  static MultiIndex unit(int n_vars, int var, int power = 1);

  int n_vars() const noexcept { return static_cast<int>(exponents_.size()); }
  int order() const noexcept { return order_; }
  int operator[](int var) const { return exponents_[var]; }
  const std::vector<int>& exponents() const noexcept { return exponents_; }

  /// alpha! = prod_i alpha_i!
  double factorial() const;

  MultiIndex operator+(const MultiIndex& other) const;
  bool operator==(const MultiIndex&) const = default;

 private:
  std::vector<int> exponents_;
  int order_ = 0;
};

/// Shared monomial tables for one (n_vars, max order) pair.
class MonomialBasis {
 public:
  static constexpr int kMaxVars = 12;
  static constexpr int kMaxOrder = 15;

  /// Returns the cached basis; thread-safe.
  static std::shared_ptr<const MonomialBasis> get(int n_vars, int order);

  int n_vars() const noexcept { return n_vars_; }
  int order() const noexcept { return order_; }

  /// Number of monomials with degree <= `degree`.
  std::size_t count(int degree) const { return degree < 0 ? 0 : offsets_[degree + 1]; }
  std::size_t size() const { return count(order_); }

  int degree(std::size_t idx) const { return degrees_[idx]; }
  std::span<const std::uint8_t> exponents(std::size_t idx) const {
    return {exponents_.data() + idx * n_vars_, static_cast<std::size_t>(n_vars_)};
  }

  /// Index of `alpha`; throws OrderExceeded if |alpha| > order().
  std::size_t index_of(const MultiIndex& alpha) const;

  /// Index of monomial idx + e_var; requires degree(idx) < order().
  std::size_t shifted(std::size_t idx, int var) const { return shift_[idx * n_vars_ + var]; }

  /// Row of product indices: for j < count(order() - degree(i)), entry j is
  /// the index of monomial i * monomial j.
  const std::uint32_t* product_row(std::size_t i) const { return products_.data() + product_start_[i]; }

  MonomialBasis(int n_vars, int order);

 private:
  int n_vars_;
  int order_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint8_t> exponents_;
  std::vector<int> degrees_;
  std::vector<std::uint32_t> shift_;
  std::vector<std::size_t> product_start_;
  std::vector<std::uint32_t> products_;
};

using BasisPtr = std::shared_ptr<const MonomialBasis>;

class Jet {
 public:
  Jet() = default;

  static Jet constant(BasisPtr basis, double value, int order = -1);
  static Jet variable(BasisPtr basis, int var, double value, int order = -1);
  /// A constant jet sharing `like`'s basis and truncation order.
  static Jet constant_like(const Jet& like, double value);

  bool valid() const noexcept { return basis_ != nullptr; }
  const BasisPtr& basis() const noexcept { return basis_; }
  int n_vars() const { return basis_->n_vars(); }
  int order() const noexcept { return order_; }

  double value() const { return coeffs_[0]; }
  std::span<const double> coefficients() const noexcept { return coeffs_; }
  double coefficient(const MultiIndex& alpha) const;

  /// Partial derivative d^alpha f at the expansion point.
  double partial(const MultiIndex& alpha) const;

  /// d/d(var) as a jet of order order()-1; throws OrderExceeded at order 0.
  Jet derivative(int var) const;
  Jet truncated(int order) const;

  /// Largest |coefficient| above order 0; zero for constants.
  double max_abs_nonconstant() const;

  Jet& operator+=(const Jet& other);
  Jet& operator-=(const Jet& other);
  Jet& operator*=(const Jet& other);
  Jet& operator/=(const Jet& other);
  Jet& operator+=(double s);
  Jet& operator-=(double s);
  Jet& operator*=(double s);
  Jet& operator/=(double s);

  Jet operator-() const;

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) { return -a + s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }
  friend Jet operator/(double s, const Jet& a);

 private:
  Jet(BasisPtr basis, int order);

  /// Sum_{m=0..order} series[m] * (self - value)^m.
  Jet compose(std::span<const double> series) const;

  friend Jet reciprocal(const Jet& a);
  friend Jet sqrt(const Jet& a);
  friend Jet exp(const Jet& a);
  friend Jet log(const Jet& a);
  friend Jet sin(const Jet& a);
  friend Jet cos(const Jet& a);
  friend Jet pow(const Jet& a, double exponent);
  friend Jet pruned(Jet a, double tol);

  BasisPtr basis_;
  int order_ = 0;
  std::vector<double> coeffs_;
};

Jet reciprocal(const Jet& a);
Jet sqrt(const Jet& a);
Jet exp(const Jet& a);
Jet log(const Jet& a);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet pow(const Jet& a, double exponent);

struct JetConfig {
  int n = 2;         // manifold dimension; jets use 2n variables
  int order = 5;     // truncation order K
  double tolerance = 0.0;  // coefficient pruning threshold (0 keeps everything)
};

/// Seeds one jet per coordinate of (x0, y0): variables 0..n-1 are x, n..2n-1 are y.
std::vector<Jet> seed_variables(std::span<const double> x0, std::span<const double> y0,
                                const JetConfig& cfg);

enum class JetOp { Add, Sub, Mul, Div };
enum class JetFunc { Sqrt, Exp, Log, Sin, Cos, PowConst };

Jet jet_arith(const Jet& a, const Jet& b, JetOp op);
Jet jet_func(const Jet& a, JetFunc f, double exponent = 1.0);
double extract_partial(const Jet& a, const MultiIndex& idx);

/// Zeroes coefficients with |c| <= tol (never the value slot).
Jet pruned(Jet a, double tol);

}  // namespace finsler
