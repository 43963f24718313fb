#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "finsler/error.hpp"
#include "finsler/jet.hpp"

namespace finsler {

enum class Slot : unsigned char { Upper, Lower };

/// Dense row-major array of shape n^rank with per-slot valence.
template <class T>
class BasicTensor {
 public:
  BasicTensor() = default;
  BasicTensor(int dim, std::vector<Slot> valence, const T& fill = T{})
      : dim_(dim), valence_(std::move(valence)), data_(ipow(dim, static_cast<int>(valence_.size())), fill) {}

  int dim() const noexcept { return dim_; }
  int rank() const noexcept { return static_cast<int>(valence_.size()); }
  const std::vector<Slot>& valence() const noexcept { return valence_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  template <class... I>
  T& operator()(I... idx) {
    return data_[flat_index({static_cast<int>(idx)...})];
  }
  template <class... I>
  const T& operator()(I... idx) const {
    return data_[flat_index({static_cast<int>(idx)...})];
  }

  std::size_t flat_index(std::initializer_list<int> idx) const {
    return flat_index(std::span<const int>(idx.begin(), idx.size()));
  }
  std::size_t flat_index(std::span<const int> idx) const {
    std::size_t f = 0;
    for (int i : idx) f = f * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
    return f;
  }
  /// Inverse of flat_index.
  std::vector<int> unflatten(std::size_t flat) const {
    std::vector<int> idx(valence_.size());
    for (int s = rank() - 1; s >= 0; --s) {
      idx[s] = static_cast<int>(flat % dim_);
      flat /= dim_;
    }
    return idx;
  }

  /// Free-form tags such as "symmetric(0,1,2)" used by reports.
  std::vector<std::string> symmetries;

  static std::size_t ipow(int base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
    return r;
  }

 private:
  int dim_ = 0;
  std::vector<Slot> valence_;
  std::vector<T> data_;
};

using TensorBlock = BasicTensor<double>;
using JetTensor = BasicTensor<Jet>;

inline std::vector<Slot> lower(int rank) { return std::vector<Slot>(rank, Slot::Lower); }
inline std::vector<Slot> mixed(int upper, int lower_count) {
  std::vector<Slot> v(upper, Slot::Upper);
  v.insert(v.end(), lower_count, Slot::Lower);
  return v;
}

/// Order-0 coefficients of every component.
inline TensorBlock values(const JetTensor& t) {
  TensorBlock out(t.dim(), t.valence(), 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i].value();
  out.symmetries = t.symmetries;
  return out;
}

inline double max_abs(const TensorBlock& t) {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

inline double frobenius(const TensorBlock& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return std::sqrt(s);
}

inline double inner(const TensorBlock& a, const TensorBlock& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::ShapeMismatch, "inner product of tensors of different shape");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline TensorBlock operator-(const TensorBlock& a, const TensorBlock& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::ShapeMismatch, "difference of tensors of different shape");
  TensorBlock r = a;
  for (std::size_t i = 0; i < a.size(); ++i) r[i] -= b[i];
  return r;
}

inline TensorBlock operator*(double s, const TensorBlock& a) {
  TensorBlock r = a;
  for (double& v : r.data()) v *= s;
  return r;
}

/// max|a - b| / max(max|a|, max|b|, floor). The floor keeps identities
/// between two numerically vanishing tensors from reporting O(1) noise ratios.
inline double relative_residual(const TensorBlock& a, const TensorBlock& b, double floor) {
  const double scale = std::max({max_abs(a), max_abs(b), floor});
  return scale > 0.0 ? max_abs(a - b) / scale : 0.0;
}

/// Largest deviation under swapping slots s and t, relative to max|T|.
inline double symmetry_residual(const TensorBlock& t, int s, int u, bool anti = false) {
  double worst = 0.0;
  for (std::size_t f = 0; f < t.size(); ++f) {
    auto idx = t.unflatten(f);
    std::swap(idx[s], idx[u]);
    const double other = t[t.flat_index(std::span<const int>(idx))];
    worst = std::max(worst, std::abs(t[f] - (anti ? -other : other)));
  }
  const double scale = max_abs(t);
  return scale > 0.0 ? worst / scale : 0.0;
}

}  // namespace finsler
