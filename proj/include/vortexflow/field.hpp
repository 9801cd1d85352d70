#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace vflow {

using complex = std::complex<double>;

/// Site-collocated samples on an n1 x n2 periodic grid.
///
/// Storage is row-major with x^2 as the outer index: site (i, j) lives at
/// j * n1 + i, where i indexes x^1 and j indexes x^2.
template <typename T>
class SiteField {
 public:
  SiteField() = default;
  SiteField(int n1, int n2, T value = T{})
      : n1_(n1), n2_(n2), data_(static_cast<std::size_t>(n1) * n2, value) {}

  int n1() const { return n1_; }
  int n2() const { return n2_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int i, int j) { return data_[index(i, j)]; }
  const T& operator()(int i, int j) const { return data_[index(i, j)]; }
  T& operator[](std::size_t k) { return data_[k]; }
  const T& operator[](std::size_t k) const { return data_[k]; }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * n1_ + i;
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  bool same_shape(const SiteField<T>& o) const {
    return n1_ == o.n1_ && n2_ == o.n2_;
  }

  SiteField& operator+=(const SiteField& o) {
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  SiteField& operator-=(const SiteField& o) {
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  template <typename S>
  SiteField& operator*=(S s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  bool operator==(const SiteField&) const = default;

 private:
  int n1_ = 0;
  int n2_ = 0;
  std::vector<T> data_;
};

using RealField = SiteField<double>;
using ComplexField = SiteField<complex>;

/// Real 1-form A = A1 dx^1 + A2 dx^2 with components sampled at sites.
struct OneForm {
  RealField a1;
  RealField a2;

  OneForm() = default;
  OneForm(int n1, int n2) : a1(n1, n2), a2(n1, n2) {}
  OneForm(RealField c1, RealField c2) : a1(std::move(c1)), a2(std::move(c2)) {}

  int n1() const { return a1.n1(); }
  int n2() const { return a1.n2(); }

  OneForm& operator+=(const OneForm& o) {
    a1 += o.a1;
    a2 += o.a2;
    return *this;
  }
  OneForm& operator-=(const OneForm& o) {
    a1 -= o.a1;
    a2 -= o.a2;
    return *this;
  }
  OneForm& operator*=(double s) {
    a1 *= s;
    a2 *= s;
    return *this;
  }
  bool operator==(const OneForm&) const = default;
};

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline int wrap_index(int k, int n) { return k < 0 ? k + n : (k >= n ? k - n : k); }

template <typename T>
double sup_norm(const SiteField<T>& f) {
  double m = 0.0;
  for (const auto& v : f) m = std::max(m, std::abs(v));
  return m;
}

template <typename T>
bool all_finite(const SiteField<T>& f) {
  for (const auto& v : f) {
    if constexpr (std::is_same_v<T, complex>) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    } else {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

}  // namespace vflow
