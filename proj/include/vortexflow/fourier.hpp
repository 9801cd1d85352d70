#pragma once

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "vortexflow/field.hpp"

namespace vflow {

namespace detail {
// FFTW's planner is not reentrant; execution on distinct buffers is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Real-to-complex 2D transform pair on an n1 x n2 grid.
///
/// Plans are made with FFTW_ESTIMATE so the algorithm, and therefore every
/// bit of the output, depends only on the grid shape. One instance owns its
/// buffers and must not be shared between threads.
class Fourier2D {
 public:
  Fourier2D(int n1, int n2) : n1_(n1), n2_(n2), m1_(n1 / 2 + 1) {
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * n1 * n2));
    spec_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * m1_ * n2));
    std::lock_guard lock(detail::fftw_planner_mutex());
    // FFTW's row-major dims are (slow, fast) = (n2, n1).
    fwd_ = fftw_plan_dft_r2c_2d(n2, n1, real_, spec_, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_c2r_2d(n2, n1, spec_, real_, FFTW_ESTIMATE);
  }
  ~Fourier2D() {
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      fftw_destroy_plan(fwd_);
      fftw_destroy_plan(bwd_);
    }
    fftw_free(real_);
    fftw_free(spec_);
  }
  Fourier2D(const Fourier2D&) = delete;
  Fourier2D& operator=(const Fourier2D&) = delete;

  int n1() const { return n1_; }
  int n2() const { return n2_; }
  /// Number of stored x^1 modes (half spectrum).
  int m1() const { return m1_; }

  /// Signed integer wavenumber for the x^2 mode index q.
  int signed_q(int q) const { return q <= n2_ / 2 ? q : q - n2_; }

  bool is_nyquist1(int m) const { return n1_ % 2 == 0 && m == n1_ / 2; }
  bool is_nyquist2(int q) const { return n2_ % 2 == 0 && q == n2_ / 2; }

  std::complex<double>& mode(int m, int q) {
    return reinterpret_cast<std::complex<double>*>(spec_)[static_cast<std::size_t>(q) * m1_ + m];
  }

  void forward(const RealField& f) {
    std::memcpy(real_, f.data(), sizeof(double) * f.size());
    fftw_execute(fwd_);
  }

  /// Inverse transform of the current spectrum, normalized.
  void backward(RealField& out) {
    fftw_execute(bwd_);
    const double scale = 1.0 / (static_cast<double>(n1_) * n2_);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = real_[k] * scale;
  }

  template <typename Fn>
  void for_each_mode(Fn&& fn) {
    for (int q = 0; q < n2_; ++q)
      for (int m = 0; m < m1_; ++m) fn(m, q, mode(m, q));
  }

 private:
  int n1_, n2_, m1_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

}  // namespace vflow
