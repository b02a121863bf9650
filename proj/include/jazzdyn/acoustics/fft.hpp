#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <vector>

namespace jazzdyn::acoustics {

using cplx = std::complex<double>;

namespace fft_detail {

// FFTW planning is not thread-safe; execution is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct Buffer {
  explicit Buffer(std::size_t n) : n(n), data(fftw_alloc_complex(n)) {}
  ~Buffer() { fftw_free(data); }
  Buffer(const Buffer&) = delete;
  Buffer& operator=(const Buffer&) = delete;
  std::size_t n;
  fftw_complex* data;
};

inline void transform(std::vector<cplx>& x, int sign) {
  const std::size_t n = x.size();
  if (n == 0) return;
  Buffer buf(n);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lk(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n), buf.data, buf.data, sign, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < n; ++i) {
    buf.data[i][0] = x[i].real();
    buf.data[i][1] = x[i].imag();
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lk(planner_mutex());
    fftw_destroy_plan(plan);
  }
  for (std::size_t i = 0; i < n; ++i) x[i] = {buf.data[i][0], buf.data[i][1]};
}

}  // namespace fft_detail

// Unnormalized forward transform.
inline void fft(std::vector<cplx>& x) { fft_detail::transform(x, FFTW_FORWARD); }

// Inverse transform including the 1/n factor.
inline void ifft(std::vector<cplx>& x) {
  fft_detail::transform(x, FFTW_BACKWARD);
  const double s = 1.0 / static_cast<double>(x.size());
  for (auto& v : x) v *= s;
}

// Smallest 2^a 3^b 5^c >= n.
inline std::size_t fast_size(std::size_t n) {
  if (n <= 1) return 1;
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t f : {2u, 3u, 5u})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

// Frequency in Hz of bin k for an n-point transform (negative above Nyquist).
inline double bin_frequency(std::size_t k, std::size_t n, double rate) {
  const double kk = k <= n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
  return kk * rate / static_cast<double>(n);
}

}  // namespace jazzdyn::acoustics
