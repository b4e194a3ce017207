// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "jrc/types.hpp"

namespace jrc::fft {

namespace detail {

// FFTW planning is not reentrant; execution with new arrays is. Plans are
// created once per (length, direction) under a lock and live for the process.
class PlanCache {
public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int n, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<cd> scratch(static_cast<std::size_t>(n));
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_1d(n, p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

private:
  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

inline void execute(std::span<cd> data, int sign) {
  if (data.empty()) return;
  fftw_plan plan = PlanCache::instance().get(static_cast<int>(data.size()), sign);
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, p, p);
}

} // namespace detail

// X[k] = sum_n x[n] e^{-j 2 pi k n / N}, in place.
inline void forward(std::span<cd> data) { detail::execute(data, FFTW_FORWARD); }

// x[n] = sum_k X[k] e^{+j 2 pi k n / N}, in place and unnormalized.
inline void inverse(std::span<cd> data) { detail::execute(data, FFTW_BACKWARD); }

// Copies `x` into a zero-padded buffer of length n and transforms it.
inline std::vector<cd> padded(std::span<const cd> x, std::size_t n, bool inverse_dir) {
  std::vector<cd> buf(n, cd{0.0, 0.0});
  for (std::size_t i = 0; i < x.size() && i < n; ++i) buf[i] = x[i];
  if (inverse_dir) inverse(buf); else forward(buf);
  return buf;
}

// Circular cross-correlation r[k] = sum_l y[l] conj(s[(l - k) mod L]).
inline std::vector<cd> circular_xcorr(std::span<const cd> y, std::span<const cd> s) {
  const std::size_t n = y.size();
  std::vector<cd> yf(y.begin(), y.end());
  std::vector<cd> sf(s.begin(), s.end());
  forward(yf);
  forward(sf);
  for (std::size_t i = 0; i < n; ++i) yf[i] *= std::conj(sf[i]);
  inverse(yf);
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : yf) v *= scale;
  return yf;
}

} // namespace jrc::fft
