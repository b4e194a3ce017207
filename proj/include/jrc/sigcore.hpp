// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "jrc/fft.hpp"
#include "jrc/types.hpp"

namespace jrc {

/// Phase code driving one PMCW block: chip l is e^{j phases[l]}.
struct CodeSequence {
  std::vector<double> phases;
  double chip_duration = 1.0;

  std::size_t length() const { return phases.size(); }
  double block_duration() const { return chip_duration * static_cast<double>(phases.size()); }

  std::vector<cd> chips() const {
    std::vector<cd> out(phases.size());
    for (std::size_t l = 0; l < phases.size(); ++l) out[l] = std::polar(1.0, phases[l]);
    return out;
  }

  bool is_binary() const {
    return std::all_of(phases.begin(), phases.end(), [](double p) { return p == 0.0 || p == kPi; });
  }
};

/// Builds a binary code from +1/-1 chip values (+1 -> 0 rad, -1 -> pi rad).
inline CodeSequence binary_code(std::span<const int> pm, double chip_duration) {
  require(!pm.empty(), ErrorCode::InvalidArgument, "code must have at least one chip");
  CodeSequence c;
  c.chip_duration = chip_duration;
  c.phases.reserve(pm.size());
  for (int v : pm) {
    require(v == 1 || v == -1, ErrorCode::InvalidArgument, "binary chips must be +1 or -1");
    c.phases.push_back(v > 0 ? 0.0 : kPi);
  }
  return c;
}

/// Maximal-length sequence of period 2^degree - 1 from a Fibonacci LFSR with a
/// primitive feedback polynomial, as +1/-1 values.
inline std::vector<int> mls_chips(int degree) {
  // Tap sets (1-based stage numbers) of primitive polynomials, degrees 2..16.
  static const std::vector<std::vector<int>> taps = {
      {},          {},          {2, 1},          {3, 2},          {4, 3},  {5, 3},
      {6, 5},      {7, 6},      {8, 6, 5, 4},    {9, 5},          {10, 7}, {11, 9},
      {12, 11, 10, 4}, {13, 12, 11, 8}, {14, 13, 12, 2}, {15, 14},  {16, 15, 13, 4}};
  require(degree >= 2 && degree <= 16, ErrorCode::InvalidArgument, "MLS degree must be in [2, 16]");
  const std::size_t period = (std::size_t{1} << degree) - 1;
  std::uint32_t state = 1;
  std::vector<int> out(period);
  for (std::size_t i = 0; i < period; ++i) {
    const int bit = static_cast<int>(state & 1u);
    out[i] = bit ? -1 : 1;
    std::uint32_t fb = 0;
    for (int t : taps[static_cast<std::size_t>(degree)]) fb ^= (state >> (degree - t)) & 1u;
    state = (state >> 1) | (fb << (degree - 1));
  }
  return out;
}

inline CodeSequence mls_code(int degree, double chip_duration) {
  const auto chips = mls_chips(degree);
  return binary_code(chips, chip_duration);
}

/// Pseudorandom +1/-1 code drawn from the raw generator output.
inline CodeSequence random_binary_code(std::size_t length, Rng& rng, double chip_duration) {
  require(length >= 1, ErrorCode::InvalidArgument, "code length must be >= 1");
  std::vector<int> chips(length);
  for (auto& c : chips) c = (rng() >> 63) ? -1 : 1;
  return binary_code(chips, chip_duration);
}

/// Default PMCW code family: an m-sequence when the length is 2^n - 1, otherwise
/// a seeded pseudorandom binary code.
inline CodeSequence default_code(std::size_t length, double chip_duration, std::uint64_t seed) {
  for (int deg = 2; deg <= 16; ++deg) {
    if (length == (std::size_t{1} << deg) - 1) return mls_code(deg, chip_duration);
  }
  Rng rng(derive_seed(seed, 0xC0DEu));
  return random_binary_code(length, rng, chip_duration);
}

// ---------------------------------------------------------------------------
// Golay complementary pairs

struct GolayPair {
  std::vector<int> a;
  std::vector<int> b;
  std::size_t length() const { return a.size(); }
};

/// Length-2^log2_length pair by recursive concatenation:
/// a' = [a | b], b' = [a | -b], seeded with a = b = [+1].
inline GolayPair golay_pair(int log2_length) {
  require(log2_length >= 1 && log2_length <= 16, ErrorCode::InvalidArgument,
          "golay log2_length must be in [1, 16]");
  GolayPair g{{1}, {1}};
  for (int i = 0; i < log2_length; ++i) {
    std::vector<int> a2(g.a);
    a2.insert(a2.end(), g.b.begin(), g.b.end());
    std::vector<int> b2(g.a);
    for (int v : g.b) b2.push_back(-v);
    g.a = std::move(a2);
    g.b = std::move(b2);
  }
  return g;
}

namespace detail {

template <typename T>
T conj_if_complex(const T& v) {
  if constexpr (std::is_same_v<T, cd>) return std::conj(v);
  else return v;
}

template <typename T>
std::vector<T> autocorr_direct(std::span<const T> x) {
  const std::size_t n = x.size();
  std::vector<T> out(2 * n - 1, T{});
  for (std::size_t k = 0; k < n; ++k) {
    T acc{};
    for (std::size_t i = 0; i + k < n; ++i) acc += x[i + k] * conj_if_complex(x[i]);
    out[n - 1 + k] = acc;
    out[n - 1 - k] = conj_if_complex(acc);
  }
  return out;
}

inline std::vector<cd> autocorr_fft(std::span<const cd> x) {
  const std::size_t n = x.size();
  std::size_t nfft = 1;
  while (nfft < 2 * n) nfft <<= 1;
  std::vector<cd> buf(nfft, cd{0.0, 0.0});
  std::copy(x.begin(), x.end(), buf.begin());
  fft::forward(buf);
  for (auto& v : buf) v = std::norm(v);
  fft::inverse(buf);
  std::vector<cd> out(2 * n - 1);
  const double scale = 1.0 / static_cast<double>(nfft);
  for (std::size_t k = 0; k < n; ++k) {
    out[n - 1 + k] = buf[k] * scale;
    if (k > 0) out[n - 1 - k] = buf[nfft - k] * scale;
  }
  return out;
}

} // namespace detail

/// Aperiodic autocorrelation, out[N-1+k] = sum_i x[i+k] conj(x[i]) for
/// k in (-N, N). Integer input is computed exactly.
template <typename T>
std::vector<T> aperiodic_autocorr(std::span<const T> x) {
  require(!x.empty(), ErrorCode::InvalidArgument, "autocorrelation of an empty sequence");
  constexpr std::size_t kDirectLimit = 4096;
  if (x.size() <= kDirectLimit) return detail::autocorr_direct(x);
  std::vector<cd> xc(x.begin(), x.end());
  auto r = detail::autocorr_fft(xc);
  std::vector<T> out(r.size());
  if constexpr (std::is_integral_v<T>) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double v = std::round(r[i].real());
      // The FFT route is only accepted when every lag rounds unambiguously.
      if (std::abs(r[i].real() - v) > 0.25) return detail::autocorr_direct(x);
      out[i] = static_cast<T>(v);
    }
  } else if constexpr (std::is_same_v<T, cd>) {
    out = std::move(r);
  } else {
    for (std::size_t i = 0; i < r.size(); ++i) out[i] = r[i].real();
  }
  return out;
}

template <typename T>
std::vector<T> aperiodic_autocorr(const std::vector<T>& x) {
  return aperiodic_autocorr(std::span<const T>(x));
}

/// Sum of the pair's aperiodic autocorrelations; 2N at zero lag, 0 elsewhere.
inline std::vector<long long> golay_autocorr_sum(const GolayPair& g) {
  const auto ra = aperiodic_autocorr<int>(g.a);
  const auto rb = aperiodic_autocorr<int>(g.b);
  std::vector<long long> out(ra.size());
  for (std::size_t i = 0; i < ra.size(); ++i) out[i] = static_cast<long long>(ra[i]) + rb[i];
  return out;
}

// ---------------------------------------------------------------------------
// Differential PSK

struct DpskStream {
  std::vector<std::uint8_t> bits;
  int order = 2;
  std::vector<cd> symbols; // symbols[0] is the phase-0 reference
};

inline int bits_per_symbol(int order) {
  require(order == 2 || order == 4, ErrorCode::InvalidArgument, "DPSK order must be 2 or 4");
  return order == 2 ? 1 : 2;
}

/// Gray-coded phase increment index for one symbol's worth of bits.
inline int dpsk_increment_index(std::span<const std::uint8_t> group, int order) {
  if (order == 2) return group[0] & 1;
  const int b0 = group[0] & 1, b1 = group[1] & 1;
  static constexpr int gray[4] = {0, 1, 3, 2}; // 00->0, 01->1, 10->3, 11->2
  return gray[(b0 << 1) | b1];
}

inline void dpsk_index_to_bits(int idx, int order, std::vector<std::uint8_t>& out) {
  if (order == 2) {
    out.push_back(static_cast<std::uint8_t>(idx & 1));
    return;
  }
  static constexpr int inv_gray[4] = {0, 1, 3, 2}; // index -> (b0 b1)
  const int v = inv_gray[idx & 3];
  out.push_back(static_cast<std::uint8_t>((v >> 1) & 1));
  out.push_back(static_cast<std::uint8_t>(v & 1));
}

inline cd dpsk_point(int phase_index, int order) {
  const int i = ((phase_index % order) + order) % order;
  switch (order * 4 + i) {
  case 8: return {1.0, 0.0};
  case 9: return {-1.0, 0.0};
  case 16: return {1.0, 0.0};
  case 17: return {0.0, 1.0};
  case 18: return {-1.0, 0.0};
  case 19: return {0.0, -1.0};
  default: return std::polar(1.0, kTwoPi * i / order);
  }
}

/// Differentially encodes bits; the returned stream has one reference symbol
/// followed by one symbol per log2(order) bits.
/// Nearest constellation point to a single (phase-referenced) observation.
inline cd dpsk_slice(cd z, int order) {
  return dpsk_point(static_cast<int>(std::lround(std::arg(z) * order / kTwoPi)), order);
}

inline DpskStream dpsk_encode(std::span<const std::uint8_t> bits, int order) {
  const int b = bits_per_symbol(order);
  require(bits.size() % static_cast<std::size_t>(b) == 0, ErrorCode::InvalidArgument,
          "bit count must be divisible by log2(order)");
  DpskStream s;
  s.bits.assign(bits.begin(), bits.end());
  s.order = order;
  s.symbols.reserve(bits.size() / static_cast<std::size_t>(b) + 1);
  int phase = 0;
  s.symbols.push_back(dpsk_point(phase, order));
  for (std::size_t i = 0; i < bits.size(); i += static_cast<std::size_t>(b)) {
    phase = (phase + dpsk_increment_index(bits.subspan(i, static_cast<std::size_t>(b)), order)) % order;
    s.symbols.push_back(dpsk_point(phase, order));
  }
  return s;
}

inline DpskStream dpsk_encode(const std::vector<std::uint8_t>& bits, int order) {
  return dpsk_encode(std::span<const std::uint8_t>(bits), order);
}

/// Decodes phase increments between consecutive symbols; amplitudes are ignored.
inline std::vector<std::uint8_t> dpsk_decode(std::span<const cd> symbols, int order) {
  const int b = bits_per_symbol(order);
  std::vector<std::uint8_t> out;
  if (symbols.size() < 2) return out;
  out.reserve((symbols.size() - 1) * static_cast<std::size_t>(b));
  const double step = kTwoPi / order;
  for (std::size_t i = 1; i < symbols.size(); ++i) {
    const double d = std::arg(symbols[i] * std::conj(symbols[i - 1]));
    int idx = static_cast<int>(std::lround(d / step));
    idx = ((idx % order) + order) % order;
    dpsk_index_to_bits(idx, order, out);
  }
  return out;
}

inline std::vector<std::uint8_t> dpsk_decode(const std::vector<cd>& symbols, int order) {
  return dpsk_decode(std::span<const cd>(symbols), order);
}

// ---------------------------------------------------------------------------
// Cyclic shift and array steering

/// out = P_k * seq, i.e. out[i] = seq[(i - k) mod L] (a delay by k chips).
template <typename T>
std::vector<T> cyclic_shift(std::span<const T> seq, std::size_t k) {
  const std::size_t n = seq.size();
  require(n > 0, ErrorCode::InvalidArgument, "cyclic shift of an empty sequence");
  require(k < n, ErrorCode::InvalidArgument, "shift must satisfy 0 <= k < L; reduce mod L first");
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = seq[(i + n - k) % n];
  return out;
}

template <typename T>
std::vector<T> cyclic_shift(const std::vector<T>& seq, std::size_t k) {
  return cyclic_shift(std::span<const T>(seq), k);
}

/// Explicit L x L cyclic permutation matrix [[0, I_k], [I_{L-k}, 0]].
inline Eigen::MatrixXd permutation_matrix(std::size_t length, std::size_t k) {
  require(k < length, ErrorCode::InvalidArgument, "shift must satisfy 0 <= k < L");
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(length));
  for (std::size_t i = 0; i < k; ++i)
    p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(length - k + i)) = 1.0;
  for (std::size_t i = k; i < length; ++i)
    p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - k)) = 1.0;
  return p;
}

struct ArrayGeometry {
  std::size_t n_tx = 1;
  std::size_t n_rx = 1;
  double spacing_over_lambda = 0.5;

  void validate() const {
    require(n_tx >= 1 && n_rx >= 1, ErrorCode::InvalidArgument, "array needs at least one element");
    require(spacing_over_lambda > 0.0, ErrorCode::InvalidArgument, "element spacing must be positive");
  }
  bool grating_lobe_free() const { return spacing_over_lambda <= 0.5; }
};

enum class SteeringSign { Transmit, Receive };

/// Element p (0-based) has phase +/- 2 pi (d/lambda) sin(angle) p; transmit
/// weights use +j, receive responses use -j.
inline std::vector<cd> steering_vector(const ArrayGeometry& geometry, double angle, std::size_t n_elements,
                                       SteeringSign sign) {
  require(std::abs(angle) <= kPi / 2 + 1e-12, ErrorCode::InvalidArgument, "|angle| must not exceed pi/2");
  const double s = sign == SteeringSign::Transmit ? 1.0 : -1.0;
  const double phase = s * kTwoPi * geometry.spacing_over_lambda * std::sin(angle);
  std::vector<cd> v(n_elements);
  for (std::size_t p = 0; p < n_elements; ++p) v[p] = std::polar(1.0, phase * static_cast<double>(p));
  return v;
}

} // namespace jrc
