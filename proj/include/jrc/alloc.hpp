// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "jrc/types.hpp"

namespace jrc {

struct AllocationProblem {
  std::vector<double> radar_gain;  // g_k
  std::vector<double> comm_gain;   // h_k
  std::vector<double> noise;       // n_k, W
  std::vector<double> rate_floor;  // t_k, bits/s/Hz
  double total_power = 1.0;        // P_T, W
  double alpha = 0.01;             // false-alarm cap

  std::size_t size() const { return radar_gain.size(); }

  void validate() const {
    const auto k = radar_gain.size();
    require(k > 0, ErrorCode::InvalidArgument, "allocation problem has no subcarriers");
    require(comm_gain.size() == k && noise.size() == k && rate_floor.size() == k, ErrorCode::InvalidArgument,
            "per-subcarrier vectors differ in length");
    for (std::size_t i = 0; i < k; ++i) {
      require(radar_gain[i] > 0.0 && comm_gain[i] > 0.0 && noise[i] > 0.0, ErrorCode::InvalidArgument,
              "gains and noise powers must be positive");
      require(rate_floor[i] >= 0.0, ErrorCode::InvalidArgument, "rate floors must be non-negative");
    }
    require(total_power > 0.0, ErrorCode::InvalidArgument, "total power must be positive");
    require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  }
};

struct AllocationResult {
  std::vector<double> power;
  double water_level = 0.0;
  double radar_snr = 0.0;
  double detection_probability = 0.0;
  std::vector<double> rates;          // log2(1 + P h / n)
  bool feasible = true;
  double deficit = 0.0;               // W missing to meet every rate floor
  std::vector<double> kkt_residuals;  // per subcarrier
};

/// P_k = max(0, mu - l_k) with sum P_k = P_T; the water level comes from the
/// sorted-prefix closed form.
inline AllocationResult waterfill(std::span<const double> levels, double total_power) {
  require(!levels.empty(), ErrorCode::InvalidArgument, "water-filling over an empty subcarrier set");
  require(total_power > 0.0, ErrorCode::InvalidArgument, "total power must be positive");
  for (const double l : levels) require(l > 0.0 && std::isfinite(l), ErrorCode::InvalidArgument, "levels must be positive");
  std::vector<double> sorted(levels.begin(), levels.end());
  std::sort(sorted.begin(), sorted.end());
  double prefix = 0.0, mu = 0.0;
  for (std::size_t k = 1; k <= sorted.size(); ++k) {
    prefix += sorted[k - 1];
    const double cand = (total_power + prefix) / static_cast<double>(k);
    if (cand <= sorted[k - 1]) break;
    mu = cand;
    if (k == sorted.size() || cand <= sorted[k]) break;
  }
  AllocationResult r;
  r.water_level = mu;
  r.power.resize(levels.size());
  r.kkt_residuals.resize(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    r.power[i] = std::max(0.0, mu - levels[i]);
    r.kkt_residuals[i] = r.power[i] > 0.0 ? std::abs(r.power[i] * (mu - levels[i] - r.power[i]))
                                          : std::max(0.0, mu - levels[i]);
  }
  return r;
}

inline AllocationResult waterfill(const std::vector<double>& levels, double total_power) {
  return waterfill(std::span<const double>(levels), total_power);
}

/// Neyman-Pearson detection probability under a Gaussian mean shift:
/// p_D = Q(Q^{-1}(alpha) - sqrt(2 SNR)).
inline double detection_probability(double snr, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  require(snr >= 0.0, ErrorCode::InvalidArgument, "SNR must be non-negative");
  const boost::math::normal_distribution<double> n01;
  const double threshold = boost::math::quantile(boost::math::complement(n01, alpha));
  return boost::math::cdf(boost::math::complement(n01, threshold - std::sqrt(2.0 * snr)));
}

/// Power needed on subcarrier k to reach log2(1 + P h / n) = t.
inline double rate_floor_power(double rate_floor, double comm_gain, double noise) {
  return (std::exp2(rate_floor) - 1.0) * noise / comm_gain;
}

/// Rate floors first, then every remaining watt on the subcarrier with the
/// best g/n (lowest index on ties), which maximizes the radar SNR sum P g / n.
inline AllocationResult np_allocate(const AllocationProblem& prob) {
  prob.validate();
  const auto k = prob.size();
  AllocationResult r;
  r.power.resize(k);
  double floor_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    r.power[i] = rate_floor_power(prob.rate_floor[i], prob.comm_gain[i], prob.noise[i]);
    floor_sum += r.power[i];
  }
  if (floor_sum > prob.total_power) {
    r.feasible = false;
    r.deficit = floor_sum - prob.total_power;
  } else {
    std::size_t best = 0;
    for (std::size_t i = 1; i < k; ++i)
      if (prob.radar_gain[i] / prob.noise[i] > prob.radar_gain[best] / prob.noise[best]) best = i;
    r.power[best] += std::max(0.0, prob.total_power - floor_sum);
  }
  r.rates.resize(k);
  r.kkt_residuals.assign(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    r.rates[i] = std::log2(1.0 + r.power[i] * prob.comm_gain[i] / prob.noise[i]);
    r.radar_snr += r.power[i] * prob.radar_gain[i] / prob.noise[i];
  }
  r.detection_probability = detection_probability(r.radar_snr, prob.alpha);
  return r;
}

/// Sum of the closed-form floor powers; the problem is feasible iff this is <= P_T.
inline double feasibility_boundary(const AllocationProblem& prob) {
  double s = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) s += rate_floor_power(prob.rate_floor[i], prob.comm_gain[i], prob.noise[i]);
  return s;
}

} // namespace jrc
