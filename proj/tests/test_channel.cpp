// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include "jrc/channel.hpp"

using namespace jrc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("communications large-scale gain", "[channel]") {
  CHECK_THAT(comm_large_scale_gain(1, 1, 1, 1, 2), WithinRel(1.0 / (16.0 * kPi * kPi), 1e-12));
  CHECK_THAT(comm_large_scale_gain(1, 1, 1, 1, 2), WithinRel(6.3326e-3, 1e-4));
  CHECK_THAT(comm_large_scale_gain(1, 1, 5e-3, 10, 2), WithinRel(1.5832e-9, 1e-4));
  CHECK_THROWS_AS(comm_large_scale_gain(1, 1, 1, 0, 2), Error);
}

TEST_CASE("radar large-scale gain", "[channel]") {
  CHECK_THAT(radar_large_scale_gain(1, 1, 1), WithinRel(1.0 / (64.0 * kPi * kPi * kPi), 1e-12));
  CHECK_THAT(radar_large_scale_gain(1, 1, 1), WithinRel(5.0393e-4, 1e-4));
  CHECK_THAT(radar_large_scale_gain(5e-3, 1, 10), WithinRel(1.2598e-12, 1e-4));
  try {
    radar_large_scale_gain(1, 1, 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Singularity);
  }
}

TEST_CASE("doppler from radial velocity", "[channel]") {
  CHECK(doppler_from_velocity(0.0, 5e-3) == 0.0);
  CHECK_THAT(doppler_from_velocity(30.0, 5e-3), WithinRel(12e3, 1e-12));
}

TEST_CASE("communications channel response", "[channel]") {
  const std::vector<CommTap> one{{cd{1.0, 0.0}, 0.0, 0.0}};
  CHECK(std::abs(channel_response(one, 0.7, 1.3, 5e9) - cd{0.7, 0.0}) < 1e-15);

  const double f = 2e9;
  const std::vector<CommTap> half{{cd{0.3, -0.4}, 1.0 / (2.0 * f), 0.0}};
  CHECK(std::abs(channel_response(half, 2.0, 0.0, f) + 2.0 * cd{0.3, -0.4}) < 1e-12);

  const std::vector<CommTap> a{{cd{0.5, 0.1}, 3e-9, 100.0}};
  const std::vector<CommTap> b{{cd{-0.2, 0.7}, 7e-9, -40.0}};
  const std::vector<CommTap> both{a[0], b[0]};
  const cd sum = channel_response(a, 1.5, 2e-3, 1e9) + channel_response(b, 1.5, 2e-3, 1e9);
  CHECK(std::abs(channel_response(both, 1.5, 2e-3, 1e9) - sum) < 1e-12);
}

TEST_CASE("swerling 0 is constant", "[channel][fading]") {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) CHECK(draw_small_scale(FadingModel::swerling0(), 1.0, rng) == cd{1.0, 0.0});
}

TEST_CASE("swerling I/II mean power", "[channel][fading]") {
  Rng rng(2024);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double p = std::norm(draw_small_scale({FadingKind::Swerling1_2, 0.0}, 1.0, rng));
    sum += p;
    sum2 += p * p;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(mean - 1.0) <= 3.0 * se);
}

TEST_CASE("swerling III/IV mean power", "[channel][fading]") {
  Rng rng(77);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += std::norm(draw_small_scale({FadingKind::Swerling3_4, 0.0}, 2.0, rng));
  CHECK_THAT(sum / n, WithinRel(2.0, 0.02));
}

TEST_CASE("rician fading", "[channel][fading]") {
  Rng rng(8);
  const FadingModel huge{FadingKind::Rician, 1e12};
  for (int i = 0; i < 50; ++i) CHECK_THAT(std::abs(draw_small_scale(huge, 1.0, rng)), WithinAbs(1.0, 1e-5));
  const FadingModel inf{FadingKind::Rician, std::numeric_limits<double>::infinity()};
  CHECK(draw_small_scale(inf, 4.0, rng) == cd{2.0, 0.0});
  CHECK_THROWS_AS(draw_small_scale({FadingKind::Rician, -1.0}, 1.0, rng), Error);

  const FadingModel k10 = FadingModel::rician_db(10.0);
  double sum = 0.0;
  for (int i = 0; i < 50000; ++i) sum += std::norm(draw_small_scale(k10, 1.0, rng));
  CHECK_THAT(sum / 50000.0, WithinRel(1.0, 0.02));
}

TEST_CASE("block fading is reproducible per scene seed and CPI", "[channel][fading]") {
  Scene s;
  s.seed = 42;
  Scatterer sc;
  sc.fading = {FadingKind::Swerling1_2, 0.0};
  s.scatterers = {sc, sc};
  const auto a = realize_gains(s, 0), b = realize_gains(s, 0), c = realize_gains(s, 1);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a[0] != a[1]);
}

TEST_CASE("radar channel response superposes scatterers", "[channel]") {
  Scene s;
  Scatterer a, b;
  a.delay = 2e-9;
  a.doppler = 1e3;
  a.gain = {0.5, 0.5};
  b.delay = 5e-9;
  b.doppler = -3e3;
  b.gain = {1.0, -0.25};
  s.scatterers = {a, b};
  const double t = 1e-4, f = 3e9;
  cd want{0.0, 0.0};
  for (const auto& q : s.scatterers)
    want += q.gain * std::exp(cd{0.0, -kTwoPi * (q.delay * f + q.doppler * t)});
  CHECK(std::abs(channel_response(s, t, f) - want) < 1e-12);
}

TEST_CASE("noise is scaled from unit draws", "[channel]") {
  std::vector<cd> a(1000, cd{0.0, 0.0}), b(1000, cd{0.0, 0.0});
  Rng r1(5), r2(5);
  add_noise(a, 1.0, r1);
  add_noise(b, 4.0, r2);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(b[i] - 2.0 * a[i]) < 1e-12);
  double p = 0.0;
  for (const auto& v : a) p += std::norm(v);
  CHECK_THAT(p / 1000.0, WithinRel(1.0, 0.15));
}

TEST_CASE("scene validation", "[channel]") {
  Scene s;
  s.noise_variance = -1.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s.noise_variance = 0.0;
  Scatterer bad;
  bad.arrival_angle = 2.0;
  s.scatterers = {bad};
  CHECK_THROWS_AS(s.validate(), Error);
}
