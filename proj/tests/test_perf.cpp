// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include "jrc/perf.hpp"
#include "oracles.hpp"

using namespace jrc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<cd> barker13() {
  const int b[] = {1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1};
  std::vector<cd> x;
  for (int v : b) x.emplace_back(v, 0.0);
  return x;
}

} // namespace

TEST_CASE("ambiguity function origin is one", "[perf][af]") {
  Rng rng(4);
  std::vector<cd> x(200);
  for (auto& v : x) v = unit_complex_normal(rng) * 3.0;
  const auto dop = linear_grid(-1e6, 1e6, 9);
  const auto af = ambiguity_function(x, 1e-9, 50, dop);
  CHECK_THAT(af.magnitude(af.zero_delay_index(), af.zero_doppler_index()), WithinAbs(1.0, 1e-12));
  CHECK_THROWS_AS(ambiguity_function(std::vector<cd>{}, 1e-9, 5, dop), Error);
}

TEST_CASE("rectangular pulse zero-Doppler cut is a triangle", "[perf][af]") {
  const std::size_t n = 40;
  const std::vector<cd> x(n, cd{1.0, 0.0});
  const double zero[] = {0.0};
  const auto af = ambiguity_function(x, 1.0, n + 5, zero);
  const auto cut = af.delay_cut();
  REQUIRE(cut.size() == 2 * (n - 1) + 1);
  for (std::size_t i = 0; i < cut.size(); ++i) {
    const double tau = af.delays[i];
    CHECK_THAT(cut[i], WithinAbs(std::max(0.0, 1.0 - std::abs(tau) / static_cast<double>(n)), 1e-12));
  }
}

TEST_CASE("ambiguity function equals the double-loop oracle", "[perf][af]") {
  Rng rng(6);
  std::vector<cd> x(77);
  for (auto& v : x) v = unit_complex_normal(rng);
  const double ts = 2e-9;
  const auto dop = linear_grid(-4e6, 4e6, 7);
  const auto one = ambiguity_function(x, ts, 30, dop, 1);
  const auto many = ambiguity_function(x, ts, 30, dop, 4);
  CHECK(one.value == many.value);
  double err = 0.0;
  for (std::size_t i = 0; i < one.n_delay(); ++i)
    for (std::size_t j = 0; j < one.n_doppler(); ++j) {
      const long lag = static_cast<long>(i) - 30;
      err = std::max(err, std::abs(one.at(i, j) - oracle::ambiguity(x, lag, dop[j], ts)));
    }
  CHECK(err < 1e-12);
}

TEST_CASE("barker-13 peak sidelobe ratio", "[perf][psl]") {
  const double zero[] = {0.0};
  const auto af = ambiguity_function(barker13(), 1.0, 12, zero);
  const double psl = peak_sidelobe_ratio(af.delay_cut());
  CHECK_THAT(psl, WithinAbs(-22.3, 0.1));
  std::vector<int> b{1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1};
  CHECK_THAT(psl, WithinAbs(oracle::code_psl_db(b), 1e-9));
}

TEST_CASE("psl edge cases", "[perf][psl]") {
  CHECK(peak_sidelobe_ratio(std::vector<double>{0.0, 0.0, 1.0, 0.0, 0.0}) == -std::numeric_limits<double>::infinity());
  CHECK(peak_sidelobe_ratio(std::vector<double>{1.0}) == -std::numeric_limits<double>::infinity());
  try {
    peak_sidelobe_ratio(std::vector<double>{0.5, 0.5, 0.5});
    FAIL("expected undefined PSL");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UndefinedPsl);
  }
  CHECK_THAT(peak_sidelobe_ratio(std::vector<double>{0.1, 0.05, 1.0, 0.5, 0.2, 0.25}), WithinAbs(20 * std::log10(0.25), 1e-12));
  CHECK_THROWS_AS(peak_sidelobe_ratio(std::vector<double>{}), Error);
}

TEST_CASE("rmse and ber", "[perf]") {
  const std::vector<double> t{1.0, -2.0, 3.5};
  CHECK(rmse(t, t) == 0.0);
  const std::vector<double> e{2.0, -1.0, 4.5};
  CHECK_THAT(rmse(e, t), WithinAbs(1.0, 1e-15));
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), Error);

  const std::vector<std::uint8_t> bits{0, 1, 1, 0, 1};
  CHECK(ber(bits, bits) == 0.0);
  std::vector<std::uint8_t> flipped;
  for (auto b : bits) flipped.push_back(static_cast<std::uint8_t>(1 - b));
  CHECK(ber(bits, flipped) == 1.0);
  CHECK_THROWS_AS(ber(std::vector<std::uint8_t>{}, std::vector<std::uint8_t>{}), Error);
}

TEST_CASE("effective DMSE", "[perf][dmse]") {
  CHECK(dmse_eff(0.3, 1.0) == 0.3);
  CHECK_THAT(dmse_eff(std::exp2(-4.0), 0.5), WithinAbs(0.25, 1e-15));
  try {
    dmse_eff(0.0, 0.5);
    FAIL("expected domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Domain);
  }
  CHECK_THROWS_AS(dmse_eff(0.5, 0.0), Error);

  Eigen::MatrixXd m(2, 2);
  m << 2.0, 0.5, 0.5, 1.0;
  const Eigen::MatrixXd half = dmse_eff(m, 0.5);
  CHECK((half * half - m).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((dmse_eff(m, 1.0) - m).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rate identity for isotropic MMSE", "[perf][dmse]") {
  Rng rng(1);
  std::uniform_real_distribution<double> r(0.0, 10.0), d(0.01, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double rate = r(rng), delta = d(rng);
    const std::size_t n = 1 + rng() % 64;
    const auto eff = dmse_eff(mmse_from_rate(rate, n), delta);
    CHECK(std::abs(check_rate_identity(eff, delta * rate, n)) <= 1e-12);
  }
  CHECK(std::abs(check_rate_identity(std::exp2(-3.0), 3.0, 1)) <= 1e-15);
}

TEST_CASE("trade-off objective endpoints and linearity", "[perf][tradeoff]") {
  TradeoffSpec s;
  s.rate = 2.0;
  s.delta = 0.5;
  s.code_length = 4;
  s.targets = 2;
  s.crlb = Eigen::MatrixXd::Identity(3, 3) * 1e-4;
  s.crlb(0, 1) = s.crlb(1, 0) = 1e-5;
  s.weight = 1.0;
  const double comm = jrc_objective(s);
  CHECK_THAT(comm, WithinAbs(-1.0, 1e-12));
  CHECK_THAT(comm, WithinAbs(communications_term(s), 1e-15));
  s.weight = 0.0;
  const double radar = jrc_objective(s);
  CHECK_THAT(radar, WithinAbs(trace_log2(s.crlb) / 2.0, 1e-12));
  s.weight = 0.5;
  CHECK_THAT(jrc_objective(s), WithinAbs(0.5 * (comm + radar), 1e-12));

  s.targets = 0;
  CHECK_THROWS_AS(jrc_objective(s), Error);
  s.weight = 1.0;
  CHECK_NOTHROW(jrc_objective(s));
}

TEST_CASE("crlb proxies", "[perf][crlb]") {
  OfdmaConfig o;
  const auto a = crlb_proxy(o, 0.2, 1.0, 0.1);
  const auto b = crlb_proxy(o, 0.2, 1.0, 0.01);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(a);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  CHECK((b * 10.0 - a).cwiseAbs().maxCoeff() <= 1e-9 * a.cwiseAbs().maxCoeff());
  CHECK(std::isfinite(trace_log2(a)));
  CHECK_THROWS_AS(crlb_proxy(o, 0.2, 1.0, 0.0), Error);

  PmcwConfig p;
  const auto c = pmcw_crlb_proxy(p, 0.0, 1.0, 1.0);
  CHECK(c(0, 0) > 0.0);
  CHECK(c(1, 1) > 0.0);
  CHECK(c.determinant() > 0.0);
}
