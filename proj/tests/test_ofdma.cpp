// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include "scenes.hpp"

using namespace jrc;

namespace {

CMatrix unit_grid(std::size_t nc, std::size_t ns, Rng& rng) {
  CMatrix g(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(ns));
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = std::polar(1.0, kPi / 2 * static_cast<double>(rng() % 4));
  return g;
}

} // namespace

TEST_CASE("ofdma transmit", "[ofdma]") {
  OfdmaConfig c;
  c.subcarriers = 1;
  c.symbols = 1;
  c.cp_length = 0;
  CMatrix one(1, 1);
  one(0, 0) = 1.0;
  const auto x = ofdma_transmit(c, one, 0.0);
  REQUIRE(x.cols() == 1);
  CHECK(std::abs(x(0, 0) - cd{1.0, 0.0}) < 1e-15);

  c.subcarriers = 4;
  CMatrix g = CMatrix::Zero(4, 1);
  g(1, 0) = 1.0;
  const auto y = ofdma_transmit(c, g, 0.0);
  for (Eigen::Index l = 0; l < 4; ++l)
    CHECK(std::abs(y(0, l) - std::polar(1.0, kTwoPi * static_cast<double>(l) / 4.0)) < 1e-12);

  CHECK_THROWS_AS(ofdma_transmit(c, one, 0.0), Error);
}

TEST_CASE("ofdma transmit equals the direct double sum with the cyclic prefix", "[ofdma][oracle]") {
  Rng rng(12);
  OfdmaConfig c;
  c.subcarriers = 16;
  c.symbols = 3;
  c.cp_length = 4;
  c.geometry = {2, 1, 0.5};
  const auto g = unit_grid(16, 3, rng);
  const auto x = ofdma_transmit(c, g, 0.0);
  double err = 0.0;
  for (std::size_t m = 0; m < 3; ++m) {
    std::vector<cd> col(16);
    for (std::size_t n = 0; n < 16; ++n) col[n] = g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    const auto t = oracle::idft(col);
    for (std::size_t i = 0; i < 20; ++i) {
      const cd want = t[(i + 12) % 16];
      for (Eigen::Index a = 0; a < 2; ++a) err = std::max(err, std::abs(x(a, static_cast<Eigen::Index>(m * 20 + i)) - want));
    }
  }
  CHECK(err < 1e-10);
}

TEST_CASE("ofdma pilot mask", "[ofdma]") {
  OfdmaConfig c;
  c.subcarriers = 4;
  c.mu_percent = 100;
  CHECK(ofdma_pilot_mask(c).count == 4);
  c.mu_percent = 50;
  CHECK(ofdma_pilot_mask(c).radar == std::vector<bool>{true, false, true, false});
  c.subcarriers = 1024;
  const auto m = ofdma_pilot_mask(c);
  CHECK(m.count == 512);
  const auto rows = m.radar_rows();
  std::size_t gap = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) gap = std::max(gap, rows[i] - rows[i - 1]);
  CHECK(gap == 2);
  c.mu_percent = 0;
  CHECK(ofdma_pilot_mask(c).count == 0);
}

TEST_CASE("ofdma symbol grid", "[ofdma]") {
  OfdmaConfig c;
  c.subcarriers = 8;
  c.symbols = 5;
  Rng rng(4);
  const auto bits = random_bits(ofdma_payload_bits(c), rng);
  const auto g = make_symbol_grid(c, bits);
  for (Eigen::Index i = 0; i < g.symbols.size(); ++i) CHECK(std::abs(std::abs(g.symbols(i)) - 1.0) < 1e-12);
  for (std::size_t n = 0; n < 8; ++n)
    if (g.mask.radar[n])
      for (std::size_t m = 0; m < 5; ++m)
        CHECK(g.symbols(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) == ofdma_pilot_symbol(c, n, m));
  const auto again = make_symbol_grid(c, bits);
  CHECK(again.symbols == g.symbols);
  CHECK_THROWS_AS(make_symbol_grid(c, std::vector<std::uint8_t>(3, 0)), Error);
}

TEST_CASE("ofdma single unit scatterer returns the grid", "[ofdma]") {
  OfdmaConfig c;
  c.subcarriers = 16;
  c.symbols = 4;
  Rng rng(2);
  const auto g = unit_grid(16, 4, rng);
  Scene scene;
  scene.scatterers = {Scatterer{}};
  const auto cube = ofdma_receive_cube(scene, c, g, rng);
  double err = 0.0;
  for (std::size_t n = 0; n < 16; ++n)
    for (std::size_t m = 0; m < 4; ++m)
      for (std::size_t p = 0; p < c.geometry.n_rx; ++p)
        err = std::max(err, std::abs(cube.data(n, m, p) - g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m))));
  CHECK(err == 0.0);
}

TEST_CASE("ofdma empty scene and noise", "[ofdma]") {
  OfdmaConfig c;
  Rng rng(5);
  const auto g = unit_grid(c.subcarriers, c.symbols, rng);
  Scene scene;
  CHECK(ofdma_receive_cube(scene, c, g, rng).data.energy() == 0.0);
  scene.noise_variance = 2.0;
  const auto cube = ofdma_receive_cube(scene, c, g, rng);
  CHECK_THAT(cube.data.energy() / static_cast<double>(cube.data.size()), Catch::Matchers::WithinRel(2.0, 0.1));
}

TEST_CASE("ofdma tensor equals the direct-sum oracle", "[ofdma][oracle]") {
  Rng rng(31);
  for (int i = 0; i < 25; ++i) {
    const auto tc = testing_support::random_ofdma_case(rng);
    CHECK(testing_support::ofdma_oracle_error(tc) <= 1e-10);
  }
}

TEST_CASE("ofdma delay beyond the cyclic prefix raises the ISI warning", "[ofdma]") {
  OfdmaConfig c;
  Rng rng(5);
  const auto g = unit_grid(c.subcarriers, c.symbols, rng);
  Scene scene;
  Scatterer s;
  s.delay = 10 * c.sample_period();
  scene.scatterers = {s};
  CHECK_FALSE(ofdma_receive_cube(scene, c, g, rng).isi_warning);
  scene.scatterers[0].delay = 20 * c.sample_period();
  CHECK(ofdma_receive_cube(scene, c, g, rng).isi_warning);
}

TEST_CASE("ofdma slices reproduce the factored expressions", "[ofdma]") {
  OfdmaConfig c;
  c.subcarriers = 32;
  c.symbols = 6;
  c.geometry = {1, 5, 0.5};
  Rng rng(19);
  const auto g = unit_grid(32, 6, rng);
  Scene scene;
  for (int q = 0; q < 3; ++q) {
    Scatterer s;
    s.delay = (2.0 + 3.3 * q) * c.sample_period();
    s.doppler = (0.1 * q - 0.12) / c.symbol_duration();
    s.arrival_angle = 0.3 * q - 0.4;
    s.gain = {0.5 + 0.1 * q, -0.2 * q};
    scene.scatterers.push_back(s);
  }
  const auto cube = ofdma_receive_cube(scene, c, g, rng);
  const auto targets = realized_targets(scene, 0);
  for (std::size_t m = 0; m < c.symbols; ++m) {
    // The factored slow-time slice omits the symbol-dependent Doppler term.
    CMatrix slice = slow_time_slice(cube, m);
    CMatrix model = CMatrix::Zero(32, 5);
    for (std::size_t q = 0; q < targets.size(); ++q) {
      std::vector<PointTarget> one{targets[q]};
      one[0].gain *= std::polar(1.0, kTwoPi * static_cast<double>(m) * c.symbol_duration() * targets[q].doppler);
      model += factored_slow_time_slice(c, g, one, m);
    }
    CHECK((slice - model).cwiseAbs().maxCoeff() < 1e-10);
    const CMatrix tslice = slow_time_slice(cube, m, SliceDomain::Time);
    CHECK((tslice - ifft_matrix(32) * model).cwiseAbs().maxCoeff() < 1e-9);
  }
  for (std::size_t n = 0; n < c.subcarriers; ++n) {
    CMatrix model = CMatrix::Zero(6, 5);
    for (const auto& t : targets) {
      std::vector<PointTarget> one{t};
      one[0].gain *= std::polar(1.0, -kTwoPi * static_cast<double>(n) * c.spacing_hz * t.delay);
      model += factored_subcarrier_slice(c, g, one, n);
    }
    CHECK((subcarrier_slice(cube, n) - model).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK_THROWS_AS(slow_time_slice(cube, 6), Error);
  CHECK_THROWS_AS(subcarrier_slice(cube, 32), Error);
}

TEST_CASE("ofdma zero-range broadside slice has identical columns", "[ofdma]") {
  OfdmaConfig c;
  c.subcarriers = 16;
  c.symbols = 2;
  Rng rng(3);
  const auto g = unit_grid(16, 2, rng);
  Scene scene;
  scene.scatterers = {Scatterer{}};
  const auto cube = ofdma_receive_cube(scene, c, g, rng);
  const CMatrix y = slow_time_slice(cube, 1, SliceDomain::Time);
  std::vector<cd> col(16);
  for (std::size_t n = 0; n < 16; ++n) col[n] = g(static_cast<Eigen::Index>(n), 1);
  const auto want = oracle::idft(col);
  for (Eigen::Index p = 0; p < y.cols(); ++p)
    for (Eigen::Index l = 0; l < 16; ++l) CHECK(std::abs(y(l, p) - want[static_cast<std::size_t>(l)]) < 1e-10);
}

TEST_CASE("ofdma static target subcarrier slice is rank one", "[ofdma]") {
  OfdmaConfig c;
  c.subcarriers = 8;
  c.symbols = 6;
  c.geometry = {1, 4, 0.5};
  Rng rng(7);
  const auto g = unit_grid(8, 6, rng);
  Scene scene;
  Scatterer s;
  s.delay = 3 * c.sample_period();
  s.arrival_angle = 0.5;
  scene.scatterers = {s};
  const auto cube = ofdma_receive_cube(scene, c, g, rng);
  Eigen::JacobiSVD<CMatrix> svd(subcarrier_slice(cube, 2));
  CHECK(svd.singularValues()(1) / svd.singularValues()(0) < 1e-12);
}
