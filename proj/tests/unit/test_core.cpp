#include <doctest.h>

#include <cmath>
#include <limits>

#include "generators.hpp"
#include "nanoguide/core.hpp"

using namespace nanoguide;

TEST_CASE("lifetime and linewidth conversions") {
  CHECK(lifetime_to_linewidth(5.0) == doctest::Approx(31.830988618).epsilon(1e-10));
  CHECK(std::abs(lifetime_to_linewidth(5.0) / 30.0 - 1.0) < 0.07);
  CHECK(lifetime_to_linewidth(std::numeric_limits<double>::infinity()) == 0.0);
  CHECK(std::abs(linewidth_to_lifetime(lifetime_to_linewidth(1.0)) - 1.0) <= 2e-16);
  CHECK_THROWS_AS(lifetime_to_linewidth(0.0), ValidationError);
  CHECK_THROWS_AS(lifetime_to_linewidth(-1.0), ValidationError);
  CHECK_THROWS_AS(linewidth_to_lifetime(0.0), ValidationError);
}

TEST_CASE("ideal cross section") {
  const double one = ideal_cross_section(1.0);
  CHECK(one == doctest::Approx(0.477464829).epsilon(1e-9));
  CHECK(ideal_cross_section(2.0) == doctest::Approx(4.0 * one).epsilon(1e-15));
  CHECK(ideal_cross_section(0.785) == doctest::Approx(0.2942).epsilon(2e-4));
  CHECK_THROWS_AS(ideal_cross_section(0.0), ValidationError);
  CHECK_THROWS_AS(ideal_cross_section(-0.5), ValidationError);
}

TEST_CASE("unit round trips hold to machine precision") {
  testing::Gen gen(11);
  for (int i = 0; i < 1000; ++i) {
    const double f = gen.uniform(-1e4, 1e4);
    CHECK(units::ordinary(units::angular(f)) == doctest::Approx(f).epsilon(1e-15));
    CHECK(units::us_to_ns(units::ns_to_us(f)) == doctest::Approx(f).epsilon(1e-15));
  }
  CHECK(units::angular(1.0) == doctest::Approx(2.0 * std::numbers::pi));
}

TEST_CASE("emitter validation accepts the box and rejects everything else") {
  testing::Gen gen(12);
  for (int i = 0; i < 200; ++i) CHECK_NOTHROW(validate(gen.emitter()));

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < 300; ++i) {
    Emitter e = gen.emitter();
    const double bad_unit = gen.coin() ? gen.uniform(1.0 + 1e-9, 5.0) : gen.uniform(-5.0, -1e-9);
    switch (gen.integer(0, 6)) {
      case 0: e.beta = bad_unit; break;
      case 1: e.alpha = bad_unit; break;
      case 2: e.fwd_fraction = bad_unit; break;
      case 3: e.gamma0_mhz = gen.uniform(-50.0, 0.0); break;
      case 4: e.f0_mhz = nan; break;
      case 5: e.stark.a_ghz_per_v = std::numeric_limits<double>::infinity(); break;
      default: e.beta = nan; break;
    }
    CHECK_THROWS_AS(validate(e), ValidationError);
  }
}

TEST_CASE("validation message names the field") {
  Emitter e;
  e.alpha = 2.0;
  try {
    validate(e);
    FAIL("expected ValidationError");
  } catch (const ValidationError& err) {
    CHECK(std::string(err.what()).find("alpha") != std::string::npos);
  }
}

TEST_CASE("spectral grid") {
  const SpectralGrid g(-100.0, 100.0, 201);
  CHECK(g.size() == 201);
  CHECK(g[0] == -100.0);
  CHECK(g[200] == 100.0);
  CHECK(g[100] == doctest::Approx(0.0));
  CHECK(g.step() == doctest::Approx(1.0));
  const auto v = g.values();
  for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] > v[i - 1]);
  CHECK_THROWS_AS(SpectralGrid(0.0, 1.0, 1), ValidationError);
  CHECK_THROWS_AS(SpectralGrid(1.0, 1.0, 10), ValidationError);
  CHECK_THROWS_AS(SpectralGrid(2.0, 1.0, 10), ValidationError);
}

TEST_CASE("rabi frequency units resolve against gamma0") {
  CHECK(RabiFrequency::in_gamma0(0.9).to_mhz(30.0) == doctest::Approx(27.0));
  CHECK(RabiFrequency::in_mhz(12.0).to_mhz(30.0) == 12.0);
  CHECK(RabiFrequency::in_gamma0(1.0).to_angular(30.0) == doctest::Approx(units::angular(30.0)));
  CHECK_THROWS_AS(RabiFrequency::in_gamma0(-0.1), ValidationError);
  CHECK_THROWS_AS(RabiFrequency::in_mhz(std::numeric_limits<double>::quiet_NaN()), ValidationError);
}

TEST_CASE("engine streams are reproducible and distinct") {
  auto a = make_engine(42, 0);
  auto b = make_engine(42, 0);
  auto c = make_engine(42, 1);
  bool all_equal_c = true;
  for (int i = 0; i < 64; ++i) {
    const auto x = a();
    CHECK(x == b());
    all_equal_c = all_equal_c && x == c();
  }
  CHECK_FALSE(all_equal_c);
  auto d = make_engine(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform01(d);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
