#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

#include "tfqkd/noise_spectra.hpp"
#include "tfqkd/scenario.hpp"

using namespace tfqkd;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
std::vector<double> log_grid(double lo, double hi, int per_decade) {
  std::vector<double> f;
  const int n = static_cast<int>(std::round(std::log10(hi / lo) * per_decade));
  for (int i = 0; i <= n; ++i) f.push_back(lo * std::pow(10.0, static_cast<double>(i) / per_decade));
  return f;
}
}  // namespace

TEST_CASE("free laser PSD matches hand arithmetic", "[noise]") {
  const LaserFreeParams p;
  // 3e6 + 300 (2e6/(2e6+1))^2
  CHECK_THAT(psd_laser_free(1.0, p), WithinRel(3.0e6 + 300.0 * std::pow(2e6 / (2e6 + 1.0), 2), 1e-14));
  CHECK_THAT(psd_laser_free(1.0, p), WithinRel(3.0003e6, 1e-6));
  CHECK_THAT(psd_laser_free(2e6, p), WithinRel(3.75e-13 + 1.875e-11, 1e-12));
  CHECK(psd_laser_free(1e12, p) < 1e-20);
  CHECK_THROWS_AS(psd_laser_free(0.0, p), std::domain_error);
  CHECK_THROWS_AS(psd_laser_free(-1.0, p), std::domain_error);
}

TEST_CASE("free laser PSD decays monotonically above the knee", "[noise]") {
  const LaserFreeParams p;
  double prev = psd_laser_free(2e6, p);
  for (double f : log_grid(2e6, 1e9, 20)) {
    const double s = psd_laser_free(f, p);
    CHECK(s <= prev);
    prev = s;
  }
}

TEST_CASE("cavity PSD", "[noise]") {
  const CavityParams p;
  CHECK_THAT(psd_cavity(1.0, p), WithinRel(0.502, 1e-14));
  CHECK_THAT(psd_cavity(10.0, p), WithinRel(7e-5, 1e-12));
  CHECK(psd_cavity(123.0, CavityParams{0, 0, 0}) == 0.0);
  CHECK_THROWS_AS(psd_cavity(0.0, p), std::domain_error);
}

TEST_CASE("loop gain agrees with magnitude/phase decomposition", "[noise]") {
  const LoopParams p;
  for (double f : {1.0, 1e3, 3e5, 3e6, 1e8}) {
    const double w = 2 * std::numbers::pi * f;
    const double mag = p.g0() / (w * w) *
                       std::sqrt((f * f + std::pow(p.bandwidth * p.gamma, 2)) /
                                 (f * f + std::pow(p.bandwidth * p.delta, 2)));
    const double arg = std::atan2(f, p.bandwidth * p.gamma) - std::atan2(f, p.bandwidth * p.delta);
    const auto g = loop_gain(f, p);
    CHECK_THAT(std::abs(g), WithinRel(mag, 1e-12));
    CHECK_THAT(std::arg(g), WithinAbs(arg, 1e-12));
  }
  const double s = loop_suppression(p.bandwidth, p);
  CHECK(s > 0.0);
  CHECK(s < 1.0);
  // high-frequency limit: zero/pole ratio -> 1
  const double f = 1e10;
  CHECK_THAT(std::abs(loop_gain(f, p)), WithinRel(p.g0() / std::pow(2 * std::numbers::pi * f, 2), 1e-4));
  // second-order integrator
  CHECK(std::abs(loop_gain(1e-3, p)) > 1e15);
  CHECK_THROWS_AS(loop_gain(0.0, p), std::domain_error);
}

TEST_CASE("derived G0 from bandwidth, gamma, delta", "[noise]") {
  const LoopParams p;
  CHECK_THAT(p.g0(), WithinRel(std::pow(2 * std::numbers::pi * 3e5, 2) * 11.0 / 1.1, 1e-14));
  CHECK_THROWS_AS((LoopParams{3e5, 1.2, 10}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((LoopParams{3e5, 0.1, 0.9}.validate()), std::invalid_argument);
}

TEST_CASE("stabilized laser PSD", "[noise]") {
  const LaserSpec L;
  SECTION("brute-force complex evaluation at 1 kHz") {
    const double f = 1e3;
    const std::complex<double> i(0, 1);
    const double b = 3e5;
    const double g0 = std::pow(2 * std::numbers::pi * b, 2) * 11.0 / 1.1;
    const std::complex<double> G = g0 / std::pow(2 * std::numbers::pi * f, 2) * (i * f + b * 0.1) / (i * f + b * 10.0);
    const double free = 3e6 / 1e9 + 300.0 / 1e6 * std::pow(2e6 / (2e6 + 1e3), 2);
    const double expect = 0.5 / 1e12 + 2e-3 / 1e6 + free / std::norm(1.0 + G);
    CHECK_THAT(psd_laser_stabilized(f, L.free, L.cavity, L.loop), WithinRel(expect, 1e-12));
  }
  SECTION("high loop gain: cavity dominates") {
    const double f = 10.0;
    CHECK_THAT(psd_laser_stabilized(f, L.free, L.cavity, L.loop), WithinRel(psd_cavity(f, L.cavity), 1e-7));
  }
  SECTION("far above the loop: free noise returns") {
    const double f = 1e8;
    CHECK_THAT(psd_laser_stabilized(f, L.free, L.cavity, L.loop),
               WithinRel(psd_cavity(f, L.cavity) + psd_laser_free(f, L.free), 1e-3));
  }
  SECTION("never below the cavity") {
    for (double f : log_grid(1e-6, 1e9, 10))
      CHECK(psd_laser_stabilized(f, L.free, L.cavity, L.loop) >= psd_cavity(f, L.cavity));
  }
}

TEST_CASE("fiber PSD", "[noise]") {
  const FiberParams p;
  CHECK_THAT(psd_fiber(1.0, 100.0, p, false), WithinRel(4400.0 * std::pow(100.0 / 101.0, 2), 1e-14));
  CHECK_THAT(psd_fiber(1.0, 100.0, p, false), WithinRel(4313.3, 1e-5));
  CHECK(psd_fiber(5.0, 0.0, p, false) == 0.0);
  CHECK_THAT(p.suppression(), WithinRel(5.9454e-7, 1e-4));
  CHECK_THAT(psd_fiber(1e3, 0.0, p, true), WithinRel(psd_detection_floor(1e3, p), 1e-15));
  CHECK_THROWS_AS(psd_fiber(1.0, -1.0, p, false), std::domain_error);
  CHECK_THROWS_AS(psd_fiber(0.0, 1.0, p, true), std::domain_error);

  SECTION("exactly linear in length") {
    for (double f : {0.1, 1.0, 1e3, 1e6}) {
      CHECK_THAT(psd_fiber(f, 3.0 * 57.0, p, false), WithinRel(3.0 * psd_fiber(f, 57.0, p, false), 1e-14));
      CHECK_THAT(psd_fiber_propagation(f, 3.0 * 57.0, p, true),
                 WithinRel(3.0 * psd_fiber_propagation(f, 57.0, p, true), 1e-14));
    }
  }
}

TEST_CASE("interference spectrum composition", "[noise]") {
  const LaserSpec L;
  const FiberParams F;
  TopologyConfig t;
  t.l_a_km = 114;

  SECTION("common laser, zero mismatch: fiber terms only") {
    t.l_b_km = 114;
    for (double f : {1.0, 1e3, 1e5}) {
      const double fib = 4.0 * 2.0 * psd_fiber(f, 114, F, false);
      CHECK_THAT(psd_interference(f, t, L, F), WithinRel(fib, 1e-14));
    }
  }
  SECTION("common laser, small mismatch converges to fiber-only") {
    t.l_b_km = 114 - 1e-9;
    const double f = 1e3;
    CHECK_THAT(psd_interference(f, t, L, F), WithinRel(8.0 * psd_fiber(f, 114, F, false), 1e-9));
  }
  SECTION("laser term vanishes at multiples of c/(2 n dL)") {
    t.l_b_km = 114 - 2.5;
    const double f0 = kSpeedOfLight / (2 * 1.45 * 2500.0);
    auto spec = interference_spectrum(t, L, F);
    const auto& laser = spec.terms().front();
    REQUIRE(laser.label == "laser");
    CHECK_THAT(laser.zero_spacing_hz, WithinRel(f0, 1e-14));
    for (int k = 1; k <= 5; ++k) CHECK(laser.value(k * f0) < 1e-20 * psd_laser_free(k * f0, L.free));
    // bounded by 4 S_l
    for (double f : log_grid(1.0, 1e7, 50)) CHECK(laser.value(f) <= 4.0 * psd_laser_free(f, L.free) * (1 + 1e-15));
  }
  SECTION("literal round-trip composition when the floor shares the round-trip factor") {
    t.l_b_km = 113.0;
    t.fiber_stabilized = true;
    t.floor_factor = t.round_trip_factor;
    const double dl = 1000.0;
    for (double f : {0.5, 10.0, 1e3, 2e5}) {
      const double s = std::sin(2 * std::numbers::pi * f * 1.45 * dl / kSpeedOfLight);
      const double expect = 4 * s * s * psd_laser_free(f, L.free) + 4 * (psd_fiber(f, 114, F, true) + psd_fiber(f, 113, F, true));
      CHECK_THAT(psd_interference(f, t, L, F), WithinRel(expect, 1e-12));
    }
  }
  SECTION("default: detection floor once per stabilized arm") {
    t.l_b_km = 113.0;
    t.fiber_stabilized = true;
    const double f = 1e4;
    const double s = std::sin(2 * std::numbers::pi * f * 1.45 * 1000.0 / kSpeedOfLight);
    const double expect = 4 * s * s * psd_laser_free(f, L.free) +
                          4 * (psd_fiber_propagation(f, 114, F, true) + psd_fiber_propagation(f, 113, F, true)) +
                          2 * psd_detection_floor(f, F);
    CHECK_THAT(psd_interference(f, t, L, F), WithinRel(expect, 1e-12));
  }
  SECTION("independent lasers with identical parameters") {
    t.kind = TopologyKind::IndependentLasers;
    t.l_b_km = 114;
    for (bool lstab : {false, true})
      for (bool fstab : {false, true}) {
        t.laser_stabilized = lstab;
        t.fiber_stabilized = fstab;
        for (double f : {0.3, 40.0, 7e4}) {
          const double expect = 2 * psd_laser(f, L, lstab) + 2 * psd_fiber(f, 114, F, fstab);
          CHECK_THAT(psd_interference(f, t, L, F), WithinRel(expect, 1e-12));
        }
      }
  }
  CHECK_THROWS_AS(psd_interference(0.0, t, L, F), std::domain_error);
}

TEST_CASE("every scenario spectrum is non-negative and finite on [1e-6, 1e9] Hz", "[noise]") {
  for (const auto& s : builtin_scenarios()) {
    const auto spec = interference_spectrum(s.topology, LaserSpec{}, FiberParams{});
    for (double f : log_grid(1e-6, 1e9, 8)) {
      const double v = spec(f);
      CHECK(v >= 0.0);
      CHECK(std::isfinite(v));
    }
  }
}

TEST_CASE("topology validation", "[noise]") {
  TopologyConfig t;
  t.l_a_km = 10;
  t.l_b_km = 11;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t.l_b_km = -1;
  t.l_a_km = 0;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  NoiseSpectrum s;
  CHECK_THROWS_AS(s.add("x", -1.0, [](double) { return 1.0; }), std::invalid_argument);
}
