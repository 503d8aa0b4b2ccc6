#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "deckland/rng.hpp"
#include "deckland/sea.hpp"

using namespace deckland;

namespace {

// Oracle: literal transcription of the trochoid surface equations,
// scalarized and kept separate from the library implementation.
double oracle_elevation(const std::vector<WaveComponent>& sea, double x,
                        double y, double t) {
  double z = 0.0;
  for (const auto& w : sea) {
    z += w.amplitude *
         std::cos(w.wave_vector.x() * x + w.wave_vector.y() * y -
                  w.omega * t + w.phase);
  }
  return z;
}

Eigen::Vector2d oracle_displacement(const std::vector<WaveComponent>& sea,
                                    double x, double y, double t) {
  Eigen::Vector2d d(0, 0);
  for (const auto& w : sea) {
    const double arg = w.wave_vector.x() * x + w.wave_vector.y() * y -
                       w.omega * t + w.phase;
    const double norm = w.wave_vector.norm();
    d.x() -= w.steepness * (w.wave_vector.x() / norm) * w.amplitude * std::sin(arg);
    d.y() -= w.steepness * (w.wave_vector.y() / norm) * w.amplitude * std::sin(arg);
  }
  return d;
}

std::vector<WaveComponent> random_sea(RngStream& rng, int n) {
  std::vector<WaveComponent> sea;
  for (int i = 0; i < n; ++i) {
    sea.push_back(make_wave(rng.uniform(0.05, 0.6), rng.uniform(3.0, 9.0),
                            rng.uniform(-M_PI, M_PI), rng.uniform(0.2, 0.9),
                            rng.uniform(-M_PI, M_PI)));
  }
  return sea;
}

}  // namespace

TEST_CASE("surface matches the transcribed trochoid equations") {
  RngStream rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto sea = random_sea(rng, 1 + (trial % 4));
    const double x = rng.uniform(-100, 100), y = rng.uniform(-100, 100);
    const double t = rng.uniform(0, 600);
    const auto s = sample_sea(sea, {x, y}, t);
    CHECK(s.elevation ==
          doctest::Approx(oracle_elevation(sea, x, y, t)).epsilon(1e-12));
    const Eigen::Vector2d d = oracle_displacement(sea, x, y, t);
    CHECK((s.displacement - d).norm() < 1e-12);
  }
}

TEST_CASE("zero phase argument gives the crest with no shift") {
  const auto w = make_wave(0.4, 5.0, 0.7, 0.6, 0.0);
  const auto s = sample_sea({w}, {0, 0}, 0.0);
  CHECK(s.elevation == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(s.displacement.norm() < 1e-15);
}

TEST_CASE("elevation is bounded by the amplitude sum") {
  RngStream rng(17);
  const auto sea = random_sea(rng, 3);
  const double bound = total_amplitude(sea);
  for (int i = 0; i < 100000; ++i) {
    const auto s = sample_sea(sea, {rng.uniform(-500, 500), rng.uniform(-500, 500)},
                              rng.uniform(0, 3600));
    CHECK(std::abs(s.elevation) <= bound * (1.0 + 1e-12) + 1e-12);
  }
}

TEST_CASE("single component is periodic in its own period") {
  const auto w = make_wave(0.5, 5.0, 0.3, 0.6, 1.1);
  const double period = 2.0 * M_PI / w.omega;
  for (double t : {0.0, 1.7, 12.9, 100.0}) {
    const auto a = sample_sea({w}, {3.0, -2.0}, t);
    const auto b = sample_sea({w}, {3.0, -2.0}, t + period);
    CHECK(std::abs(a.elevation - b.elevation) < 1e-10);
  }
}

TEST_CASE("breaking waves are rejected") {
  // Period 5 s gives wavelength ~39 m; the 1:7 limit allows ~2.79 m amplitude.
  CHECK_THROWS(make_wave(3.0, 5.0, 0.0));
  CHECK_NOTHROW(make_wave(2.7, 5.0, 0.0));
  CHECK_THROWS(make_wave(-0.1, 5.0, 0.0));
}

TEST_CASE("slopes and rates agree with finite differences") {
  RngStream rng(23);
  const auto sea = random_sea(rng, 3);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Vector2d p(rng.uniform(-50, 50), rng.uniform(-50, 50));
    const double t = rng.uniform(0, 100);
    const Eigen::Vector2d vel(rng.uniform(-2, 2), rng.uniform(-2, 2));
    const auto s = sample_sea(sea, p, t, vel);

    const auto sx = sample_sea(sea, p + Eigen::Vector2d(h, 0), t);
    const auto sy = sample_sea(sea, p + Eigen::Vector2d(0, h), t);
    CHECK(s.slope.x() ==
          doctest::Approx((sx.elevation - s.elevation) / h).epsilon(1e-4));
    CHECK(s.slope.y() ==
          doctest::Approx((sy.elevation - s.elevation) / h).epsilon(1e-4));

    // Total time derivative along the moving sample point.
    const auto st = sample_sea(sea, p + vel * h, t + h);
    CHECK(s.elevation_rate ==
          doctest::Approx((st.elevation - s.elevation) / h).epsilon(1e-4));
    CHECK((s.slope_rate - (st.slope - s.slope) / h).norm() < 1e-4);
  }
}

TEST_CASE("presets stay inside their height bands") {
  RngStream rng(5);
  struct Band {
    const char* name;
    double lo, hi;
  };
  // Crest-to-trough heights observed over a long window.
  const Band bands[] = {{"slight", 0.5, 1.3}, {"moderate", 0.6, 2.8},
                        {"rough", 2.0, 4.0}};
  for (const auto& band : bands) {
    for (int seed = 0; seed < 3; ++seed) {
      auto sea = make_sea_preset(band.name);
      for (auto& w : sea) w.phase = rng.uniform(-M_PI, M_PI);
      double zmin = 1e9, zmax = -1e9;
      for (double t = 0; t < 400.0; t += 0.05) {
        const double z = sample_sea(sea, {0, 0}, t).elevation;
        zmin = std::min(zmin, z);
        zmax = std::max(zmax, z);
      }
      CAPTURE(band.name);
      CHECK(zmax - zmin >= band.lo);
      CHECK(zmax - zmin <= band.hi);
    }
  }
  CHECK(make_sea_preset("calm").empty());
  CHECK_THROWS(make_sea_preset("tsunami"));
}
