#include "deckland/sea.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace deckland {

WaveComponent make_wave(double amplitude, double period_s, double direction_rad,
                        double steepness, double phase, double gravity) {
  if (amplitude < 0.0 || period_s <= 0.0) {
    throw std::invalid_argument("wave needs amplitude >= 0 and period > 0");
  }
  WaveComponent w;
  w.amplitude = amplitude;
  w.omega = 2.0 * M_PI / period_s;
  w.phase = phase;
  const double k = w.omega * w.omega / gravity;
  w.wave_vector =
      k * Eigen::Vector2d(std::cos(direction_rad), std::sin(direction_rad));
  w.steepness = steepness;
  // Height-to-wavelength ratio 2A / lambda beyond 1:7 means a breaking wave.
  if (amplitude * k > M_PI / 7.0 + 1e-12) {
    throw std::invalid_argument("wave of height " + std::to_string(2 * amplitude) +
                                " m breaks at wavelength " +
                                std::to_string(w.wavelength()) + " m");
  }
  return w;
}

SeaSurfaceSample sample_sea(const std::vector<WaveComponent>& sea,
                            const Eigen::Vector2d& x0, double t,
                            const Eigen::Vector2d& point_velocity) {
  SeaSurfaceSample s;
  for (const WaveComponent& w : sea) {
    const double arg = w.wave_vector.dot(x0) - w.omega * t + w.phase;
    const double c = std::cos(arg), sn = std::sin(arg);
    // Rate of the phase as seen from the (possibly moving) sample point.
    const double darg = w.wave_vector.dot(point_velocity) - w.omega;
    s.elevation += w.amplitude * c;
    s.elevation_rate += -w.amplitude * sn * darg;
    s.displacement -=
        w.steepness * w.wave_vector.normalized() * w.amplitude * sn;
    s.slope += -w.amplitude * sn * w.wave_vector;
    s.slope_rate += -w.amplitude * c * darg * w.wave_vector;
  }
  return s;
}

double total_amplitude(const std::vector<WaveComponent>& sea) {
  double sum = 0.0;
  for (const WaveComponent& w : sea) sum += w.amplitude;
  return sum;
}

std::vector<WaveComponent> make_sea_preset(std::string_view name) {
  // Three-component seas sharing direction spread and periods; amplitude
  // scale picks the sea-state band. The moderate set reproduces observed
  // crest-to-trough heights of roughly 0.6 m to 2.8 m.
  const double periods[3] = {5.0, 3.6, 6.8};
  const double dirs[3] = {0.0, 25.0 * M_PI / 180.0, -20.0 * M_PI / 180.0};
  const double base[3] = {0.5, 0.35, 0.25};

  double scale = 0.0;
  if (name == "calm") {
    return {};
  } else if (name == "slight") {
    scale = 0.45;
  } else if (name == "moderate") {
    scale = 1.0;
  } else if (name == "rough") {
    scale = 1.45;
  } else {
    throw std::invalid_argument("unknown sea preset: " + std::string(name));
  }
  std::vector<WaveComponent> sea;
  for (int i = 0; i < 3; ++i) {
    sea.push_back(make_wave(scale * base[i], periods[i], dirs[i]));
  }
  return sea;
}

}  // namespace deckland
