#pragma once

#include <Eigen/Dense>
#include <string_view>
#include <vector>

namespace deckland {

// One trochoidal wave component. The wave vector points along the travel
// direction with magnitude 2*pi / wavelength; elevation at a surface label
// point x0 is amplitude * cos(wave_vector . x0 - omega t + phase).
struct WaveComponent {
  double amplitude = 0.0;               // m
  double omega = 0.0;                   // rad/s
  double phase = 0.0;                   // rad
  Eigen::Vector2d wave_vector{0.0, 0.0};  // rad/m
  double steepness = 0.0;               // q, horizontal displacement factor

  double wavelength() const { return 2.0 * M_PI / wave_vector.norm(); }
};

// Builds a deep-water component (|v| = omega^2 / g) and rejects parameters
// past the 1:7 height-to-wavelength breaking limit.
WaveComponent make_wave(double amplitude, double period_s, double direction_rad,
                        double steepness = 0.6, double phase = 0.0,
                        double gravity = 9.81);

// Surface quantities at label point x0. When the sample point itself moves
// (a hull under way), pass its horizontal velocity so the time derivatives
// include the advection of the wave phase.
struct SeaSurfaceSample {
  double elevation = 0.0;        // m
  double elevation_rate = 0.0;   // m/s
  Eigen::Vector2d displacement{0.0, 0.0};  // horizontal particle shift, m
  Eigen::Vector2d slope{0.0, 0.0};         // d elevation / d x0
  Eigen::Vector2d slope_rate{0.0, 0.0};    // 1/s
};

SeaSurfaceSample sample_sea(const std::vector<WaveComponent>& sea,
                            const Eigen::Vector2d& x0, double t,
                            const Eigen::Vector2d& point_velocity =
                                Eigen::Vector2d::Zero());

// Hard bound on |elevation| for any phase alignment.
double total_amplitude(const std::vector<WaveComponent>& sea);

// Named presets keyed to sea-state bands ("calm", "slight", "moderate",
// "rough"). Phases are zero; callers randomize them per episode.
std::vector<WaveComponent> make_sea_preset(std::string_view name);

}  // namespace deckland
