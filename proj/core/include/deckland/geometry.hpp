#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace deckland {

// World frame is ENU (x east, y north, z up). Attitude is stored as
// (roll, pitch, yaw). Two Euler compositions appear in the vehicle model:
// the thrust direction uses the intrinsic x-y-z composition Rx*Ry*Rz,
// while the angular kinematics and the deck pose use the intrinsic
// z-y-x composition Rz*Ry*Rx. Both are exposed so call sites can state
// which one they mean.

inline Eigen::Matrix3d rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  r << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return r;
}

inline Eigen::Matrix3d rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  r << c, 0, s,
       0, 1, 0,
      -s, 0, c;
  return r;
}

inline Eigen::Matrix3d rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  r << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return r;
}

// Body-to-world rotation, intrinsic x-y-z order (used for the rotor thrust
// direction; note it leaves the world z column independent of yaw).
inline Eigen::Matrix3d rot_body_to_world_xyz(double roll, double pitch, double yaw) {
  return rot_x(roll) * rot_y(pitch) * rot_z(yaw);
}

// Body-to-world rotation, intrinsic z-y-x order (deck pose, attitude checks).
inline Eigen::Matrix3d rot_body_to_world_zyx(double roll, double pitch, double yaw) {
  return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

// Maps (roll, pitch, yaw) rates to body angular velocity for the z-y-x
// composition. Identity at level attitude; determinant cos(pitch), so it
// loses rank as |pitch| approaches pi/2.
inline Eigen::Matrix3d euler_rate_to_body(double roll, double pitch) {
  const double cf = std::cos(roll), sf = std::sin(roll);
  const double ct = std::cos(pitch), st = std::sin(pitch);
  Eigen::Matrix3d t;
  t << 1, 0, -st,
       0, cf, sf * ct,
       0, -sf, cf * ct;
  return t;
}

// Wraps an angle to (-pi, pi].
inline double wrap_pi(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

}  // namespace deckland
