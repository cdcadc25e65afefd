#pragma once

#include <algorithm>
#include <cmath>

namespace dpw {

// C^2 step: 0 for u<=0, 1 for u>=1, quintic in between (first and second
// derivatives vanish at both ends).
inline double smoothstep(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

inline double smoothstep_d1(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return u * u * (30.0 + u * (-60.0 + 30.0 * u));
}

inline double smoothstep_d2(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return u * (60.0 + u * (-180.0 + 120.0 * u));
}

// Plateau window: 1 on [0, r1], C^2 decay to 0 on [r1, r2], 0 beyond.
inline double plateau(double r, double r1, double r2) {
  if (r <= r1) return 1.0;
  if (r >= r2) return 0.0;
  return 1.0 - smoothstep((r - r1) / (r2 - r1));
}

inline double plateau_d1(double r, double r1, double r2) {
  if (r <= r1 || r >= r2) return 0.0;
  return -smoothstep_d1((r - r1) / (r2 - r1)) / (r2 - r1);
}

inline double plateau_d2(double r, double r1, double r2) {
  if (r <= r1 || r >= r2) return 0.0;
  const double w = r2 - r1;
  return -smoothstep_d2((r - r1) / w) / (w * w);
}

// Annulus window: 0 outside [a0, b1], 1 on [a1, b0], C^2 ramps between.
inline double annulus(double r, double a0, double a1, double b0, double b1) {
  return smoothstep((r - a0) / std::max(a1 - a0, 1e-300)) *
         (1.0 - smoothstep((r - b0) / std::max(b1 - b0, 1e-300)));
}

}  // namespace dpw
