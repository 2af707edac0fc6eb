#pragma once

// Proportional visual servoing of a camera above a planar scene: move until a
// target object sits at the image center with its x axis along the image x
// axis (or anti-parallel to it, for the symmetric law).

#include <cstddef>
#include <vector>

#include "loopkit/geometry.hpp"

namespace loopkit {

struct CameraPose {
  Vec2 position;        // world plane, px
  double heading = 0.0; // radians
};

struct TargetPose {
  Vec2 position;        // world plane, px
  double theta = 0.0;   // radians
};

struct ServoState {
  CameraPose camera;
  TargetPose target;
  Vec2 image_center{320.0, 240.0};
};

struct Gains {
  double translation = 1.0;  // 1/s
  double rotation = 1.0;     // 1/s
  double dt = 0.05;          // s

  void validate() const;
};

/// Target position in the current image.
Vec2 target_in_image(const ServoState& state);
/// Target angle relative to the camera, in [0, 2*pi).
double relative_theta(const ServoState& state);

/// {x - c_x, y - c_y} of the target in the image.
Vec2 translational_error(const ServoState& state);

/// -sign(sin t) * (cos t - 1) with sign(0) = 1. Sines and cosines below
/// 1e-12 in magnitude count as zero, so multiples of pi/2 hit the
/// convention exactly.
double rotational_error(double theta);

/// sign(tan t) * |sin t|, with sign(tan t) taken as sign(sin t * cos t) and
/// the same zero convention as rotational_error. Zeros at 0 and pi.
double rotational_error_sym(double theta);

/// One explicit Euler step of the proportional law. The camera translates by
/// K_t * e_t * dt along its own axes and turns by K_theta * e_theta * dt, so
/// both image-space errors shrink.
ServoState step(const ServoState& state, const Gains& gains, bool symmetric);

struct TrajectorySample {
  std::size_t step = 0;
  Vec2 error;            // e_t
  double theta = 0.0;    // relative angle, [0, 2*pi)
  double e_theta = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  ServoState final_state;
  bool converged = false;
  std::size_t steps = 0;
};

struct ServoTolerance {
  double translation = 0.5;                   // px
  double rotation = 0.5 * std::numbers::pi / 180.0;  // rad
};

/// Distance from `theta` to the closest equilibrium: {0} for the plain law,
/// {0, pi} for the symmetric one.
double equilibrium_offset(double theta, bool symmetric);

/// Steps until both errors are within tolerance or `max_steps` is reached.
/// Sample 0 is the initial state.
Trajectory simulate(const ServoState& initial, const Gains& gains, bool symmetric,
                    std::size_t max_steps, const ServoTolerance& tol = {});

}  // namespace loopkit
