#include "loopkit/servo.hpp"

#include <cmath>

#include "loopkit/errors.hpp"

namespace loopkit {

namespace {

constexpr double kZero = 1e-12;

double snap(double v) { return std::abs(v) < kZero ? 0.0 : v; }
double sign_pos0(double v) { return v < 0.0 ? -1.0 : 1.0; }

}  // namespace

void Gains::validate() const {
  if (!(translation >= 0.0) || !(rotation >= 0.0))
    throw InvalidArgument("servo gains must be non-negative");
  if (!(dt > 0.0)) throw InvalidArgument("servo dt must be positive");
}

Vec2 target_in_image(const ServoState& s) {
  return rotate(s.target.position - s.camera.position, -s.camera.heading) + s.image_center;
}

double relative_theta(const ServoState& s) { return wrap_angle(s.target.theta - s.camera.heading); }

Vec2 translational_error(const ServoState& s) { return target_in_image(s) - s.image_center; }

double rotational_error(double theta) {
  const double sn = snap(std::sin(theta));
  const double cs = snap(std::cos(theta));
  return -sign_pos0(sn) * (cs - 1.0);
}

double rotational_error_sym(double theta) {
  const double sn = snap(std::sin(theta));
  const double cs = snap(std::cos(theta));
  return sign_pos0(sn * cs) * std::abs(sn);
}

ServoState step(const ServoState& state, const Gains& gains, bool symmetric) {
  const Vec2 e_t = translational_error(state);
  const double theta = relative_theta(state);
  const double e_theta = symmetric ? rotational_error_sym(theta) : rotational_error(theta);

  const Vec2 v = gains.translation * e_t;
  const double omega = gains.rotation * e_theta;

  ServoState next = state;
  next.camera.position = state.camera.position + gains.dt * rotate(v, state.camera.heading);
  next.camera.heading = wrap_angle(state.camera.heading + gains.dt * omega);
  return next;
}

double equilibrium_offset(double theta, bool symmetric) {
  const double to_zero = angle_distance(theta, 0.0);
  if (!symmetric) return to_zero;
  return std::min(to_zero, angle_distance(theta, std::numbers::pi));
}

Trajectory simulate(const ServoState& initial, const Gains& gains, bool symmetric,
                    std::size_t max_steps, const ServoTolerance& tol) {
  gains.validate();
  Trajectory traj;
  ServoState s = initial;
  for (std::size_t i = 0;; ++i) {
    const double theta = relative_theta(s);
    TrajectorySample sample{i, translational_error(s), theta,
                            symmetric ? rotational_error_sym(theta) : rotational_error(theta)};
    traj.samples.push_back(sample);
    if (sample.error.norm() < tol.translation && equilibrium_offset(theta, symmetric) < tol.rotation) {
      traj.converged = true;
      traj.steps = i;
      break;
    }
    if (i == max_steps) {
      traj.steps = i;
      break;
    }
    s = step(s, gains, symmetric);
  }
  traj.final_state = s;
  return traj;
}

}  // namespace loopkit
