#pragma once

#include <array>
#include <functional>
#include <vector>

#include "quadmpc/common.hpp"
#include "quadmpc/model.hpp"
#include "quadmpc/rigid_body.hpp"

namespace quadmpc {

/// Flat outputs: position with analytic derivatives up to order 4 and heading
/// with its first derivative. `position(t, k)` returns the k-th derivative.
struct FlatTrajectory {
  std::function<Vec3(double, int)> position;
  std::function<double(double, int)> heading;
};

/// Constant position and heading.
FlatTrajectory hover_trajectory(const Vec3& position, double heading = 0.0);

/// Per axis c + a_cos cos(w t) + a_sin sin(w t); heading psi0 + psi_rate t.
struct HarmonicAxis {
  double center = 0.0;
  double a_cos = 0.0;
  double a_sin = 0.0;
  double omega = 0.0;
};

FlatTrajectory harmonic_trajectory(const std::array<HarmonicAxis, 3>& axes, double psi0,
                                   double psi_rate);

struct ReferenceSample {
  double t = 0.0;
  Vec3 p_bar = Vec3::Zero();
  Vec3 v_bar = Vec3::Zero();
  Vec3 a_bar = Vec3::Zero();
  Mat3 r_bar = Mat3::Identity();
  Vec3 w_bar = Vec3::Zero();
  Vec3 w_bar_dot = Vec3::Zero();
  double t_bar = 0.0;
  double t_bar_dot = 0.0;
  Vec3 tau_bar = Vec3::Zero();
  Vec3 z_b_bar = Vec3::UnitZ();
};

/// Central-difference step for the reference body rates and their derivative.
inline constexpr double kReferenceFdStep = 1e-5;

/// Thrust vector g e3 - a_bar - D v_bar of the reference; its norm is T_bar.
Vec3 reference_thrust_vector(const FlatTrajectory& traj, double t, const QuadParams& params);

double reference_thrust(const FlatTrajectory& traj, double t, const QuadParams& params);

/// R_bar from the thrust direction and the heading frame x_C = [cos psi, sin psi, 0].
Mat3 reference_attitude(const FlatTrajectory& traj, double t, const QuadParams& params);

/// Body rates vee(R_bar' dR_bar/dt) by central difference.
Vec3 reference_rates(const FlatTrajectory& traj, double t, const QuadParams& params);

ReferenceSample sample_reference(const FlatTrajectory& traj, double t, const QuadParams& params,
                                 const ThrustEnvelope& env);

struct FeasibilityScan {
  bool feasible = true;
  double min_thrust = 0.0;
  double max_thrust = 0.0;
  std::vector<double> violation_times;
};

FeasibilityScan check_reference_feasibility(const FlatTrajectory& traj, const QuadParams& params,
                                            const ThrustEnvelope& env, double t_begin,
                                            double t_end, int grid_points);

}  // namespace quadmpc
