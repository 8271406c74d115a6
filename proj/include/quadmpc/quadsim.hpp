#pragma once

#include <array>

#include "quadmpc/common.hpp"
#include "quadmpc/flatness.hpp"
#include "quadmpc/rigid_body.hpp"

namespace quadmpc {

struct InnerLoopGains {
  Mat3 k_w = 30.0 * QuadParams{}.inertia;
  Mat3 k_r = 70.0 * QuadParams{}.inertia;
  Vec3 k_vec = Vec3(4.5, 5.0, 5.5);

  void validate() const;
};

/// Outer-loop state of one axis: [p_err, v_err, a_d, eta].
struct OuterAxisState {
  double p_err = 0.0;
  double v_err = 0.0;
  double a_d = 0.0;
  double eta = 0.0;

  Vec4 as_vector() const { return Vec4(p_err, v_err, a_d, eta); }
};

struct StateDerivative {
  Vec3 p_dot;
  Vec3 v_dot;
  Mat3 r_dot;
  Vec3 w_dot;
};

/// Counts thrust commands that had to be clamped into [0, T_max].
struct ThrustClampCounter {
  long events = 0;
};

/// Right-hand side of the rigid-body model:
///   p' = v,  v' = g e3 - T z_B - D v,  R' = R S(w),
///   J w' = S(J w) w - tau_g - A R' v - C w + tau.
StateDerivative dynamics_deriv(const QuadState& state, double thrust, const Vec3& tau,
                               const QuadParams& params, ThrustClampCounter* clamps = nullptr);

/// Classical RK4 with inputs held over the step; the rotation is projected
/// back onto SO(3) afterwards.
QuadState rk4_step(const QuadState& state, double thrust, const Vec3& tau, double dt,
                   const QuadParams& params, ThrustClampCounter* clamps = nullptr);

struct ErrorCoords {
  Vec3 p_tilde;
  Vec3 v_tilde;
  Mat3 r_tilde;
  Vec3 w_tilde;
};

ErrorCoords error_coords(const QuadState& state, const ReferenceSample& ref);

/// T = ||a_d + T_bar z_bar||.
double thrust_command(const Vec3& a_d, const ReferenceSample& ref);

/// Desired attitude relative to the reference frame.
Mat3 desired_attitude(const Vec3& a_d, const Mat3& r_bar, double t_bar);
Mat3 desired_attitude(const Vec3& a_d, const ReferenceSample& ref);

/// a_d(t_k + s) while the input u is held:
/// alpha(s) a_d + beta(s) eta + (1 - alpha(s) - beta(s)) u.
double ad_intersample(const OuterAxisState& x_axis, double u, double s, double gamma);
double eta_intersample(const OuterAxisState& x_axis, double u, double s, double gamma);

/// Central-difference step used for the desired rates.
inline constexpr double kDesiredRateFdStep = 1e-5;

struct DesiredRates {
  Mat3 r_d;
  Vec3 w_d;
  Vec3 w_d_dot;
};

/// R_d, w_d and dw_d/dt at time t within the sampling interval that started
/// at t_k, using the closed-form inter-sample a_d with held input u.
DesiredRates desired_rates(const std::array<OuterAxisState, 3>& x_k, const Vec3& u, double t_k,
                           double t, const FlatTrajectory& traj, const QuadParams& params,
                           double gamma);

struct AttitudeError {
  Mat3 r_e;
  Vec3 w_e;
};

AttitudeError attitude_error(const QuadState& state, const ReferenceSample& ref, const Mat3& r_d,
                             const Vec3& w_d);

/// Attitude tracking torque; makes the error dynamics
///   J w_e' = -K_w w_e + K_R sum k_i (e_i x R_e' e_i).
Vec3 inner_loop_torque(const QuadState& state, const ReferenceSample& ref, const Mat3& r_d,
                       const Vec3& w_d, const Vec3& w_d_dot, const InnerLoopGains& gains,
                       const QuadParams& params);

}  // namespace quadmpc
