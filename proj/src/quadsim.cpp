#include "quadmpc/quadsim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace quadmpc {

void QuadParams::validate() const {
  if (!(g > 0.0)) throw Error(ErrorKind::kInvalidParameter, "g must be positive");
  if (!inertia.isApprox(inertia.transpose(), 1e-12)) {
    throw Error(ErrorKind::kInvalidParameter, "inertia must be symmetric");
  }
  if (Eigen::LLT<Mat3>(inertia).info() != Eigen::Success) {
    throw Error(ErrorKind::kInvalidParameter, "inertia must be positive definite");
  }
  if (!(drag.minCoeff() > 0.0)) throw Error(ErrorKind::kInvalidParameter, "drag must be positive");
  if (!(t_max > g)) throw Error(ErrorKind::kInvalidParameter, "T_max must exceed g");
}

Mat3 project_to_so3(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

double so3_defect(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

Mat3 rot_x(double angle) { return Eigen::AngleAxisd(angle, Vec3::UnitX()).toRotationMatrix(); }
Mat3 rot_y(double angle) { return Eigen::AngleAxisd(angle, Vec3::UnitY()).toRotationMatrix(); }
Mat3 rot_z(double angle) { return Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix(); }

void InnerLoopGains::validate() const {
  auto spd = [](const Mat3& m) {
    return m.isApprox(m.transpose(), 1e-12) && Eigen::LLT<Mat3>(m).info() == Eigen::Success;
  };
  if (!spd(k_w) || !spd(k_r) || !(k_vec.minCoeff() > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "inner-loop gains must be positive definite");
  }
}

StateDerivative dynamics_deriv(const QuadState& state, double thrust, const Vec3& tau,
                               const QuadParams& params, ThrustClampCounter* clamps) {
  if (thrust < 0.0 || thrust > params.t_max) {
    thrust = std::clamp(thrust, 0.0, params.t_max);
    if (clamps) ++clamps->events;
  }
  StateDerivative d;
  d.p_dot = state.v;
  d.v_dot = params.g * Vec3::UnitZ() - thrust * state.r.col(2) - params.drag.cwiseProduct(state.v);
  d.r_dot = state.r * skew(state.w);
  const Vec3 jw = params.inertia * state.w;
  const Vec3 rhs = jw.cross(state.w) - params.tau_g - params.a_mat * state.r.transpose() * state.v -
                   params.c_mat * state.w + tau;
  d.w_dot = params.inertia.ldlt().solve(rhs);
  return d;
}

namespace {

QuadState advance(const QuadState& s, const StateDerivative& d, double dt) {
  QuadState out;
  out.p = s.p + dt * d.p_dot;
  out.v = s.v + dt * d.v_dot;
  out.r = s.r + dt * d.r_dot;
  out.w = s.w + dt * d.w_dot;
  return out;
}

}  // namespace

QuadState rk4_step(const QuadState& state, double thrust, const Vec3& tau, double dt,
                   const QuadParams& params, ThrustClampCounter* clamps) {
  if (thrust < 0.0 || thrust > params.t_max) {
    thrust = std::clamp(thrust, 0.0, params.t_max);
    if (clamps) ++clamps->events;
  }
  const StateDerivative k1 = dynamics_deriv(state, thrust, tau, params);
  const StateDerivative k2 = dynamics_deriv(advance(state, k1, 0.5 * dt), thrust, tau, params);
  const StateDerivative k3 = dynamics_deriv(advance(state, k2, 0.5 * dt), thrust, tau, params);
  const StateDerivative k4 = dynamics_deriv(advance(state, k3, dt), thrust, tau, params);
  QuadState out;
  const double c = dt / 6.0;
  out.p = state.p + c * (k1.p_dot + 2.0 * k2.p_dot + 2.0 * k3.p_dot + k4.p_dot);
  out.v = state.v + c * (k1.v_dot + 2.0 * k2.v_dot + 2.0 * k3.v_dot + k4.v_dot);
  out.r = project_to_so3(state.r + c * (k1.r_dot + 2.0 * k2.r_dot + 2.0 * k3.r_dot + k4.r_dot));
  out.w = state.w + c * (k1.w_dot + 2.0 * k2.w_dot + 2.0 * k3.w_dot + k4.w_dot);
  return out;
}

ErrorCoords error_coords(const QuadState& state, const ReferenceSample& ref) {
  ErrorCoords e;
  e.p_tilde = ref.p_bar - state.p;
  e.v_tilde = ref.v_bar - state.v;
  e.r_tilde = ref.r_bar.transpose() * state.r;
  e.w_tilde = state.w - e.r_tilde.transpose() * ref.w_bar;
  return e;
}

double thrust_command(const Vec3& a_d, const ReferenceSample& ref) {
  const double thrust = (a_d + ref.t_bar * ref.z_b_bar).norm();
  if (!(thrust > 0.0)) {
    throw Error(ErrorKind::kDegenerateThrust, "commanded thrust vector vanishes");
  }
  return thrust;
}

Mat3 desired_attitude(const Vec3& a_d, const Mat3& r_bar, double t_bar) {
  Vec3 z = r_bar.transpose() * a_d + t_bar * Vec3::UnitZ();
  const double nz = z.norm();
  if (!(nz > 0.0)) throw Error(ErrorKind::kAttitudeSingularity, "desired thrust axis vanishes");
  z /= nz;
  const double s2 = z(1) * z(1) + z(2) * z(2);
  if (!(s2 > 1e-12)) {
    throw Error(ErrorKind::kAttitudeSingularity, "desired thrust axis aligned with e1");
  }
  const double s = std::sqrt(s2);
  Mat3 r_d;
  r_d.col(0) = Vec3(s, -z(0) * z(1) / s, -z(0) * z(2) / s);
  r_d.col(1) = Vec3(0.0, z(2) / s, -z(1) / s);
  r_d.col(2) = z;
  return r_d;
}

Mat3 desired_attitude(const Vec3& a_d, const ReferenceSample& ref) {
  return desired_attitude(a_d, ref.r_bar, ref.t_bar);
}

namespace {

double ad_closed_form(const OuterAxisState& x, double u, double s, double gamma) {
  const double al = std::exp(-s / gamma);
  const double be = (s / gamma) * al;
  return al * x.a_d + be * x.eta + (1.0 - al - be) * u;
}

}  // namespace

double ad_intersample(const OuterAxisState& x_axis, double u, double s, double gamma) {
  if (!(s >= 0.0)) throw Error(ErrorKind::kInvalidParameter, "elapsed time must be >= 0");
  return ad_closed_form(x_axis, u, s, gamma);
}

double eta_intersample(const OuterAxisState& x_axis, double u, double s, double gamma) {
  if (!(s >= 0.0)) throw Error(ErrorKind::kInvalidParameter, "elapsed time must be >= 0");
  const double al = std::exp(-s / gamma);
  return al * x_axis.eta + (1.0 - al) * u;
}

DesiredRates desired_rates(const std::array<OuterAxisState, 3>& x_k, const Vec3& u, double t_k,
                           double t, const FlatTrajectory& traj, const QuadParams& params,
                           double gamma) {
  const double eps = kDesiredRateFdStep;
  // The held-input closed form is analytic in s, so the stencil may reach
  // slightly before t_k without switching intervals.
  auto r_d_at = [&](double tau) {
    Vec3 a_d;
    for (int i = 0; i < 3; ++i) a_d(i) = ad_closed_form(x_k[i], u(i), tau - t_k, gamma);
    return desired_attitude(a_d, reference_attitude(traj, tau, params),
                            reference_thrust(traj, tau, params));
  };
  std::array<Mat3, 5> r;
  for (int j = 0; j < 5; ++j) r[j] = r_d_at(t + (j - 2) * eps);

  auto omega = [&](int c) {
    const Mat3 r_dot = (r[c + 1] - r[c - 1]) / (2.0 * eps);
    const Vec3 x = r[c].col(0);
    const Vec3 y = r[c].col(1);
    return Vec3(-y.dot(r_dot.col(2)), x.dot(r_dot.col(2)), -x.dot(r_dot.col(1)));
  };
  DesiredRates out;
  out.r_d = r[2];
  out.w_d = omega(2);
  out.w_d_dot = (omega(3) - omega(1)) / (2.0 * eps);
  return out;
}

AttitudeError attitude_error(const QuadState& state, const ReferenceSample& ref, const Mat3& r_d,
                             const Vec3& w_d) {
  const Mat3 r_tilde = ref.r_bar.transpose() * state.r;
  AttitudeError e;
  e.r_e = r_d.transpose() * r_tilde;
  e.w_e = state.w - r_tilde.transpose() * ref.w_bar - e.r_e.transpose() * w_d;
  return e;
}

Vec3 inner_loop_torque(const QuadState& state, const ReferenceSample& ref, const Mat3& r_d,
                       const Vec3& w_d, const Vec3& w_d_dot, const InnerLoopGains& gains,
                       const QuadParams& params) {
  const Mat3& jm = params.inertia;
  const Mat3 r_tilde = ref.r_bar.transpose() * state.r;
  const AttitudeError err = attitude_error(state, ref, r_d, w_d);
  const Vec3& w = state.w;
  const Vec3& wb = ref.w_bar;

  Vec3 attitude_term = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    const Vec3 e_i = Vec3::Unit(i);
    attitude_term += gains.k_vec(i) * e_i.cross(err.r_e.transpose() * e_i);
  }
  const Vec3 ref_accel = skew(jm * wb) * wb - params.tau_g -
                         params.a_mat * ref.r_bar.transpose() * ref.v_bar - params.c_mat * wb +
                         ref.tau_bar;
  const Vec3 transport = (skew(w) * r_tilde.transpose() - r_tilde.transpose() * skew(wb)) * wb +
                         skew(err.w_e) * err.r_e.transpose() * w_d -
                         err.r_e.transpose() * w_d_dot;

  return -gains.k_w * err.w_e + gains.k_r * attitude_term - skew(jm * w) * w + params.tau_g +
         params.a_mat * state.r.transpose() * state.v + params.c_mat * w +
         jm * r_tilde.transpose() * jm.inverse() * ref_accel - jm * transport;
}

}  // namespace quadmpc
