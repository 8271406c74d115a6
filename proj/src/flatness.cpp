#include "quadmpc/flatness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace quadmpc {

FlatTrajectory hover_trajectory(const Vec3& position, double heading) {
  FlatTrajectory traj;
  traj.position = [position](double, int order) -> Vec3 {
    return order == 0 ? position : Vec3::Zero();
  };
  traj.heading = [heading](double, int order) { return order == 0 ? heading : 0.0; };
  return traj;
}

FlatTrajectory harmonic_trajectory(const std::array<HarmonicAxis, 3>& axes, double psi0,
                                   double psi_rate) {
  FlatTrajectory traj;
  traj.position = [axes](double t, int order) -> Vec3 {
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
      const HarmonicAxis& ax = axes[i];
      const double c = std::cos(ax.omega * t);
      const double s = std::sin(ax.omega * t);
      // d^k/dt^k of (A cos + B sin) cycles through the quarter-period phases.
      const double wk = std::pow(ax.omega, order);
      double val = 0.0;
      switch (order % 4) {
        case 0: val = ax.a_cos * c + ax.a_sin * s; break;
        case 1: val = -ax.a_cos * s + ax.a_sin * c; break;
        case 2: val = -ax.a_cos * c - ax.a_sin * s; break;
        case 3: val = ax.a_cos * s - ax.a_sin * c; break;
      }
      out(i) = wk * val + (order == 0 ? ax.center : 0.0);
    }
    return out;
  };
  traj.heading = [psi0, psi_rate](double t, int order) {
    if (order == 0) return psi0 + psi_rate * t;
    return order == 1 ? psi_rate : 0.0;
  };
  return traj;
}

Vec3 reference_thrust_vector(const FlatTrajectory& traj, double t, const QuadParams& params) {
  const Vec3 v = traj.position(t, 1);
  const Vec3 a = traj.position(t, 2);
  return params.g * Vec3::UnitZ() - a - params.drag.cwiseProduct(v);
}

double reference_thrust(const FlatTrajectory& traj, double t, const QuadParams& params) {
  return reference_thrust_vector(traj, t, params).norm();
}

Mat3 reference_attitude(const FlatTrajectory& traj, double t, const QuadParams& params) {
  const Vec3 f = reference_thrust_vector(traj, t, params);
  const double thrust = f.norm();
  if (!(thrust > 0.0)) {
    throw Error(ErrorKind::kSingularReference, "zero reference thrust at t = " + std::to_string(t));
  }
  const Vec3 z_b = f / thrust;
  const double psi = traj.heading(t, 0);
  const Vec3 x_c(std::cos(psi), std::sin(psi), 0.0);
  Vec3 y_b = z_b.cross(x_c);
  const double ny = y_b.norm();
  if (ny < 1e-9) {
    throw Error(ErrorKind::kSingularReference,
                "thrust axis parallel to heading direction at t = " + std::to_string(t));
  }
  y_b /= ny;
  const Vec3 x_b = y_b.cross(z_b);
  Mat3 r;
  r << x_b, y_b, z_b;
  return r;
}

Vec3 reference_rates(const FlatTrajectory& traj, double t, const QuadParams& params) {
  const double eps = kReferenceFdStep;
  const Mat3 r = reference_attitude(traj, t, params);
  const Mat3 r_dot =
      (reference_attitude(traj, t + eps, params) - reference_attitude(traj, t - eps, params)) /
      (2.0 * eps);
  return vee(r.transpose() * r_dot);
}

ReferenceSample sample_reference(const FlatTrajectory& traj, double t, const QuadParams& params,
                                 const ThrustEnvelope& env) {
  ReferenceSample ref;
  ref.t = t;
  ref.p_bar = traj.position(t, 0);
  ref.v_bar = traj.position(t, 1);
  ref.a_bar = traj.position(t, 2);
  const Vec3 jerk = traj.position(t, 3);

  const Vec3 f = reference_thrust_vector(traj, t, params);
  ref.t_bar = f.norm();
  if (!(ref.t_bar >= env.eps1) || !(ref.t_bar <= env.t_max - env.eps2)) {
    throw Error(ErrorKind::kInfeasibleReference,
                "reference thrust " + std::to_string(ref.t_bar) + " outside envelope at t = " +
                    std::to_string(t));
  }
  const Vec3 f_dot = -jerk - params.drag.cwiseProduct(ref.a_bar);
  ref.t_bar_dot = f.dot(f_dot) / ref.t_bar;

  ref.r_bar = reference_attitude(traj, t, params);
  ref.z_b_bar = ref.r_bar.col(2);
  ref.w_bar = reference_rates(traj, t, params);
  const double eps = kReferenceFdStep;
  ref.w_bar_dot =
      (reference_rates(traj, t + eps, params) - reference_rates(traj, t - eps, params)) /
      (2.0 * eps);

  const Mat3& jm = params.inertia;
  ref.tau_bar = jm * ref.w_bar_dot - skew(jm * ref.w_bar) * ref.w_bar + params.tau_g +
                params.a_mat * ref.r_bar.transpose() * ref.v_bar + params.c_mat * ref.w_bar;
  return ref;
}

FeasibilityScan check_reference_feasibility(const FlatTrajectory& traj, const QuadParams& params,
                                            const ThrustEnvelope& env, double t_begin,
                                            double t_end, int grid_points) {
  if (grid_points < 2 || !(t_end >= t_begin)) {
    throw Error(ErrorKind::kInvalidParameter, "feasibility scan needs >= 2 points on a valid span");
  }
  FeasibilityScan scan;
  scan.min_thrust = std::numeric_limits<double>::infinity();
  scan.max_thrust = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_points; ++i) {
    const double t = t_begin + (t_end - t_begin) * i / (grid_points - 1);
    const double thrust = reference_thrust(traj, t, params);
    scan.min_thrust = std::min(scan.min_thrust, thrust);
    scan.max_thrust = std::max(scan.max_thrust, thrust);
    bool ok = thrust >= env.eps1 && thrust <= env.t_max - env.eps2;
    if (ok) {
      try {
        reference_attitude(traj, t, params);
      } catch (const Error&) {
        ok = false;
      }
    }
    if (!ok) {
      scan.feasible = false;
      scan.violation_times.push_back(t);
    }
  }
  return scan;
}

}  // namespace quadmpc
