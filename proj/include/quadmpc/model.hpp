#pragma once

#include <functional>
#include <vector>

#include "quadmpc/common.hpp"

namespace quadmpc {

/// One decoupled translational axis of the outer loop, state
/// [p_err, v_err, a_d, eta], input s:
///   p' = v,  v' = -d v + a_d,  a_d' = (eta - a_d)/gamma,  eta' = (s - eta)/gamma.
struct ContinuousAxisModel {
  double d = 0.0;      ///< mass-normalized drag of the axis (1/s)
  double gamma = 0.0;  ///< filter time constant (s)

  void validate() const;
  Mat4 a_matrix() const;
  Vec4 b_matrix() const;
};

/// Exact zero-order-hold discretization of a ContinuousAxisModel.
struct DiscreteAxisModel {
  Mat4 a_d = Mat4::Zero();
  Vec4 b_d = Vec4::Zero();
  double h = 0.0;
  double alpha = 0.0;  ///< exp(-h/gamma)
  double beta = 0.0;   ///< (h/gamma) exp(-h/gamma)
  double gamma = 0.0;
};

/// |d*gamma - 1| below this uses the matrix exponential instead of the
/// closed forms, whose (d*gamma - 1)^-2 denominators amplify round-off.
inline constexpr double kClosedFormSingularBand = 1e-2;

DiscreteAxisModel discretize_axis(const ContinuousAxisModel& model, double h);

/// Rank test on the 4-step controllability matrix (relative singular value
/// threshold 1e-9).
bool is_controllable(const DiscreteAxisModel& model);

/// Mass-normalized thrust limits and the margins that keep the reference and
/// the decoupled acceleration box away from zero and saturated thrust.
struct ThrustEnvelope {
  double t_max = 45.21;
  double delta_margin = 0.1;
  double eps1 = 0.5;
  double eps2 = 0.5;

  void validate(double g) const;
};

/// rho = min(T_ref - delta, T_max - T_ref); radius of the admissible a_d ball.
double rho(double t_bar, const ThrustEnvelope& env);

/// Half side of the largest cube inscribed in the rho ball: rho / sqrt(3).
double delta_bound(double t_bar, const ThrustEnvelope& env);

using ThrustProfile = std::function<double(double)>;

/// Per-interval lower bounds on the decoupled acceleration box. Entry i is
/// the minimum of delta_bound over [t_{k+i}, t_{k+i+1}].
struct ConstraintSchedule {
  std::vector<double> deltas;
  int oversample = 20;

  std::size_t size() const { return deltas.size(); }
  double operator[](std::size_t i) const { return deltas[i]; }
};

/// Minimum of delta_bound over the sampling interval with absolute index
/// `interval`, sampled at oversample + 1 uniformly spaced points.
double interval_min_delta(const ThrustProfile& thrust_profile, long interval, double h,
                          int oversample, const ThrustEnvelope& env);

/// Entries i = 0..n_horizon for the horizon starting at step k.
ConstraintSchedule horizon_bounds(const ThrustProfile& thrust_profile, long k, int n_horizon,
                                  double h, int oversample, const ThrustEnvelope& env);

/// Delta(k) = Delta_{0|k} for k = 0..n_steps - 1 over a whole trajectory.
std::vector<double> trajectory_schedule(const ThrustProfile& thrust_profile, long n_steps,
                                        double h, int oversample, const ThrustEnvelope& env);

}  // namespace quadmpc
