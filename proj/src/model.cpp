#include "quadmpc/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace quadmpc {

void ContinuousAxisModel::validate() const {
  if (!(d > 0.0) || !std::isfinite(d)) {
    throw Error(ErrorKind::kInvalidParameter, "axis drag must be positive, got " + std::to_string(d));
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorKind::kInvalidParameter,
                "filter time constant must be positive, got " + std::to_string(gamma));
  }
}

Mat4 ContinuousAxisModel::a_matrix() const {
  Mat4 a = Mat4::Zero();
  a(0, 1) = 1.0;
  a(1, 1) = -d;
  a(1, 2) = 1.0;
  a(2, 2) = -1.0 / gamma;
  a(2, 3) = 1.0 / gamma;
  a(3, 3) = -1.0 / gamma;
  return a;
}

Vec4 ContinuousAxisModel::b_matrix() const { return Vec4(0.0, 0.0, 0.0, 1.0 / gamma); }

namespace {

void fill_closed_form(double d, double g, double h, DiscreteAxisModel& out) {
  const double e = std::exp(-d * h);
  const double f = std::exp(-h / g);
  const double c = d * g - 1.0;
  const double c2 = c * c;
  const double d2 = d * d;
  const double d3 = d2 * d;
  const double g2 = g * g;
  const double g3 = g2 * g;

  Mat4& a = out.a_d;
  a.setZero();
  a(0, 0) = 1.0;
  a(0, 1) = (1.0 - e) / d;
  a(0, 2) = g * (e + d * g - d * g * f - 1.0) / (d * c);
  // signs of this entry and a(1, 3) are flipped relative to the printed table,
  // which disagrees with exp(A h); these match the exponential
  a(0, 3) = g *
            (1.0 - e - 2.0 * d * g + d2 * g2 + 2.0 * d * g * f + d * h * f - d2 * g2 * f -
             d2 * g * h * f) /
            (d * c2);
  a(1, 1) = e;
  a(1, 2) = g * (f - e) / c;
  a(1, 3) = (g * e - g * f - h * f + d * g * h * f) / c2;
  a(2, 2) = f;
  a(2, 3) = (h / g) * f;
  a(3, 3) = f;

  Vec4& b = out.b_d;
  b(0) = (e + d * h + 3.0 * d2 * g2 - 2.0 * d3 * g3 + d3 * g2 * h - 3.0 * d2 * g2 * f +
          2.0 * d3 * g3 * f - 2.0 * d2 * g * h + d3 * g2 * h * f - d2 * g * h * f - 1.0) /
         (d2 * c2);
  b(1) = (1.0 - e - 2.0 * d * g + d2 * g2 + 2.0 * d * g * f + d * h * f - d2 * g2 * f -
          d2 * g * h * f) /
         (d * c2);
  b(2) = (g - g * f - h * f) / g;
  b(3) = 1.0 - f;
}

void fill_matrix_exponential(const ContinuousAxisModel& model, double h, DiscreteAxisModel& out) {
  Eigen::Matrix<double, 5, 5> aug = Eigen::Matrix<double, 5, 5>::Zero();
  aug.topLeftCorner<4, 4>() = model.a_matrix() * h;
  aug.topRightCorner<4, 1>() = model.b_matrix() * h;
  const Eigen::Matrix<double, 5, 5> phi = aug.exp();
  out.a_d = phi.topLeftCorner<4, 4>();
  out.b_d = phi.topRightCorner<4, 1>();
}

}  // namespace

DiscreteAxisModel discretize_axis(const ContinuousAxisModel& model, double h) {
  model.validate();
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorKind::kInvalidParameter, "sampling period must be positive");
  }
  DiscreteAxisModel out;
  out.h = h;
  out.gamma = model.gamma;
  out.alpha = std::exp(-h / model.gamma);
  out.beta = (h / model.gamma) * out.alpha;
  if (std::abs(model.d * model.gamma - 1.0) < kClosedFormSingularBand) {
    fill_matrix_exponential(model, h, out);
  } else {
    fill_closed_form(model.d, model.gamma, h, out);
  }
  return out;
}

bool is_controllable(const DiscreteAxisModel& model) {
  Mat4 ctrb;
  Vec4 col = model.b_d;
  for (int i = 0; i < 4; ++i) {
    ctrb.col(i) = col;
    col = model.a_d * col;
  }
  const Vec4 sv = Eigen::JacobiSVD<Mat4>(ctrb).singularValues();
  return sv(0) > 0.0 && sv(3) > 1e-9 * sv(0);
}

void ThrustEnvelope::validate(double g) const {
  if (!(t_max > g)) {
    throw Error(ErrorKind::kInvalidParameter, "T_max must exceed g");
  }
  if (!(delta_margin > 0.0) || !(delta_margin < eps1)) {
    throw Error(ErrorKind::kInvalidParameter, "need 0 < delta < eps1");
  }
  if (!(eps2 > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "eps2 must be positive");
  }
}

double rho(double t_bar, const ThrustEnvelope& env) {
  if (!(t_bar >= env.eps1) || !(t_bar <= env.t_max - env.eps2)) {
    throw Error(ErrorKind::kInfeasibleReference,
                "reference thrust " + std::to_string(t_bar) + " outside [eps1, T_max - eps2]");
  }
  return std::min(t_bar - env.delta_margin, env.t_max - t_bar);
}

double delta_bound(double t_bar, const ThrustEnvelope& env) {
  return rho(t_bar, env) / std::sqrt(3.0);
}

double interval_min_delta(const ThrustProfile& thrust_profile, long interval, double h,
                          int oversample, const ThrustEnvelope& env) {
  double lo = std::numeric_limits<double>::infinity();
  const double step = h / oversample;
  const double t0 = static_cast<double>(interval) * h;
  for (int j = 0; j <= oversample; ++j) {
    const double t = (j == oversample) ? static_cast<double>(interval + 1) * h : t0 + j * step;
    lo = std::min(lo, delta_bound(thrust_profile(t), env));
  }
  return lo;
}

ConstraintSchedule horizon_bounds(const ThrustProfile& thrust_profile, long k, int n_horizon,
                                  double h, int oversample, const ThrustEnvelope& env) {
  if (n_horizon < 1) throw Error(ErrorKind::kInvalidParameter, "horizon must be >= 1");
  if (oversample < 2) throw Error(ErrorKind::kInvalidParameter, "oversample must be >= 2");
  ConstraintSchedule sched;
  sched.oversample = oversample;
  sched.deltas.reserve(n_horizon + 1);
  for (int i = 0; i <= n_horizon; ++i) {
    sched.deltas.push_back(interval_min_delta(thrust_profile, k + i, h, oversample, env));
  }
  return sched;
}

std::vector<double> trajectory_schedule(const ThrustProfile& thrust_profile, long n_steps,
                                        double h, int oversample, const ThrustEnvelope& env) {
  if (oversample < 2) throw Error(ErrorKind::kInvalidParameter, "oversample must be >= 2");
  std::vector<double> out;
  out.reserve(n_steps);
  for (long k = 0; k < n_steps; ++k) {
    out.push_back(interval_min_delta(thrust_profile, k, h, oversample, env));
  }
  return out;
}

}  // namespace quadmpc
