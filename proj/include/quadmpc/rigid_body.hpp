#pragma once

#include "quadmpc/common.hpp"

namespace quadmpc {

/// Plant parameters; thrust and drag are mass-normalized.
struct QuadParams {
  double g = 9.81;
  Mat3 inertia = Vec3(2.5e-3, 2.1e-3, 4.3e-3).asDiagonal();
  Vec3 drag = Vec3(0.26, 0.28, 0.42);  ///< diagonal of D
  Vec3 tau_g = Vec3::Zero();
  Mat3 a_mat = 0.1 * Mat3::Identity();
  Mat3 c_mat = 0.5 * Mat3::Identity();
  double t_max = 45.21;

  void validate() const;
  Mat3 drag_matrix() const { return drag.asDiagonal(); }
};

/// NED world frame; r = [x_B, y_B, z_B] maps body to world.
struct QuadState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Mat3 r = Mat3::Identity();
  Vec3 w = Vec3::Zero();
};

/// S(a) b = a x b.
inline Mat3 skew(const Vec3& a) {
  Mat3 s;
  s << 0.0, -a(2), a(1),
       a(2), 0.0, -a(0),
       -a(1), a(0), 0.0;
  return s;
}

/// Inverse of skew on the antisymmetric part.
inline Vec3 vee(const Mat3& s) {
  return Vec3(0.5 * (s(2, 1) - s(1, 2)), 0.5 * (s(0, 2) - s(2, 0)), 0.5 * (s(1, 0) - s(0, 1)));
}

/// Nearest rotation in Frobenius norm (polar factor).
Mat3 project_to_so3(const Mat3& m);

double so3_defect(const Mat3& r);

Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);

}  // namespace quadmpc
