#pragma once

// Independent reference implementations used only by the tests. None of
// these call into the library code they check.

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Scaling and squaring with a truncated Taylor series.
inline MatrixXd expm(const MatrixXd& m) {
  const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.25) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
  const MatrixXd a = m / std::ldexp(1.0, squarings);
  MatrixXd term = MatrixXd::Identity(m.rows(), m.cols());
  MatrixXd sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

// Continuous axis model written out from the equations of motion.
inline void axis_continuous(double d, double gamma, MatrixXd& a, VectorXd& b) {
  a = MatrixXd::Zero(4, 4);
  a(0, 1) = 1.0;
  a(1, 1) = -d;
  a(1, 2) = 1.0;
  a(2, 2) = -1.0 / gamma;
  a(2, 3) = 1.0 / gamma;
  a(3, 3) = -1.0 / gamma;
  b = VectorXd::Zero(4);
  b(3) = 1.0 / gamma;
}

// ZOH through the augmented exponential exp([[A, B], [0, 0]] h).
inline void zoh(const MatrixXd& a, const VectorXd& b, double h, MatrixXd& ad, VectorXd& bd) {
  const int n = static_cast<int>(a.rows());
  MatrixXd aug = MatrixXd::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = a;
  aug.topRightCorner(n, 1) = b;
  const MatrixXd e = expm(aug * h);
  ad = e.topLeftCorner(n, n);
  bd = e.topRightCorner(n, 1);
}

// Central-difference gradient.
inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                            double step) {
  VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    VectorXd xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    g(i) = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

// Iterated x+ = A x + B u.
inline std::vector<VectorXd> rollout(const MatrixXd& a, const VectorXd& b, const VectorXd& x0,
                                     const VectorXd& u) {
  std::vector<VectorXd> xs{x0};
  for (Eigen::Index i = 0; i < u.size(); ++i) xs.push_back(a * xs.back() + b * u(i));
  return xs;
}

// Unconstrained minimizer of sum_{i<N} x_i'Q x_i + r u_i^2 + x_N' P x_N by a
// dense normal-equation solve on the stacked prediction.
inline VectorXd lq_batch(const MatrixXd& a, const VectorXd& b, const MatrixXd& q, double r,
                         const MatrixXd& p, const VectorXd& x0, int n_h) {
  const int n = static_cast<int>(a.rows());
  MatrixXd h = MatrixXd::Zero(n_h, n_h);
  VectorXd f = VectorXd::Zero(n_h);
  MatrixXd phi = MatrixXd::Identity(n, n);
  MatrixXd gam = MatrixXd::Zero(n, n_h);
  for (int i = 0; i <= n_h; ++i) {
    const MatrixXd& w = (i == n_h) ? p : q;
    if (i > 0) {
      h += gam.transpose() * w * gam;
      f += gam.transpose() * w * phi * x0;
    }
    if (i < n_h) {
      h(i, i) += r;
      MatrixXd gam_next = a * gam;
      gam_next.col(i) += b;
      gam = gam_next;
      phi = a * phi;
    }
  }
  return h.ldlt().solve(-f);
}

// Right-hand side of the rigid-body model, written independently.
struct RigidRhs {
  Eigen::Vector3d p_dot, v_dot, w_dot;
  Eigen::Matrix3d r_dot;
};

inline Eigen::Vector3d cross(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return Eigen::Vector3d(a.y() * b.z() - a.z() * b.y(), a.z() * b.x() - a.x() * b.z(),
                         a.x() * b.y() - a.y() * b.x());
}

inline RigidRhs rigid_rhs(const Eigen::Vector3d& v, const Eigen::Matrix3d& r,
                          const Eigen::Vector3d& w, double thrust, const Eigen::Vector3d& tau,
                          double g, const Eigen::Matrix3d& j, const Eigen::Vector3d& drag,
                          const Eigen::Vector3d& tau_g, const Eigen::Matrix3d& a_mat,
                          const Eigen::Matrix3d& c_mat) {
  RigidRhs out;
  out.p_dot = v;
  out.v_dot = Eigen::Vector3d(0, 0, g) - thrust * r.col(2) - drag.cwiseProduct(v);
  for (int c = 0; c < 3; ++c) out.r_dot.col(c) = r * cross(w, Eigen::Vector3d::Unit(c));
  const Eigen::Vector3d jw = j * w;
  out.w_dot = j.inverse() * (cross(jw, w) - tau_g - a_mat * r.transpose() * v - c_mat * w + tau);
  return out;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

}  // namespace oracle
