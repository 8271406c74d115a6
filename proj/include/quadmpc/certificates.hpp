#pragma once

#include <span>

#include "quadmpc/common.hpp"
#include "quadmpc/model.hpp"

namespace quadmpc {

/// Everything needed to evaluate the stabilizing terminal cost
///   V(x) = theta * (x' M_q x + lambda * (x' M_c x)^{3/2})
/// of one axis, together with the small-gain law that certifies it.
struct CertificateSet {
  MatX m_c;
  MatX m_q;
  Eigen::RowVectorXd k_gain;
  double kappa = 0.0;
  double lambda_coeff = 0.0;
  double theta_coeff = 0.0;
  double l_u = 0.0;
  double delta_star = 0.0;
};

/// Solves A' X A - X = -Q through the vectorized (n^2 x n^2) linear system.
/// Requires A Schur-stable; otherwise throws kNoSolution.
MatX solve_discrete_lyapunov(const MatX& a, const MatX& q);

double spectral_radius(const MatX& a);

/// Positive-definite M_c with A' M_c A - M_c <= 0 for a marginally stable A
/// whose only unit-circle eigenvalue is a simple eigenvalue at 1. The unit
/// mode and the stable invariant subspace are split by a similarity
/// T = [v, V_s]; the stable block gets a Lyapunov solve and the unit mode
/// weight 1.
MatX solve_mc(const MatX& a);

struct SmallGain {
  double kappa = 0.0;
  Eigen::RowVectorXd k_gain;
};

/// kappa = 0.99 / lambda_max(B' M_c B), K = -kappa B' M_c A.
SmallGain small_gain(const MatX& a, const MatX& b, const MatX& m_c);

/// (A + BK)' M_q (A + BK) - M_q = -I.
MatX solve_mq(const MatX& a, const MatX& b, const Eigen::RowVectorXd& k_gain);

/// Largest symmetric time-invariant input bound contained in every unified
/// input interval along `deltas` (Delta(k) = Delta_{0|k}).
double delta_star(std::span<const double> deltas, double alpha, double beta);

double lambda_coeff(double kappa, double l_u, const MatX& a, const MatX& b, const MatX& m_q,
                    const MatX& m_c);

/// Tight choice theta = lambda_max(Q + kappa^2 A' M_c B R B' M_c A).
double theta_coeff(const MatX& q, const MatX& r, double kappa, const MatX& a, const MatX& b,
                   const MatX& m_c);

struct CostEval {
  double value = 0.0;
  VecX gradient;
  MatX hessian;
};

/// Value, gradient and Hessian of theta * W(x). At x = 0 the cubic term and
/// its derivatives vanish (limit branch).
CostEval terminal_cost(const VecX& x, const CertificateSet& certs);

/// W(x) without the theta factor.
double lyapunov_w(const VecX& x, const CertificateSet& certs);

struct FeasibilityReport {
  bool feasible = false;
  double worst_margin = 0.0;  ///< min_k Delta(k+1) - (alpha + beta) Delta(k)
  long worst_index = -1;
};

/// Delta(k+1) > exp(-h/gamma) (1 + h/gamma) Delta(k) for every k.
FeasibilityReport feasibility_condition(std::span<const double> deltas, double h, double gamma);

/// W(A x + B sat(K x)) - W(x) with saturation level delta_star.
double lyapunov_decrease(const VecX& x, const MatX& a, const MatX& b, const CertificateSet& certs);

/// Full per-axis synthesis: M_c, small gain, M_q, delta_star from the
/// trajectory schedule, L_u = 1.1 / delta_star, lambda and theta.
CertificateSet synthesize_certificates(const MatX& a, const MatX& b, const MatX& q,
                                       const MatX& r, std::span<const double> deltas,
                                       double alpha, double beta);

CertificateSet synthesize_certificates(const DiscreteAxisModel& model, const MatX& q, double r,
                                       std::span<const double> deltas);

struct CertificateResiduals {
  double lmi_max_eig = 0.0;      ///< lambda_max(A' M_c A - M_c)
  double lyapunov_inf = 0.0;     ///< ||(A+BK)' M_q (A+BK) - M_q + I||_inf
  double kappa_gain = 0.0;       ///< kappa * lambda_max(B' M_c B)
  double closed_loop_radius = 0.0;
  double min_eig_mc = 0.0;
  double min_eig_mq = 0.0;
};

CertificateResiduals certificate_residuals(const MatX& a, const MatX& b,
                                           const CertificateSet& certs);

}  // namespace quadmpc
