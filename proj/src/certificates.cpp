#include "quadmpc/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

namespace quadmpc {

namespace {

constexpr double kUnitEigenTol = 1e-9;
constexpr double kKappaMargin = 0.99;
constexpr double kLuMargin = 1.1;

MatX symmetrize(const MatX& m) { return 0.5 * (m + m.transpose()); }

double max_sym_eig(const MatX& m) {
  return Eigen::SelfAdjointEigenSolver<MatX>(symmetrize(m), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

double min_sym_eig(const MatX& m) {
  return Eigen::SelfAdjointEigenSolver<MatX>(symmetrize(m), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

void require_square(const MatX& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw Error(ErrorKind::kInvalidParameter, std::string(what) + " must be square and nonempty");
  }
}

// Unit-norm vector spanning the null space of m (smallest right singular vector).
VecX null_vector(const MatX& m) {
  Eigen::JacobiSVD<MatX> svd(m, Eigen::ComputeFullV);
  return svd.matrixV().col(m.cols() - 1);
}

}  // namespace

double spectral_radius(const MatX& a) {
  require_square(a, "matrix");
  return Eigen::EigenSolver<MatX>(a, false).eigenvalues().cwiseAbs().maxCoeff();
}

MatX solve_discrete_lyapunov(const MatX& a, const MatX& q) {
  require_square(a, "A");
  if (q.rows() != a.rows() || q.cols() != a.cols()) {
    throw Error(ErrorKind::kInvalidParameter, "Q must match A");
  }
  if (!(spectral_radius(a) < 1.0)) {
    throw Error(ErrorKind::kNoSolution, "discrete Lyapunov equation needs a Schur-stable matrix");
  }
  const Eigen::Index n = a.rows();
  const MatX at = a.transpose();
  // vec(A' X A) = (A' kron A') vec(X), column-major vec.
  MatX sys(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      sys.block(i * n, j * n, n, n) = at(i, j) * at;
    }
  }
  sys -= MatX::Identity(n * n, n * n);
  const VecX rhs = -Eigen::Map<const VecX>(q.data(), n * n);
  const VecX sol = sys.fullPivLu().solve(rhs);
  return symmetrize(Eigen::Map<const MatX>(sol.data(), n, n));
}

MatX solve_mc(const MatX& a) {
  require_square(a, "A");
  const Eigen::Index n = a.rows();
  const Eigen::VectorXcd eig = Eigen::EigenSolver<MatX>(a, false).eigenvalues();

  int unit_count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lam = eig(i);
    if (std::abs(lam - 1.0) < kUnitEigenTol) {
      ++unit_count;
    } else if (!(std::abs(lam) < 1.0 - 1e-12)) {
      throw Error(ErrorKind::kUnsupportedSpectrum,
                  "eigenvalue on or outside the unit circle other than 1");
    }
  }
  if (unit_count != 1) {
    throw Error(ErrorKind::kUnsupportedSpectrum,
                "expected exactly one simple unit eigenvalue, found " +
                    std::to_string(unit_count));
  }

  const MatX shifted = a - MatX::Identity(n, n);
  const VecX v = null_vector(shifted);
  VecX w = null_vector(shifted.transpose());
  const double wv = w.dot(v);
  if (std::abs(wv) < 1e-10) {
    throw Error(ErrorKind::kUnsupportedSpectrum, "defective unit eigenvalue");
  }
  w /= wv;

  MatX t(n, n);
  t.col(0) = v;
  if (n > 1) {
    // Orthonormal complement of w spans the stable invariant subspace.
    Eigen::HouseholderQR<MatX> qr(w);
    const MatX qfull = qr.householderQ() * MatX::Identity(n, n);
    t.rightCols(n - 1) = qfull.rightCols(n - 1);
  }
  const MatX t_inv = t.inverse();

  MatX block = MatX::Zero(n, n);
  block(0, 0) = 1.0;
  if (n > 1) {
    const MatX a_s = (t_inv * a * t).bottomRightCorner(n - 1, n - 1);
    block.bottomRightCorner(n - 1, n - 1) =
        solve_discrete_lyapunov(a_s, MatX::Identity(n - 1, n - 1));
  }
  return symmetrize(t_inv.transpose() * block * t_inv);
}

SmallGain small_gain(const MatX& a, const MatX& b, const MatX& m_c) {
  require_square(a, "A");
  const MatX btmb = b.transpose() * m_c * b;
  const double lam_max = max_sym_eig(btmb);
  if (!(lam_max > std::numeric_limits<double>::min()) || !(b.norm() > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "B' M_c B vanishes; system is uncontrollable");
  }
  SmallGain out;
  out.kappa = kKappaMargin / lam_max;
  out.k_gain = -out.kappa * (b.transpose() * m_c * a);
  return out;
}

MatX solve_mq(const MatX& a, const MatX& b, const Eigen::RowVectorXd& k_gain) {
  const MatX closed = a + b * k_gain;
  return solve_discrete_lyapunov(closed, MatX::Identity(a.rows(), a.cols()));
}

double delta_star(std::span<const double> deltas, double alpha, double beta) {
  if (deltas.empty()) throw Error(ErrorKind::kInvalidParameter, "empty schedule");
  if (!(alpha > 0.0) || !(beta > 0.0) || !(alpha + beta < 1.0)) {
    throw Error(ErrorKind::kInvalidParameter, "need alpha, beta > 0 and alpha + beta < 1");
  }
  double delta_min = std::numeric_limits<double>::infinity();
  double tilde_min = std::numeric_limits<double>::infinity();
  double bar_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    delta_min = std::min(delta_min, deltas[k]);
    if (k + 1 < deltas.size()) {
      tilde_min = std::min(tilde_min, deltas[k + 1] - (alpha + beta) * deltas[k]);
      bar_min = std::min(bar_min, deltas[k + 1] - alpha * deltas[k]);
    }
  }
  tilde_min /= (1.0 - alpha - beta);
  bar_min /= (1.0 - alpha);
  if (!(delta_min > 0.0) || !(tilde_min > 0.0) || !(bar_min > 0.0)) {
    throw Error(ErrorKind::kFeasibilityViolated,
                "schedule violates Delta(k+1) > (alpha+beta) Delta(k)");
  }
  return std::min({tilde_min, bar_min, delta_min});
}

double lambda_coeff(double kappa, double l_u, const MatX& a, const MatX& b, const MatX& m_q,
                    const MatX& m_c) {
  const MatX atmqb = a.transpose() * m_q * b;
  const double sigma = Eigen::JacobiSVD<MatX>(atmqb).singularValues()(0);
  return 2.0 * kappa * l_u * sigma / std::sqrt(min_sym_eig(m_c));
}

double theta_coeff(const MatX& q, const MatX& r, double kappa, const MatX& a, const MatX& b,
                   const MatX& m_c) {
  const MatX bma = b.transpose() * m_c * a;
  return max_sym_eig(q + kappa * kappa * bma.transpose() * r * bma);
}

CostEval terminal_cost(const VecX& x, const CertificateSet& certs) {
  const double theta = certs.theta_coeff;
  const double lam = certs.lambda_coeff;
  const VecX mqx = certs.m_q * x;
  const VecX mcx = certs.m_c * x;
  const double s = std::sqrt(std::max(0.0, x.dot(mcx)));

  CostEval out;
  out.value = theta * (x.dot(mqx) + lam * s * s * s);
  out.gradient = theta * (2.0 * mqx + 3.0 * lam * s * mcx);
  out.hessian = 2.0 * certs.m_q;
  if (s > 0.0) {
    out.hessian += 3.0 * lam * (s * certs.m_c + mcx * mcx.transpose() / s);
  }
  out.hessian *= theta;
  return out;
}

double lyapunov_w(const VecX& x, const CertificateSet& certs) {
  const double s = std::sqrt(std::max(0.0, x.dot(certs.m_c * x)));
  return x.dot(certs.m_q * x) + certs.lambda_coeff * s * s * s;
}

FeasibilityReport feasibility_condition(std::span<const double> deltas, double h, double gamma) {
  const double ratio = std::exp(-h / gamma) * (1.0 + h / gamma);
  FeasibilityReport rep;
  rep.feasible = true;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < deltas.size(); ++k) {
    const double margin = deltas[k + 1] - ratio * deltas[k];
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_index = static_cast<long>(k);
    }
    if (!(margin > 0.0)) rep.feasible = false;
  }
  if (deltas.size() == 1) {
    rep.worst_margin = deltas[0] * (1.0 - ratio);
    rep.worst_index = 0;
    rep.feasible = rep.worst_margin > 0.0;
  }
  return rep;
}

double lyapunov_decrease(const VecX& x, const MatX& a, const MatX& b, const CertificateSet& certs) {
  const VecX kx = certs.k_gain * x;
  const VecX u = kx.cwiseMax(-certs.delta_star).cwiseMin(certs.delta_star);
  const VecX next = a * x + b * u;
  return lyapunov_w(next, certs) - lyapunov_w(x, certs);
}

CertificateSet synthesize_certificates(const MatX& a, const MatX& b, const MatX& q,
                                       const MatX& r, std::span<const double> deltas,
                                       double alpha, double beta) {
  CertificateSet c;
  c.m_c = solve_mc(a);
  const SmallGain sg = small_gain(a, b, c.m_c);
  c.kappa = sg.kappa;
  c.k_gain = sg.k_gain;
  c.m_q = solve_mq(a, b, c.k_gain);
  c.delta_star = delta_star(deltas, alpha, beta);
  c.l_u = kLuMargin / c.delta_star;
  c.lambda_coeff = lambda_coeff(c.kappa, c.l_u, a, b, c.m_q, c.m_c);
  c.theta_coeff = theta_coeff(q, r, c.kappa, a, b, c.m_c);
  return c;
}

CertificateSet synthesize_certificates(const DiscreteAxisModel& model, const MatX& q, double r,
                                       std::span<const double> deltas) {
  return synthesize_certificates(model.a_d, model.b_d, q, MatX::Constant(1, 1, r), deltas,
                                 model.alpha, model.beta);
}

CertificateResiduals certificate_residuals(const MatX& a, const MatX& b,
                                           const CertificateSet& certs) {
  CertificateResiduals res;
  res.lmi_max_eig = max_sym_eig(a.transpose() * certs.m_c * a - certs.m_c);
  const MatX closed = a + b * certs.k_gain;
  const MatX lyap = closed.transpose() * certs.m_q * closed - certs.m_q +
                    MatX::Identity(a.rows(), a.cols());
  res.lyapunov_inf = lyap.cwiseAbs().rowwise().sum().maxCoeff();
  res.kappa_gain = certs.kappa * max_sym_eig(b.transpose() * certs.m_c * b);
  res.closed_loop_radius = spectral_radius(closed);
  res.min_eig_mc = min_sym_eig(certs.m_c);
  res.min_eig_mq = min_sym_eig(certs.m_q);
  return res;
}

}  // namespace quadmpc
