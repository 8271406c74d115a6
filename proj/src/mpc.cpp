#include "quadmpc/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace quadmpc {

PredictionModel axis_prediction_model(const DiscreteAxisModel& model) {
  return PredictionModel{model.a_d, model.b_d, {2, 3}};
}

void MpcConfig::validate() const {
  if (n_horizon < 1) throw Error(ErrorKind::kInvalidParameter, "horizon must be >= 1");
  if (!(r > 0.0)) throw Error(ErrorKind::kInvalidParameter, "input weight must be positive");
  if (!(kkt_tol > 0.0)) throw Error(ErrorKind::kInvalidParameter, "kkt_tol must be positive");
  if (max_iter < 0) throw Error(ErrorKind::kInvalidParameter, "max_iter must be >= 0");
  if (q_mat.rows() != q_mat.cols()) throw Error(ErrorKind::kInvalidParameter, "Q not square");
  Eigen::LLT<MatX> llt(0.5 * (q_mat + q_mat.transpose()));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kInvalidParameter, "Q must be positive definite");
  }
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kMaxIter: return "max-iter";
    case SolveStatus::kInfeasible: return "infeasible";
  }
  return "unknown";
}

CondensedPrediction condense(const MatX& a, const VecX& b, int n_horizon) {
  const int n = static_cast<int>(a.rows());
  CondensedPrediction p;
  p.n_state = n;
  p.n_horizon = n_horizon;
  p.phi = MatX::Zero(n * (n_horizon + 1), n);
  p.gamma_mat = MatX::Zero(n * (n_horizon + 1), n_horizon);
  p.phi.topRows(n).setIdentity();
  for (int i = 1; i <= n_horizon; ++i) {
    p.phi.middleRows(i * n, n) = a * p.phi.middleRows((i - 1) * n, n);
    p.gamma_mat.middleRows(i * n, n) = a * p.gamma_mat.middleRows((i - 1) * n, n);
    p.gamma_mat.block(i * n, i - 1, n, 1) = b;
  }
  return p;
}

LinearInequalities build_constraints(const VecX& x_k, const ConstraintSchedule& schedule,
                                     const CondensedPrediction& pred,
                                     const std::vector<int>& bounded_states) {
  const int n_h = pred.n_horizon;
  if (static_cast<int>(schedule.size()) < n_h + 1) {
    throw Error(ErrorKind::kInvalidParameter, "schedule needs N + 1 entries");
  }
  constexpr double kStartTol = 1e-9;
  for (int j : bounded_states) {
    if (std::abs(x_k(j)) > schedule[0] + kStartTol) {
      throw Error(ErrorKind::kInfeasibleStart,
                  "state component " + std::to_string(j) + " = " + std::to_string(x_k(j)) +
                      " exceeds bound " + std::to_string(schedule[0]));
    }
  }

  const int nb = static_cast<int>(bounded_states.size());
  LinearInequalities out;
  out.g_mat = MatX::Zero(2 * n_h + 2 * nb * n_h, n_h);
  out.g_vec = VecX::Zero(out.g_mat.rows());
  int row = 0;
  for (int i = 0; i < n_h; ++i) {
    out.g_mat(row, i) = 1.0;
    out.g_vec(row++) = schedule[i];
    out.g_mat(row, i) = -1.0;
    out.g_vec(row++) = schedule[i];
  }
  for (int i = 1; i <= n_h; ++i) {
    const VecX free = pred.phi_block(i) * x_k;
    for (int j : bounded_states) {
      const auto gam = pred.gamma_block(i).row(j);
      out.g_mat.row(row) = gam;
      out.g_vec(row++) = schedule[i] - free(j);
      out.g_mat.row(row) = -gam;
      out.g_vec(row++) = schedule[i] + free(j);
    }
  }
  return out;
}

UnifiedBounds unified_input_bounds(double a_d, double eta, double delta_i, double delta_next,
                                   double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(alpha + beta < 1.0)) {
    throw Error(ErrorKind::kInvalidParameter, "need alpha, beta > 0 and alpha + beta < 1");
  }
  UnifiedBounds ub;
  const double mix = alpha * a_d + beta * eta;
  ub.tilde_plus = (delta_next - mix) / (1.0 - alpha - beta);
  ub.tilde_minus = (-delta_next - mix) / (1.0 - alpha - beta);
  ub.bar_plus = (delta_next - alpha * eta) / (1.0 - alpha);
  ub.bar_minus = -(delta_next + alpha * eta) / (1.0 - alpha);
  ub.u_min = std::max({-delta_i, ub.tilde_minus, ub.bar_minus});
  ub.u_max = std::min({delta_i, ub.tilde_plus, ub.bar_plus});
  return ub;
}

ObjectiveEval objective(const VecX& x_k, const VecX& u, const MpcConfig& config,
                        const CertificateSet& certs, const CondensedPrediction& pred) {
  const int n_h = pred.n_horizon;
  const int n = pred.n_state;
  ObjectiveEval out;
  out.value = 0.0;
  out.gradient = 2.0 * config.r * u;
  out.hessian = 2.0 * config.r * MatX::Identity(n_h, n_h);
  out.value += config.r * u.squaredNorm();
  for (int i = 0; i < n_h; ++i) {
    const VecX x = pred.state(i, x_k, u);
    const VecX qx = config.q_mat * x;
    out.value += x.dot(qx);
    if (i > 0) {
      // gamma_0 is zero; later blocks only touch the first i inputs.
      const auto gam = pred.gamma_block(i).leftCols(i);
      out.gradient.head(i) += 2.0 * gam.transpose() * qx;
      out.hessian.topLeftCorner(i, i) += 2.0 * gam.transpose() * config.q_mat * gam;
    }
  }
  const VecX x_n = pred.state(n_h, x_k, u);
  const CostEval term = terminal_cost(x_n, certs);
  const auto gam_n = pred.gamma_block(n_h);
  out.value += term.value;
  out.gradient += gam_n.transpose() * term.gradient;
  out.hessian += gam_n.transpose() * term.hessian * gam_n;
  (void)n;
  return out;
}

namespace {

double max_step(const VecX& v, const VecX& dv) {
  double step = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) step = std::min(step, -v(i) / dv(i));
  }
  return step;
}

struct Residuals {
  double stationarity = 0.0;
  double primal = 0.0;
  double mu = 0.0;
  double kkt() const { return std::max({stationarity, primal, mu}); }
};

Residuals residuals(const ObjectiveEval& obj, const LinearInequalities& cons, const VecX& u,
                    const VecX& s, const VecX& z) {
  Residuals r;
  const VecX gz = cons.g_mat.transpose() * z;
  const VecX hu = obj.hessian * u;
  const double scale =
      1.0 + std::max({obj.gradient.lpNorm<Eigen::Infinity>(), gz.lpNorm<Eigen::Infinity>(),
                      hu.lpNorm<Eigen::Infinity>()});
  r.stationarity = (obj.gradient + gz).lpNorm<Eigen::Infinity>() / scale;
  r.primal = (cons.g_mat * u + s - cons.g_vec).lpNorm<Eigen::Infinity>();
  r.mu = s.size() > 0 ? s.dot(z) / static_cast<double>(s.size()) : 0.0;
  return r;
}

}  // namespace

MpcSolution solve(const VecX& x_k, const ConstraintSchedule& schedule, const MpcConfig& config,
                  const CertificateSet& certs, const PredictionModel& model,
                  const CondensedPrediction& pred, const std::optional<VecX>& warm_start) {
  config.validate();
  const int n_h = config.n_horizon;
  const LinearInequalities cons = build_constraints(x_k, schedule, pred, model.bounded_states);
  const Eigen::Index m = cons.rows();

  // Initial iterate: a strictly feasible warm start if available, else zero.
  VecX u = VecX::Zero(n_h);
  if (warm_start && warm_start->size() == n_h) {
    const VecX slack = cons.g_vec - cons.g_mat * *warm_start;
    if (slack.minCoeff() > 1e-6) u = *warm_start;
  }
  VecX s = (cons.g_vec - cons.g_mat * u).cwiseMax(1e-2);
  VecX z = VecX::Ones(m);

  MpcSolution sol;
  ObjectiveEval obj = objective(x_k, u, config, certs, pred);
  Residuals res = residuals(obj, cons, u, s, z);
  int iter = 0;
  for (; iter < config.max_iter; ++iter) {
    if (res.kkt() <= config.kkt_tol) break;

    const VecX r_d = obj.gradient + cons.g_mat.transpose() * z;
    const VecX r_p = cons.g_mat * u + s - cons.g_vec;
    const VecX w = z.cwiseQuotient(s);
    MatX kkt = obj.hessian + cons.g_mat.transpose() * w.asDiagonal() * cons.g_mat;
    Eigen::LLT<MatX> llt(kkt);
    if (llt.info() != Eigen::Success) {
      kkt.diagonal().array() += 1e-10 * (1.0 + kkt.diagonal().cwiseAbs().maxCoeff());
      llt.compute(kkt);
      if (llt.info() != Eigen::Success) break;
    }

    auto direction = [&](const VecX& r_c, VecX& du, VecX& ds, VecX& dz) {
      const VecX rhs = -r_d - cons.g_mat.transpose() * (w.cwiseProduct(r_p) - r_c.cwiseQuotient(s));
      du = llt.solve(rhs);
      dz = w.cwiseProduct(cons.g_mat * du + r_p) - r_c.cwiseQuotient(s);
      ds = -(r_c + s.cwiseProduct(dz)).cwiseQuotient(z);
    };

    // Predictor.
    VecX du, ds, dz;
    direction(s.cwiseProduct(z), du, ds, dz);
    const double a_aff = std::min(max_step(s, ds), max_step(z, dz));
    const double mu = s.dot(z) / static_cast<double>(m);
    const double mu_aff =
        (s + a_aff * ds).dot(z + a_aff * dz) / static_cast<double>(m);
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    // Corrector.
    const VecX r_c = s.cwiseProduct(z) + ds.cwiseProduct(dz) - VecX::Constant(m, sigma * mu);
    direction(r_c, du, ds, dz);
    const double step = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));

    u += step * du;
    s += step * ds;
    z += step * dz;
    obj = objective(x_k, u, config, certs, pred);
    res = residuals(obj, cons, u, s, z);
  }

  sol.u_seq = u;
  sol.cost = obj.value;
  sol.iterations = iter;
  sol.stationarity = res.stationarity;
  sol.primal_residual = res.primal;
  sol.complementarity = res.mu;
  sol.kkt_residual = res.kkt();
  const VecX slack = cons.g_vec - cons.g_mat * u;
  int active = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (z(i) > s(i)) ++active;
  }
  sol.active_set = active;
  if (res.kkt() <= config.kkt_tol && slack.minCoeff() >= -1e-8) {
    sol.status = SolveStatus::kOptimal;
  } else if (res.primal > 1e-6) {
    sol.status = SolveStatus::kInfeasible;
  } else {
    sol.status = SolveStatus::kMaxIter;
  }
  return sol;
}

MpcSolution solve(const VecX& x_k, const ConstraintSchedule& schedule, const MpcConfig& config,
                  const CertificateSet& certs, const PredictionModel& model,
                  const std::optional<VecX>& warm_start) {
  const CondensedPrediction pred = condense(model.a, model.b, config.n_horizon);
  return solve(x_k, schedule, config, certs, model, pred, warm_start);
}

MpcController::MpcController(PredictionModel model, MpcConfig config, CertificateSet certs,
                             ScheduleSource schedule_source, double alpha, double beta)
    : model_(std::move(model)),
      config_(std::move(config)),
      certs_(std::move(certs)),
      schedule_source_(std::move(schedule_source)),
      pred_(condense(model_.a, model_.b, config_.n_horizon)),
      alpha_(alpha),
      beta_(beta) {
  config_.validate();
}

double MpcController::fallback_input(const VecX& x_k, const ConstraintSchedule& schedule) const {
  const double level = schedule[0];
  double u = std::clamp(static_cast<double>(certs_.k_gain * x_k), -level, level);
  if (model_.bounded_states.size() == 2 && alpha_ > 0.0 && beta_ > 0.0 && schedule.size() > 1) {
    const UnifiedBounds ub =
        unified_input_bounds(x_k(model_.bounded_states[0]), x_k(model_.bounded_states[1]),
                             schedule[0], schedule[1], alpha_, beta_);
    if (!ub.empty()) u = std::clamp(u, ub.u_min, ub.u_max);
  }
  return u;
}

StepResult MpcController::step(const VecX& x_k, long k) {
  StepResult out;
  out.schedule = schedule_source_(k);
  const auto t0 = std::chrono::steady_clock::now();
  out.solution = solve(x_k, out.schedule, config_, certs_, model_, pred_, warm_start_);
  out.solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  if (out.solution.status == SolveStatus::kOptimal) {
    out.u0 = out.solution.u_seq(0);
    const int n_h = config_.n_horizon;
    VecX shifted(n_h);
    shifted.head(n_h - 1) = out.solution.u_seq.tail(n_h - 1);
    shifted(n_h - 1) = out.solution.u_seq(n_h - 1);
    warm_start_ = shifted;
  } else {
    out.fallback = true;
    ++fallback_count_;
    out.u0 = fallback_input(x_k, out.schedule);
    warm_start_.reset();
  }
  return out;
}

}  // namespace quadmpc
