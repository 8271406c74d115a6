#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "quadmpc/certificates.hpp"
#include "quadmpc/common.hpp"
#include "quadmpc/model.hpp"

namespace quadmpc {

/// Linear single-input prediction model x+ = A x + B u. `bounded_states`
/// lists the state components that share the per-step box |x_j| <= Delta.
struct PredictionModel {
  MatX a;
  VecX b;
  std::vector<int> bounded_states;

  int n_state() const { return static_cast<int>(a.rows()); }
};

/// Axis model with a_d (index 2) and eta (index 3) box-constrained.
PredictionModel axis_prediction_model(const DiscreteAxisModel& model);

struct MpcConfig {
  int n_horizon = 20;
  MatX q_mat = Eigen::Vector4d(100.0, 1.0, 1.0, 1.0).asDiagonal();
  double r = 0.01;
  double kkt_tol = 1e-8;
  int max_iter = 100;

  void validate() const;
};

/// Stacked predictions x_i = phi_i x_0 + gamma_i U, i = 0..N.
struct CondensedPrediction {
  MatX phi;        ///< (n (N+1)) x n
  MatX gamma_mat;  ///< (n (N+1)) x N
  int n_state = 0;
  int n_horizon = 0;

  auto phi_block(int i) const { return phi.middleRows(i * n_state, n_state); }
  auto gamma_block(int i) const { return gamma_mat.middleRows(i * n_state, n_state); }
  VecX state(int i, const VecX& x0, const VecX& u) const {
    return phi_block(i) * x0 + gamma_block(i) * u;
  }
};

CondensedPrediction condense(const MatX& a, const VecX& b, int n_horizon);

/// Rows of G U <= g.
struct LinearInequalities {
  MatX g_mat;
  VecX g_vec;

  Eigen::Index rows() const { return g_mat.rows(); }
};

/// Input rows |u_i| <= Delta_i (i < N) followed by, for i = 1..N and each
/// bounded state, +-x_{i,j} <= Delta_i. Throws kInfeasibleStart when the
/// initial state already violates its own bound.
LinearInequalities build_constraints(const VecX& x_k, const ConstraintSchedule& schedule,
                                     const CondensedPrediction& pred,
                                     const std::vector<int>& bounded_states);

struct UnifiedBounds {
  double u_min = 0.0;
  double u_max = 0.0;
  double tilde_minus = 0.0;
  double tilde_plus = 0.0;
  double bar_minus = 0.0;
  double bar_plus = 0.0;

  bool empty() const { return u_min > u_max; }
};

/// Input interval that keeps |a_d| and |eta| inside delta_next one step ahead
/// while |u| <= delta_i.
UnifiedBounds unified_input_bounds(double a_d, double eta, double delta_i, double delta_next,
                                   double alpha, double beta);

struct ObjectiveEval {
  double value = 0.0;
  VecX gradient;
  MatX hessian;
};

/// J(x_k, U) = V(x_N) + sum_{i<N} (x_i' Q x_i + R u_i^2) with derivatives in U.
ObjectiveEval objective(const VecX& x_k, const VecX& u, const MpcConfig& config,
                        const CertificateSet& certs, const CondensedPrediction& pred);

enum class SolveStatus { kOptimal, kMaxIter, kInfeasible };

const char* to_string(SolveStatus status);

struct MpcSolution {
  VecX u_seq;
  double cost = 0.0;
  double kkt_residual = 0.0;
  double stationarity = 0.0;
  double primal_residual = 0.0;
  double complementarity = 0.0;
  int iterations = 0;
  int active_set = 0;
  SolveStatus status = SolveStatus::kMaxIter;
};

/// Primal-dual interior-point solve (Mehrotra predictor-corrector on the
/// slack form) of the convex horizon problem. A warm start is used as the
/// initial iterate when it is strictly feasible.
MpcSolution solve(const VecX& x_k, const ConstraintSchedule& schedule, const MpcConfig& config,
                  const CertificateSet& certs, const PredictionModel& model,
                  const CondensedPrediction& pred, const std::optional<VecX>& warm_start = {});

MpcSolution solve(const VecX& x_k, const ConstraintSchedule& schedule, const MpcConfig& config,
                  const CertificateSet& certs, const PredictionModel& model,
                  const std::optional<VecX>& warm_start = {});

using ScheduleSource = std::function<ConstraintSchedule(long k)>;

struct StepResult {
  double u0 = 0.0;
  MpcSolution solution;
  ConstraintSchedule schedule;
  bool fallback = false;
  double solve_ms = 0.0;
};

/// Receding-horizon law for one axis. Owns its warm start; not shared
/// across axes.
class MpcController {
 public:
  MpcController(PredictionModel model, MpcConfig config, CertificateSet certs,
                ScheduleSource schedule_source, double alpha, double beta);

  StepResult step(const VecX& x_k, long k);

  const CertificateSet& certificates() const { return certs_; }
  const MpcConfig& config() const { return config_; }
  const PredictionModel& model() const { return model_; }
  long fallback_count() const { return fallback_count_; }
  void reset() { warm_start_.reset(); }

  /// sat(K x) at level delta_0, clipped to the unified interval of step 0.
  double fallback_input(const VecX& x_k, const ConstraintSchedule& schedule) const;

 private:
  PredictionModel model_;
  MpcConfig config_;
  CertificateSet certs_;
  ScheduleSource schedule_source_;
  CondensedPrediction pred_;
  double alpha_;
  double beta_;
  std::optional<VecX> warm_start_;
  long fallback_count_ = 0;
};

}  // namespace quadmpc
