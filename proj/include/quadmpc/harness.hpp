#pragma once

#include <array>
#include <string>
#include <vector>

#include "quadmpc/certificates.hpp"
#include "quadmpc/mpc.hpp"
#include "quadmpc/scenario.hpp"

namespace quadmpc {

struct LogRow {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Vec3 p_bar = Vec3::Zero();
  Vec3 err = Vec3::Zero();
  Vec3 a_d = Vec3::Zero();
  double delta_t = 0.0;
  double thrust = 0.0;
  Vec3 tau = Vec3::Zero();
  Vec3 u = Vec3::Zero();
  Vec3 j_star = Vec3::Zero();
  double solve_ms = 0.0;
  // Diagnostics kept in memory only.
  Vec3 v_err = Vec3::Zero();
  Vec3 eta = Vec3::Zero();
  double attitude_dev = 0.0;  ///< ||R_e - I||_F
  double rate_err = 0.0;      ///< ||w_e||
};

struct AxisCertificates {
  CertificateSet certs;
  CertificateResiduals residuals;
  DiscreteAxisModel model;
};

struct CheckReport {
  FeasibilityScan reference;
  FeasibilityReport schedule;
  std::vector<double> deltas;  ///< Delta(k) over the run plus one horizon
  std::array<AxisCertificates, 3> axes;
  double delta_const = 0.0;    ///< inf of the schedule (time-invariant arm)
};

/// Reference feasibility, the sampled-bound condition and per-axis
/// certificate synthesis. Throws when a prerequisite fails.
CheckReport check_scenario(const Scenario& scenario);

/// Per-step MPC diagnostics, one entry per sample and axis.
struct MpcStepLog {
  long k = 0;
  int axis = 0;
  Vec4 x_k = Vec4::Zero();
  double u0 = 0.0;
  double delta0 = 0.0;
  double delta1 = 0.0;
  UnifiedBounds unified;
  MpcSolution solution;
  bool fallback = false;
};

struct RunResult {
  std::vector<LogRow> rows;
  std::vector<MpcStepLog> mpc_log;
  Vec3 rmse = Vec3::Zero();
  double mean_solve_ms = 0.0;
  double max_solve_ms = 0.0;
  long ad_violations = 0;
  double max_ad_excess = -1e300;  ///< max over rows/axes of |a_d| - Delta(t)
  long thrust_clamps = 0;
  long thrust_range_violations = 0;
  long unified_empty = 0;
  long fallbacks = 0;
  long max_iter_solves = 0;
  double max_so3_defect = 0.0;
  double max_outer_norm = 0.0;
  CheckReport check;
  Scenario scenario;
};

struct RunOptions {
  bool record_timing = false;  ///< wall-clock solve time in the CSV breaks byte determinism
  bool keep_mpc_log = true;
};

RunResult run_scenario(const Scenario& scenario, const RunOptions& options = {});

/// Root mean square of the position error of one axis over all rows.
double rmse(const std::vector<LogRow>& rows, int axis);

extern const char* const kCsvHeader;

std::string format_csv(const std::vector<LogRow>& rows);
std::string format_summary_json(const RunResult& result);

/// Writes <dir>/trajectory.csv and <dir>/summary.json.
void emit(const RunResult& result, const std::string& dir);

}  // namespace quadmpc
