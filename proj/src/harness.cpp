#include "quadmpc/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

namespace quadmpc {

namespace {

constexpr double kBoundTol = 1e-9;

ThrustProfile thrust_profile(const FlatTrajectory& traj, const QuadParams& params) {
  return [traj, params](double t) { return reference_thrust(traj, t, params); };
}

void append_number(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

nlohmann::json matrix_json(const MatX& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

QuadState initial_state(const Scenario& sc, const ReferenceSample& ref0) {
  QuadState s;
  s.p = sc.init.pos_scale.cwiseProduct(ref0.p_bar) + sc.init.pos_offset;
  if (sc.init.jitter > 0.0) {
    std::mt19937_64 rng(sc.sim.seed);
    std::uniform_real_distribution<double> dist(-sc.init.jitter, sc.init.jitter);
    for (int i = 0; i < 3; ++i) s.p(i) += dist(rng);
  }
  s.v = ref0.v_bar;
  const Vec3 e = sc.init.euler_deg * (M_PI / 180.0);
  s.r = rot_x(e(0)) * rot_y(e(1)) * rot_z(e(2));
  s.w = ref0.w_bar;
  return s;
}

}  // namespace

CheckReport check_scenario(const Scenario& sc) {
  sc.validate();
  CheckReport rep;
  const FlatTrajectory traj = sc.traj.build();
  const double horizon_time = sc.sim.duration + (sc.ctrl.n_horizon + 1) * sc.ctrl.h;
  const int grid = static_cast<int>(std::ceil(horizon_time / 1e-3)) + 1;
  rep.reference = check_reference_feasibility(traj, sc.quad, sc.env, 0.0, horizon_time, grid);
  if (!rep.reference.feasible) {
    throw Error(ErrorKind::kInfeasibleReference,
                "reference thrust leaves the envelope (first violation at t = " +
                    std::to_string(rep.reference.violation_times.front()) + " s)");
  }

  const long n_intervals = sc.mpc_steps() + sc.ctrl.n_horizon + 1;
  rep.deltas = trajectory_schedule(thrust_profile(traj, sc.quad), n_intervals, sc.ctrl.h,
                                   sc.ctrl.oversample, sc.env);
  rep.delta_const = *std::min_element(rep.deltas.begin(), rep.deltas.end());
  rep.schedule = feasibility_condition(rep.deltas, sc.ctrl.h, sc.ctrl.gamma);

  std::vector<double> cert_deltas = rep.deltas;
  if (sc.variant == Variant::kTimeInvariant) {
    std::fill(cert_deltas.begin(), cert_deltas.end(), rep.delta_const);
  } else if (!rep.schedule.feasible) {
    throw Error(ErrorKind::kFeasibilityViolated,
                "sampled bound schedule fails Delta(k+1) > (alpha + beta) Delta(k) at k = " +
                    std::to_string(rep.schedule.worst_index));
  }

  for (int i = 0; i < 3; ++i) {
    AxisCertificates& ax = rep.axes[i];
    ax.model = discretize_axis(ContinuousAxisModel{sc.quad.drag(i), sc.ctrl.gamma}, sc.ctrl.h);
    ax.certs = synthesize_certificates(ax.model, sc.ctrl.q_mat, sc.ctrl.r, cert_deltas);
    ax.residuals = certificate_residuals(ax.model.a_d, ax.model.b_d, ax.certs);
  }
  return rep;
}

RunResult run_scenario(const Scenario& sc, const RunOptions& options) {
  RunResult res;
  res.scenario = sc;
  res.check = check_scenario(sc);
  const CheckReport& chk = res.check;

  const FlatTrajectory traj = sc.traj.build();
  const bool tv = sc.variant == Variant::kTimeVarying;
  const int n_h = sc.ctrl.n_horizon;
  const double h = sc.ctrl.h;
  const double gamma = sc.ctrl.gamma;
  const double dt = sc.sim.dt;

  MpcConfig cfg;
  cfg.n_horizon = n_h;
  cfg.q_mat = sc.ctrl.q_mat;
  cfg.r = sc.ctrl.r;
  cfg.kkt_tol = sc.ctrl.kkt_tol;
  cfg.max_iter = sc.ctrl.max_iter;

  const std::vector<double>& deltas = chk.deltas;
  const double delta_const = chk.delta_const;
  ScheduleSource source = [&deltas, delta_const, tv, n_h](long k) {
    ConstraintSchedule s;
    s.deltas.resize(n_h + 1);
    for (int i = 0; i <= n_h; ++i) {
      const std::size_t idx = std::min(static_cast<std::size_t>(k + i), deltas.size() - 1);
      s.deltas[i] = tv ? deltas[idx] : delta_const;
    }
    return s;
  };

  std::vector<MpcController> controllers;
  for (int i = 0; i < 3; ++i) {
    const auto& ax = chk.axes[i];
    controllers.emplace_back(axis_prediction_model(ax.model), cfg, ax.certs, source,
                             ax.model.alpha, ax.model.beta);
  }

  const long n_plant = sc.plant_steps();
  const int per = sc.plant_steps_per_sample();
  res.rows.reserve(n_plant + 1);

  QuadState state = initial_state(sc, sample_reference(traj, 0.0, sc.quad, sc.env));
  ThrustClampCounter clamps;

  std::array<OuterAxisState, 3> x_k{};  // outer state latched at the last sample
  Vec3 filt_ad = Vec3::Zero();
  Vec3 filt_eta = Vec3::Zero();
  Vec3 u = Vec3::Zero();
  Vec3 j_star = Vec3::Zero();
  double t_k = 0.0;
  double solve_total = 0.0;
  long solve_count = 0;

  for (long n = 0; n <= n_plant; ++n) {
    const double t = n * dt;
    const ReferenceSample ref = sample_reference(traj, t, sc.quad, sc.env);
    const ErrorCoords ec = error_coords(state, ref);
    double step_ms = 0.0;

    if (n % per == 0) {
      const long k = n / per;
      t_k = t;
      for (int i = 0; i < 3; ++i) {
        x_k[i] = OuterAxisState{ec.p_tilde(i), ec.v_tilde(i), filt_ad(i), filt_eta(i)};
        const StepResult sr = controllers[i].step(x_k[i].as_vector(), k);
        u(i) = sr.u0;
        j_star(i) = sr.fallback ? std::nan("") : sr.solution.cost;
        step_ms += sr.solve_ms;
        if (sr.fallback) ++res.fallbacks;
        if (sr.solution.status == SolveStatus::kMaxIter) ++res.max_iter_solves;
        const auto& m = chk.axes[i].model;
        UnifiedBounds ub = unified_input_bounds(x_k[i].a_d, x_k[i].eta, sr.schedule[0],
                                                sr.schedule[1], m.alpha, m.beta);
        if (ub.empty()) ++res.unified_empty;
        if (options.keep_mpc_log) {
          MpcStepLog lg;
          lg.k = k;
          lg.axis = i;
          lg.x_k = x_k[i].as_vector();
          lg.u0 = sr.u0;
          lg.delta0 = sr.schedule[0];
          lg.delta1 = sr.schedule[1];
          lg.unified = ub;
          lg.solution = sr.solution;
          lg.fallback = sr.fallback;
          res.mpc_log.push_back(std::move(lg));
        }
      }
      solve_total += step_ms;
      ++solve_count;
      res.max_solve_ms = std::max(res.max_solve_ms, step_ms);
    }

    // Filter states along the held input, exact at every plant step.
    const double s = (n - (n / per) * per) * dt;
    Vec3 a_d;
    Vec3 eta;
    for (int i = 0; i < 3; ++i) {
      a_d(i) = ad_intersample(x_k[i], u(i), s, gamma);
      eta(i) = eta_intersample(x_k[i], u(i), s, gamma);
    }
    // Values at the next sample instant are what the next solve latches.
    if ((n + 1) % per == 0) {
      for (int i = 0; i < 3; ++i) {
        filt_ad(i) = ad_intersample(x_k[i], u(i), h, gamma);
        filt_eta(i) = eta_intersample(x_k[i], u(i), h, gamma);
      }
    }

    const double bound = tv ? delta_bound(ref.t_bar, sc.env) : delta_const;
    const double thrust = thrust_command(a_d, ref);
    const DesiredRates des = desired_rates(x_k, u, t_k, t, traj, sc.quad, gamma);
    const Vec3 tau =
        inner_loop_torque(state, ref, des.r_d, des.w_d, des.w_d_dot, sc.ctrl.gains, sc.quad);

    for (int i = 0; i < 3; ++i) {
      const double excess = std::abs(a_d(i)) - bound;
      res.max_ad_excess = std::max(res.max_ad_excess, excess);
      if (excess > kBoundTol) ++res.ad_violations;
    }
    if (!(thrust > 0.0) || thrust > sc.quad.t_max) ++res.thrust_range_violations;

    LogRow row;
    row.t = t;
    row.p = state.p;
    row.p_bar = ref.p_bar;
    row.err = ec.p_tilde;
    row.a_d = a_d;
    row.delta_t = bound;
    row.thrust = thrust;
    row.tau = tau;
    row.u = u;
    row.j_star = j_star;
    row.solve_ms = options.record_timing ? step_ms : 0.0;
    row.v_err = ec.v_tilde;
    row.eta = eta;
    const AttitudeError ae = attitude_error(state, ref, des.r_d, des.w_d);
    row.attitude_dev = (ae.r_e - Mat3::Identity()).norm();
    row.rate_err = ae.w_e.norm();
    double outer = 0.0;
    for (int i = 0; i < 3; ++i) {
      outer += ec.p_tilde(i) * ec.p_tilde(i) + ec.v_tilde(i) * ec.v_tilde(i) + a_d(i) * a_d(i) +
               eta(i) * eta(i);
    }
    res.max_outer_norm = std::max(res.max_outer_norm, std::sqrt(outer));
    res.rows.push_back(row);

    if (n < n_plant) {
      state = rk4_step(state, thrust, tau, dt, sc.quad, &clamps);
      res.max_so3_defect = std::max(res.max_so3_defect, so3_defect(state.r));
    }
  }

  res.thrust_clamps = clamps.events;
  res.mean_solve_ms = solve_count > 0 ? solve_total / solve_count : 0.0;
  for (int i = 0; i < 3; ++i) res.rmse(i) = rmse(res.rows, i);
  return res;
}

double rmse(const std::vector<LogRow>& rows, int axis) {
  if (axis < 0 || axis > 2) throw Error(ErrorKind::kInvalidParameter, "axis must be 0, 1 or 2");
  if (rows.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& r : rows) acc += r.err(axis) * r.err(axis);
  return std::sqrt(acc / static_cast<double>(rows.size()));
}

const char* const kCsvHeader =
    "t,px,py,pz,pbx,pby,pbz,ex,ey,ez,adx,ady,adz,delta_t,T,tau1,tau2,tau3,u1,u2,u3,"
    "Jstar_x,Jstar_y,Jstar_z,solve_ms";

std::string format_csv(const std::vector<LogRow>& rows) {
  std::string out = kCsvHeader;
  out += '\n';
  out.reserve(rows.size() * 25 * 24 + out.size());
  auto put3 = [&out](const Vec3& v) {
    for (int i = 0; i < 3; ++i) {
      out += ',';
      append_number(out, v(i));
    }
  };
  for (const auto& r : rows) {
    append_number(out, r.t);
    put3(r.p);
    put3(r.p_bar);
    put3(r.err);
    put3(r.a_d);
    out += ',';
    append_number(out, r.delta_t);
    out += ',';
    append_number(out, r.thrust);
    put3(r.tau);
    put3(r.u);
    put3(r.j_star);
    out += ',';
    append_number(out, r.solve_ms);
    out += '\n';
  }
  return out;
}

std::string format_summary_json(const RunResult& res) {
  using nlohmann::json;
  const Scenario& sc = res.scenario;
  json j;
  j["scenario"] = sc.name;
  j["variant"] = to_string(sc.variant);
  j["rmse"] = {res.rmse(0), res.rmse(1), res.rmse(2)};
  j["solve_time_ms"] = {{"mean", res.mean_solve_ms}, {"max", res.max_solve_ms}};
  j["violations"] = {{"ad_bound", res.ad_violations},
                     {"max_ad_excess", res.max_ad_excess},
                     {"thrust_clamp", res.thrust_clamps},
                     {"thrust_range", res.thrust_range_violations},
                     {"unified_empty", res.unified_empty},
                     {"fallback", res.fallbacks},
                     {"max_iter", res.max_iter_solves}};
  j["max_so3_defect"] = res.max_so3_defect;
  j["max_outer_norm"] = res.max_outer_norm;
  j["rows"] = res.rows.size();

  json feas;
  feas["reference_feasible"] = res.check.reference.feasible;
  feas["min_thrust"] = res.check.reference.min_thrust;
  feas["max_thrust"] = res.check.reference.max_thrust;
  feas["schedule_feasible"] = res.check.schedule.feasible;
  feas["worst_margin"] = res.check.schedule.worst_margin;
  feas["worst_index"] = res.check.schedule.worst_index;
  feas["delta_min"] = res.check.delta_const;
  j["feasibility"] = feas;

  const char* names[3] = {"x", "y", "z"};
  json certs;
  for (int i = 0; i < 3; ++i) {
    const auto& ax = res.check.axes[i];
    json c;
    c["kappa"] = ax.certs.kappa;
    c["lambda"] = ax.certs.lambda_coeff;
    c["theta"] = ax.certs.theta_coeff;
    c["delta_star"] = ax.certs.delta_star;
    c["l_u"] = ax.certs.l_u;
    c["k_gain"] = matrix_json(ax.certs.k_gain);
    c["m_c"] = matrix_json(ax.certs.m_c);
    c["m_q"] = matrix_json(ax.certs.m_q);
    c["residuals"] = {{"lmi_max_eig", ax.residuals.lmi_max_eig},
                      {"lyapunov_inf", ax.residuals.lyapunov_inf},
                      {"closed_loop_radius", ax.residuals.closed_loop_radius}};
    certs[names[i]] = c;
  }
  j["certificates"] = certs;

  json cfg;
  cfg["file"] = sc.raw;
  cfg["quad"] = {{"g", sc.quad.g},
                 {"J", matrix_json(sc.quad.inertia)},
                 {"D_mass_normalized", {sc.quad.drag(0), sc.quad.drag(1), sc.quad.drag(2)}},
                 {"A", matrix_json(sc.quad.a_mat)},
                 {"C", matrix_json(sc.quad.c_mat)},
                 {"tau_g", {sc.quad.tau_g(0), sc.quad.tau_g(1), sc.quad.tau_g(2)}},
                 {"Tmax", sc.quad.t_max}};
  cfg["env"] = {{"delta", sc.env.delta_margin}, {"eps1", sc.env.eps1}, {"eps2", sc.env.eps2}};
  cfg["traj"] = {{"kind", sc.traj.kind}, {"params", sc.traj.params}};
  cfg["ctrl"] = {{"h", sc.ctrl.h},
                 {"gamma", sc.ctrl.gamma},
                 {"N", sc.ctrl.n_horizon},
                 {"Q", matrix_json(sc.ctrl.q_mat)},
                 {"R", sc.ctrl.r},
                 {"oversample", sc.ctrl.oversample},
                 {"kkt_tol", sc.ctrl.kkt_tol},
                 {"max_iter", sc.ctrl.max_iter}};
  cfg["inner"] = {{"Kw", matrix_json(sc.ctrl.gains.k_w)},
                  {"KR", matrix_json(sc.ctrl.gains.k_r)},
                  {"k", {sc.ctrl.gains.k_vec(0), sc.ctrl.gains.k_vec(1), sc.ctrl.gains.k_vec(2)}}};
  cfg["sim"] = {{"duration", sc.sim.duration}, {"dt", sc.sim.dt}, {"seed", sc.sim.seed}};
  cfg["init"] = {
      {"pos_scale", {sc.init.pos_scale(0), sc.init.pos_scale(1), sc.init.pos_scale(2)}},
      {"pos_offset", {sc.init.pos_offset(0), sc.init.pos_offset(1), sc.init.pos_offset(2)}},
      {"euler_deg", {sc.init.euler_deg(0), sc.init.euler_deg(1), sc.init.euler_deg(2)}},
      {"jitter", sc.init.jitter}};
  j["config"] = cfg;
  return j.dump(2) + "\n";
}

void emit(const RunResult& result, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  {
    std::ofstream csv(base / "trajectory.csv", std::ios::binary);
    if (!csv) throw Error(ErrorKind::kParse, "cannot write " + (base / "trajectory.csv").string());
    csv << format_csv(result.rows);
  }
  std::ofstream js(base / "summary.json", std::ios::binary);
  if (!js) throw Error(ErrorKind::kParse, "cannot write " + (base / "summary.json").string());
  js << format_summary_json(result);
}

}  // namespace quadmpc
