#include <doctest.h>

#include <cstring>
#include <random>

#include "oracles.hpp"
#include "quadmpc/mpc.hpp"

using namespace quadmpc;

namespace {

struct Axis {
  DiscreteAxisModel model;
  CertificateSet certs;
  PredictionModel pred_model;
};

Axis make_axis(double d, double delta) {
  Axis ax;
  ax.model = discretize_axis({d, 0.1}, 0.05);
  const std::vector<double> deltas(200, delta);
  ax.certs = synthesize_certificates(ax.model, MpcConfig{}.q_mat, 0.01, deltas);
  ax.pred_model = axis_prediction_model(ax.model);
  return ax;
}

ConstraintSchedule constant_schedule(int n_h, double delta) {
  ConstraintSchedule s;
  s.deltas.assign(n_h + 1, delta);
  return s;
}

// Scalar toy system x+ = x + u with only input bounds.
struct Toy {
  PredictionModel model;
  CertificateSet certs;
};

Toy make_toy() {
  Toy t;
  t.model.a = MatX::Constant(1, 1, 1.0);
  t.model.b = VecX::Constant(1, 1.0);
  t.certs.m_c = MatX::Constant(1, 1, 1.0);
  t.certs.m_q = MatX::Constant(1, 1, 4.0 / 3.0);
  t.certs.k_gain = Eigen::RowVectorXd::Constant(1, -0.99);
  t.certs.kappa = 0.99;
  t.certs.lambda_coeff = 5.28;
  t.certs.theta_coeff = 1.9801;
  t.certs.l_u = 2.0;
  t.certs.delta_star = 0.55;
  return t;
}

VecX random_vec(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  VecX v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

}  // namespace

TEST_CASE("condense: one step and random rollouts") {
  const auto m = discretize_axis({0.26, 0.1}, 0.05);
  const auto p1 = condense(m.a_d, m.b_d, 1);
  CHECK((p1.phi_block(0) - MatX::Identity(4, 4)).norm() == 0.0);
  CHECK((p1.phi_block(1) - m.a_d).norm() == 0.0);
  CHECK(p1.gamma_block(0).norm() == 0.0);
  CHECK((p1.gamma_block(1) - m.b_d).norm() == 0.0);

  std::mt19937_64 rng(1);
  const auto p3 = condense(m.a_d, m.b_d, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const VecX x0 = random_vec(rng, 4, 5.0);
    const VecX u = random_vec(rng, 3, 5.0);
    const auto xs = oracle::rollout(m.a_d, m.b_d, x0, u);
    for (int i = 0; i <= 3; ++i) CHECK((p3.state(i, x0, u) - xs[i]).norm() <= 1e-12);
  }
  // causality
  const auto p20 = condense(m.a_d, m.b_d, 20);
  for (int i = 0; i <= 20; ++i)
    for (int j = i; j < 20; ++j) CHECK(p20.gamma_block(i).col(j).norm() == 0.0);
}

TEST_CASE("build_constraints layout") {
  const auto m = discretize_axis({0.26, 0.1}, 0.05);
  const auto pm = axis_prediction_model(m);
  const auto p1 = condense(m.a_d, m.b_d, 1);
  const auto c1 = build_constraints(VecX::Zero(4), constant_schedule(1, 1.0), p1, pm.bounded_states);
  REQUIRE(c1.rows() == 6);
  CHECK(c1.g_mat(0, 0) == 1.0);
  CHECK(c1.g_mat(1, 0) == -1.0);
  CHECK(c1.g_mat(2, 0) == doctest::Approx(m.b_d(2)));
  CHECK(c1.g_mat(4, 0) == doctest::Approx(m.b_d(3)));
  for (int r = 0; r < 6; ++r) CHECK(c1.g_vec(r) == 1.0);

  const auto p20 = condense(m.a_d, m.b_d, 20);
  const auto c20 = build_constraints(VecX::Zero(4), constant_schedule(20, 1.0), p20, pm.bounded_states);
  CHECK(c20.rows() == 120);

  VecX bad = VecX::Zero(4);
  bad(2) = 1.5;
  CHECK_THROWS_AS(build_constraints(bad, constant_schedule(1, 1.0), p1, pm.bounded_states), Error);
  try {
    build_constraints(bad, constant_schedule(1, 1.0), p1, pm.bounded_states);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInfeasibleStart);
    CHECK(std::string(e.what()).find("component 2") != std::string::npos);
  }
}

TEST_CASE("unified bounds: corner, zero state, brute-force recursion") {
  const double al = std::exp(-0.5), be = 0.5 * std::exp(-0.5);
  const auto corner = unified_input_bounds(2.0, 2.0, 2.0, 2.0, al, be);
  CHECK(corner.tilde_plus == doctest::Approx(2.0));
  CHECK(corner.u_max == doctest::Approx(2.0));

  const auto zero = unified_input_bounds(0.0, 0.0, 2.0, 1.9, al, be);
  CHECK(zero.u_max == doctest::Approx(std::min({2.0, 1.9 / (1 - al - be), 1.9 / (1 - al)})));

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> un(-1.0, 1.0), fac(0.92, 1.08);
  for (int trial = 0; trial < 500; ++trial) {
    const double di = 3.0, dn = di * fac(rng);
    const double ad = di * un(rng), eta = di * un(rng);
    const auto ub = unified_input_bounds(ad, eta, di, dn, al, be);
    REQUIRE_FALSE(ub.empty());
    for (int j = 0; j <= 200; ++j) {
      const double u = ub.u_min + (ub.u_max - ub.u_min) * j / 200.0;
      const double ad1 = al * ad + be * eta + (1 - al - be) * u;
      const double eta1 = al * eta + (1 - al) * u;
      CHECK(std::abs(ad1) <= dn + 1e-12);
      CHECK(std::abs(eta1) <= dn + 1e-12);
      CHECK(std::abs(u) <= di + 1e-12);
    }
  }
}

TEST_CASE("objective: origin, N=1 hand expansion, gradient, convexity") {
  MpcConfig cfg;
  const Toy toy = make_toy();
  cfg.n_horizon = 1;
  cfg.q_mat = MatX::Constant(1, 1, 2.0);
  cfg.r = 0.5;
  const auto p = condense(toy.model.a, toy.model.b, 1);
  const VecX x0 = VecX::Constant(1, 0.7);
  const VecX u = VecX::Constant(1, -0.2);
  const double xn = 0.5;
  const double hand = 2.0 * 0.49 + 0.5 * 0.04 + 1.9801 * (4.0 / 3.0 * xn * xn + 5.28 * xn * xn * xn);
  CHECK(objective(x0, u, cfg, toy.certs, p).value == doctest::Approx(hand).epsilon(1e-14));

  const Axis ax = make_axis(0.42, 5.0);
  MpcConfig c20;
  const auto p20 = condense(ax.model.a_d, ax.model.b_d, 20);
  CHECK(objective(VecX::Zero(4), VecX::Zero(20), c20, ax.certs, p20).value == 0.0);

  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const VecX x = random_vec(rng, 4, 3.0);
    const VecX uu = random_vec(rng, 20, 3.0);
    const auto ev = objective(x, uu, c20, ax.certs, p20);
    auto f = [&](const VecX& v) { return objective(x, v, c20, ax.certs, p20).value; };
    const VecX g = oracle::fd_gradient(f, uu, 1e-5);
    CHECK((g - ev.gradient).norm() <= 1e-6 * ev.gradient.norm());

    const VecX u2 = random_vec(rng, 20, 3.0);
    const double mid = f(0.5 * (uu + u2));
    CHECK(mid <= 0.5 * (f(uu) + f(u2)) + 1e-9 * std::abs(f(uu) + f(u2)));
  }
}

TEST_CASE("solve: origin and determinism") {
  const Axis ax = make_axis(0.26, 5.0);
  MpcConfig cfg;
  const auto s0 = solve(VecX::Zero(4), constant_schedule(20, 5.0), cfg, ax.certs, ax.pred_model);
  CHECK(s0.status == SolveStatus::kOptimal);
  CHECK(s0.u_seq.lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK(std::abs(s0.cost) <= 1e-8);

  VecX x(4);
  x << 3.0, -1.0, 2.0, -4.0;
  const auto a = solve(x, constant_schedule(20, 5.0), cfg, ax.certs, ax.pred_model);
  const auto b = solve(x, constant_schedule(20, 5.0), cfg, ax.certs, ax.pred_model);
  CHECK(a.status == SolveStatus::kOptimal);
  CHECK(a.kkt_residual <= cfg.kkt_tol);
  CHECK(std::memcmp(a.u_seq.data(), b.u_seq.data(), sizeof(double) * 20) == 0);
  CHECK(a.cost == b.cost);

  const auto pred = condense(ax.model.a_d, ax.model.b_d, 20);
  const auto cons = build_constraints(x, constant_schedule(20, 5.0), pred, ax.pred_model.bounded_states);
  CHECK((cons.g_mat * a.u_seq - cons.g_vec).maxCoeff() <= 1e-8);
}

TEST_CASE("solve: N=2 scalar toy against a grid search") {
  const Toy toy = make_toy();
  MpcConfig cfg;
  cfg.n_horizon = 2;
  cfg.q_mat = MatX::Constant(1, 1, 1.0);
  cfg.r = 1.0;
  const auto p = condense(toy.model.a, toy.model.b, 2);
  for (double x0v : {0.3, -1.7, 4.0}) {
    const double delta = 0.5;
    const VecX x0 = VecX::Constant(1, x0v);
    const auto sol = solve(x0, constant_schedule(2, delta), cfg, toy.certs, toy.model);
    REQUIRE(sol.status == SolveStatus::kOptimal);
    // coarse grid, then a 1e-4 refinement around the best cell
    auto cost = [&](double u0, double u1) {
      VecX u(2);
      u << u0, u1;
      return objective(x0, u, cfg, toy.certs, p).value;
    };
    double best = 1e300, b0 = 0, b1 = 0;
    for (int i = 0; i <= 1000; ++i)
      for (int j = 0; j <= 1000; ++j) {
        const double u0 = -delta + 2 * delta * i / 1000.0, u1 = -delta + 2 * delta * j / 1000.0;
        const double c = cost(u0, u1);
        if (c < best) best = c, b0 = u0, b1 = u1;
      }
    for (int i = -10; i <= 10; ++i)
      for (int j = -10; j <= 10; ++j) {
        const double u0 = std::clamp(b0 + 1e-4 * i, -delta, delta);
        const double u1 = std::clamp(b1 + 1e-4 * j, -delta, delta);
        best = std::min(best, cost(u0, u1));
      }
    CHECK(std::abs(sol.cost - best) <= 1e-3);
    CHECK(sol.cost <= best + 1e-7 * (1.0 + std::abs(best)));
  }
}

TEST_CASE("solve: unconstrained quadratic regime matches the LQ batch") {
  Axis ax = make_axis(0.28, 5.0);
  ax.certs.lambda_coeff = 0.0;  // removes the cubic term
  MpcConfig cfg;
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    VecX x = random_vec(rng, 4, 1.0);
    const auto sol = solve(x, constant_schedule(20, 1e6), cfg, ax.certs, ax.pred_model);
    REQUIRE(sol.status == SolveStatus::kOptimal);
    const VecX lq = oracle::lq_batch(ax.model.a_d, ax.model.b_d, cfg.q_mat, cfg.r,
                                     ax.certs.theta_coeff * ax.certs.m_q, x, 20);
    CHECK((sol.u_seq - lq).lpNorm<Eigen::Infinity>() <= 1e-6 * std::max(1.0, lq.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("controller: hover, fallback, bounds and warm start") {
  const Axis ax = make_axis(0.26, 4.0);
  const double delta = 4.0;
  ScheduleSource src = [delta](long) { return constant_schedule(20, delta); };
  MpcController ctl(ax.pred_model, MpcConfig{}, ax.certs, src, ax.model.alpha, ax.model.beta);
  CHECK(std::abs(ctl.step(VecX::Zero(4), 0).u0) <= 1e-8);

  MpcConfig broken;
  broken.max_iter = 0;
  MpcController bad(ax.pred_model, broken, ax.certs, src, ax.model.alpha, ax.model.beta);
  VecX x(4);
  x << 0.2, -0.1, 0.0, 0.0;
  const auto r = bad.step(x, 0);
  CHECK(r.fallback);
  CHECK(bad.fallback_count() == 1);
  const double kx = (ax.certs.k_gain * x)(0);
  CHECK(r.u0 == doctest::Approx(std::clamp(kx, -delta, delta)));
  VecX big(4);
  big << 50.0, 0.0, 0.0, 0.0;
  const auto rb = bad.step(big, 1);
  CHECK(std::abs(rb.u0) <= delta);
}

TEST_CASE("closed-loop regulation on the exact discrete model") {
  const double delta = 4.0;
  const Axis ax = make_axis(0.42, delta);
  MpcConfig cfg;
  ScheduleSource src = [delta](long) { return constant_schedule(20, delta); };
  std::mt19937_64 rng(51);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> rad(0.0, 100.0), box(-delta, delta);
  for (int trial = 0; trial < 50; ++trial) {
    VecX x(4);
    x << n(rng), n(rng), 0.0, 0.0;
    x *= rad(rng) / x.norm();
    x(2) = box(rng);
    x(3) = box(rng);
    MpcController ctl(ax.pred_model, cfg, ax.certs, src, ax.model.alpha, ax.model.beta);
    double prev = std::numeric_limits<double>::infinity();
    bool monotone = true, reached = false, bounded = true;
    for (long k = 0; k < 2000; ++k) {
      const auto r = ctl.step(x, k);
      if (r.solution.cost > prev + 1e-9 * std::max(1.0, prev)) monotone = false;
      prev = r.solution.cost;
      if (std::abs(r.u0) > delta + 1e-9) bounded = false;
      x = ax.model.a_d * x + ax.model.b_d * r.u0;
      if (std::abs(x(2)) > delta + 1e-9 || std::abs(x(3)) > delta + 1e-9) bounded = false;
      if (x.norm() <= 1e-3) {
        reached = true;
        break;
      }
    }
    CHECK(reached);
    CHECK(monotone);
    CHECK(bounded);
    CHECK(ctl.fallback_count() == 0);
  }
}
