#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "quadmpc/model.hpp"

using namespace quadmpc;

namespace {

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("discretize_axis matches table entries for the case-study axis") {
  const auto m = discretize_axis({0.26, 0.1}, 0.05);
  CHECK(m.a_d(3, 3) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(m.a_d(2, 3) == doctest::Approx(0.5 * std::exp(-0.5)).epsilon(1e-14));
  CHECK(m.alpha == doctest::Approx(0.606531).epsilon(1e-6));
  CHECK(m.beta == doctest::Approx(0.303265).epsilon(1e-6));

  Eigen::MatrixXd a, ad;
  Eigen::VectorXd b, bd;
  oracle::axis_continuous(0.26, 0.1, a, b);
  oracle::zoh(a, b, 0.05, ad, bd);
  CHECK(max_abs_diff(m.a_d, ad) <= 1e-10);
  CHECK(max_abs_diff(m.b_d, bd) <= 1e-10);
}

TEST_CASE("discretize_axis agrees with the exponential oracle on random triples") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ud(0.01, 3.0), ug(0.02, 1.0), uh(0.001, 0.3);
  for (int trial = 0; trial < 100; ++trial) {
    const double d = ud(rng), gamma = ug(rng), h = uh(rng);
    const auto m = discretize_axis({d, gamma}, h);
    Eigen::MatrixXd a, ad;
    Eigen::VectorXd b, bd;
    oracle::axis_continuous(d, gamma, a, b);
    oracle::zoh(a, b, h, ad, bd);
    INFO("d=" << d << " gamma=" << gamma << " h=" << h);
    CHECK(max_abs_diff(m.a_d, ad) <= 1e-10);
    CHECK(max_abs_diff(m.b_d, bd) <= 1e-10);
  }
}

TEST_CASE("discretize_axis near d*gamma = 1 uses the exponential path") {
  for (double gamma : {1.0 / 0.26, 1.0 / 0.26 * (1 + 1e-7), 1.0 / 0.26 * (1 + 5e-3)}) {
    const auto m = discretize_axis({0.26, gamma}, 0.05);
    Eigen::MatrixXd a, ad;
    Eigen::VectorXd b, bd;
    oracle::axis_continuous(0.26, gamma, a, b);
    oracle::zoh(a, b, 0.05, ad, bd);
    CHECK(max_abs_diff(m.a_d, ad) <= 1e-10);
    CHECK(max_abs_diff(m.b_d, bd) <= 1e-10);
  }
}

TEST_CASE("discretize_axis small-h limit and invariants") {
  const auto m = discretize_axis({0.26, 0.1}, 1e-8);
  CHECK((m.a_d - Mat4::Identity()).norm() < 1e-6);
  CHECK(m.b_d.norm() < 1e-6);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(1e-3, 5.0);
  for (int i = 0; i < 200; ++i) {
    const auto d = discretize_axis({u(rng), u(rng)}, u(rng));
    CHECK(d.alpha > 0.0);
    CHECK(d.beta > 0.0);
    CHECK(d.beta <= std::exp(-1.0) + 1e-15);
    CHECK(d.alpha + d.beta <= 1.0);
  }
}

TEST_CASE("discretized axis is marginally stable and controllable") {
  const auto m = discretize_axis({0.28, 0.1}, 0.05);
  const Eigen::VectorXcd ev = m.a_d.eigenvalues();
  int unit = 0;
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(ev(i)) <= 1.0 + 1e-12);
    if (std::abs(ev(i) - 1.0) < 1e-12) ++unit;
  }
  CHECK(unit == 1);
  CHECK(is_controllable(m));
  // upper triangular
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < i; ++j) CHECK(m.a_d(i, j) == 0.0);
}

TEST_CASE("discretize_axis rejects bad parameters") {
  CHECK_THROWS_AS(discretize_axis({0.26, 0.1}, 0.0), Error);
  CHECK_THROWS_AS(discretize_axis({-0.1, 0.1}, 0.05), Error);
  CHECK_THROWS_AS(discretize_axis({0.26, 0.0}, 0.05), Error);
}

TEST_CASE("rho and delta_bound") {
  ThrustEnvelope env;
  CHECK(rho(9.81, env) == doctest::Approx(9.71).epsilon(1e-14));
  CHECK(rho(40.0, env) == doctest::Approx(5.21).epsilon(1e-14));
  const double mid = (env.t_max + env.delta_margin) / 2.0;
  CHECK(rho(mid, env) == doctest::Approx((env.t_max - env.delta_margin) / 2.0));
  CHECK(delta_bound(9.81, env) == doctest::Approx(5.6061).epsilon(1e-5));
  CHECK(delta_bound(9.81, env) == doctest::Approx(9.71 / std::sqrt(3.0)).epsilon(1e-15));
  const double dl = delta_bound(20.0, env);
  CHECK(std::sqrt(3.0) * dl == doctest::Approx(rho(20.0, env)));
  CHECK_THROWS_AS(rho(0.2, env), Error);
  CHECK_THROWS_AS(rho(45.0, env), Error);
  try {
    rho(0.2, env);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInfeasibleReference);
  }
}

TEST_CASE("envelope validation") {
  ThrustEnvelope env;
  CHECK_NOTHROW(env.validate(9.81));
  env.delta_margin = 0.6;
  CHECK_THROWS_AS(env.validate(9.81), Error);
  env = ThrustEnvelope{};
  env.t_max = 9.0;
  CHECK_THROWS_AS(env.validate(9.81), Error);
}

TEST_CASE("horizon_bounds on constant and varying profiles") {
  ThrustEnvelope env;
  const auto hover = horizon_bounds([](double) { return 9.81; }, 3, 20, 0.05, 20, env);
  REQUIRE(hover.size() == 21);
  for (double d : hover.deltas) CHECK(d == doctest::Approx(5.6061).epsilon(1e-5));

  auto sine = [](double t) { return 9.81 + std::sin(t); };
  const auto s = horizon_bounds(sine, 0, 4, 0.05, 10, env);
  double lo = 1e9;
  for (int j = 0; j <= 10; ++j) lo = std::min(lo, delta_bound(sine(0.005 * j), env));
  CHECK(s[0] == lo);

  // Increasing profile on the T - delta arm: minimum at the left endpoint.
  auto inc = [](double t) { return 5.0 + 2.0 * t; };
  const auto sched = horizon_bounds(inc, 2, 5, 0.05, 20, env);
  for (int i = 0; i <= 5; ++i) {
    const double left = (2 + i) * 0.05;
    double dense = 1e9;
    for (int j = 0; j <= 1000; ++j) dense = std::min(dense, delta_bound(inc(left + 0.05 * j / 1000.0), env));
    CHECK(sched[i] == doctest::Approx(delta_bound(inc(left), env)).epsilon(1e-14));
    CHECK(sched[i] == doctest::Approx(dense).epsilon(1e-14));
  }
  CHECK_THROWS_AS(horizon_bounds(inc, 0, 0, 0.05, 20, env), Error);
  CHECK_THROWS_AS(horizon_bounds(inc, 0, 5, 0.05, 1, env), Error);
}

TEST_CASE("interval minimum never exceeds the pointwise bound") {
  ThrustEnvelope env;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> amp(0.0, 10.0), freq(0.1, 8.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = amp(rng), w = freq(rng);
    auto prof = [a, w](double t) { return 20.0 + a * std::sin(w * t); };
    const auto sched = trajectory_schedule(prof, 40, 0.05, 20, env);
    for (std::size_t k = 0; k < sched.size(); ++k) {
      for (int j = 0; j <= 20; ++j) {
        const double t = (k + j / 20.0) * 0.05;
        CHECK(sched[k] <= delta_bound(prof(t), env) + 1e-15);
      }
    }
  }
}
