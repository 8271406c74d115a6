#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "quadmpc/common.hpp"
#include "quadmpc/flatness.hpp"
#include "quadmpc/model.hpp"
#include "quadmpc/quadsim.hpp"

namespace quadmpc {

enum class Variant { kTimeVarying, kTimeInvariant };

Variant parse_variant(const std::string& text);
const char* to_string(Variant v);

struct TrajectorySpec {
  std::string kind = "harmonic";
  std::vector<double> params;

  FlatTrajectory build() const;
};

struct ControllerSpec {
  int n_horizon = 20;
  Mat4 q_mat = Vec4(100.0, 1.0, 1.0, 1.0).asDiagonal();
  double r = 0.01;
  double h = 0.05;
  double gamma = 0.1;
  int oversample = 20;
  double kkt_tol = 1e-8;
  int max_iter = 100;
  InnerLoopGains gains;
};

struct SimSpec {
  double duration = 25.0;
  double dt = 0.001;
  std::uint64_t seed = 0;
};

/// p(0) = pos_scale .* p_bar(0) + pos_offset (+ uniform jitter from the seed),
/// v(0) = v_bar(0), R(0) = Rx(roll) Ry(pitch) Rz(yaw), w(0) = w_bar(0).
struct InitialConditionSpec {
  Vec3 pos_scale = Vec3(1.5, 0.75, 1.0);
  Vec3 pos_offset = Vec3::Zero();
  Vec3 euler_deg = Vec3(170.0, 30.0, 20.0);
  double jitter = 0.0;
};

struct Scenario {
  std::string name = "scenario";
  QuadParams quad;
  ThrustEnvelope env;
  TrajectorySpec traj;
  ControllerSpec ctrl;
  SimSpec sim;
  Variant variant = Variant::kTimeVarying;
  InitialConditionSpec init;
  /// Key/value pairs exactly as read, echoed into the run summary.
  std::map<std::string, std::string> raw;

  void validate() const;
  long mpc_steps() const;
  long plant_steps() const;
  int plant_steps_per_sample() const;
};

/// Flat `key = value` text; '#' starts a comment. Vectors are whitespace or
/// comma separated. 3x3 matrices accept 1 value (scalar * I), 3 (diagonal) or
/// 9 (row-major); inner-loop gains may end in the token `J` to scale the
/// inertia matrix.
Scenario parse_scenario(std::istream& in, const std::string& name = "scenario");
Scenario load_scenario(const std::string& path);

/// The numerical case study: circle-plus-vertical-sine trajectory, 25 s.
Scenario paper_case_scenario();

/// Hover at [2, 0, -10] with the same initial-condition rule.
Scenario hover_scenario();

}  // namespace quadmpc
