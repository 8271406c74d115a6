#include "quadmpc/scenario.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_map>

namespace quadmpc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(const std::string& value) {
  std::string v = value;
  for (char& c : v) {
    if (c == ',' || c == '[' || c == ']' || c == ';') c = ' ';
  }
  std::istringstream ss(v);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double to_double(const std::string& key, const std::string& tok) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size() || !std::isfinite(v))
    throw Error(ErrorKind::kParse, key + ": not a finite number: '" + tok + "'");
  return v;
}

std::vector<double> numbers(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& t : tokens(value)) out.push_back(to_double(key, t));
  if (out.empty()) throw Error(ErrorKind::kParse, key + ": empty value");
  return out;
}

double scalar(const std::string& key, const std::string& value) {
  auto v = numbers(key, value);
  if (v.size() != 1) throw Error(ErrorKind::kParse, key + ": expected one number");
  return v[0];
}

long integer(const std::string& key, const std::string& value) {
  const double v = scalar(key, value);
  if (v != std::floor(v) || std::abs(v) > 1e15)
    throw Error(ErrorKind::kParse, key + ": expected an integer");
  return static_cast<long>(v);
}

Vec3 vec3(const std::string& key, const std::string& value) {
  auto v = numbers(key, value);
  if (v.size() == 1) return Vec3::Constant(v[0]);
  if (v.size() != 3) throw Error(ErrorKind::kParse, key + ": expected 1 or 3 numbers");
  return Vec3(v[0], v[1], v[2]);
}

// `scale` multiplies the result when the trailing token J is present.
Mat3 mat3(const std::string& key, const std::string& value, const Mat3* inertia = nullptr) {
  auto toks = tokens(value);
  bool times_j = false;
  if (!toks.empty() && toks.back() == "J") {
    if (inertia == nullptr) throw Error(ErrorKind::kParse, key + ": 'J' suffix not allowed here");
    times_j = true;
    toks.pop_back();
  }
  std::vector<double> v;
  for (const auto& t : toks) v.push_back(to_double(key, t));
  Mat3 m;
  if (v.size() == 1) {
    m = v[0] * Mat3::Identity();
  } else if (v.size() == 3) {
    m = Vec3(v[0], v[1], v[2]).asDiagonal();
  } else if (v.size() == 9) {
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = v[i];
  } else {
    throw Error(ErrorKind::kParse, key + ": expected 1, 3 or 9 numbers");
  }
  if (times_j) m = m * (*inertia);
  return m;
}

Mat4 mat4(const std::string& key, const std::string& value) {
  auto v = numbers(key, value);
  Mat4 m;
  if (v.size() == 1) {
    m = v[0] * Mat4::Identity();
  } else if (v.size() == 4) {
    m = Vec4(v[0], v[1], v[2], v[3]).asDiagonal();
  } else if (v.size() == 16) {
    for (int i = 0; i < 16; ++i) m(i / 4, i % 4) = v[i];
  } else {
    throw Error(ErrorKind::kParse, key + ": expected 1, 4 or 16 numbers");
  }
  return m;
}

}  // namespace

Variant parse_variant(const std::string& text) {
  if (text == "tv") return Variant::kTimeVarying;
  if (text == "ti") return Variant::kTimeInvariant;
  throw Error(ErrorKind::kParse, "variant must be 'tv' or 'ti', got '" + text + "'");
}

const char* to_string(Variant v) { return v == Variant::kTimeVarying ? "tv" : "ti"; }

FlatTrajectory TrajectorySpec::build() const {
  if (kind == "hover") {
    if (params.size() != 3 && params.size() != 4)
      throw Error(ErrorKind::kParse, "traj.params for hover: px py pz [psi]");
    return hover_trajectory(Vec3(params[0], params[1], params[2]),
                            params.size() == 4 ? params[3] : 0.0);
  }
  if (kind == "harmonic") {
    if (params.size() != 14)
      throw Error(ErrorKind::kParse,
                  "traj.params for harmonic: 4 numbers (center a_cos a_sin omega) per axis, "
                  "then psi0 psi_rate");
    std::array<HarmonicAxis, 3> axes;
    for (int i = 0; i < 3; ++i) {
      axes[i] = {params[4 * i], params[4 * i + 1], params[4 * i + 2], params[4 * i + 3]};
    }
    return harmonic_trajectory(axes, params[12], params[13]);
  }
  throw Error(ErrorKind::kParse, "unknown traj.kind '" + kind + "'");
}

void Scenario::validate() const {
  quad.validate();
  env.validate(quad.g);
  if (std::abs(env.t_max - quad.t_max) > 0.0)
    throw Error(ErrorKind::kInvalidParameter, "envelope T_max differs from quad.Tmax");
  if (!(ctrl.h > 0.0) || !(ctrl.gamma > 0.0))
    throw Error(ErrorKind::kInvalidParameter, "ctrl.h and ctrl.gamma must be positive");
  if (ctrl.n_horizon < 1) throw Error(ErrorKind::kInvalidParameter, "ctrl.N must be >= 1");
  if (ctrl.oversample < 2) throw Error(ErrorKind::kInvalidParameter, "ctrl.oversample must be >= 2");
  if (!(ctrl.r > 0.0)) throw Error(ErrorKind::kInvalidParameter, "ctrl.R must be positive");
  ctrl.gains.validate();
  if (!(sim.duration > 0.0)) throw Error(ErrorKind::kInvalidParameter, "sim.duration must be positive");
  if (!(sim.dt > 0.0) || sim.dt > ctrl.h)
    throw Error(ErrorKind::kInvalidParameter, "sim.dt must lie in (0, ctrl.h]");
  const double ratio = ctrl.h / sim.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw Error(ErrorKind::kInvalidParameter, "ctrl.h must be an integer multiple of sim.dt");
  const double n = sim.duration / sim.dt;
  if (std::abs(n - std::round(n)) > 1e-9 * n)
    throw Error(ErrorKind::kInvalidParameter, "sim.duration must be a multiple of sim.dt");
  if (!(init.jitter >= 0.0)) throw Error(ErrorKind::kInvalidParameter, "init.jitter must be >= 0");
  traj.build();
}

int Scenario::plant_steps_per_sample() const {
  return static_cast<int>(std::lround(ctrl.h / sim.dt));
}

long Scenario::plant_steps() const { return std::lround(sim.duration / sim.dt); }

long Scenario::mpc_steps() const {
  const long per = plant_steps_per_sample();
  return (plant_steps() + per - 1) / per;
}

Scenario parse_scenario(std::istream& in, const std::string& name) {
  Scenario sc;
  sc.name = name;
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": empty key or value");
    if (kv.count(key))
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": duplicate key " + key);
    kv[key] = value;
  }

  // Inertia first: inner-loop gains may be expressed in multiples of J.
  if (auto it = kv.find("quad.J"); it != kv.end()) sc.quad.inertia = mat3(it->first, it->second);
  sc.ctrl.gains.k_w = 30.0 * sc.quad.inertia;
  sc.ctrl.gains.k_r = 70.0 * sc.quad.inertia;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::unordered_map<std::string, Setter> setters = {
      {"name", [&](auto&, auto& v) { sc.name = v; }},
      {"quad.g", [&](auto& k, auto& v) { sc.quad.g = scalar(k, v); }},
      {"quad.J", [](auto&, auto&) {}},
      {"quad.D", [&](auto& k, auto& v) { sc.quad.drag = vec3(k, v); }},
      {"quad.A", [&](auto& k, auto& v) { sc.quad.a_mat = mat3(k, v); }},
      {"quad.C", [&](auto& k, auto& v) { sc.quad.c_mat = mat3(k, v); }},
      {"quad.tau_g", [&](auto& k, auto& v) { sc.quad.tau_g = vec3(k, v); }},
      {"quad.Tmax", [&](auto& k, auto& v) { sc.quad.t_max = scalar(k, v); }},
      {"env.delta", [&](auto& k, auto& v) { sc.env.delta_margin = scalar(k, v); }},
      {"env.eps1", [&](auto& k, auto& v) { sc.env.eps1 = scalar(k, v); }},
      {"env.eps2", [&](auto& k, auto& v) { sc.env.eps2 = scalar(k, v); }},
      {"traj.kind", [&](auto&, auto& v) { sc.traj.kind = v; }},
      {"traj.params", [&](auto& k, auto& v) { sc.traj.params = numbers(k, v); }},
      {"ctrl.h", [&](auto& k, auto& v) { sc.ctrl.h = scalar(k, v); }},
      {"ctrl.gamma", [&](auto& k, auto& v) { sc.ctrl.gamma = scalar(k, v); }},
      {"ctrl.N", [&](auto& k, auto& v) { sc.ctrl.n_horizon = static_cast<int>(integer(k, v)); }},
      {"ctrl.Q", [&](auto& k, auto& v) { sc.ctrl.q_mat = mat4(k, v); }},
      {"ctrl.R", [&](auto& k, auto& v) { sc.ctrl.r = scalar(k, v); }},
      {"ctrl.oversample",
       [&](auto& k, auto& v) { sc.ctrl.oversample = static_cast<int>(integer(k, v)); }},
      {"ctrl.kkt_tol", [&](auto& k, auto& v) { sc.ctrl.kkt_tol = scalar(k, v); }},
      {"ctrl.max_iter",
       [&](auto& k, auto& v) { sc.ctrl.max_iter = static_cast<int>(integer(k, v)); }},
      {"inner.Kw", [&](auto& k, auto& v) { sc.ctrl.gains.k_w = mat3(k, v, &sc.quad.inertia); }},
      {"inner.KR", [&](auto& k, auto& v) { sc.ctrl.gains.k_r = mat3(k, v, &sc.quad.inertia); }},
      {"inner.k", [&](auto& k, auto& v) { sc.ctrl.gains.k_vec = vec3(k, v); }},
      {"sim.duration", [&](auto& k, auto& v) { sc.sim.duration = scalar(k, v); }},
      {"sim.dt", [&](auto& k, auto& v) { sc.sim.dt = scalar(k, v); }},
      {"sim.seed",
       [&](auto& k, auto& v) {
         try {
           std::size_t used = 0;
           sc.sim.seed = std::stoull(v, &used);
           if (used != v.size()) throw std::invalid_argument("trailing");
         } catch (const std::exception&) {
           throw Error(ErrorKind::kParse, k + ": expected an unsigned 64-bit integer");
         }
       }},
      {"variant", [&](auto&, auto& v) { sc.variant = parse_variant(v); }},
      {"init.pos_scale", [&](auto& k, auto& v) { sc.init.pos_scale = vec3(k, v); }},
      {"init.pos_offset", [&](auto& k, auto& v) { sc.init.pos_offset = vec3(k, v); }},
      {"init.euler_deg", [&](auto& k, auto& v) { sc.init.euler_deg = vec3(k, v); }},
      {"init.jitter", [&](auto& k, auto& v) { sc.init.jitter = scalar(k, v); }},
  };

  for (const auto& [key, value] : kv) {
    auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorKind::kParse, "unknown key '" + key + "'");
    it->second(key, value);
  }
  sc.env.t_max = sc.quad.t_max;
  sc.raw = std::move(kv);
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kParse, "cannot open scenario file " + path);
  std::string stem = path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (auto dot = stem.rfind('.'); dot != std::string::npos && dot > 0) stem.resize(dot);
  return parse_scenario(in, stem);
}

Scenario paper_case_scenario() {
  Scenario sc;
  sc.name = "paper_case";
  sc.traj.kind = "harmonic";
  sc.traj.params = {0.0, 2.0, 0.0, 4.0,    // x = 2 cos 4t
                    0.0, 0.0, 2.0, 4.0,    // y = 2 sin 4t
                    -10.0, 0.0, 2.0, 2.0,  // z = -10 + 2 sin 2t
                    0.0, 0.2};
  sc.ctrl.oversample = 50;
  sc.validate();
  return sc;
}

Scenario hover_scenario() {
  Scenario sc;
  sc.name = "hover";
  sc.traj.kind = "hover";
  sc.traj.params = {2.0, 0.0, -10.0, 0.0};
  sc.sim.duration = 15.0;
  sc.validate();
  return sc;
}

}  // namespace quadmpc
