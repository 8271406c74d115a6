// Scenario runner: run, check and sweep.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "quadmpc/harness.hpp"

namespace fs = std::filesystem;
using namespace quadmpc;

namespace {

void print_run(const RunResult& r) {
  std::printf("%-16s %-2s rmse = [%.4f, %.4f, %.4f] m  solve mean/max = %.3f/%.3f ms  "
              "violations(ad=%ld clamp=%ld range=%ld empty=%ld) fallbacks=%ld\n",
              r.scenario.name.c_str(), to_string(r.scenario.variant), r.rmse(0), r.rmse(1),
              r.rmse(2), r.mean_solve_ms, r.max_solve_ms, r.ad_violations, r.thrust_clamps,
              r.thrust_range_violations, r.unified_empty, r.fallbacks);
}

int cmd_check(const std::string& path) {
  const Scenario sc = load_scenario(path);
  const CheckReport rep = check_scenario(sc);
  std::printf("reference: feasible, T_bar in [%.6f, %.6f]\n", rep.reference.min_thrust,
              rep.reference.max_thrust);
  std::printf("schedule: %zu intervals, Delta min %.6f, condition %s (worst margin %.6g at k=%ld)\n",
              rep.deltas.size(), rep.delta_const, rep.schedule.feasible ? "holds" : "FAILS",
              rep.schedule.worst_margin, rep.schedule.worst_index);
  const char* names[3] = {"x", "y", "z"};
  for (int i = 0; i < 3; ++i) {
    const auto& ax = rep.axes[i];
    std::printf("axis %s: kappa=%.6g lambda=%.6g theta=%.6g delta*=%.6g L_u=%.6g | "
                "lmi=%.3g lyap=%.3g rho(A+BK)=%.6f\n",
                names[i], ax.certs.kappa, ax.certs.lambda_coeff, ax.certs.theta_coeff,
                ax.certs.delta_star, ax.certs.l_u, ax.residuals.lmi_max_eig,
                ax.residuals.lyapunov_inf, ax.residuals.closed_loop_radius);
  }
  return rep.schedule.feasible || sc.variant == Variant::kTimeInvariant ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cascade MPC quadcopter scenario runner"};
  app.require_subcommand(1);

  std::string run_path, run_out, variant;
  std::optional<std::uint64_t> seed;
  bool timing = false;
  auto* run = app.add_subcommand("run", "simulate one scenario and write CSV + JSON");
  run->add_option("--scenario", run_path, "scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "output directory")->required();
  run->add_option("--variant", variant, "tv or ti (overrides the file)")
      ->check(CLI::IsMember({"tv", "ti"}));
  run->add_option("--seed", seed, "seed for the initial-condition jitter");
  run->add_flag("--timing", timing, "record wall-clock solve times in the CSV");

  std::string check_path;
  auto* check = app.add_subcommand("check", "feasibility and certificates only");
  check->add_option("--scenario", check_path, "scenario file")->required()->check(CLI::ExistingFile);

  std::string sweep_dir, sweep_out;
  auto* sweep = app.add_subcommand("sweep", "run every *.cfg in a directory");
  sweep->add_option("--scenarios", sweep_dir, "directory of scenario files")
      ->required()
      ->check(CLI::ExistingDirectory);
  sweep->add_option("--out", sweep_out, "write artifacts to <out>/<scenario name>/");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      Scenario sc = load_scenario(run_path);
      if (!variant.empty()) sc.variant = parse_variant(variant);
      if (seed) sc.sim.seed = *seed;
      RunOptions opts;
      opts.record_timing = timing;
      opts.keep_mpc_log = false;
      const RunResult r = run_scenario(sc, opts);
      emit(r, run_out);
      print_run(r);
      return 0;
    }
    if (*check) return cmd_check(check_path);
    if (*sweep) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(sweep_dir)) {
        if (e.is_regular_file() && e.path().extension() == ".cfg") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      int failures = 0;
      for (const auto& f : files) {
        try {
          const Scenario sc = load_scenario(f.string());
          RunOptions opts;
          opts.keep_mpc_log = false;
          const RunResult r = run_scenario(sc, opts);
          if (!sweep_out.empty()) emit(r, (fs::path(sweep_out) / sc.name).string());
          print_run(r);
        } catch (const Error& e) {
          ++failures;
          std::printf("%-16s error %s\n", f.stem().c_str(), e.what());
        }
      }
      return failures == 0 ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error " << e.what() << "\n";
    return 2;
  }
  return 0;
}
