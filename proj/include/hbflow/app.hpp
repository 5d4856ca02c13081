#pragma once

// Command implementations behind the `hb` executable. Each returns the
// process exit code: 0 success, 1 input error, 2 non-convergence,
// 3 property failure.

#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hbflow/channel_oracle.hpp"
#include "hbflow/config.hpp"
#include "hbflow/io.hpp"
#include "hbflow/outer_fixed_point.hpp"
#include "hbflow/properties.hpp"
#include "hbflow/validation.hpp"

namespace hbflow {

enum ExitCode : int { exit_ok = 0, exit_input_error = 1, exit_not_converged = 2, exit_property_failure = 3 };

/// Solved configuration together with the space it lives on.
struct SolveRun {
  std::shared_ptr<const MixedSpace> space;
  OuterResult result;
  std::optional<ChannelProblem> channel;  // set when the oracle applies
  std::optional<OracleComparison> oracle;

  bool converged() const { return result.report.converged && result.report.inner_converged; }
};

/// Oracle problem for the config, or nothing when the geometry or the force
/// is not a plain two-layer channel.
inline std::optional<ChannelProblem> oracle_problem(const RunConfig& cfg) {
  try {
    return cfg.channel_problem();
  } catch (const InputError&) {
    return std::nullopt;
  }
}

inline SolveRun solve_config(const RunConfig& cfg) {
  SolveRun run;
  auto mesh = std::make_shared<const TwoPhaseMesh>(cfg.load_mesh());
  run.space = std::make_shared<const MixedSpace>(mesh);
  run.result = solve_transmission(*run.space, cfg.materials, cfg.forces, cfg.inner, cfg.outer);
  run.channel = oracle_problem(cfg);
  if (run.channel) run.oracle = compare_with_oracle(*run.space, run.result.field.velocity, ChannelSolution(*run.channel));
  return run;
}

inline Summary summarize(const RunConfig& cfg, const SolveRun& run) {
  const OuterReport& r = run.result.report;
  const InnerReport& in = r.last_inner;
  const FieldNorms n = norms(*run.space, run.result.field, cfg.materials);
  Summary s;
  auto add = [&](const std::string& k, const std::string& v) { s.emplace_back(k, v); };
  auto real = [&](const std::string& k, double v) { add(k, format_real(v)); };
  auto flag = [&](const std::string& k, bool v) { add(k, v ? "true" : "false"); };
  add("velocity_dofs", std::to_string(run.space->num_velocity_dofs()));
  add("pressure_dofs", std::to_string(run.space->num_pressure_dofs()));
  add("linearization", to_string(cfg.inner.linearization));
  real("eps_final", cfg.inner.eps_final());
  flag("converged", r.converged);
  flag("inner_converged", r.inner_converged);
  add("outer_iterations", std::to_string(r.iterations));
  real("l6_difference", r.l6_difference.empty() ? 0.0 : r.l6_difference.back());
  real("l6_norm", n.l6);
  real("l2_norm", n.l2);
  real("w1p_norm_fluid1", n.w1p[0]);
  real("w1p_norm_fluid2", n.w1p[1]);
  real("v_norm", n.v_norm);
  real("korn_fluid1", r.korn[0]);
  real("korn_fluid2", r.korn[1]);
  real("radius", r.radius);
  flag("ball_ok", r.ball_ok);
  real("inner_residual", in.final_residual);
  real("divergence_norm", in.divergence_norm);
  real("interface_defect", in.interface_defect);
  real("estimate_lhs", in.estimate_lhs);
  real("estimate_rhs", in.estimate_rhs);
  real("convection_defect", in.convection_defect);
  add("battery_size", std::to_string(r.battery.slack.size()));
  real("battery_min_slack", r.battery.min_normalized_slack);
  real("battery_min_unregularized_slack", r.battery.min_normalized_exact_slack);
  flag("battery_passed", r.battery.passed);
  if (r.continuity) {
    for (std::size_t i = 0; i < r.continuity->ratio.size(); ++i)
      real("continuity_ratio_" + std::to_string(i + 1), r.continuity->ratio[i]);
    real("continuity_bound", r.continuity->bound);
    flag("continuity_bounded", r.continuity->bounded);
  }
  if (run.oracle) {
    real("oracle_l2_error", run.oracle->error_l2);
    real("oracle_relative_l2_error", run.oracle->relative());
  }
  return s;
}

/// Rows: one per outer iteration; `relaxation` is the factor applied after
/// the iteration and is empty on the final one.
inline CsvTable convergence_table(const OuterReport& r) {
  CsvTable t;
  t.header = {"iteration", "l6_difference", "v_norm", "relaxation", "inner_iterations", "inner_residual",
              "convection_defect"};
  for (std::size_t k = 0; k < r.l6_difference.size(); ++k)
    t.rows.push_back({std::to_string(k + 1), format_real(r.l6_difference[k]), format_real(r.v_norm[k]),
                      k < r.relaxation.size() ? format_real(r.relaxation[k]) : "",
                      std::to_string(r.inner_iterations[k]), format_real(r.inner_residual[k]),
                      format_real(r.convection_defect[k])});
  return t;
}

inline std::filesystem::path prepare_output(const RunConfig& cfg) {
  const std::filesystem::path dir(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

/// `hb solve`: solution.vtk, convergence.csv and summary.txt in the output dir.
inline int run_solve(const RunConfig& cfg, std::ostream& log) {
  const auto dir = prepare_output(cfg);
  const SolveRun run = solve_config(cfg);
  const OuterReport& r = run.result.report;
  write_file((dir / "solution.vtk").string(),
             [&](std::ostream& os) { write_vtk(os, sample_vertices(*run.space, run.result.field)); });
  write_file((dir / "convergence.csv").string(), [&](std::ostream& os) { write_csv(os, convergence_table(r)); });
  const Summary s = summarize(cfg, run);
  write_file((dir / "summary.txt").string(), [&](std::ostream& os) { write_summary(os, s); });

  log << "outer iterations: " << r.iterations << (r.converged ? " (converged)" : " (not converged)") << '\n';
  log << "||u||_V = " << (r.v_norm.empty() ? 0.0 : r.v_norm.back()) << ", R = " << r.radius << '\n';
  if (!r.ball_ok) log << "warning: an outer iterate left the ball ||u||_V <= R\n";
  log << "battery min slack " << r.battery.min_normalized_slack << (r.battery.passed ? "" : " (FAILED)") << '\n';
  if (run.oracle) log << "relative L2 error vs channel oracle: " << run.oracle->relative() << '\n';
  log << "wrote " << dir.string() << "/{solution.vtk,convergence.csv,summary.txt}\n";
  if (!r.inner_converged) log << "inner solver did not converge\n";
  return run.converged() ? exit_ok : exit_not_converged;
}

/// `hb verify`: prints one line per property.
inline int run_verify(const VerifyOptions& opt, std::ostream& out) {
  const auto results = run_properties(opt);
  int failed = 0;
  for (const auto& r : results) {
    out << (r.passed ? "PASS  " : "FAIL  ") << r.name << ": " << r.detail << '\n';
    if (!r.passed) ++failed;
  }
  out << results.size() - failed << '/' << results.size() << " properties passed (seed " << opt.seed << ")\n";
  return failed == 0 ? exit_ok : exit_property_failure;
}

/// `hb oracle`: exact channel profile to profile.csv.
inline int run_oracle(const RunConfig& cfg, std::ostream& log) {
  const ChannelProblem prob = cfg.channel_problem();
  const auto dir = prepare_output(cfg);
  const ChannelProfile profile = solve_channel(prob, cfg.samples);
  write_file((dir / "profile.csv").string(), [&](std::ostream& os) { write_profile_csv(os, profile); });
  const ChannelSolution sol(prob);
  log << "interface height " << prob.h1 << ", interface stress " << profile.interface_stress << '\n';
  log << "flow rate " << sol.flow_rate() << ", yield threshold f* = " << yield_threshold(prob) << '\n';
  for (const auto& [a, b] : profile.plug_intervals) log << "plug [" << a << ", " << b << "]\n";
  log << "wrote " << (dir / "profile.csv").string() << '\n';
  return exit_ok;
}

struct RefineLevel {
  int level = 0;
  double h = 0.0;
  double error = 0.0;  // relative L2 error against the oracle
  double v_norm = 0.0;
  int outer_iterations = 0;
  bool converged = false;
};

/// Relative errors below this are rounding noise of the solver; refinement
/// cannot be ordered among them.
inline constexpr double refine_noise_floor = 1e-10;

/// Solves the channel on nx * 2^l by ny * 2^l meshes, l < levels.
inline std::vector<RefineLevel> refine_study(const RunConfig& base, int levels) {
  if (levels < 2) throw InputError("refine: need at least 2 levels");
  if (base.mesh_file) throw InputError("refine: needs the channel generator, not a mesh file");
  const ChannelProblem prob = base.channel_problem();
  std::vector<RefineLevel> out;
  for (int l = 0; l < levels; ++l) {
    RunConfig cfg = base;
    cfg.channel.nx = base.channel.nx << l;
    cfg.channel.ny = base.channel.ny << l;
    const SolveRun run = solve_config(cfg);
    RefineLevel r;
    r.level = l;
    r.h = std::max(cfg.channel.length / cfg.channel.nx, 1.0 / cfg.channel.ny);
    r.error = run.oracle ? run.oracle->relative() : compare_with_oracle(*run.space, run.result.field.velocity,
                                                                        ChannelSolution(prob)).relative();
    r.v_norm = run.result.report.v_norm.empty() ? 0.0 : run.result.report.v_norm.back();
    r.outer_iterations = run.result.report.iterations;
    r.converged = run.converged();
    out.push_back(r);
  }
  return out;
}

inline CsvTable refine_table(const std::vector<RefineLevel>& levels) {
  CsvTable t;
  t.header = {"level", "h", "L2_error_vs_oracle", "V_norm", "outer_iters"};
  for (const auto& r : levels)
    t.rows.push_back({std::to_string(r.level), format_real(r.h), format_real(r.error), format_real(r.v_norm),
                      std::to_string(r.outer_iterations)});
  return t;
}

/// Index of the first level whose error rises above its predecessor's, or -1.
inline int first_error_increase(const std::vector<RefineLevel>& levels) {
  for (std::size_t l = 1; l < levels.size(); ++l)
    if (levels[l].error > levels[l - 1].error && levels[l].error > refine_noise_floor) return static_cast<int>(l);
  return -1;
}

/// `hb refine`: refine.csv in the output dir.
inline int run_refine(const RunConfig& cfg, int levels, std::ostream& log) {
  const auto dir = prepare_output(cfg);
  const auto study = refine_study(cfg, levels);
  write_file((dir / "refine.csv").string(), [&](std::ostream& os) { write_csv(os, refine_table(study)); });
  bool converged = true;
  for (const auto& r : study) {
    log << "level " << r.level << "  h = " << r.h << "  error = " << r.error << "  outer = " << r.outer_iterations;
    if (r.level > 0 && r.error > 0.0) log << "  ratio = " << study[static_cast<std::size_t>(r.level) - 1].error / r.error;
    log << '\n';
    converged = converged && r.converged;
  }
  log << "wrote " << (dir / "refine.csv").string() << '\n';
  if (!converged) return exit_not_converged;
  if (const int l = first_error_increase(study); l >= 0) {
    log << "error increased from level " << l - 1 << " to level " << l << '\n';
    return exit_property_failure;
  }
  return exit_ok;
}

}  // namespace hbflow
