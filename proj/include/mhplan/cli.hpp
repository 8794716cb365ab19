#pragma once

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mhplan/bench.hpp"
#include "mhplan/environment.hpp"
#include "mhplan/expert.hpp"
#include "mhplan/feasibility.hpp"
#include "mhplan/io.hpp"
#include "mhplan/multimodal.hpp"

#ifndef MHPLAN_VERSION
#define MHPLAN_VERSION "0.0.0"
#endif

namespace mhplan::cli {

/// A run that completed its work but could not produce a usable result.
class DomainFailure : public std::runtime_error {
public:
  DomainFailure(std::string kind, const std::string &message) : std::runtime_error(message), kind_(std::move(kind)) {}
  [[nodiscard]] const std::string &kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

/// "10.3ms", "0.0103s" or a bare number of seconds.
inline double parse_duration(std::string text) {
  double scale = 1.0;
  auto ends_with = [&](std::string_view suffix) {
    return text.size() > suffix.size() && text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with("ms")) {
    scale = 1e-3;
    text.resize(text.size() - 2);
  } else if (ends_with("s")) {
    text.resize(text.size() - 1);
  }
  const double v = io::parse_double(text, "duration") * scale;
  require(std::isfinite(v) && v >= 0.0, "duration must be non-negative");
  return v;
}

inline std::vector<double> parse_list(const std::string &text) {
  std::vector<double> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    out.push_back(io::parse_double(std::string_view(text).substr(start, comma == std::string::npos ? std::string::npos : comma - start),
                                   "list"));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct GenEnvOptions {
  std::string kind = "forest";
  double density = 1.0 / 25.0;
  std::string reference = "line";
  double speed = 3.0;
  std::optional<double> gap_width;
  std::optional<double> offset;
  bool training = false;
  double spacing = 0.1;
};

/// Builds a scenario from generator options; `seed` selects the realization.
inline Scenario make_scenario(const GenEnvOptions &o, std::uint64_t seed, nlohmann::json *meta = nullptr) {
  Scenario sc;
  nlohmann::json m = {{"kind", o.kind}, {"seed", seed}};
  if (o.kind == "forest") {
    ForestSpec spec;
    spec.intensity = o.density;
    spec.reference_speed = o.speed;
    spec.surface_spacing = o.spacing;
    spec.seed = seed;
    sc = gen_forest(spec);
    m["density"] = o.density;
  } else if (o.kind == "shapes") {
    ShapeFieldSpec spec;
    spec.intensity = o.density;
    spec.reference_speed = o.speed;
    spec.surface_spacing = o.spacing;
    spec.seed = seed;
    sc = gen_shapes(spec);
    m["density"] = o.density;
  } else if (o.kind == "gap") {
    GapWallSpec spec;
    spec.gap_width = o.gap_width;
    spec.lateral_offset = o.offset;
    spec.training_draw = o.training;
    spec.reference_speed = o.speed;
    spec.surface_spacing = o.spacing;
    spec.seed = seed;
    const auto layout = resolve_gap_layout(spec);
    sc = gen_gap_wall(spec);
    m["gap_width"] = layout.gap_width;
    m["lateral_offset"] = layout.lateral_offset;
  } else if (o.kind == "pole") {
    PoleSpec spec;
    spec.reference_speed = o.speed;
    spec.surface_spacing = o.spacing;
    if (o.offset) spec.lateral_offset = *o.offset;
    sc = gen_pole(spec);
  } else {
    throw InputError("unknown environment kind '" + o.kind + "'");
  }
  if (o.reference == "circle") {
    sc.reference = circle_reference(sc.start.position, 6.0, o.speed);
    sc.goal = sc.reference[sc.reference.size() - 1].position;
    sc.start.velocity = o.speed * Vec3::UnitX();
    m["reference"] = "circle";
  } else if (o.reference != "line") {
    throw InputError("unknown reference shape '" + o.reference + "'");
  }
  if (meta) *meta = m;
  return sc;
}

namespace detail {

inline void write_or_print(const std::string &out_path, const std::string &text, std::ostream &out) {
  if (out_path.empty() || out_path == "-") out << text;
  else io::write_text(out_path, text);
}

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

/// Parses argv and runs one subcommand. Exit codes: 0 success, 1 domain
/// failure (JSON error on `err`), 2 usage or input error.
inline int run(int argc, const char *const *argv, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
  CLI::App app{"Metropolis-Hastings expert planner toolkit", "mhplan"};
  app.set_version_flag("--version", std::string("mhplan ") + MHPLAN_VERSION + " (C++" + std::to_string(__cplusplus / 100 % 100) +
                                        ", Eigen " + std::to_string(EIGEN_WORLD_VERSION) + "." +
                                        std::to_string(EIGEN_MAJOR_VERSION) + "." + std::to_string(EIGEN_MINOR_VERSION) + ")");
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::string out_path;
  unsigned threads = 1;
  app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.add_option("--out", out_path, "Output file or directory");
  app.add_option("--threads", threads, "Worker threads for bench")->check(CLI::PositiveNumber)->capture_default_str();

  GenEnvOptions gen;
  auto *gen_cmd = app.add_subcommand("gen-env", "Generate a scenario directory (scenario.json, cloud.xyz, reference.csv)");
  gen_cmd->add_option("--kind", gen.kind, "forest | shapes | gap | pole")
      ->check(CLI::IsMember({"forest", "shapes", "gap", "pole"}))
      ->required();
  gen_cmd->add_option("--density", gen.density, "Obstacles per square metre (forest, shapes)")->capture_default_str();
  gen_cmd->add_option("--reference", gen.reference, "line | circle")->check(CLI::IsMember({"line", "circle"}));
  gen_cmd->add_option("--speed", gen.speed, "Reference speed, m/s")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--gap-width", gen.gap_width, "Gap width, m (gap)");
  gen_cmd->add_option("--offset", gen.offset, "Lateral offset, m (gap, pole)");
  gen_cmd->add_flag("--training", gen.training, "Draw gap widths from the training range");
  gen_cmd->add_option("--spacing", gen.spacing, "Surface sampling spacing, m")->check(CLI::PositiveNumber);

  std::string scenario_path;
  std::size_t samples = 50000;
  std::size_t top_k = 3;
  bool no_global = false;
  auto *plan_cmd = app.add_subcommand("plan", "Label the scenario's start state with the sampling expert");
  plan_cmd->add_option("--scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  plan_cmd->add_option("--samples", samples, "Proposals per label")->check(CLI::PositiveNumber)->capture_default_str();
  plan_cmd->add_option("--top-k", top_k, "Trajectories per label")->check(CLI::PositiveNumber)->capture_default_str();
  plan_cmd->add_flag("--no-global", no_global, "Condition on the raw reference instead of a global plan");

  GenEnvOptions bench_env;
  std::string speeds_text = "3,5,7,10,12";
  std::size_t n_seeds = 10;
  std::string policy = "expert";
  std::string csv_path;
  std::string replan = "0.1s";
  bool noise = false;
  std::size_t bench_samples = 50000;
  auto *bench_cmd = app.add_subcommand("bench", "Receding-horizon success-rate sweep over speeds and seeds");
  bench_cmd->add_option("--env", bench_env.kind, "forest | shapes | gap | pole")
      ->check(CLI::IsMember({"forest", "shapes", "gap", "pole"}))
      ->capture_default_str();
  bench_cmd->add_option("--density", bench_env.density, "Obstacles per square metre")->capture_default_str();
  bench_cmd->add_option("--speeds", speeds_text, "Comma-separated speeds, m/s")->capture_default_str();
  bench_cmd->add_option("--seeds", n_seeds, "Realizations per speed")->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--policy", policy, "expert | expert_local | blind")
      ->check(CLI::IsMember({"expert", "expert_local", "blind"}))
      ->capture_default_str();
  bench_cmd->add_option("--samples", bench_samples, "Expert proposals per replan")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--replan-period", replan, "Replanning period (e.g. 0.1s, 100ms)")->capture_default_str();
  bench_cmd->add_flag("--noise", noise, "Apply the measured state-estimation and thrust noise");
  bench_cmd->add_option("--csv", csv_path, "Also write the cells as CSV");

  std::string t_p_text;
  std::string params_path;
  double grid_step_deg = 0.1;
  auto *feas_cmd = app.add_subcommand("feasibility", "Optimal roll angle and maximum avoidable speed");
  feas_cmd->add_option("--t-p", t_p_text, "Processing latency (e.g. 10.3ms)")->required();
  feas_cmd->add_option("--params", params_path, "JSON with any of s, t_s, J, T_max, c_max, r_obs")->check(CLI::ExistingFile);
  feas_cmd->add_option("--grid-step", grid_step_deg, "Roll-angle grid step, degrees")->check(CLI::PositiveNumber);

  std::string labels_path;
  FitOptions fit_opt;
  LossConfig loss_cfg;
  auto *fit_cmd = app.add_subcommand("fit-rwta", "Fit M hypotheses to a label set with the relaxed winner-takes-all loss");
  fit_cmd->add_option("--labels", labels_path, "Labels JSON (as written by plan)")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--modes", fit_opt.modes, "Number of hypotheses")->check(CLI::PositiveNumber)->capture_default_str();
  fit_cmd->add_option("--steps", fit_opt.steps, "Gradient steps")->capture_default_str();
  fit_cmd->add_option("--step-size", fit_opt.step_size, "Gradient step (0 picks 0.25 / labels)");
  fit_cmd->add_option("--epsilon", loss_cfg.epsilon, "Relaxation weight")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  auto fail = [&](const std::string &kind, const std::string &message) {
    nlohmann::json j = {{"error", kind}, {"message", message}};
    err << j.dump() << "\n";
    return 1;
  };

  try {
    if (*gen_cmd) {
      if (out_path.empty()) throw CLI::RequiredError("--out");
      nlohmann::json meta;
      const Scenario sc = make_scenario(gen, seed, &meta);
      out << io::save_scenario(out_path, sc, meta).string() << "\n";
    } else if (*plan_cmd) {
      const Scenario sc = io::load_scenario(scenario_path);
      ExpertConfig cfg;
      cfg.total_samples = samples;
      cfg.top_k = top_k;
      cfg.seed = seed;
      Expert expert(sc, cfg, !no_global);
      const MhResult r = expert.label_at(sc.start);
      nlohmann::json j = io::label_to_json(r, sc.start.position);
      j["global_plan"] = no_global ? "disabled" : (expert.conditioned_on_global() ? "used" : "blocked");
      detail::write_or_print(out_path, j.dump(2) + "\n", out);
      if (r.status != PlanStatus::ok) throw DomainFailure("infeasible", "no collision-free trajectory among the proposals");
    } else if (*bench_cmd) {
      RunConfig cfg;
      cfg.speeds = parse_list(speeds_text);
      cfg.n_seeds = n_seeds;
      cfg.policy = parse_policy(policy);
      cfg.expert.total_samples = bench_samples;
      cfg.replan_period = parse_duration(replan);
      if (noise) cfg.noise = NoiseModel{};
      cfg.master_seed = seed;
      cfg.threads = threads;
      const GenEnvOptions env = bench_env;
      const RunReport rep =
          sweep([&](std::uint64_t s) { return make_scenario(env, s); }, cfg, bench_env.kind);
      detail::write_or_print(out_path, io::report_to_json(rep).dump(2) + "\n", out);
      if (!csv_path.empty()) io::write_text(csv_path, io::report_to_csv(rep));
    } else if (*feas_cmd) {
      VehicleParams v;
      SensingParams sp;
      if (!params_path.empty()) {
        const auto j = io::read_json(params_path);
        v.J = j.value("J", v.J);
        v.T_max = j.value("T_max", v.T_max);
        v.c_max = j.value("c_max", v.c_max);
        v.r_obs = j.value("r_obs", v.r_obs);
        sp.s = j.value("s", sp.s);
        sp.t_s = j.value("t_s", sp.t_s);
      }
      sp.t_p = parse_duration(t_p_text);
      const PhiOptimum best = optimize_phi(v, sp, deg_to_rad(grid_step_deg));
      out << "t_p [ms] | phi* [deg] | t_rot [ms] | v_max [m/s]\n";
      out << detail::fixed(sp.t_p * 1e3, 1) << " | " << detail::fixed(rad_to_deg(best.phi), 1) << " | "
          << detail::fixed(best.t_rot * 1e3, 1) << " | " << detail::fixed(best.v_max, 2) << "\n";
      if (!out_path.empty()) {
        nlohmann::json j = {{"t_p", sp.t_p}, {"phi_deg", rad_to_deg(best.phi)}, {"t_rot", best.t_rot}, {"v_max", best.v_max}};
        io::write_text(out_path, j.dump(2) + "\n");
      }
    } else if (*fit_cmd) {
      const LabelSet labels = io::labels_from_json(io::read_json(labels_path));
      fit_opt.seed = seed;
      const FitResult fit = fit_hypotheses(labels, loss_cfg, fit_opt);
      detail::write_or_print(out_path, io::fit_to_json(fit, loss_cfg).dump(2) + "\n", out);
      if (fit.diverged) throw DomainFailure("diverged", "loss increased over the patience window; try a smaller --step-size");
    }
  } catch (const CLI::ParseError &e) {
    err << e.what() << "\n" << app.help();
    return 2;
  } catch (const io::FileError &e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const InputError &e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainFailure &e) {
    return fail(e.kind(), e.what());
  } catch (const ProjectionError &e) {
    return fail("projection", e.what());
  } catch (const std::exception &e) {
    return fail("internal", e.what());
  }
  return 0;
}

}  // namespace mhplan::cli
