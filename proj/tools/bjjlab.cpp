// bjjlab: run presets, sweep stability diagrams, re-analyze stored runs.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bjj/error.hpp"
#include "bjj/io.hpp"
#include "bjj/scenario.hpp"

namespace fs = std::filesystem;
using namespace bjj;

namespace {

constexpr int exit_config = 2;

std::vector<std::pair<std::string, std::string>> split_overrides(const std::vector<std::string>& items) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorCode::config, "override '" + item + "' is not key=value");
    }
    out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return out;
}

scenario::ScenarioConfig resolve(const std::string& preset, const std::string& config_file) {
  if (!preset.empty() && !config_file.empty()) {
    throw Error(ErrorCode::config, "give either --preset or --config, not both");
  }
  if (!config_file.empty()) return scenario::load_config(config_file);
  if (!preset.empty()) return scenario::resolve_preset(preset);
  throw Error(ErrorCode::config, "one of --preset or --config is required");
}

std::pair<double, double> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::config, "range '" + text + "' is not a:b");
  try {
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::config, "range '" + text + "' is not a:b");
  }
}

std::string command_line(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    out += argv[i];
  }
  return out;
}

void print_summary(const scenario::RunReport& r) {
  std::printf("%s: %s  (h=%g, h_t=%g, amplitude=%.3g, slips=%zu",
              r.preset.c_str(), scenario::label_of(r).c_str(), r.h, r.h_t, r.classification.amplitude,
              r.phase_slips.size());
  if (r.dominant_frequency) std::printf(", omega=%.5g", *r.dominant_frequency);
  if (r.lyapunov) std::printf(", lambda_max=%.4g", r.lyapunov->lambda_max);
  if (r.pole_crossings) std::printf(", pole crossings=%zu", r.pole_crossings);
  std::printf(")\n");
  for (const auto& e : r.diagnostics_errors) std::printf("  note: %s\n", e.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Driven dissipative bosonic Josephson junction lab"};
  app.require_subcommand(1);
  const std::string cmdline = command_line(argc, argv);

  auto* run = app.add_subcommand("run", "Simulate one scenario and write timeseries, report and manifest");
  std::string run_preset, run_config, run_out;
  double run_tmax = 0.0;
  std::vector<std::string> run_overrides;
  run->add_option("--preset", run_preset, "Built-in scenario name");
  run->add_option("--config", run_config, "key=value or JSON config file");
  run->add_option("--out", run_out, "Output directory (default runs/<name>)");
  run->add_option("--tmax", run_tmax, "Override the end time");
  run->add_option("--override", run_overrides, "Setting override key=value")->take_all();

  auto* sweep = app.add_subcommand("sweep", "Slow-flow stability diagram");
  std::string sweep_preset, sweep_config, sweep_out, sweep_grid, sweep_gamma, sweep_eps;
  bool sweep_simulate = false;
  unsigned sweep_threads = 0;
  std::vector<std::string> sweep_overrides;
  sweep->add_option("--preset", sweep_preset, "fig6a or fig6b");
  sweep->add_option("--config", sweep_config, "key=value or JSON config file");
  sweep->add_option("--out", sweep_out, "Output directory (default runs/<name>)");
  sweep->add_option("--grid", sweep_grid, "Grid size GxE (gamma x epsilon nodes)");
  sweep->add_option("--gamma", sweep_gamma, "gamma range a:b");
  sweep->add_option("--eps", sweep_eps, "epsilon range a:b");
  sweep->add_flag("--simulate", sweep_simulate, "Also classify every cell by nonlinear simulation (slow)");
  sweep->add_option("--threads", sweep_threads, "Worker threads (0 = all cores)");
  sweep->add_option("--override", sweep_overrides, "Setting override key=value")->take_all();

  auto* analyze = app.add_subcommand("analyze", "Re-run diagnostics on a stored timeseries");
  std::string an_in, an_preset, an_config, an_out;
  analyze->add_option("--in", an_in, "timeseries.csv")->required();
  analyze->add_option("--preset", an_preset, "Scenario the data belongs to");
  analyze->add_option("--config", an_config, "Config the data belongs to");
  analyze->add_option("--out", an_out, "Write the report here instead of stdout");

  auto* presets = app.add_subcommand("presets", "List built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  try {
    if (*presets) {
      for (const auto& name : scenario::preset_names()) {
        std::cout << scenario::describe(scenario::resolve_preset(name)) << '\n';
      }
      return 0;
    }

    if (*run) {
      auto cfg = resolve(run_preset, run_config);
      if (run_tmax > 0.0) cfg.integrator.t_end = run_tmax;
      scenario::apply_settings(cfg, split_overrides(run_overrides));
      const fs::path out = run_out.empty() ? fs::path("runs") / cfg.name : fs::path(run_out);
      const auto t0 = std::chrono::steady_clock::now();
      const auto result = scenario::run(cfg);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      io::write_timeseries(out / "timeseries.csv", result.trajectory, cfg.drive, cfg.lambda0);
      io::write_text(out / "report.json", io::report_json(result.report));
      io::write_text(out / "manifest.json", io::manifest_json(cfg, cmdline, wall));
      print_summary(result.report);
      std::printf("wrote %s\n", out.string().c_str());
      return scenario::exit_status(result.report);
    }

    if (*sweep) {
      auto cfg = resolve(sweep_preset, sweep_config);
      scenario::apply_settings(cfg, split_overrides(sweep_overrides));
      if (!sweep_grid.empty()) {
        unsigned g = 0, e = 0;
        char x = 0;
        std::istringstream is(sweep_grid);
        if (!(is >> g >> x >> e) || x != 'x' || g < 2 || e < 2) {
          throw Error(ErrorCode::config, "grid '" + sweep_grid + "' is not GxE with G, E >= 2");
        }
        cfg.sweep.gamma_n = g;
        cfg.sweep.epsilon_n = e;
      }
      if (!sweep_gamma.empty()) {
        const auto [a, b] = parse_range(sweep_gamma);
        cfg.sweep.gamma = {a, b};
      }
      if (!sweep_eps.empty()) {
        const auto [a, b] = parse_range(sweep_eps);
        cfg.sweep.epsilon = {a, b};
      }
      const fs::path out = sweep_out.empty() ? fs::path("runs") / cfg.name : fs::path(sweep_out);
      const auto t0 = std::chrono::steady_clock::now();
      const auto result = scenario::run_sweep(cfg, sweep_simulate, sweep_threads);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      io::write_diagram(out / "diagram.csv", result);
      io::write_boundary(out / "boundary.csv", result.diagram);
      io::write_line(out / "line.csv", result);
      io::write_text(out / "manifest.json", io::manifest_json(cfg, cmdline, wall));
      std::printf("%s: %zu x %zu cells, %zu boundary points\n", cfg.name.c_str(), result.diagram.gamma_axis.size(),
                  result.diagram.epsilon_axis.size(), result.diagram.boundary.size());
      for (const auto& p : result.line) {
        std::printf("  gamma=%.6g eps=%.4g: slow flow %s (lambda+=%.4g)%s%s\n", cfg.sweep.gamma_line, p.epsilon,
                    p.slow_flow_label.c_str(), p.lambda_plus, p.sim_label.empty() ? "" : ", simulation ",
                    p.sim_label.c_str());
      }
      std::printf("wrote %s\n", out.string().c_str());
      return 0;
    }

    if (*analyze) {
      scenario::ScenarioConfig cfg;
      const fs::path manifest = fs::path(an_in).parent_path() / "manifest.json";
      if (!an_preset.empty() || !an_config.empty()) {
        cfg = resolve(an_preset, an_config);
      } else if (fs::exists(manifest)) {
        std::ifstream in(manifest);
        const auto j = nlohmann::json::parse(in);
        std::vector<std::pair<std::string, std::string>> settings;
        for (const auto& [k, v] : j.at("config").items()) settings.emplace_back(k, v.get<std::string>());
        scenario::apply_settings(cfg, settings);
      } else {
        throw Error(ErrorCode::config, "no manifest.json next to " + an_in + "; pass --preset or --config");
      }
      const auto traj = io::read_timeseries(an_in, cfg.integrator.guard_delta);
      const auto report = scenario::analyze(cfg, traj);
      if (an_out.empty()) {
        std::cout << io::report_json(report);
      } else {
        io::write_text(an_out, io::report_json(report));
        print_summary(report);
      }
      return scenario::exit_status(report);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "bjjlab: %s\n", e.what());
    switch (e.code()) {
      case ErrorCode::config:
      case ErrorCode::invalid_parameter: return exit_config;
      case ErrorCode::singularity: return 3;
      case ErrorCode::inconclusive:
      case ErrorCode::guarded_estimate:
      case ErrorCode::no_oscillation:
      case ErrorCode::too_few_extrema: return 4;
      default: return 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bjjlab: %s\n", e.what());
    return 1;
  }
  return 0;
}
