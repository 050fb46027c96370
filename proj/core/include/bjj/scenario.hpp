#pragma once

// Preset scenarios, configuration and the run/sweep drivers behind the CLI.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bjj/diagnostics.hpp"
#include "bjj/linear_theory.hpp"
#include "bjj/model.hpp"
#include "bjj/ode.hpp"
#include "bjj/stability.hpp"

namespace bjj::scenario {

enum class Kind { simulation, sweep };

struct SweepSpec {
  slowflow::Range gamma{0.15, 0.35};
  slowflow::Range epsilon{0.0, 0.1};
  std::size_t gamma_n = 200;
  std::size_t epsilon_n = 200;
  double omega_p = 4.95;
  double kappa = 0.12;
  double eta_over_N = 0.02;
  // Line at which the --simulate pass runs the nonlinear model.
  double gamma_line = 0.245;
  double lambda0 = 5.0;
  linear::ModeKind mode = linear::ModeKind::zero_phase;
  std::vector<double> simulate_epsilons;
};

struct ScenarioConfig {
  std::string name = "custom";
  Kind kind = Kind::simulation;

  double lambda0 = 5.0;
  double eta_over_N = 0.02;
  Drive drive{0.0, 4.95};
  State initial{0.5, 0.0};
  IntegratorSettings integrator;

  linear::ModeKind mode = linear::ModeKind::zero_phase;
  linear::KappaConvention kappa_convention = linear::KappaConvention::zero_state;

  diag::ClassifierSettings classifier;
  diag::SlipSettings slips;  // natural_period filled from the mode when unset
  bool slip_period_set = false;
  bool lyapunov = false;
  diag::LyapunovSettings lyapunov_settings;
  // Linear-regime cap on |w| for the growth fit of an unstable steady state.
  double growth_fit_cap = 0.1;
  // Early window for the transient mean imbalance; unset means four natural
  // periods of the chosen mode.
  std::optional<double> early_window;
  std::optional<double> quoted_threshold;  // reference threshold to compare against
  std::vector<std::string> notes;

  SweepSpec sweep;
};

struct Comparison {
  std::string name;
  double measured = 0.0;
  double reference = 0.0;
  double rel_error = 0.0;
};

Comparison compare(std::string name, double measured, double reference);

struct RunReport {
  std::string preset;
  std::string mode;
  std::string kappa_convention;
  std::string singularity_policy;

  double lambda0 = 0.0;
  double eta_over_N = 0.0;
  double h = 0.0;
  double omega_p = 0.0;
  double w0 = 0.0;
  double phi0 = 0.0;
  double t_end = 0.0;

  double kappa = 0.0;
  double omega_j = 0.0;
  double h_t = 0.0;
  double gamma = 0.0;
  double epsilon = 0.0;
  std::optional<double> rho;
  std::optional<double> c;
  std::optional<std::string> slow_flow_label;
  std::optional<double> slow_flow_lambda_plus;

  diag::Classification classification;
  std::string terminated_by;
  std::optional<double> guard_time;
  std::size_t pole_crossings = 0;

  std::optional<double> dominant_frequency;
  std::optional<double> frequency_resolution;
  std::optional<double> transient_frequency;
  std::optional<double> transient_envelope_rate;
  std::optional<double> growth_rate;  // linear-regime envelope growth before any slip

  std::vector<diag::PhaseSlipEvent> phase_slips;
  double mean_imbalance_early = 0.0;
  double mean_imbalance_late = 0.0;

  std::optional<diag::LyapunovEstimate> lyapunov;
  std::vector<Comparison> comparisons;
  std::vector<std::string> notes;
  std::vector<std::string> diagnostics_errors;
  // False when a diagnostic the label depends on failed.
  bool conclusive = true;
};

/// Names of the built-in scenarios in table order.
std::vector<std::string> preset_names();

/// Throws Error(config) listing the available names for an unknown preset.
ScenarioConfig resolve_preset(const std::string& name);

/// One-line parameter summary of a preset.
std::string describe(const ScenarioConfig& config);

/// Applies one key=value setting. Unknown keys and malformed values throw
/// Error(config).
void apply_setting(ScenarioConfig& config, const std::string& key, const std::string& value);

/// Applies a batch: `preset` first, `epsilon` last (it needs omega_p), the
/// rest in the order given.
void apply_settings(ScenarioConfig& config, const std::vector<std::pair<std::string, std::string>>& settings);

/// Parses a flat key=value file or a JSON object. A `preset` key, when
/// present, is applied first and the rest override it.
ScenarioConfig load_config(const std::filesystem::path& file);

/// Flat key=value echo of every setting, in a fixed order.
std::vector<std::pair<std::string, std::string>> settings_echo(const ScenarioConfig& config);

/// Simulates the scenario and runs all diagnostics.
struct RunResult {
  Trajectory trajectory;
  RunReport report;
};
RunResult run(const ScenarioConfig& config);

/// Diagnostics over an existing trajectory (shared by run and analyze).
RunReport analyze(const ScenarioConfig& config, const Trajectory& trajectory);

/// Process exit status for a finished report: 3 on a guard stop, 4 when a
/// diagnostic needed for the label was inconclusive, 0 otherwise.
int exit_status(const RunReport& report);

struct LinePoint {
  double epsilon = 0.0;
  std::string slow_flow_label;
  double lambda_plus = 0.0;
  std::string sim_label;
  std::optional<double> lyapunov;
};

struct SweepResult {
  slowflow::StabilityDiagram diagram;
  // Per-cell nonlinear labels (same layout as the diagram); empty unless
  // simulated.
  std::vector<std::string> sim_labels;
  // Marked points on gamma_line, simulated only with `simulate`.
  std::vector<LinePoint> line;
};

/// Slow-flow diagram; with `simulate`, every grid cell and every marked line
/// point is also integrated with the nonlinear model, in parallel.
SweepResult run_sweep(const ScenarioConfig& config, bool simulate, unsigned threads = 0);

/// Nonlinear simulation config for the diagram point (gamma, epsilon): the
/// interaction is chosen so the mode frequency gives gamma, h = epsilon omega_p^2.
ScenarioConfig sweep_point(const ScenarioConfig& sweep_config, double gamma, double epsilon);

/// Label of a finished run as written to files: the regime, or
/// "inconclusive" when diagnostics could not decide.
std::string label_of(const RunReport& report);

}  // namespace bjj::scenario
