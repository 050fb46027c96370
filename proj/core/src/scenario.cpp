#include "bjj/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bjj/error.hpp"
#include "bjj/io.hpp"

namespace bjj::scenario {

namespace {

constexpr double pi = std::numbers::pi;

[[noreturn]] void config_error(const std::string& message) { throw Error(ErrorCode::config, message); }

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double x = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    config_error("setting '" + key + "': expected a number, got '" + value + "'");
  }
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  const double x = parse_double(key, value);
  if (!(x >= 0.0) || x != std::floor(x)) config_error("setting '" + key + "': expected a count");
  return static_cast<std::size_t>(x);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  config_error("setting '" + key + "': expected true or false, got '" + value + "'");
}

linear::ModeKind parse_mode(const std::string& value) {
  for (auto m : {linear::ModeKind::zero_phase, linear::ModeKind::running_phase, linear::ModeKind::pi_phase,
                 linear::ModeKind::self_trapped_pi}) {
    if (value == linear::to_string(m)) return m;
  }
  config_error("mode must be zero_phase, running_phase, pi_phase or self_trapped_pi");
}

linear::KappaConvention parse_convention(const std::string& value) {
  for (auto c : {linear::KappaConvention::zero_state, linear::KappaConvention::pi_linearization}) {
    if (value == linear::to_string(c)) return c;
  }
  config_error("kappa_convention must be zero_state or pi_linearization");
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += io::format_double(xs[i]);
  }
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  return out;
}

// Squared mode frequency for the chosen steady state.
double mode_frequency_sq(linear::ModeKind mode, double lambda0) {
  switch (mode) {
    case linear::ModeKind::zero_phase:
    case linear::ModeKind::running_phase: return 1.0 + lambda0;
    case linear::ModeKind::pi_phase: return 1.0 - lambda0;
    case linear::ModeKind::self_trapped_pi: return lambda0 * lambda0 - 1.0;
  }
  return 1.0 + lambda0;
}

ScenarioConfig base_fig1(double h) {
  ScenarioConfig c;
  const RawParams raw;  // J = 0.024, NU0 = 0.24
  c.lambda0 = derive_params(raw).lambda0;
  c.eta_over_N = 0.02;
  c.drive = Drive{h, 4.95};
  c.initial = State{0.5, 0.0};
  c.integrator.t_end = 600.0;
  c.mode = linear::ModeKind::zero_phase;
  c.quoted_threshold = 0.6;
  return c;
}

ScenarioConfig base_fig3(double h) {
  ScenarioConfig c;
  c.lambda0 = 25.0;
  c.eta_over_N = 0.008;
  c.drive = Drive{h, 10.20};
  c.initial = State{0.5, 0.0};
  c.integrator.t_end = 1200.0;
  c.mode = linear::ModeKind::running_phase;
  c.quoted_threshold = 2.1;
  return c;
}

void pi_family(ScenarioConfig& c) {
  c.integrator.singularity_policy = SingularityPolicy::pole_crossing;
  c.integrator.guard_delta = 1e-7;
  c.notes.push_back("trajectory passes over |w| = 1; continued with phi -> phi + sign(phi_dot) pi");
}

ScenarioConfig base_fig4(double h) {
  ScenarioConfig c;
  RawParams raw;
  raw.NU0 = 0.017;
  c.lambda0 = derive_params(raw).lambda0;
  c.eta_over_N = 0.02;
  c.drive = Drive{h, 2.30};
  c.initial = State{0.01, pi};
  c.integrator.t_end = 1500.0;
  c.mode = linear::ModeKind::pi_phase;
  c.quoted_threshold = 0.06;
  pi_family(c);
  return c;
}

ScenarioConfig base_fig5(double h) {
  ScenarioConfig c;
  c.lambda0 = 2.0833;
  c.eta_over_N = 0.01;
  c.drive = Drive{h, 3.464};
  c.initial = State{0.87, pi};
  c.integrator.t_end = 1200.0;
  c.mode = linear::ModeKind::self_trapped_pi;
  c.quoted_threshold = 0.10;
  pi_family(c);
  c.notes.push_back("drive frequency 3.464 = 2 sqrt(3); 10.20 (the fig3 drive) was the alternative reading");
  return c;
}

ScenarioConfig base_fig7(double epsilon) {
  ScenarioConfig c;
  c.lambda0 = 0.36;
  c.eta_over_N = 0.02;
  c.drive = Drive{epsilon * 2.30 * 2.30, 2.30};
  c.initial = State{0.01, pi};
  c.integrator.t_end = 3000.0;
  c.mode = linear::ModeKind::pi_phase;
  pi_family(c);
  c.lyapunov = true;
  c.lyapunov_settings.horizon = 3000.0;
  return c;
}

ScenarioConfig sweep_fig6a() {
  ScenarioConfig c = base_fig1(0.0);
  c.kind = Kind::sweep;
  c.quoted_threshold.reset();
  c.sweep.gamma = {0.15, 0.35};
  c.sweep.epsilon = {0.0, 0.1};
  c.sweep.omega_p = 4.95;
  c.sweep.kappa = 0.12;
  c.sweep.eta_over_N = 0.02;
  c.sweep.lambda0 = c.lambda0;
  c.sweep.mode = linear::ModeKind::zero_phase;
  c.sweep.gamma_line = (1.0 + c.lambda0) / (4.95 * 4.95);
  c.sweep.simulate_epsilons = {0.021, 0.055, 0.088};
  return c;
}

ScenarioConfig sweep_fig6b() {
  ScenarioConfig c = base_fig7(0.0);
  c.kind = Kind::sweep;
  c.sweep.gamma = {0.0, 0.4};
  c.sweep.epsilon = {0.0, 0.4};
  c.sweep.omega_p = 2.30;
  c.sweep.kappa = c.eta_over_N * (1.0 + c.lambda0);
  c.sweep.eta_over_N = c.eta_over_N;
  c.sweep.lambda0 = c.lambda0;
  c.sweep.mode = linear::ModeKind::pi_phase;
  c.sweep.gamma_line = (1.0 - c.lambda0) / (2.30 * 2.30);
  c.sweep.simulate_epsilons = {0.11, 0.24, 0.37};
  return c;
}

struct PresetEntry {
  const char* name;
  ScenarioConfig (*make)();
};

const std::vector<PresetEntry>& table() {
  static const std::vector<PresetEntry> entries = {
      {"fig1a", [] { return base_fig1(0.0); }},
      {"fig1b", [] { return base_fig1(0.5); }},
      {"fig1c", [] { return base_fig1(0.7); }},
      {"fig3a", [] { return base_fig3(0.0); }},
      {"fig3b", [] { return base_fig3(2.0); }},
      {"fig3c", [] { return base_fig3(2.2); }},
      {"fig4a", [] { return base_fig4(0.0); }},
      {"fig4b", [] { return base_fig4(0.03); }},
      {"fig4c", [] { return base_fig4(0.08); }},
      {"fig5a", [] { return base_fig5(0.0); }},
      {"fig5b", [] { return base_fig5(0.05); }},
      {"fig5c", [] { return base_fig5(0.18); }},
      {"fig6a", [] { return sweep_fig6a(); }},
      {"fig6b", [] { return sweep_fig6b(); }},
      {"fig7a", [] { return base_fig7(0.24); }},
      {"fig7b", [] { return base_fig7(0.37); }},
  };
  return entries;
}

// Window [t_a, t_b] of the run clipped to its span, resampled on `dt`.
std::optional<UniformSeries> window_series(const Trajectory& traj, Channel channel, double dt, double t_a,
                                           double t_b) {
  t_a = std::max(t_a, traj.t_begin());
  t_b = std::min(t_b, traj.t_end());
  if (!(t_b - t_a > 4.0 * dt)) return std::nullopt;
  return resample(traj, channel, dt).slice(t_a, t_b);
}

}  // namespace

Comparison compare(std::string name, double measured, double reference) {
  Comparison c{std::move(name), measured, reference, 0.0};
  c.rel_error = reference != 0.0 ? std::abs(measured - reference) / std::abs(reference)
                                 : std::abs(measured - reference);
  return c;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& e : table()) names.emplace_back(e.name);
  return names;
}

ScenarioConfig resolve_preset(const std::string& name) {
  for (const auto& e : table()) {
    if (name == e.name) {
      ScenarioConfig c = e.make();
      c.name = name;
      return c;
    }
  }
  std::string list;
  for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
  config_error("unknown preset '" + name + "'; available: " + list);
}

std::string describe(const ScenarioConfig& c) {
  std::ostringstream os;
  os << c.name << ": ";
  if (c.kind == Kind::sweep) {
    os << "sweep gamma=[" << c.sweep.gamma.lo << "," << c.sweep.gamma.hi << "] eps=[" << c.sweep.epsilon.lo
       << "," << c.sweep.epsilon.hi << "] " << c.sweep.gamma_n << "x" << c.sweep.epsilon_n
       << " omega_p=" << c.sweep.omega_p << " kappa=" << c.sweep.kappa << " line gamma=" << c.sweep.gamma_line;
    return os.str();
  }
  os << "lambda0=" << c.lambda0 << " eta/N=" << c.eta_over_N << " omega_p=" << c.drive.omega_p
     << " h=" << c.drive.h << " w0=" << c.initial.w << " phi0=" << c.initial.phi << " t_end=" << c.integrator.t_end
     << " mode=" << linear::to_string(c.mode) << " policy=" << to_string(c.integrator.singularity_policy);
  if (c.lyapunov) os << " lyapunov";
  return os.str();
}

void apply_setting(ScenarioConfig& c, const std::string& key, const std::string& v) {
  auto num = [&] { return parse_double(key, v); };
  if (key == "preset") {
    c = resolve_preset(v);
  } else if (key == "name") {
    c.name = v;
  } else if (key == "kind") {
    if (v == "simulation") c.kind = Kind::simulation;
    else if (v == "sweep") c.kind = Kind::sweep;
    else config_error("kind must be simulation or sweep");
  } else if (key == "lambda0") {
    c.lambda0 = num();
  } else if (key == "eta_over_N") {
    c.eta_over_N = num();
  } else if (key == "h") {
    c.drive.h = num();
  } else if (key == "epsilon") {
    c.drive.h = num() * c.drive.omega_p * c.drive.omega_p;
  } else if (key == "omega_p") {
    c.drive.omega_p = num();
  } else if (key == "w0") {
    c.initial.w = num();
  } else if (key == "phi0") {
    c.initial.phi = num();
  } else if (key == "t_begin") {
    c.integrator.t_begin = num();
  } else if (key == "t_end") {
    c.integrator.t_end = num();
  } else if (key == "sample_dt") {
    c.integrator.sample_dt = num();
  } else if (key == "rel_tol") {
    c.integrator.rel_tol = num();
  } else if (key == "abs_tol") {
    c.integrator.abs_tol = num();
  } else if (key == "max_step") {
    if (v == "auto") c.integrator.max_step.reset();
    else c.integrator.max_step = num();
  } else if (key == "guard_delta") {
    c.integrator.guard_delta = num();
  } else if (key == "guard_rearm") {
    c.integrator.guard_rearm = num();
  } else if (key == "singularity_policy") {
    try {
      c.integrator.singularity_policy = parse_singularity_policy(v);
    } catch (const Error& e) {
      config_error(e.what());
    }
  } else if (key == "fixed_step") {
    c.integrator.fixed_step = parse_bool(key, v);
  } else if (key == "max_steps") {
    c.integrator.max_steps = parse_count(key, v);
  } else if (key == "mode") {
    c.mode = parse_mode(v);
  } else if (key == "kappa_convention") {
    c.kappa_convention = parse_convention(v);
  } else if (key == "window_fraction") {
    c.classifier.window_fraction = num();
  } else if (key == "amplitude_tol") {
    c.classifier.amplitude_tol = num();
  } else if (key == "lambda_tol") {
    c.classifier.lambda_tol = num();
  } else if (key == "decay_rate_tol") {
    c.classifier.decay_rate_tol = num();
  } else if (key == "min_drive_periods") {
    c.classifier.min_drive_periods = num();
  } else if (key == "analysis_dt") {
    c.classifier.analysis_dt = num();
  } else if (key == "slip_min") {
    c.slips.slip_min = num();
  } else if (key == "slip_natural_period") {
    if (v == "auto") {
      c.slip_period_set = false;
    } else {
      c.slips.natural_period = num();
      c.slip_period_set = true;
    }
  } else if (key == "plateau_periods") {
    c.slips.plateau_periods = num();
  } else if (key == "slip_window_periods") {
    c.slips.slip_window_periods = num();
  } else if (key == "slip_ramp_tol") {
    if (v == "auto") c.slips.ramp_tol.reset();
    else c.slips.ramp_tol = num();
  } else if (key == "lyapunov") {
    c.lyapunov = parse_bool(key, v);
  } else if (key == "lyapunov_horizon") {
    c.lyapunov_settings.horizon = num();
  } else if (key == "lyapunov_offset") {
    c.lyapunov_settings.initial_offset = num();
  } else if (key == "lyapunov_renorm_interval") {
    if (v == "auto") c.lyapunov_settings.renorm_interval.reset();
    else c.lyapunov_settings.renorm_interval = num();
  } else if (key == "lyapunov_discard_fraction") {
    c.lyapunov_settings.discard_fraction = num();
  } else if (key == "growth_fit_cap") {
    c.growth_fit_cap = num();
  } else if (key == "early_window") {
    if (v == "auto") c.early_window.reset();
    else c.early_window = num();
  } else if (key == "quoted_threshold") {
    if (v == "none") c.quoted_threshold.reset();
    else c.quoted_threshold = num();
  } else if (key == "gamma_lo") {
    c.sweep.gamma.lo = num();
  } else if (key == "gamma_hi") {
    c.sweep.gamma.hi = num();
  } else if (key == "epsilon_lo") {
    c.sweep.epsilon.lo = num();
  } else if (key == "epsilon_hi") {
    c.sweep.epsilon.hi = num();
  } else if (key == "gamma_n") {
    c.sweep.gamma_n = parse_count(key, v);
  } else if (key == "epsilon_n") {
    c.sweep.epsilon_n = parse_count(key, v);
  } else if (key == "sweep_omega_p") {
    c.sweep.omega_p = num();
  } else if (key == "sweep_kappa") {
    c.sweep.kappa = num();
  } else if (key == "sweep_eta_over_N") {
    c.sweep.eta_over_N = num();
  } else if (key == "sweep_lambda0") {
    c.sweep.lambda0 = num();
  } else if (key == "sweep_mode") {
    c.sweep.mode = parse_mode(v);
  } else if (key == "gamma_line") {
    c.sweep.gamma_line = num();
  } else if (key == "line_epsilons") {
    c.sweep.simulate_epsilons = parse_list(key, v);
  } else {
    config_error("unknown setting '" + key + "'");
  }
}

void apply_settings(ScenarioConfig& c, const std::vector<std::pair<std::string, std::string>>& settings) {
  // preset first, epsilon after omega_p, everything else in order given.
  for (const auto& [k, v] : settings) {
    if (k == "preset") apply_setting(c, k, v);
  }
  for (const auto& [k, v] : settings) {
    if (k != "preset" && k != "epsilon") apply_setting(c, k, v);
  }
  for (const auto& [k, v] : settings) {
    if (k == "epsilon") apply_setting(c, k, v);
  }
}

ScenarioConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::config, "cannot open config file " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  std::vector<std::pair<std::string, std::string>> settings;

  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      config_error(file.string() + ": " + e.what());
    }
    for (const auto& [k, val] : j.items()) {
      if (val.is_string()) {
        settings.emplace_back(k, val.get<std::string>());
      } else if (val.is_boolean()) {
        settings.emplace_back(k, val.get<bool>() ? "true" : "false");
      } else if (val.is_number()) {
        settings.emplace_back(k, io::format_double(val.get<double>()));
      } else if (val.is_array()) {
        std::vector<double> xs;
        for (const auto& x : val) {
          if (!x.is_number()) config_error("setting '" + k + "': expected a list of numbers");
          xs.push_back(x.get<double>());
        }
        settings.emplace_back(k, join(xs));
      } else {
        config_error("setting '" + k + "': unsupported value");
      }
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    int number = 0;
    while (std::getline(lines, line)) {
      ++number;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        config_error(file.string() + ":" + std::to_string(number) + ": expected key=value");
      }
      auto trim = [](std::string s) {
        const auto l = s.find_first_not_of(" \t\r");
        const auto r = s.find_last_not_of(" \t\r");
        return l == std::string::npos ? std::string() : s.substr(l, r - l + 1);
      };
      settings.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }
  ScenarioConfig c;
  apply_settings(c, settings);
  return c;
}

std::vector<std::pair<std::string, std::string>> settings_echo(const ScenarioConfig& c) {
  using io::format_double;
  const auto opt = [](const std::optional<double>& x, const char* unset) {
    return x ? format_double(*x) : std::string(unset);
  };
  std::vector<std::pair<std::string, std::string>> out = {
      {"name", c.name},
      {"kind", c.kind == Kind::sweep ? "sweep" : "simulation"},
      {"lambda0", format_double(c.lambda0)},
      {"eta_over_N", format_double(c.eta_over_N)},
      {"h", format_double(c.drive.h)},
      {"omega_p", format_double(c.drive.omega_p)},
      {"w0", format_double(c.initial.w)},
      {"phi0", format_double(c.initial.phi)},
      {"t_begin", format_double(c.integrator.t_begin)},
      {"t_end", format_double(c.integrator.t_end)},
      {"sample_dt", format_double(c.integrator.sample_dt)},
      {"rel_tol", format_double(c.integrator.rel_tol)},
      {"abs_tol", format_double(c.integrator.abs_tol)},
      {"max_step", opt(c.integrator.max_step, "auto")},
      {"guard_delta", format_double(c.integrator.guard_delta)},
      {"guard_rearm", format_double(c.integrator.guard_rearm)},
      {"singularity_policy", to_string(c.integrator.singularity_policy)},
      {"fixed_step", c.integrator.fixed_step ? "true" : "false"},
      {"max_steps", std::to_string(c.integrator.max_steps)},
      {"mode", linear::to_string(c.mode)},
      {"kappa_convention", linear::to_string(c.kappa_convention)},
      {"window_fraction", format_double(c.classifier.window_fraction)},
      {"amplitude_tol", format_double(c.classifier.amplitude_tol)},
      {"lambda_tol", format_double(c.classifier.lambda_tol)},
      {"decay_rate_tol", format_double(c.classifier.decay_rate_tol)},
      {"min_drive_periods", format_double(c.classifier.min_drive_periods)},
      {"analysis_dt", format_double(c.classifier.analysis_dt)},
      {"slip_min", format_double(c.slips.slip_min)},
      {"slip_natural_period", c.slip_period_set ? format_double(c.slips.natural_period) : "auto"},
      {"plateau_periods", format_double(c.slips.plateau_periods)},
      {"slip_window_periods", format_double(c.slips.slip_window_periods)},
      {"slip_ramp_tol", opt(c.slips.ramp_tol, "auto")},
      {"lyapunov", c.lyapunov ? "true" : "false"},
      {"lyapunov_horizon", format_double(c.lyapunov_settings.horizon)},
      {"lyapunov_offset", format_double(c.lyapunov_settings.initial_offset)},
      {"lyapunov_renorm_interval", opt(c.lyapunov_settings.renorm_interval, "auto")},
      {"lyapunov_discard_fraction", format_double(c.lyapunov_settings.discard_fraction)},
      {"growth_fit_cap", format_double(c.growth_fit_cap)},
      {"early_window", opt(c.early_window, "auto")},
      {"quoted_threshold", opt(c.quoted_threshold, "none")},
  };
  if (c.kind == Kind::sweep) {
    const std::vector<std::pair<std::string, std::string>> sweep = {
        {"gamma_lo", format_double(c.sweep.gamma.lo)},
        {"gamma_hi", format_double(c.sweep.gamma.hi)},
        {"epsilon_lo", format_double(c.sweep.epsilon.lo)},
        {"epsilon_hi", format_double(c.sweep.epsilon.hi)},
        {"gamma_n", std::to_string(c.sweep.gamma_n)},
        {"epsilon_n", std::to_string(c.sweep.epsilon_n)},
        {"sweep_omega_p", format_double(c.sweep.omega_p)},
        {"sweep_kappa", format_double(c.sweep.kappa)},
        {"sweep_eta_over_N", format_double(c.sweep.eta_over_N)},
        {"sweep_lambda0", format_double(c.sweep.lambda0)},
        {"sweep_mode", linear::to_string(c.sweep.mode)},
        {"gamma_line", format_double(c.sweep.gamma_line)},
        {"line_epsilons", join(c.sweep.simulate_epsilons)},
    };
    out.insert(out.end(), sweep.begin(), sweep.end());
  }
  return out;
}

RunResult run(const ScenarioConfig& config) {
  if (config.kind == Kind::sweep) config_error("preset '" + config.name + "' is a sweep; use the sweep command");
  const SystemParams p = SystemParams::from_dimensionless(config.lambda0, config.eta_over_N);
  RunResult result;
  result.trajectory = simulate(p, config.drive, config.initial, config.integrator);
  result.report = analyze(config, result.trajectory);
  return result;
}

RunReport analyze(const ScenarioConfig& config, const Trajectory& traj) {
  if (traj.size() < 2) throw Error(ErrorCode::inconclusive, "analyze: trajectory has fewer than two samples");
  const SystemParams p = SystemParams::from_dimensionless(config.lambda0, config.eta_over_N);
  const Drive& drive = config.drive;
  RunReport r;
  r.preset = config.name;
  r.mode = linear::to_string(config.mode);
  r.kappa_convention = linear::to_string(config.kappa_convention);
  r.singularity_policy = to_string(config.integrator.singularity_policy);
  r.lambda0 = config.lambda0;
  r.eta_over_N = config.eta_over_N;
  r.h = drive.h;
  r.omega_p = drive.omega_p;
  r.w0 = config.initial.w;
  r.phi0 = config.initial.phi;
  r.t_end = config.integrator.t_end;
  r.notes = config.notes;

  // Closed-form side.
  r.kappa = linear::kappa_for(p, config.kappa_convention);
  const double omega_sq = mode_frequency_sq(config.mode, config.lambda0);
  if (!(omega_sq > 0.0)) {
    throw Error(ErrorCode::config, std::string("mode ") + linear::to_string(config.mode) +
                                       " does not exist at lambda0 = " + io::format_double(config.lambda0));
  }
  r.omega_j = std::sqrt(omega_sq);
  r.h_t = linear::threshold_amplitude(r.kappa, drive.omega_p);
  r.gamma = omega_sq / (drive.omega_p * drive.omega_p);
  r.epsilon = drive.h / (drive.omega_p * drive.omega_p);
  if (config.quoted_threshold) r.comparisons.push_back(compare("threshold", r.h_t, *config.quoted_threshold));
  r.comparisons.push_back(compare("drive_vs_threshold", drive.h, r.h_t));
  if (drive.h > 0.0 && r.kappa > 0.0) {
    const auto co = slowflow::slow_flow_coeffs(drive.h, drive.omega_p, r.kappa, config.eta_over_N, r.omega_j);
    r.rho = co.rho;
    r.c = co.c;
    const auto pc = slowflow::classify_point(co.gamma, co.epsilon, co.rho, co.c);
    r.slow_flow_label = slowflow::to_string(pc.label);
    r.slow_flow_lambda_plus = pc.lambda_plus;
  }
  std::optional<linear::ModeAnalysis> mode;
  try {
    mode = linear::mode_analysis(config.mode, config.lambda0, config.eta_over_N);
  } catch (const Error& e) {
    r.diagnostics_errors.push_back(std::string("mode_analysis: ") + e.what());
  }

  r.terminated_by = traj.terminated_by == Termination::singularity_guard ? "singularity_guard" : "reached_end";
  if (traj.terminated_by == Termination::singularity_guard) r.guard_time = traj.t_end();
  r.pole_crossings = traj.pole_crossings.size();

  // Chaos indicator.
  if (config.lyapunov) {
    diag::LyapunovSettings ls = config.lyapunov_settings;
    ls.integrator = config.integrator;
    try {
      r.lyapunov = diag::lyapunov_max(p, drive, config.initial, ls);
    } catch (const Error& e) {
      r.diagnostics_errors.push_back(std::string("lyapunov: ") + e.what());
      r.conclusive = false;
    }
  }

  // Asymptotic label.
  try {
    r.classification = diag::classify_asymptotic(traj, drive, config.classifier, r.lyapunov);
  } catch (const Error& e) {
    r.diagnostics_errors.push_back(std::string("classification: ") + e.what());
    r.conclusive = false;
  }
  if (r.lyapunov && !r.lyapunov->accepted) r.conclusive = false;

  const double dt = config.classifier.analysis_dt;
  const auto label = r.classification.label;
  const bool guarded = traj.terminated_by == Termination::singularity_guard;
  if (r.conclusive && !guarded &&
      (label == diag::Regime::sustained_periodic || label == diag::Regime::chaotic)) {
    if (auto w = window_series(traj, Channel::w, dt, r.classification.window_begin, r.classification.window_end)) {
      try {
        const auto f = diag::dominant_frequency(*w);
        r.dominant_frequency = f.omega;
        r.frequency_resolution = f.resolution;
        r.comparisons.push_back(compare("subharmonic_frequency", f.omega, 0.5 * drive.omega_p));
      } catch (const Error& e) {
        r.diagnostics_errors.push_back(std::string("dominant_frequency: ") + e.what());
      }
    }
  }

  // Undriven small oscillations: decay or growth against the mode laws.
  if (drive.h == 0.0 && mode) {
    const bool decaying = mode->damping_sign == linear::DampingSign::decaying;
    const double centre = config.mode == linear::ModeKind::self_trapped_pi
                              ? std::copysign(std::sqrt(1.0 - 1.0 / (config.lambda0 * config.lambda0)),
                                              config.initial.w)
                              : 0.0;
    if (decaying && std::isfinite(mode->tau)) {
      if (auto w = window_series(traj, Channel::w, dt, traj.t_begin() + mode->tau,
                                 traj.t_begin() + 4.0 * mode->tau)) {
        try {
          const auto f = diag::dominant_frequency(*w);
          r.transient_frequency = f.omega;
          r.comparisons.push_back(compare("mode_frequency", f.omega, mode->omega));
          const auto env = diag::envelope(*w, centre);
          r.transient_envelope_rate = env.fitted_rate;
          r.comparisons.push_back(compare("mode_envelope_rate", env.fitted_rate, mode->envelope_rate()));
        } catch (const Error& e) {
          r.diagnostics_errors.push_back(std::string("transient fit: ") + e.what());
        }
      }
    } else if (!decaying && std::isfinite(mode->tau)) {
      // Fit the linear stage only: stop where the deviation reaches the cap.
      double t_cap = traj.t_end();
      for (std::size_t i = 0; i < traj.size(); ++i) {
        if (std::abs(traj.states[i].w - centre) >= config.growth_fit_cap) {
          t_cap = traj.times[i];
          break;
        }
      }
      if (auto w = window_series(traj, Channel::w, dt, traj.t_begin(), t_cap)) {
        try {
          const auto env = diag::envelope(*w, centre);
          r.growth_rate = env.fitted_rate;
          r.comparisons.push_back(compare("mode_growth_rate", env.fitted_rate, mode->envelope_rate()));
        } catch (const Error& e) {
          r.diagnostics_errors.push_back(std::string("growth fit: ") + e.what());
        }
      }
    }
  }

  // Phase slips over the whole run.
  diag::SlipSettings slips = config.slips;
  if (!config.slip_period_set) slips.natural_period = 2.0 * pi / r.omega_j;
  if (auto phi = window_series(traj, Channel::phi, dt, traj.t_begin(), traj.t_end())) {
    r.phase_slips = diag::detect_phase_slips(*phi, slips);
  }

  if (auto w = window_series(traj, Channel::w, dt, traj.t_begin(), traj.t_end())) {
    const double early = config.early_window.value_or(4.0 * 2.0 * pi / r.omega_j);
    const double early_end = std::min(traj.t_begin() + early, w->t_last());
    r.mean_imbalance_early = diag::mean_imbalance(*w, w->t0, early_end);
    r.mean_imbalance_late = diag::mean_imbalance(*w, std::max(w->t0, r.classification.window_begin), w->t_last());
  }
  return r;
}

std::string label_of(const RunReport& report) {
  if (!report.conclusive) return "inconclusive";
  return diag::to_string(report.classification.label);
}

int exit_status(const RunReport& report) {
  if (report.terminated_by == "singularity_guard") return 3;
  if (!report.conclusive) return 4;
  return 0;
}

ScenarioConfig sweep_point(const ScenarioConfig& sweep_config, double gamma, double epsilon) {
  ScenarioConfig c = sweep_config;
  c.kind = Kind::simulation;
  const double wp2 = sweep_config.sweep.omega_p * sweep_config.sweep.omega_p;
  const double target = gamma * wp2;
  c.mode = sweep_config.sweep.mode;
  switch (c.mode) {
    case linear::ModeKind::zero_phase:
    case linear::ModeKind::running_phase: c.lambda0 = target - 1.0; break;
    case linear::ModeKind::pi_phase: c.lambda0 = 1.0 - target; break;
    case linear::ModeKind::self_trapped_pi: c.lambda0 = std::sqrt(target + 1.0); break;
  }
  if (!(c.lambda0 >= 0.0) || (c.mode == linear::ModeKind::pi_phase && !(c.lambda0 < 1.0))) {
    config_error("no interaction strength gives gamma = " + io::format_double(gamma) + " in mode " +
                 linear::to_string(c.mode));
  }
  c.eta_over_N = sweep_config.sweep.eta_over_N;
  c.drive = Drive{epsilon * wp2, sweep_config.sweep.omega_p};
  c.quoted_threshold.reset();
  std::ostringstream name;
  name << sweep_config.name << "@gamma=" << io::format_double(gamma) << ",epsilon=" << io::format_double(epsilon);
  c.name = name.str();
  return c;
}

namespace {

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned k = 0; k < threads; ++k) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

std::string simulate_label(const ScenarioConfig& sweep_config, double gamma, double epsilon,
                           std::optional<double>* lyapunov = nullptr) {
  ScenarioConfig c;
  try {
    c = sweep_point(sweep_config, gamma, epsilon);
  } catch (const Error&) {
    return "out_of_model";
  }
  try {
    const RunResult res = run(c);
    if (lyapunov && res.report.lyapunov) *lyapunov = res.report.lyapunov->lambda_max;
    return label_of(res.report);
  } catch (const Error&) {
    return "inconclusive";
  }
}

}  // namespace

SweepResult run_sweep(const ScenarioConfig& config, bool simulate, unsigned threads) {
  if (config.kind != Kind::sweep) config_error("preset '" + config.name + "' is not a sweep");
  const auto& s = config.sweep;
  SweepResult out;
  const slowflow::DiagramBase base{s.omega_p, s.kappa, s.eta_over_N};
  out.diagram = slowflow::scan_diagram(s.gamma, s.epsilon, s.gamma_n, s.epsilon_n, base, threads);

  for (double eps : s.simulate_epsilons) {
    LinePoint lp;
    lp.epsilon = eps;
    const auto pc = slowflow::classify_cell(base, s.gamma_line, eps);
    lp.slow_flow_label = slowflow::to_string(pc.label);
    lp.lambda_plus = pc.lambda_plus;
    out.line.push_back(lp);
  }
  if (!simulate) return out;

  const auto& d = out.diagram;
  out.sim_labels.assign(d.labels.size(), std::string());
  parallel_for(d.labels.size(), threads, [&](std::size_t i) {
    const std::size_t ie = i / d.gamma_axis.size();
    const std::size_t ig = i % d.gamma_axis.size();
    out.sim_labels[i] = simulate_label(config, d.gamma_axis[ig], d.epsilon_axis[ie]);
  });
  parallel_for(out.line.size(), threads, [&](std::size_t i) {
    out.line[i].sim_label = simulate_label(config, s.gamma_line, out.line[i].epsilon, &out.line[i].lyapunov);
  });
  return out;
}

}  // namespace bjj::scenario
