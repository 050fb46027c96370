#include "bjj/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bjj/error.hpp"

#ifndef BJJ_VERSION
#define BJJ_VERSION "0.0.0"
#endif

namespace bjj::io {

namespace {

using ordered = nlohmann::ordered_json;

std::ofstream open_out(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + file.string());
  return out;
}

template <class T>
ordered opt(const std::optional<T>& x) {
  return x ? ordered(*x) : ordered(nullptr);
}

}  // namespace

const char* version() noexcept { return BJJ_VERSION; }

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_timeseries(const std::filesystem::path& file, const Trajectory& traj, const Drive& drive,
                      double lambda0) {
  auto out = open_out(file);
  out << "t,w,phi,lambda\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    out << format_double(t) << ',' << format_double(traj.states[i].w) << ','
        << format_double(traj.states[i].phi) << ',' << format_double(lambda_of_t(drive, lambda0, t)) << '\n';
  }
  if (!out) throw Error(ErrorCode::io, "write failed: " + file.string());
}

Trajectory read_timeseries(const std::filesystem::path& file, double guard_delta) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::io, "cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,w,phi", 0) != 0) {
    throw Error(ErrorCode::io, file.string() + ": expected header t,w,phi,lambda");
  }
  Trajectory traj;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    double t = 0, w = 0, phi = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &w, &phi) != 3) {
      throw Error(ErrorCode::io, file.string() + ":" + std::to_string(number) + ": malformed row");
    }
    traj.times.push_back(t);
    traj.states.push_back(State{w, phi});
  }
  if (!traj.empty() && std::abs(traj.states.back().w) >= 1.0 - guard_delta) {
    traj.terminated_by = Termination::singularity_guard;
  }
  return traj;
}

std::string report_json(const scenario::RunReport& r) {
  ordered j;
  j["preset"] = r.preset;
  j["mode"] = r.mode;
  j["kappa_convention"] = r.kappa_convention;
  j["singularity_policy"] = r.singularity_policy;
  j["lambda0"] = r.lambda0;
  j["eta_over_n"] = r.eta_over_N;
  j["h"] = r.h;
  j["omega_p"] = r.omega_p;
  j["w0"] = r.w0;
  j["phi0"] = r.phi0;
  j["t_end"] = r.t_end;
  j["kappa"] = r.kappa;
  j["omega_j"] = r.omega_j;
  j["h_t"] = r.h_t;
  j["gamma"] = r.gamma;
  j["epsilon"] = r.epsilon;
  j["rho"] = opt(r.rho);
  j["c"] = opt(r.c);
  j["slow_flow_label"] = opt(r.slow_flow_label);
  j["slow_flow_lambda_plus"] = opt(r.slow_flow_lambda_plus);
  j["classification"] = scenario::label_of(r);
  j["conclusive"] = r.conclusive;
  j["centre_w"] = r.classification.centre_w;
  j["centre_phi"] = r.classification.centre_phi;
  j["amplitude"] = r.classification.amplitude;
  j["window_begin"] = r.classification.window_begin;
  j["window_end"] = r.classification.window_end;
  j["window_envelope_rate"] = opt(r.classification.window_envelope_rate);
  j["terminated_by"] = r.terminated_by;
  j["guard_time"] = opt(r.guard_time);
  j["pole_crossings"] = r.pole_crossings;
  j["dominant_frequency"] = opt(r.dominant_frequency);
  j["frequency_resolution"] = opt(r.frequency_resolution);
  j["transient_frequency"] = opt(r.transient_frequency);
  j["transient_envelope_rate"] = opt(r.transient_envelope_rate);
  j["growth_rate"] = opt(r.growth_rate);
  j["phase_slip_count"] = r.phase_slips.size();
  ordered times = ordered::array(), jumps = ordered::array(), pre = ordered::array(), post = ordered::array();
  for (const auto& s : r.phase_slips) {
    times.push_back(s.t_mid);
    jumps.push_back(s.jump);
    pre.push_back(s.pre_plateau);
    post.push_back(s.post_plateau);
  }
  j["phase_slip_times"] = times;
  j["phase_slip_jumps"] = jumps;
  j["phase_slip_pre_plateaus"] = pre;
  j["phase_slip_post_plateaus"] = post;
  j["mean_imbalance_early"] = r.mean_imbalance_early;
  j["mean_imbalance_late"] = r.mean_imbalance_late;
  if (r.lyapunov) {
    j["lyapunov_max"] = r.lyapunov->lambda_max;
    j["lyapunov_horizon"] = r.lyapunov->horizon;
    j["lyapunov_renorm_interval"] = r.lyapunov->renorm_interval;
    j["lyapunov_accepted"] = r.lyapunov->accepted;
  } else {
    j["lyapunov_max"] = nullptr;
    j["lyapunov_horizon"] = nullptr;
    j["lyapunov_renorm_interval"] = nullptr;
    j["lyapunov_accepted"] = nullptr;
  }
  for (const auto& c : r.comparisons) {
    j[c.name + "_measured"] = c.measured;
    j[c.name + "_reference"] = c.reference;
    j[c.name + "_rel_error"] = c.rel_error;
  }
  j["notes"] = r.notes;
  j["diagnostics_errors"] = r.diagnostics_errors;
  return j.dump(2) + "\n";
}

std::string manifest_json(const scenario::ScenarioConfig& config, const std::string& command,
                          double wall_seconds) {
  ordered j;
  j["command"] = command;
  j["version"] = version();
  j["wall_time_seconds"] = wall_seconds;
  ordered cfg;
  for (const auto& [k, v] : scenario::settings_echo(config)) cfg[k] = v;
  j["config"] = cfg;
  return j.dump(2) + "\n";
}

void write_diagram(const std::filesystem::path& file, const scenario::SweepResult& result) {
  auto out = open_out(file);
  const auto& d = result.diagram;
  const bool sim = !result.sim_labels.empty();
  out << "gamma,epsilon,lambda_plus,label" << (sim ? ",sim_label" : "") << '\n';
  for (std::size_t ie = 0; ie < d.epsilon_axis.size(); ++ie) {
    for (std::size_t ig = 0; ig < d.gamma_axis.size(); ++ig) {
      const std::size_t i = d.index(ie, ig);
      out << format_double(d.gamma_axis[ig]) << ',' << format_double(d.epsilon_axis[ie]) << ','
          << format_double(d.lambda_plus[i]) << ',' << slowflow::to_string(d.labels[i]);
      if (sim) out << ',' << result.sim_labels[i];
      out << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::io, "write failed: " + file.string());
}

void write_boundary(const std::filesystem::path& file, const slowflow::StabilityDiagram& diagram) {
  auto out = open_out(file);
  out << "epsilon,gamma_minus,gamma_plus\n";
  for (const auto& b : diagram.boundary) {
    out << format_double(b.epsilon) << ',' << format_double(b.gamma_minus) << ',' << format_double(b.gamma_plus)
        << '\n';
  }
  if (!out) throw Error(ErrorCode::io, "write failed: " + file.string());
}

void write_line(const std::filesystem::path& file, const scenario::SweepResult& result) {
  auto out = open_out(file);
  out << "epsilon,lambda_plus,slow_flow_label,sim_label,lyapunov\n";
  for (const auto& p : result.line) {
    out << format_double(p.epsilon) << ',' << format_double(p.lambda_plus) << ',' << p.slow_flow_label << ','
        << p.sim_label << ',' << (p.lyapunov ? format_double(*p.lyapunov) : std::string()) << '\n';
  }
  if (!out) throw Error(ErrorCode::io, "write failed: " + file.string());
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  auto out = open_out(file);
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed: " + file.string());
}

}  // namespace bjj::io
