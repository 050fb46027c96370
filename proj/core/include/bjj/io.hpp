#pragma once

// File formats of the run and sweep outputs.

#include <filesystem>
#include <string>

#include "bjj/model.hpp"
#include "bjj/scenario.hpp"

namespace bjj::io {

const char* version() noexcept;

/// Shortest text that reads back to the same double ("%.17g").
std::string format_double(double x);

/// Header `t,w,phi,lambda`, one row per sample.
void write_timeseries(const std::filesystem::path& file, const Trajectory& traj, const Drive& drive,
                      double lambda0);

/// Reads a file written by write_timeseries. A final row inside the guard
/// band |w| >= 1 - guard_delta marks a run that ended on the guard.
Trajectory read_timeseries(const std::filesystem::path& file, double guard_delta = 1e-9);

/// Flat JSON object, keys in a fixed order, 2-space indent.
std::string report_json(const scenario::RunReport& report);

/// Config echo, artifact version and wall time.
std::string manifest_json(const scenario::ScenarioConfig& config, const std::string& command,
                          double wall_seconds);

/// `gamma,epsilon,lambda_plus,label[,sim_label]`.
void write_diagram(const std::filesystem::path& file, const scenario::SweepResult& result);

/// `epsilon,gamma_minus,gamma_plus`.
void write_boundary(const std::filesystem::path& file, const slowflow::StabilityDiagram& diagram);

/// `epsilon,lambda_plus,slow_flow_label,sim_label,lyapunov`.
void write_line(const std::filesystem::path& file, const scenario::SweepResult& result);

void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace bjj::io
