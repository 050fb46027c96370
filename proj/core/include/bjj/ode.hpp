#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bjj/model.hpp"

namespace bjj {

enum class SingularityPolicy {
  stop,           // end the run at the guard and label it
  pole_crossing,  // continue through |w| = 1 with phi -> phi +/- pi
};

const char* to_string(SingularityPolicy policy) noexcept;
SingularityPolicy parse_singularity_policy(const std::string& text);

struct IntegratorSettings {
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  std::optional<double> max_step;  // unset: drive-aware default
  double guard_delta = 1e-9;
  double t_begin = 0.0;
  double t_end = 100.0;
  double sample_dt = 0.05;
  bool fixed_step = false;
  SingularityPolicy singularity_policy = SingularityPolicy::stop;
  // The guard re-arms once the margin exceeds this after a pole crossing.
  double guard_rearm = 1e-5;
  std::size_t max_steps = 200'000'000;

  void validate() const;
};

/// Largest step that still resolves the drive: 2 pi / (20 omega_p).
double drive_resolving_step(double omega_p) noexcept;

using VectorField = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

struct OdeSystem {
  std::size_t dimension = 0;
  VectorField field;
  // Distance to the singular set; the guard fires when it drops to <= 0.
  // It is checked at step ends only, so the field should fail (non-finite)
  // past the singular set for trial steps there to be rejected.
  std::function<double(std::span<const double> y)> guard_margin;
  // Called at the guard; may modify y. Return false to stop the run there.
  std::function<bool(double t, std::span<double> y)> on_guard;
};

/// Dense samples of an integration in row-major layout.
struct Solution {
  std::size_t dimension = 0;
  std::vector<double> times;
  std::vector<double> values;
  Termination terminated_by = Termination::reached_end;
  std::vector<double> guard_times;  // events that were continued through
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  std::size_t size() const noexcept { return times.size(); }
  std::span<const double> at(std::size_t i) const {
    return {values.data() + i * dimension, dimension};
  }
  std::span<const double> back() const { return at(size() - 1); }
};

/// Dormand-Prince 5(4) with dense output, sampled every sample_dt.
/// Trial steps that leave the domain (non-finite stages) are rejected and
/// shortened. Identical inputs give bit-identical output.
Solution integrate(const OdeSystem& system, std::span<const double> y0,
                   const IntegratorSettings& settings);

/// Guarded two-mode system; pole crossings are appended to `crossings` when
/// the policy continues through the guard.
OdeSystem make_bjj_system(const SystemParams& p, const Drive& d, const IntegratorSettings& settings,
                          std::vector<PoleCrossing>* crossings = nullptr);

/// Integrates the nonlinear model. max_step defaults to the drive-resolving
/// step and is capped by it whenever h > 0.
Trajectory simulate(const SystemParams& p, const Drive& d, const State& s0,
                    const IntegratorSettings& settings);

IntegratorSettings effective_settings(const IntegratorSettings& settings, const Drive& d);

/// Equally spaced samples of one scalar channel.
struct UniformSeries {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double time(std::size_t i) const noexcept { return t0 + static_cast<double>(i) * dt; }
  double t_last() const noexcept { return time(values.size() - 1); }
  double span() const noexcept { return t_last() - t0; }
  /// Samples with t in [t_a, t_b].
  UniformSeries slice(double t_a, double t_b) const;
};

enum class Channel { w, phi };

/// Local cubic (4-point Lagrange) interpolation onto t0 + k dt.
UniformSeries resample(std::span<const double> times, std::span<const double> values, double dt);
UniformSeries resample(const Trajectory& traj, Channel channel, double dt);

}  // namespace bjj
