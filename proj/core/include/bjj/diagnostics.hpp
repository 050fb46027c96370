#pragma once

// Signal analysis over simulated trajectories.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "bjj/model.hpp"
#include "bjj/ode.hpp"

namespace bjj::diag {

struct FrequencyEstimate {
  double omega = 0.0;
  double resolution = 0.0;          // 2 pi / window length
  double zero_crossing_omega = 0.0;  // before periodogram refinement
};

/// Zero-crossing count of the mean-removed signal, refined by the Hann-windowed
/// periodogram peak near it. Throws Error(no_oscillation) below 4 crossings.
FrequencyEstimate dominant_frequency(const UniformSeries& series);

struct Envelope {
  std::vector<double> peak_times;
  std::vector<double> peak_values;  // |x - centre| at each half-cycle extremum
  double fitted_rate = 0.0;         // slope of log(peak) vs t
  double centre = 0.0;
};

/// One extremum per half-cycle about the series mean (or `centre` when given),
/// refined parabolically. Throws Error(too_few_extrema) below 4 extrema.
Envelope envelope(const UniformSeries& series, std::optional<double> centre = std::nullopt);

enum class Regime { decay_to_fixed_point, sustained_periodic, chaotic, singular_terminated };

const char* to_string(Regime regime) noexcept;

struct LyapunovEstimate {
  double lambda_max = 0.0;
  double horizon = 0.0;
  double renorm_interval = 0.0;
  bool accepted = false;  // horizon covers at least 50 drive periods
};

struct ClassifierSettings {
  double window_fraction = 0.3;
  double amplitude_tol = 1e-4;
  double lambda_tol = 0.01;
  // An envelope still shrinking faster than this inside the window is a decay
  // that has not finished yet.
  double decay_rate_tol = 2e-3;
  double min_drive_periods = 40.0;
  double analysis_dt = 0.02;
};

struct Classification {
  Regime label = Regime::decay_to_fixed_point;
  double centre_w = 0.0;
  double centre_phi = 0.0;
  double amplitude = 0.0;
  double window_begin = 0.0;
  double window_end = 0.0;
  std::optional<double> window_envelope_rate;
  std::optional<double> lyapunov;  // lambda_max used for the chaos decision
};

/// Labels the final window_fraction of the run. Without a Lyapunov estimate a
/// non-decaying run is labelled sustained_periodic.
Classification classify_asymptotic(const Trajectory& traj, const Drive& drive,
                                   const ClassifierSettings& settings,
                                   std::optional<LyapunovEstimate> lyapunov = std::nullopt);

struct PhaseSlipEvent {
  double t_mid = 0.0;
  double jump = 0.0;
  double pre_plateau = 0.0;
  double post_plateau = 0.0;
};

struct SlipSettings {
  double natural_period = 2.0 * 3.14159265358979323846;
  double slip_min = 3.14159265358979323846 / 2.0;
  double plateau_periods = 3.0;
  double slip_window_periods = 5.0;
  std::optional<double> ramp_tol;  // rad per unit time; default slip_min / slip window
};

/// Plateau differencing on the unwrapped phase: the phase is smoothed over one
/// natural period and then over the plateau window; a slip is a bounded
/// excursion of the smoothed slope above ramp_tol whose net change reaches
/// slip_min, with flat stretches of at least one natural period on both sides.
/// Long monotone ramps (running phase) do not qualify.
std::vector<PhaseSlipEvent> detect_phase_slips(const UniformSeries& phi, const SlipSettings& settings);

double mean_imbalance(const UniformSeries& w, double t_a, double t_b);

struct LyapunovSettings {
  double initial_offset = 1e-8;
  std::optional<double> renorm_interval;  // default: one drive period
  double horizon = 3000.0;
  double discard_fraction = 0.2;
  IntegratorSettings integrator;
};

/// Hooks that let the two-trajectory estimator measure separations in a
/// metric other than raw state coordinates.
struct SeparationMetric {
  // Maps a state into the space where distances are measured.
  std::function<std::vector<double>(std::span<const double>)> embed;
  // Difference b - a in state coordinates (e.g. phase wrapped).
  std::function<std::vector<double>(std::span<const double>, std::span<const double>)> difference;
};

/// Two-trajectory estimate with separation renormalization. Guard events are
/// applied to both copies together; a run stopped by the guard throws
/// Error(guarded_estimate).
LyapunovEstimate lyapunov_max(const OdeSystem& system, std::span<const double> s0, const Drive& drive,
                              const LyapunovSettings& settings, const SeparationMetric& metric = {});

/// Largest exponent of the two-mode model; distances are taken on the Bloch
/// sphere so pole crossings do not register as separation.
LyapunovEstimate lyapunov_max(const SystemParams& p, const Drive& drive, const State& s0,
                              const LyapunovSettings& settings);

}  // namespace bjj::diag
