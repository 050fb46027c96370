#pragma once

// Closed-form small-oscillation analysis around the steady states.

#include <array>
#include <limits>
#include <vector>

#include "bjj/model.hpp"
#include "bjj/ode.hpp"

namespace bjj::linear {

enum class ModeKind { zero_phase, running_phase, pi_phase, self_trapped_pi };

const char* to_string(ModeKind kind) noexcept;

enum class DampingSign { decaying, growing };

struct ModeAnalysis {
  double omega = 0.0;
  /// Decay time when decaying, growth time when growing; infinite without
  /// dissipation.
  double tau = std::numeric_limits<double>::infinity();
  DampingSign damping_sign = DampingSign::decaying;

  /// Envelope rate: -1/tau when decaying, +1/tau when growing.
  double envelope_rate() const noexcept;
};

/// Which kappa feeds the threshold: the zero state reached after a phase
/// slip, or the pi-state linearization.
enum class KappaConvention { zero_state, pi_linearization };

const char* to_string(KappaConvention convention) noexcept;

std::vector<State> steady_states(double lambda0);

ModeAnalysis mode_analysis(ModeKind mode, double lambda0, double eta_over_N);

/// h_t = 2 kappa omega with omega = omega_p / 2.
double threshold_amplitude(double kappa, double omega_p);

/// Positive root of omega_J^2 - omega^2 + (eta/2N)(omega_p - omega) h = 0 at
/// omega_p = 2 omega.
double corrected_frequency(double omega_j, double eta_over_N, double h, double omega_p);

struct OscillatorParams {
  double kappa = 0.0;
  double omega_j = 1.0;
  double eta_over_N = 0.0;
  Drive drive;
};

/// Rates of (dw, d(dw)/dt) for the damped parametric oscillator.
std::array<double, 2> linear_rhs(std::array<double, 2> x, double t, const OscillatorParams& p) noexcept;

OdeSystem make_linear_system(const OscillatorParams& p);

double kappa_for(const SystemParams& p, KappaConvention convention);

}  // namespace bjj::linear
