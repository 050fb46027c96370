#pragma once

// Two-mode model of a dissipative bosonic Josephson junction with a
// sinusoidally modulated interaction parameter. Everything here works in
// dimensionless time (t -> 2Jt/hbar).

#include <optional>
#include <utility>
#include <vector>

namespace bjj {

/// Physical inputs, energies in units of hbar*omega_z.
struct RawParams {
  double J = 0.024;
  double NU0 = 0.24;
  int N = 2000;
  double eta_over_N = 0.02;
  double zeta = 0.0;
  double omega_p = 0.0;
};

struct SystemParams {
  double lambda0 = 0.0;
  double eta_over_N = 0.0;
  double kappa_zero = 0.0;
  std::optional<double> kappa_pi;  // only when lambda0 < 1
  double omega_j_zero = 1.0;
  std::optional<double> omega_j_pi;  // only when lambda0 < 1

  /// Direct construction from dimensionless quantities.
  static SystemParams from_dimensionless(double lambda0, double eta_over_N);
};

struct Drive {
  double h = 0.0;
  double omega_p = 0.0;

  /// h = lambda0 * zeta.
  static Drive from_raw(const RawParams& raw, double lambda0);
};

struct State {
  double w = 0.0;
  double phi = 0.0;  // unwrapped
};

struct Rates {
  double dw = 0.0;
  double dphi = 0.0;
};

enum class Termination { reached_end, singularity_guard };

/// A passage through |w| -> 1 continued by the pole map (phi -> phi +/- pi).
struct PoleCrossing {
  double t = 0.0;
  double w = 0.0;
  double phi_before = 0.0;
  double phi_after = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  Termination terminated_by = Termination::reached_end;
  std::vector<PoleCrossing> pole_crossings;

  std::size_t size() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }
  double t_begin() const { return times.front(); }
  double t_end() const { return times.back(); }
};

void validate(const RawParams& raw);

SystemParams derive_params(const RawParams& raw);

/// Lambda(t) = lambda0 + h sin(omega_p t).
double lambda_of_t(const Drive& drive, double lambda0, double t) noexcept;

/// Explicit right-hand side; the phi-dot inside the w equation is substituted
/// analytically. Throws Error(singularity) for |w| >= 1.
Rates rhs(const State& s, double t, const SystemParams& p, const Drive& d);

/// Same as rhs() without the domain check; returns non-finite rates outside
/// |w| < 1. Used by the integrator's inner loop.
Rates rhs_unchecked(const State& s, double t, const SystemParams& p, const Drive& d) noexcept;

/// Lambda w^2 / 2 - sqrt(1 - w^2) cos(phi). Conserved when eta = 0 and h = 0;
/// otherwise dE/dt = -(eta/N) phi_dot^2 at fixed Lambda.
double bjj_energy(const State& s, double lambda);

/// phi reduced to (-pi, pi].
double wrapped_phase(double phi) noexcept;

}  // namespace bjj
