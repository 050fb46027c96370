#include "bjj/linear_theory.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "bjj/error.hpp"

namespace bjj::linear {

const char* to_string(ModeKind kind) noexcept {
  switch (kind) {
    case ModeKind::zero_phase: return "zero_phase";
    case ModeKind::running_phase: return "running_phase";
    case ModeKind::pi_phase: return "pi_phase";
    case ModeKind::self_trapped_pi: return "self_trapped_pi";
  }
  return "unknown";
}

const char* to_string(KappaConvention convention) noexcept {
  return convention == KappaConvention::zero_state ? "zero_state" : "pi_linearization";
}

double ModeAnalysis::envelope_rate() const noexcept {
  if (!std::isfinite(tau)) return 0.0;
  return damping_sign == DampingSign::decaying ? -1.0 / tau : 1.0 / tau;
}

std::vector<State> steady_states(double lambda0) {
  if (!(lambda0 >= 0.0)) throw Error(ErrorCode::domain, "steady_states: lambda0 must be >= 0");
  std::vector<State> out{{0.0, 0.0}, {0.0, std::numbers::pi}};
  if (lambda0 > 1.0) {
    const double ws = std::sqrt(1.0 - 1.0 / (lambda0 * lambda0));
    out.push_back({ws, std::numbers::pi});
    out.push_back({-ws, std::numbers::pi});
  }
  return out;
}

namespace {

// omega_J^2 and the linear damping coefficient for each mode.
ModeAnalysis damped_mode(double omega_sq, double damping, DampingSign sign, const char* name) {
  const double radicand = omega_sq - 0.25 * damping * damping;
  if (!(radicand >= 0.0)) {
    throw Error(ErrorCode::domain, std::string("mode_analysis: overdamped ") + name + " mode");
  }
  ModeAnalysis m;
  m.omega = std::sqrt(radicand);
  m.tau = damping > 0.0 ? 2.0 / damping : std::numeric_limits<double>::infinity();
  m.damping_sign = sign;
  return m;
}

}  // namespace

ModeAnalysis mode_analysis(ModeKind mode, double lambda0, double eta_over_N) {
  if (!(lambda0 >= 0.0) || !(eta_over_N >= 0.0)) {
    throw Error(ErrorCode::domain, "mode_analysis: lambda0 and eta_over_N must be >= 0");
  }
  switch (mode) {
    case ModeKind::zero_phase:
    case ModeKind::running_phase:
      return damped_mode(1.0 + lambda0, eta_over_N * (1.0 + lambda0), DampingSign::decaying,
                         "zero-phase");
    case ModeKind::pi_phase:
      if (!(lambda0 < 1.0)) throw Error(ErrorCode::domain, "mode_analysis: pi mode needs lambda0 < 1");
      return damped_mode(1.0 - lambda0, eta_over_N * (1.0 - lambda0), DampingSign::growing, "pi-phase");
    case ModeKind::self_trapped_pi: {
      if (!(lambda0 > 1.0)) {
        throw Error(ErrorCode::domain, "mode_analysis: self-trapped mode needs lambda0 > 1");
      }
      const double s = lambda0 * lambda0 - 1.0;
      return damped_mode(s, eta_over_N * lambda0 * s, DampingSign::growing, "self-trapped");
    }
  }
  throw Error(ErrorCode::domain, "mode_analysis: unknown mode");
}

double threshold_amplitude(double kappa, double omega_p) {
  if (!(kappa >= 0.0) || !(omega_p > 0.0)) {
    throw Error(ErrorCode::domain, "threshold_amplitude: need kappa >= 0 and omega_p > 0");
  }
  return 2.0 * kappa * (0.5 * omega_p);
}

double corrected_frequency(double omega_j, double eta_over_N, double h, double /*omega_p*/) {
  // omega_p = 2 omega has been substituted, so omega_p itself drops out.
  const double b = 0.25 * eta_over_N * h;
  return b + std::sqrt(omega_j * omega_j + b * b);
}

std::array<double, 2> linear_rhs(std::array<double, 2> x, double t, const OscillatorParams& p) noexcept {
  const double s = std::sin(p.drive.omega_p * t);
  const double c = std::cos(p.drive.omega_p * t);
  const double h = p.drive.h;
  const double damping = p.kappa + p.eta_over_N * h * s;
  const double stiffness = p.omega_j * p.omega_j + h * s + p.eta_over_N * h * p.drive.omega_p * c;
  return {x[1], -damping * x[1] - stiffness * x[0]};
}

OdeSystem make_linear_system(const OscillatorParams& p) {
  OdeSystem sys;
  sys.dimension = 2;
  sys.field = [p](double t, std::span<const double> y, std::span<double> dydt) {
    const auto r = linear_rhs({y[0], y[1]}, t, p);
    dydt[0] = r[0];
    dydt[1] = r[1];
  };
  return sys;
}

double kappa_for(const SystemParams& p, KappaConvention convention) {
  if (convention == KappaConvention::zero_state) return p.kappa_zero;
  if (!p.kappa_pi) throw Error(ErrorCode::domain, "pi-linearization kappa needs lambda0 < 1");
  return *p.kappa_pi;
}

}  // namespace bjj::linear
