#include "bjj/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bjj/error.hpp"

namespace bjj {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_parameter: return "invalid_parameter";
    case ErrorCode::singularity: return "singularity";
    case ErrorCode::stiffness: return "stiffness";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::domain: return "domain";
    case ErrorCode::no_oscillation: return "no_oscillation";
    case ErrorCode::too_few_extrema: return "too_few_extrema";
    case ErrorCode::inconclusive: return "inconclusive";
    case ErrorCode::guarded_estimate: return "guarded_estimate";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

void validate(const RawParams& raw) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::invalid_parameter, msg); };
  if (!(raw.J > 0.0)) fail("J must be positive");
  if (raw.N < 2) fail("N must be at least 2");
  if (!(raw.eta_over_N >= 0.0)) fail("eta_over_N must be non-negative");
  if (!(raw.zeta >= 0.0 && raw.zeta < 1.0)) fail("zeta must lie in [0, 1)");
  if (!(raw.omega_p >= 0.0)) fail("omega_p must be non-negative");
  if (!(raw.NU0 >= 0.0)) fail("NU0 must be non-negative");
}

SystemParams SystemParams::from_dimensionless(double lambda0, double eta_over_N) {
  if (!(lambda0 >= 0.0)) throw Error(ErrorCode::invalid_parameter, "lambda0 must be non-negative");
  if (!(eta_over_N >= 0.0)) throw Error(ErrorCode::invalid_parameter, "eta_over_N must be non-negative");
  SystemParams p;
  p.lambda0 = lambda0;
  p.eta_over_N = eta_over_N;
  p.kappa_zero = eta_over_N * (1.0 + lambda0);
  p.omega_j_zero = std::sqrt(1.0 + lambda0);
  if (lambda0 < 1.0) {
    p.kappa_pi = eta_over_N * (1.0 - lambda0);
    p.omega_j_pi = std::sqrt(1.0 - lambda0);
  }
  return p;
}

SystemParams derive_params(const RawParams& raw) {
  validate(raw);
  return SystemParams::from_dimensionless(raw.NU0 / (2.0 * raw.J), raw.eta_over_N);
}

Drive Drive::from_raw(const RawParams& raw, double lambda0) {
  return Drive{lambda0 * raw.zeta, raw.omega_p};
}

double lambda_of_t(const Drive& drive, double lambda0, double t) noexcept {
  return lambda0 + drive.h * std::sin(drive.omega_p * t);
}

Rates rhs_unchecked(const State& s, double t, const SystemParams& p, const Drive& d) noexcept {
  const double root = std::sqrt(1.0 - s.w * s.w);
  const double lambda = lambda_of_t(d, p.lambda0, t);
  const double dphi = lambda * s.w + s.w * std::cos(s.phi) / root;
  const double dw = -root * std::sin(s.phi) - p.eta_over_N * dphi;
  return {dw, dphi};
}

Rates rhs(const State& s, double t, const SystemParams& p, const Drive& d) {
  if (!(std::abs(s.w) < 1.0)) {
    throw Error(ErrorCode::singularity, "rhs: |w| >= 1 (w = " + std::to_string(s.w) + ")");
  }
  return rhs_unchecked(s, t, p, d);
}

double bjj_energy(const State& s, double lambda) {
  if (!(std::abs(s.w) < 1.0)) {
    throw Error(ErrorCode::singularity, "bjj_energy: |w| >= 1");
  }
  return 0.5 * lambda * s.w * s.w - std::sqrt(1.0 - s.w * s.w) * std::cos(s.phi);
}

double wrapped_phase(double phi) noexcept {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(phi, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  if (r > std::numbers::pi) r -= two_pi;
  return r;
}

}  // namespace bjj
