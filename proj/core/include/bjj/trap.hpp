#pragma once

// Double-well trap quantities behind the modulated on-site interaction.

#include <string>
#include <vector>

namespace bjj::trap {

struct TrapParams {
  double chi0 = 1.0;
  double chi1 = 0.0;
  double b = 1.0;      // half-separation of the wells
  double m = 1.0;
  double a_s = 1.0;    // s-wave scattering length
  double a_rho = 1.0;  // radial oscillator length
  double hbar = 1.0;
};

void validate(const TrapParams& trap);

/// Validity warnings (chi1 << chi0, omega_p << omega_z); never fatal.
std::vector<std::string> warnings(const TrapParams& trap, double omega_p);

/// V0 = chi0^2 b^4 / 2.
double barrier_height(const TrapParams& trap);

/// omega_z(t) = (2b / sqrt(m)) sqrt(chi0^2 + chi1^2 sin(omega_p t)).
double axial_frequency(const TrapParams& trap, double omega_p, double t);

/// zeta = chi1^2 / (4 chi0^2).
double modulation_depth(double chi0, double chi1);

/// U0 = 2 a_s hbar^{3/2} sqrt(b chi0) / (pi^{3/2} a_rho^2 m^{3/4}).
double onsite_u0(const TrapParams& trap);

/// U(t) = U0 (1 + zeta sin(omega_p t)).
double u_of_t(double u0, double zeta, double omega_p, double t) noexcept;

}  // namespace bjj::trap
