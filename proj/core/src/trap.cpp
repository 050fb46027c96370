#include "bjj/trap.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "bjj/error.hpp"

namespace bjj::trap {

void validate(const TrapParams& trap) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::invalid_parameter, m); };
  if (!(trap.chi0 > 0.0)) fail("chi0 must be positive");
  if (!(trap.chi1 >= 0.0 && trap.chi1 < trap.chi0)) fail("chi1 must lie in [0, chi0)");
  if (!(trap.b > 0.0) || !(trap.m > 0.0) || !(trap.a_rho > 0.0)) fail("b, m and a_rho must be positive");
  if (!(trap.hbar > 0.0)) fail("hbar must be positive");
  if (!(trap.a_s >= 0.0)) fail("a_s must be non-negative");
}

std::vector<std::string> warnings(const TrapParams& trap, double omega_p) {
  std::vector<std::string> out;
  const double ratio = trap.chi1 / trap.chi0;
  if (ratio > 0.3) {
    std::ostringstream os;
    os << "chi1/chi0 = " << ratio << " is not small; first-order U(t) is approximate";
    out.push_back(os.str());
  }
  const double omega_z = 2.0 * trap.b * trap.chi0 / std::sqrt(trap.m);
  if (omega_p > 0.1 * omega_z) {
    std::ostringstream os;
    os << "omega_p = " << omega_p << " is not small against omega_z = " << omega_z;
    out.push_back(os.str());
  }
  return out;
}

double barrier_height(const TrapParams& trap) {
  validate(trap);
  const double b2 = trap.b * trap.b;
  return 0.5 * trap.chi0 * trap.chi0 * b2 * b2;
}

double axial_frequency(const TrapParams& trap, double omega_p, double t) {
  validate(trap);
  const double radicand = trap.chi0 * trap.chi0 + trap.chi1 * trap.chi1 * std::sin(omega_p * t);
  if (!(radicand > 0.0)) throw Error(ErrorCode::domain, "axial_frequency: non-positive stiffness");
  return 2.0 * trap.b / std::sqrt(trap.m) * std::sqrt(radicand);
}

double modulation_depth(double chi0, double chi1) {
  if (!(chi0 > 0.0)) throw Error(ErrorCode::invalid_parameter, "modulation_depth: chi0 must be positive");
  return chi1 * chi1 / (4.0 * chi0 * chi0);
}

double onsite_u0(const TrapParams& trap) {
  validate(trap);
  const double pi32 = std::pow(std::numbers::pi, 1.5);
  return 2.0 * trap.a_s * std::pow(trap.hbar, 1.5) * std::sqrt(trap.b * trap.chi0) /
         (pi32 * trap.a_rho * trap.a_rho * std::pow(trap.m, 0.75));
}

double u_of_t(double u0, double zeta, double omega_p, double t) noexcept {
  return u0 * (1.0 + zeta * std::sin(omega_p * t));
}

}  // namespace bjj::trap
