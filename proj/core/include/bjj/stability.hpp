#pragma once

// First-order multiple-scales reduction of the parametric oscillator near
// the 2:1 resonance. Slow time is sigma = epsilon * omega_p * t, so a slow
// eigenvalue lambda corresponds to a physical rate epsilon * omega_p * lambda.

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bjj::slowflow {

struct SlowFlowCoeffs {
  double epsilon = 0.0;  // h / omega_p^2
  double rho = 0.0;      // omega_p kappa / h
  double c = 0.0;        // (eta/N) h / kappa
  double gamma = 0.0;    // omega_J^2 / omega_p^2
};

SlowFlowCoeffs slow_flow_coeffs(double h, double omega_p, double kappa, double eta_over_N,
                                double omega_j);

struct Eigenvalues {
  std::complex<double> plus;
  std::complex<double> minus;
};

/// lambda = -rho/2 +/- sqrt(rho^2 c^2 / 16 - gamma1^2 + 1/4).
Eigenvalues slow_flow_eigenvalues(double rho, double c, double gamma1);

/// gamma = 1/4 +/- epsilon sqrt(rho^2 c^2/16 - rho^2/4 + 1/4); empty when
/// damping closes the tongue at this epsilon.
std::optional<std::pair<double, double>> tongue_boundaries(double epsilon, double rho, double c);

enum class Label { stable, parametric_unstable };

const char* to_string(Label label) noexcept;

struct PointClass {
  Label label = Label::stable;
  double lambda_plus = 0.0;  // real part
};

PointClass classify_point(double gamma, double epsilon, double rho, double c);

/// Fixed drive frequency and dissipation for a diagram; per cell h = eps omega_p^2.
struct DiagramBase {
  double omega_p = 1.0;
  double kappa = 0.0;
  double eta_over_N = 0.0;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct BoundaryPoint {
  double epsilon = 0.0;
  double gamma_minus = 0.0;
  double gamma_plus = 0.0;
};

struct StabilityDiagram {
  std::vector<double> gamma_axis;
  std::vector<double> epsilon_axis;
  // Row-major, epsilon-major: cell (ie, ig) at ie * gamma_axis.size() + ig.
  std::vector<double> lambda_plus;
  std::vector<Label> labels;
  std::vector<bool> extrapolated;
  std::vector<BoundaryPoint> boundary;

  std::size_t index(std::size_t ie, std::size_t ig) const noexcept { return ie * gamma_axis.size() + ig; }
};

/// Coefficients of the cell (gamma, epsilon) for a given base.
SlowFlowCoeffs cell_coeffs(const DiagramBase& base, double gamma, double epsilon);

/// Classifies one cell; epsilon = 0 (no drive) is stable with the damped
/// slow-flow rate reported as -infinity.
PointClass classify_cell(const DiagramBase& base, double gamma, double epsilon);

/// Node grid (endpoints included) of gamma_n x epsilon_n points. Cells are
/// independent; `threads` = 0 uses the hardware concurrency.
StabilityDiagram scan_diagram(Range gamma_range, Range epsilon_range, std::size_t gamma_n,
                              std::size_t epsilon_n, const DiagramBase& base, unsigned threads = 0);

/// Cells further than this from the tongue tip are outside the expansion's
/// comfortable range.
inline constexpr double extrapolation_distance = 0.15;

/// Smallest epsilon at gamma = 1/4 with lambda_plus >= 0 (bisection).
double onset_epsilon(const DiagramBase& base, double eps_hi = 10.0);

}  // namespace bjj::slowflow
