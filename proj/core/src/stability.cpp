#include "bjj/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "bjj/error.hpp"

namespace bjj::slowflow {

SlowFlowCoeffs slow_flow_coeffs(double h, double omega_p, double kappa, double eta_over_N,
                                double omega_j) {
  if (!(h > 0.0) || !(omega_p > 0.0) || !(kappa > 0.0)) {
    throw Error(ErrorCode::domain, "slow_flow_coeffs: h, omega_p and kappa must be positive");
  }
  SlowFlowCoeffs k;
  k.epsilon = h / (omega_p * omega_p);
  k.rho = omega_p * kappa / h;
  k.c = eta_over_N * h / kappa;
  k.gamma = omega_j * omega_j / (omega_p * omega_p);
  return k;
}

Eigenvalues slow_flow_eigenvalues(double rho, double c, double gamma1) {
  const double radicand = rho * rho * c * c / 16.0 - gamma1 * gamma1 + 0.25;
  const std::complex<double> root = std::sqrt(std::complex<double>(radicand, 0.0));
  const std::complex<double> centre(-0.5 * rho, 0.0);
  return {centre + root, centre - root};
}

std::optional<std::pair<double, double>> tongue_boundaries(double epsilon, double rho, double c) {
  const double radicand = rho * rho * c * c / 16.0 - rho * rho / 4.0 + 0.25;
  if (radicand < 0.0) return std::nullopt;
  const double half_width = epsilon * std::sqrt(radicand);
  return std::make_pair(0.25 - half_width, 0.25 + half_width);
}

const char* to_string(Label label) noexcept {
  return label == Label::stable ? "stable" : "parametric_unstable";
}

PointClass classify_point(double gamma, double epsilon, double rho, double c) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::domain, "classify_point: epsilon must be positive");
  const double gamma1 = (gamma - 0.25) / epsilon;
  const double lp = slow_flow_eigenvalues(rho, c, gamma1).plus.real();
  return {lp > 0.0 ? Label::parametric_unstable : Label::stable, lp};
}

SlowFlowCoeffs cell_coeffs(const DiagramBase& base, double gamma, double epsilon) {
  SlowFlowCoeffs k;
  const double h = epsilon * base.omega_p * base.omega_p;
  k.epsilon = epsilon;
  k.gamma = gamma;
  // Without dissipation kappa and eta vanish together, so rho = rho c = 0.
  if (base.kappa > 0.0) {
    k.rho = base.omega_p * base.kappa / h;
    k.c = base.eta_over_N * h / base.kappa;
  }
  return k;
}

PointClass classify_cell(const DiagramBase& base, double gamma, double epsilon) {
  if (!(epsilon > 0.0)) {
    return {Label::stable, -std::numeric_limits<double>::infinity()};
  }
  const SlowFlowCoeffs k = cell_coeffs(base, gamma, epsilon);
  return classify_point(gamma, epsilon, k.rho, k.c);
}

namespace {

std::vector<double> axis(Range r, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::domain, "scan_diagram: empty axis");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = n == 1 ? r.lo : r.lo + (r.hi - r.lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

}  // namespace

StabilityDiagram scan_diagram(Range gamma_range, Range epsilon_range, std::size_t gamma_n,
                              std::size_t epsilon_n, const DiagramBase& base, unsigned threads) {
  if (gamma_range.hi < gamma_range.lo || epsilon_range.hi < epsilon_range.lo) {
    throw Error(ErrorCode::domain, "scan_diagram: inverted range");
  }
  if (epsilon_range.lo < 0.0) throw Error(ErrorCode::domain, "scan_diagram: epsilon must be >= 0");
  StabilityDiagram d;
  d.gamma_axis = axis(gamma_range, gamma_n);
  d.epsilon_axis = axis(epsilon_range, epsilon_n);
  const std::size_t cells = gamma_n * epsilon_n;
  d.lambda_plus.resize(cells);
  d.labels.resize(cells);
  d.extrapolated.resize(cells);

  // Each worker owns a contiguous block of epsilon rows, so results do not
  // depend on scheduling.
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, epsilon_n));
  std::vector<std::vector<char>> extrapolated_rows(epsilon_n, std::vector<char>(gamma_n));
  auto work = [&](std::size_t row_begin, std::size_t row_end) {
    for (std::size_t ie = row_begin; ie < row_end; ++ie) {
      for (std::size_t ig = 0; ig < gamma_n; ++ig) {
        const PointClass pc = classify_cell(base, d.gamma_axis[ig], d.epsilon_axis[ie]);
        d.lambda_plus[d.index(ie, ig)] = pc.lambda_plus;
        d.labels[d.index(ie, ig)] = pc.label;
        extrapolated_rows[ie][ig] = std::abs(d.gamma_axis[ig] - 0.25) > extrapolation_distance;
      }
    }
  };
  if (workers <= 1) {
    work(0, epsilon_n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (epsilon_n + workers - 1) / workers;
    for (std::size_t b = 0; b < epsilon_n; b += chunk) {
      pool.emplace_back(work, b, std::min(epsilon_n, b + chunk));
    }
  }
  for (std::size_t ie = 0; ie < epsilon_n; ++ie) {
    for (std::size_t ig = 0; ig < gamma_n; ++ig) d.extrapolated[d.index(ie, ig)] = extrapolated_rows[ie][ig];
  }

  for (double eps : d.epsilon_axis) {
    double rho = 0.0, c = 0.0;
    if (eps > 0.0) {
      const SlowFlowCoeffs k = cell_coeffs(base, 0.25, eps);
      rho = k.rho;
      c = k.c;
    } else if (base.kappa > 0.0) {
      continue;  // the damped tongue is closed at its tip
    }
    if (auto b = tongue_boundaries(eps, rho, c)) d.boundary.push_back({eps, b->first, b->second});
  }
  return d;
}

double onset_epsilon(const DiagramBase& base, double eps_hi) {
  auto unstable = [&](double eps) { return classify_cell(base, 0.25, eps).lambda_plus >= 0.0; };
  if (!unstable(eps_hi)) throw Error(ErrorCode::domain, "onset_epsilon: no instability below eps_hi");
  double lo = 0.0, hi = eps_hi;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (unstable(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace bjj::slowflow
