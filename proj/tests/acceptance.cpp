// Acceptance run: one PASS/FAIL line per criterion, with the measured values.
// Criteria listed in kKnownRed are reported as FAIL but do not change the exit
// status; every other FAIL does.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bjj/diagnostics.hpp"
#include "bjj/error.hpp"
#include "bjj/linear_theory.hpp"
#include "bjj/model.hpp"
#include "bjj/ode.hpp"
#include "bjj/scenario.hpp"
#include "bjj/stability.hpp"
#include "bjj/trap.hpp"
#include "trap_oracle.hpp"

using namespace bjj;

namespace {

constexpr double pi = std::numbers::pi;

const std::set<int> kKnownRed = {2, 3, 9, 10};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " !" << what;
    }
  }
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double mod_dist(double x, double target) { return std::abs(wrapped_phase(x - target)); }

std::map<std::string, scenario::RunReport> g_reports;

const scenario::RunReport& report(const std::string& preset) {
  auto it = g_reports.find(preset);
  if (it == g_reports.end()) {
    it = g_reports.emplace(preset, scenario::run(scenario::resolve_preset(preset)).report).first;
  }
  return it->second;
}

std::string label(const std::string& preset) { return scenario::label_of(report(preset)); }

void c1(Outcome& o) {
  const std::pair<const char*, double> cases[] = {{"fig1b", 0.594}, {"fig3b", 2.122}, {"fig4b", 0.0623}, {"fig5b", 0.1068}};
  for (const auto& [name, listed] : cases) {
    const auto cfg = scenario::resolve_preset(name);
    const auto p = SystemParams::from_dimensionless(cfg.lambda0, cfg.eta_over_N);
    const double kappa = linear::kappa_for(p, cfg.kappa_convention);
    const double ht = linear::threshold_amplitude(kappa, cfg.drive.omega_p);
    const double quoted = *cfg.quoted_threshold;
    o.detail << " " << name << ": h_t=" << ht << " (listed " << listed << ", quoted " << quoted
             << ", rel " << rel(ht, quoted) << ");";
    o.require(rel(ht, kappa * cfg.drive.omega_p) < 1e-14, std::string(name) + " h_t != kappa*omega_p");
    o.require(rel(ht, quoted) <= 0.10, std::string(name) + " off quoted by >10%");
    o.require(std::abs(ht - listed) <= 5e-4 * std::max(1.0, listed), std::string(name) + " off listed value");
  }
}

void c2(Outcome& o) {
  const std::pair<const char*, const char*> cases[] = {
      {"fig1b", "decay_to_fixed_point"}, {"fig1c", "sustained_periodic"},
      {"fig3b", "decay_to_fixed_point"}, {"fig3c", "sustained_periodic"},
      {"fig5b", "decay_to_fixed_point"}, {"fig5c", "sustained_periodic"},
  };
  for (const auto& [name, expected] : cases) {
    const std::string got = label(name);
    o.detail << " " << name << "=" << got << ";";
    o.require(got == expected, std::string(name) + " expected " + expected);
  }
  const double trapped = report("fig5b").mean_imbalance_early;
  o.detail << " fig5b early mean w=" << trapped << ";";
  o.require(trapped > 0.5, "fig5b has no trapped transient");
}

void c3(Outcome& o) {
  for (const char* name : {"fig1c", "fig3c", "fig4c", "fig5c", "fig7a"}) {
    const auto& r = report(name);
    if (r.classification.label != diag::Regime::sustained_periodic) continue;
    const double half = 0.5 * r.omega_p;
    if (!r.dominant_frequency) {
      o.require(false, std::string(name) + " has no frequency estimate");
      continue;
    }
    const double e = rel(*r.dominant_frequency, half);
    o.detail << " " << name << ": " << *r.dominant_frequency << " vs " << half << " (rel " << e << ");";
    o.require(e <= 0.02, std::string(name) + " not subharmonic");
  }
}

void c4(Outcome& o) {
  const auto& a = report("fig1a");
  o.require(a.transient_frequency && a.transient_envelope_rate, "fig1a transient fit missing");
  if (a.transient_frequency && a.transient_envelope_rate) {
    o.detail << " fig1a omega=" << *a.transient_frequency << " (2.4488, rel " << rel(*a.transient_frequency, 2.4488)
             << "), rate=" << *a.transient_envelope_rate << " (-0.06, rel " << rel(*a.transient_envelope_rate, -0.06)
             << ");";
    o.require(rel(*a.transient_frequency, 2.4488) <= 0.01, "fig1a frequency");
    o.require(rel(*a.transient_envelope_rate, -0.06) <= 0.05, "fig1a envelope rate");
  }
  const auto& g = report("fig4a");
  o.require(g.growth_rate.has_value(), "fig4a growth fit missing");
  if (g.growth_rate) {
    o.detail << " fig4a growth=" << *g.growth_rate << " (0.00646, rel " << rel(*g.growth_rate, 0.00646) << ");";
    o.require(rel(*g.growth_rate, 0.00646) <= 0.20, "fig4a growth rate");
  }
}

// Closed form evaluated from scratch, without the library.
double lambda_plus_closed(double gamma, double eps, double omega_p, double kappa, double eta) {
  const double h = eps * omega_p * omega_p;
  const double rho = omega_p * kappa / h;
  const double c = eta * h / kappa;
  const double g1 = (gamma - 0.25) / eps;
  const double disc = rho * rho * c * c / 16.0 - g1 * g1 + 0.25;
  return -rho / 2.0 + (disc > 0.0 ? std::sqrt(disc) : 0.0);
}

void c5(Outcome& o) {
  const auto cfg = scenario::resolve_preset("fig6a");
  const double eps[] = {0.021, 0.055, 0.088};
  const double listed[] = {-0.1404, 0.2718, 0.3596};
  const slowflow::Label expected[] = {slowflow::Label::stable, slowflow::Label::parametric_unstable,
                                      slowflow::Label::parametric_unstable};
  for (int i = 0; i < 3; ++i) {
    const auto k = slowflow::slow_flow_coeffs(eps[i] * cfg.sweep.omega_p * cfg.sweep.omega_p, cfg.sweep.omega_p,
                                              cfg.sweep.kappa, cfg.sweep.eta_over_N, 1.0);
    const auto pc = slowflow::classify_point(0.245, eps[i], k.rho, k.c);
    const double oracle = lambda_plus_closed(0.245, eps[i], cfg.sweep.omega_p, cfg.sweep.kappa, cfg.sweep.eta_over_N);
    o.detail << " eps=" << eps[i] << ": " << pc.lambda_plus << " " << slowflow::to_string(pc.label) << " (oracle "
             << oracle << ", listed " << listed[i] << ");";
    o.require(std::abs(pc.lambda_plus - oracle) <= 1e-3, "lambda_plus off the closed form");
    o.require(pc.label == expected[i], "label");
  }
}

void c6(Outcome& o) {
  const auto cfg = scenario::resolve_preset("fig6a");
  const slowflow::DiagramBase base{cfg.sweep.omega_p, cfg.sweep.kappa, cfg.sweep.eta_over_N};
  const auto tip = slowflow::tongue_boundaries(0.0, 1.0, 0.1);
  o.require(tip && tip->first == 0.25 && tip->second == 0.25, "eps=0 boundaries");
  double undamped_err = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double eps = 0.004 * i;
    const auto b = slowflow::tongue_boundaries(eps, 0.0, 0.0);
    undamped_err = std::max({undamped_err, std::abs(b->first - (0.25 - eps / 2)), std::abs(b->second - (0.25 + eps / 2))});
  }
  o.detail << " undamped max err=" << undamped_err << ";";
  o.require(undamped_err <= 1e-12, "undamped boundaries");

  const auto k = slowflow::cell_coeffs(base, 0.25, 0.055);
  const auto b = slowflow::tongue_boundaries(0.055, k.rho, k.c);
  o.require(b.has_value(), "eps=0.055 tongue closed");
  if (b) {
    o.detail << " eps=0.055: (" << b->first << ", " << b->second << ");";
    o.require(std::abs(b->first - 0.22528) <= 1e-4 && std::abs(b->second - 0.27472) <= 1e-4, "fig6a boundaries");
  }

  const auto d = slowflow::scan_diagram(cfg.sweep.gamma, cfg.sweep.epsilon, 200, 200, base);
  std::size_t bad = 0;
  for (std::size_t ie = 0; ie < 200; ++ie) {
    const double eps = d.epsilon_axis[ie];
    std::optional<std::pair<double, double>> edge;
    if (eps > 0.0) {
      const auto kk = slowflow::cell_coeffs(base, 0.25, eps);
      edge = slowflow::tongue_boundaries(eps, kk.rho, kk.c);
    }
    for (std::size_t ig = 0; ig < 200; ++ig) {
      const double g = d.gamma_axis[ig];
      const bool inside = edge && g > edge->first && g < edge->second;
      const bool on_edge = edge && std::min(std::abs(g - edge->first), std::abs(g - edge->second)) < 1e-12;
      const bool unstable = d.labels[d.index(ie, ig)] == slowflow::Label::parametric_unstable;
      if (!on_edge && inside != unstable) ++bad;
    }
  }
  o.detail << " 200x200 inconsistent cells=" << bad << ";";
  o.require(bad == 0, "boundary/eigenvalue consistency");
}

void c7(Outcome& o) {
  const std::tuple<const char*, double, double> cases[] = {{"fig6a", 0.24490, 0.005}, {"fig6b", 0.12098, 0.01}};
  for (const auto& [name, listed, tol] : cases) {
    const auto cfg = scenario::resolve_preset(name);
    const auto p = SystemParams::from_dimensionless(cfg.sweep.lambda0, cfg.sweep.eta_over_N);
    const double wj = cfg.sweep.mode == linear::ModeKind::pi_phase ? *p.omega_j_pi : p.omega_j_zero;
    const double gamma = wj * wj / (cfg.sweep.omega_p * cfg.sweep.omega_p);
    o.detail << " " << name << ": gamma=" << gamma << " (listed " << listed << ", rel " << rel(gamma, listed)
             << "; line " << cfg.sweep.gamma_line << ");";
    o.require(rel(gamma, listed) <= tol, std::string(name) + " gamma");
    o.require(std::abs(cfg.sweep.gamma_line - gamma) < 1e-12, std::string(name) + " line not at gamma");
  }
}

void c8(Outcome& o) {
  const auto& a = report("fig4a");
  o.detail << " fig4a slips=" << a.phase_slips.size() << ";";
  o.require(a.phase_slips.size() == 1, "fig4a slip count");
  if (!a.phase_slips.empty()) {
    const auto& s = a.phase_slips.front();
    o.detail << " jump=" << s.jump << " pre=" << s.pre_plateau << " post=" << s.post_plateau
             << " (plateaus compared mod 2pi: " << mod_dist(s.pre_plateau, pi) << ", " << mod_dist(s.post_plateau, 0.0)
             << ");";
    o.require(std::abs(std::abs(s.jump) - pi) <= 0.2 * pi, "fig4a jump");
    o.require(mod_dist(s.pre_plateau, pi) <= 0.2, "fig4a pre-plateau");
    o.require(mod_dist(s.post_plateau, 0.0) <= 0.2, "fig4a post-plateau");
  }
  const auto& c = report("fig4c");
  o.detail << " fig4c slips=" << c.phase_slips.size() << " label=" << label("fig4c") << ";";
  o.require(c.phase_slips.size() == 1, "fig4c slip count");
  if (!c.phase_slips.empty()) {
    const auto& s = c.phase_slips.front();
    o.detail << " post=" << s.post_plateau << " (distance to 2pi mod 2pi " << mod_dist(s.post_plateau, 2 * pi) << ");";
    o.require(mod_dist(s.post_plateau, 2 * pi) <= 0.2, "fig4c landing");
  }
  o.require(label("fig4c") == "sustained_periodic", "fig4c label");
}

void c9(Outcome& o) {
  for (const char* name : {"fig7a", "fig7b"}) {
    const auto& r = report(name);
    const double lam = r.lyapunov ? r.lyapunov->lambda_max : std::nan("");
    o.detail << " " << name << ": lambda_max=" << lam << " label=" << label(name) << ";";
  }
  const auto& a = report("fig7a");
  const auto& b = report("fig7b");
  o.require(a.lyapunov && std::abs(a.lyapunov->lambda_max) < 0.01, "fig7a exponent");
  o.require(label("fig7a") == "sustained_periodic", "fig7a label");
  o.require(b.lyapunov && b.lyapunov->lambda_max > 0.01, "fig7b exponent");
  o.require(label("fig7b") == "chaotic", "fig7b label");
}

void c10(Outcome& o) {
  const auto p = SystemParams::from_dimensionless(5.0, 0.0);
  auto drift_at = [&](double tol) {
    IntegratorSettings s;
    s.t_end = 1000.0;
    s.rel_tol = tol;
    s.abs_tol = tol;
    const Trajectory tr = simulate(p, Drive{}, State{0.5, 0.0}, s);
    const double e0 = bjj_energy(tr.states.front(), 5.0);
    double drift = 0.0;
    for (const State& st : tr.states) drift = std::max(drift, std::abs(bjj_energy(st, 5.0) - e0) / std::abs(e0));
    return drift;
  };
  const double drift = drift_at(1e-10);
  o.detail << " max relative drift=" << drift << " at tol 1e-10;";
  o.require(drift < 1e-8, "energy drift");
  o.detail << " drift/tol:";
  for (double tol : {1e-9, 1e-11, 1e-12}) o.detail << " " << drift_at(tol) / tol << "@" << tol;
  o.detail << ";";
}

void c11(Outcome& o) {
  const auto cfg = scenario::resolve_preset("fig1c");
  const auto p = SystemParams::from_dimensionless(cfg.lambda0, cfg.eta_over_N);
  IntegratorSettings s = cfg.integrator;
  s.t_end = 100.0;
  const Trajectory a = simulate(p, cfg.drive, cfg.initial, s);
  const Trajectory b = simulate(p, cfg.drive, State{-cfg.initial.w, -cfg.initial.phi}, s);
  double sup = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    sup = std::max({sup, std::abs(a.states[i].w + b.states[i].w), std::abs(a.states[i].phi + b.states[i].phi)});
  }
  o.detail << " sup|x(t) + x_mirror(t)|=" << sup << " over " << n << " samples;";
  o.require(a.size() == b.size(), "sample grids differ");
  o.require(sup <= 1e-9, "parity");
}

void c12(Outcome& o) {
  const trap::TrapParams unit;
  const double u0 = trap::onsite_u0(unit);
  const double closed = 2.0 / std::pow(pi, 1.5);
  o.detail << " U0=" << u0 << " (2/pi^1.5=" << closed << ", 0.3592721 listed);";
  o.require(std::abs(u0 - closed) <= 1e-12, "U0 closed form");

  const double zeta = 0.05;
  trap::TrapParams mod = unit;
  mod.chi1 = std::sqrt(4.0 * zeta) * unit.chi0;
  const double omega_p = 1.0;
  // First-order coefficient of the quadrature in x = chi1^2 sin / chi0^2.
  auto u_at = [&](double x) {
    const double omega_z = 2.0 * unit.b / std::sqrt(unit.m) * std::sqrt(unit.chi0 * unit.chi0 * (1.0 + x));
    return oracle::onsite_quadrature(unit, omega_z);
  };
  const double dx = 1e-4;
  const double c1 = (u_at(dx) - u_at(-dx)) / (2.0 * dx * u0);
  double first_order_err = 0.0, raw_err = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double t = 2.0 * pi * i / 200.0;
    const double s = std::sin(omega_p * t);
    const double model = trap::u_of_t(u0, trap::modulation_depth(mod.chi0, mod.chi1), omega_p, t);
    const double linearized = u0 * (1.0 + c1 * 4.0 * zeta * s);
    const double exact = oracle::onsite_quadrature(unit, trap::axial_frequency(mod, omega_p, t));
    first_order_err = std::max(first_order_err, std::abs(model - linearized) / linearized);
    raw_err = std::max(raw_err, std::abs(model - exact) / exact);
  }
  o.detail << " dU/dx / U0=" << c1 << "; first-order rel err=" << first_order_err << " (bound " << zeta * zeta
           << "); unexpanded rel err=" << raw_err << ";";
  o.require(first_order_err <= zeta * zeta, "first-order modulation");
}

void c13(Outcome& o) {
  const double lambda0 = 2.0833;
  const auto states = linear::steady_states(lambda0);
  const auto p = SystemParams::from_dimensionless(lambda0, 0.0);
  // Bisection on phi-dot along phi = pi, w in (0.01, 0.999).
  auto f = [&](double w) { return rhs(State{w, pi}, 0.0, p, Drive{}).dphi; };
  double lo = 0.01, hi = 0.999;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((f(lo) > 0.0) == (f(mid) > 0.0) ? lo : hi) = mid;
  }
  const double root = 0.5 * (lo + hi);
  const double ws = states.size() > 2 ? states[2].w : std::nan("");
  o.detail << " w_s=" << ws << " root-find=" << root << " |diff|=" << std::abs(ws - root)
           << " (listed 0.87683, diff " << std::abs(ws - 0.87683) << "; consistent with w(0)=0.87: "
           << (std::abs(ws - 0.87) < 0.01 ? "yes" : "no") << ");";
  o.require(std::abs(ws - root) <= 1e-5, "steady state vs root-find");
  o.require(std::abs(ws - 0.87) < 0.01, "inconsistent with w(0)=0.87");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
      {"threshold reproduction", c1},      {"regime bracketing", c2},
      {"subharmonic response", c3},        {"mode-frequency laws", c4},
      {"slow-flow points", c5},            {"tongue geometry", c6},
      {"gamma line values", c7},           {"phase slip", c8},
      {"chaos transition", c9},            {"energy conservation", c10},
      {"parity symmetry", c11},            {"on-site interaction", c12},
      {"self-trapped steady state", c13},
  };
  int unexpected = 0, failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    Outcome o;
    o.detail.precision(7);
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " exception: " << e.what();
    }
    const bool known = kKnownRed.count(id) > 0;
    if (!o.pass) {
      ++failed;
      if (!known) ++unexpected;
    }
    std::printf("%s %2d %s:%s%s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.str().c_str(),
                !o.pass && known ? " [known deviation, see README]" : "");
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed, %d unexpected\n", criteria.size(), failed, unexpected);
  return unexpected == 0 ? 0 : 1;
}
