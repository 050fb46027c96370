#include "bjj/ode.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bjj/error.hpp"

namespace bjj {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Dense output (Hairer, contd5).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

class Stepper {
public:
  Stepper(const OdeSystem& sys) : sys_(sys), n_(sys.dimension) {
    for (auto& k : k_) k.assign(n_, 0.0);
    tmp_.assign(n_, 0.0);
    ynew_.assign(n_, 0.0);
    err_.assign(n_, 0.0);
    for (auto& r : rcont_) r.assign(n_, 0.0);
  }

  void eval_first(double t, std::span<const double> y) { sys_.field(t, y, k_[0]); }

  /// One trial step from (t, y) with step h; k_[0] must hold f(t, y).
  /// Returns false if any stage left the domain.
  bool trial(double t, std::span<const double> y, double h) {
    auto stage = [&](double ct, auto&& combine, std::vector<double>& out) {
      for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * combine(i);
      if (!all_finite(tmp_)) return false;
      sys_.field(t + ct * h, tmp_, out);
      return all_finite(out);
    };
    auto& k1 = k_[0]; auto& k2 = k_[1]; auto& k3 = k_[2]; auto& k4 = k_[3];
    auto& k5 = k_[4]; auto& k6 = k_[5]; auto& k7 = k_[6];
    if (!stage(c2, [&](std::size_t i) { return a21 * k1[i]; }, k2)) return false;
    if (!stage(c3, [&](std::size_t i) { return a31 * k1[i] + a32 * k2[i]; }, k3)) return false;
    if (!stage(c4, [&](std::size_t i) { return a41 * k1[i] + a42 * k2[i] + a43 * k3[i]; }, k4))
      return false;
    if (!stage(c5, [&](std::size_t i) {
          return a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i];
        }, k5))
      return false;
    if (!stage(1.0, [&](std::size_t i) {
          return a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i];
        }, k6))
      return false;
    for (std::size_t i = 0; i < n_; ++i) {
      ynew_[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    }
    if (!all_finite(ynew_)) return false;
    sys_.field(t + h, ynew_, k7);
    if (!all_finite(k7)) return false;
    for (std::size_t i = 0; i < n_; ++i) {
      err_[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    }
    return true;
  }

  double error_norm(std::span<const double> y, double rtol, double atol) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double scale = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew_[i]));
      const double r = err_[i] / scale;
      sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(n_));
  }

  void prepare_dense(std::span<const double> y, double h) {
    const auto& k1 = k_[0]; const auto& k3 = k_[2]; const auto& k4 = k_[3];
    const auto& k5 = k_[4]; const auto& k6 = k_[5]; const auto& k7 = k_[6];
    for (std::size_t i = 0; i < n_; ++i) {
      const double ydiff = ynew_[i] - y[i];
      const double bspl = h * k1[i] - ydiff;
      rcont_[0][i] = y[i];
      rcont_[1][i] = ydiff;
      rcont_[2][i] = bspl;
      rcont_[3][i] = ydiff - h * k7[i] - bspl;
      rcont_[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
    }
  }

  void dense(double theta, std::span<double> out) const {
    const double theta1 = 1.0 - theta;
    for (std::size_t i = 0; i < n_; ++i) {
      out[i] = rcont_[0][i] +
               theta * (rcont_[1][i] +
                        theta1 * (rcont_[2][i] + theta * (rcont_[3][i] + theta1 * rcont_[4][i])));
    }
  }

  /// FSAL: the last stage becomes the first stage of the next step.
  void advance() { std::swap(k_[0], k_[6]); }

  const std::vector<double>& y_new() const { return ynew_; }
  std::span<double> y_new_mut() { return ynew_; }
  const std::vector<double>& k1() const { return k_[0]; }

private:
  const OdeSystem& sys_;
  std::size_t n_;
  std::array<std::vector<double>, 7> k_;
  std::vector<double> tmp_, ynew_, err_;
  std::array<std::vector<double>, 5> rcont_;
};

double initial_step(const OdeSystem& sys, double t, std::span<const double> y,
                    std::span<const double> f0, double rtol, double atol, double max_step) {
  const std::size_t n = sys.dimension;
  double d0 = 0.0, d1n = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = atol + rtol * std::abs(y[i]);
    d0 += (y[i] / sc) * (y[i] / sc);
    d1n += (f0[i] / sc) * (f0[i] / sc);
  }
  d0 = std::sqrt(d0 / n);
  d1n = std::sqrt(d1n / n);
  double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  h0 = std::min(h0, max_step);
  std::vector<double> y1(n), f1(n);
  for (std::size_t i = 0; i < n; ++i) y1[i] = y[i] + h0 * f0[i];
  sys.field(t + h0, y1, f1);
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = atol + rtol * std::abs(y[i]);
    const double r = (f1[i] - f0[i]) / sc;
    d2 += r * r;
  }
  d2 = std::isfinite(d2) ? std::sqrt(d2 / n) / h0 : 0.0;
  const double dm = std::max(d1n, d2);
  const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
  return std::min({100.0 * h0, h1, max_step});
}

}  // namespace

const char* to_string(SingularityPolicy policy) noexcept {
  return policy == SingularityPolicy::stop ? "stop" : "pole_crossing";
}

SingularityPolicy parse_singularity_policy(const std::string& text) {
  if (text == "stop") return SingularityPolicy::stop;
  if (text == "pole_crossing") return SingularityPolicy::pole_crossing;
  throw Error(ErrorCode::config, "unknown singularity policy '" + text + "' (stop|pole_crossing)");
}

void IntegratorSettings::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::precondition, m); };
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) fail("tolerances must be positive");
  if (!(guard_delta > 0.0 && guard_delta < 1e-3)) fail("guard_delta must lie in (0, 1e-3)");
  if (!(sample_dt > 0.0)) fail("sample_dt must be positive");
  if (!(t_end > t_begin)) fail("t_end must exceed t_begin");
  if (max_step && !(*max_step > 0.0)) fail("max_step must be positive");
}

double drive_resolving_step(double omega_p) noexcept {
  if (!(omega_p > 0.0)) return std::numeric_limits<double>::infinity();
  return 2.0 * std::numbers::pi / (20.0 * omega_p);
}

Solution integrate(const OdeSystem& system, std::span<const double> y0,
                   const IntegratorSettings& settings) {
  settings.validate();
  const std::size_t n = system.dimension;
  if (n == 0 || y0.size() != n || !system.field) {
    throw Error(ErrorCode::precondition, "integrate: state dimension mismatch");
  }
  if (!all_finite(y0)) throw Error(ErrorCode::precondition, "integrate: non-finite initial state");
  const bool guarded = static_cast<bool>(system.guard_margin);
  if (guarded && !(system.guard_margin(y0) > 0.0)) {
    throw Error(ErrorCode::precondition, "integrate: initial state violates the singularity guard");
  }

  const double t0 = settings.t_begin;
  const double t_end = settings.t_end;
  const double span = t_end - t0;
  const double max_step = std::min(settings.max_step.value_or(span), span);

  Solution sol;
  sol.dimension = n;
  const auto n_grid = static_cast<std::size_t>(std::floor(span / settings.sample_dt + 1e-9));
  sol.times.reserve(n_grid + 2);
  sol.values.reserve((n_grid + 2) * n);

  std::vector<double> y(y0.begin(), y0.end());
  std::vector<double> sample(n);
  std::size_t next_sample = 0;
  auto grid_time = [&](std::size_t k) { return t0 + static_cast<double>(k) * settings.sample_dt; };
  auto push = [&](double t, std::span<const double> v) {
    sol.times.push_back(t);
    sol.values.insert(sol.values.end(), v.begin(), v.end());
  };

  push(t0, y);
  next_sample = 1;

  Stepper stepper(system);
  stepper.eval_first(t0, y);
  if (!all_finite(stepper.k1())) {
    throw Error(ErrorCode::precondition, "integrate: vector field not finite at the initial state");
  }

  double t = t0;
  bool armed = true;
  const double rtol = settings.rel_tol, atol = settings.abs_tol;

  auto emit_until = [&](double t_old, double h, bool include_end) {
    while (next_sample <= n_grid) {
      const double ts = grid_time(next_sample);
      if (ts > t_old + h || (!include_end && ts >= t_old + h)) break;
      stepper.dense((ts - t_old) / h, sample);
      push(ts, sample);
      ++next_sample;
    }
  };

  // Ends the run on the guard; the event state becomes the final sample.
  auto finish_on_guard = [&](double t_event, std::span<const double> y_event) {
    if (t_event > sol.times.back()) push(t_event, y_event);
    sol.terminated_by = Termination::singularity_guard;
  };

  // Fires the guard at (t, y). Returns true if the run continues.
  auto fire_guard = [&](double t_event, std::span<double> y_event) {
    if (!system.on_guard || !system.on_guard(t_event, y_event)) {
      finish_on_guard(t_event, y_event);
      return false;
    }
    sol.guard_times.push_back(t_event);
    armed = false;
    stepper.eval_first(t_event, y_event);
    return all_finite(stepper.k1());
  };

  if (settings.fixed_step) {
    const auto steps = static_cast<std::size_t>(std::ceil(span / max_step - 1e-12));
    const double h = span / static_cast<double>(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      if (!stepper.trial(t, y, h)) {
        throw Error(ErrorCode::singularity, "integrate: fixed step left the domain");
      }
      stepper.prepare_dense(y, h);
      emit_until(t, h, true);
      std::copy(stepper.y_new().begin(), stepper.y_new().end(), y.begin());
      t = (i + 1 == steps) ? t_end : t0 + static_cast<double>(i + 1) * h;
      stepper.advance();
      ++sol.accepted_steps;
      if (guarded && system.guard_margin(y) <= 0.0) {
        if (!fire_guard(t, y)) return sol;
      }
    }
    if (sol.times.back() < t_end) push(t_end, y);
    return sol;
  }

  double h = initial_step(system, t, y, stepper.k1(), rtol, atol, max_step);
  bool last_rejected = false;
  std::size_t steps = 0;

  while (t < t_end) {
    if (++steps > settings.max_steps) {
      throw Error(ErrorCode::stiffness, "integrate: step budget exhausted");
    }
    const double h_min = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    if (h < h_min) {
      // The step collapses at the guard: the trajectory is pinned against the
      // singular set, which counts as reaching it.
      if (guarded && system.guard_margin(y) < settings.guard_rearm) {
        if (armed) {
          if (!fire_guard(t, y)) return sol;
          h = std::max(1e3 * h_min, 1e-9);
          continue;
        }
        finish_on_guard(t, y);
        return sol;
      }
      throw Error(ErrorCode::stiffness, "integrate: step size underflow at t = " + std::to_string(t));
    }
    bool hit_end = false;
    if (t + h >= t_end) {
      h = t_end - t;
      hit_end = true;
    }

    if (!stepper.trial(t, y, h)) {
      ++sol.rejected_steps;
      h *= 0.25;
      last_rejected = true;
      continue;
    }
    const double err = stepper.error_norm(y, rtol, atol);
    if (!(err <= 1.0)) {
      ++sol.rejected_steps;
      const double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
      h *= fac;
      last_rejected = true;
      continue;
    }

    stepper.prepare_dense(y, h);
    emit_until(t, h, true);
    const double t_new = hit_end ? t_end : t + h;
    std::copy(stepper.y_new().begin(), stepper.y_new().end(), y.begin());
    t = t_new;
    stepper.advance();
    ++sol.accepted_steps;

    double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    if (last_rejected) fac = std::min(fac, 1.0);
    last_rejected = false;
    const double h_used = h;
    h = std::min(h_used * fac, max_step);

    if (guarded) {
      const double margin = system.guard_margin(y);
      if (!armed && margin >= settings.guard_rearm) armed = true;
      if (armed && margin <= 0.0) {
        if (!fire_guard(t, y)) return sol;
        h = std::min(h, std::max(h_used, 1e-9));
      }
    }
  }
  if (sol.times.back() < t_end) push(t_end, y);
  return sol;
}

OdeSystem make_bjj_system(const SystemParams& p, const Drive& d, const IntegratorSettings& settings,
                          std::vector<PoleCrossing>* crossings) {
  OdeSystem sys;
  sys.dimension = 2;
  sys.field = [p, d](double t, std::span<const double> y, std::span<double> dydt) {
    const Rates r = rhs_unchecked(State{y[0], y[1]}, t, p, d);
    dydt[0] = r.dw;
    dydt[1] = r.dphi;
  };
  const double limit = 1.0 - settings.guard_delta;
  sys.guard_margin = [limit](std::span<const double> y) { return limit - std::abs(y[0]); };
  if (settings.singularity_policy == SingularityPolicy::pole_crossing) {
    sys.on_guard = [p, d, crossings](double t, std::span<double> y) {
      // Passing over the pole of the Bloch sphere rotates the phase by pi in
      // the direction phi was already running.
      const Rates r = rhs_unchecked(State{y[0], y[1]}, t, p, d);
      double direction = std::isfinite(r.dphi) && r.dphi != 0.0 ? std::copysign(1.0, r.dphi)
                                                                 : std::copysign(1.0, y[0]);
      const double before = y[1];
      y[1] += direction * std::numbers::pi;
      if (crossings) crossings->push_back(PoleCrossing{t, y[0], before, y[1]});
      return true;
    };
  }
  return sys;
}

IntegratorSettings effective_settings(const IntegratorSettings& settings, const Drive& d) {
  IntegratorSettings eff = settings;
  if (d.h != 0.0 && d.omega_p > 0.0) {
    const double cap = drive_resolving_step(d.omega_p);
    eff.max_step = std::min(settings.max_step.value_or(cap), cap);
  }
  return eff;
}

Trajectory simulate(const SystemParams& p, const Drive& d, const State& s0,
                    const IntegratorSettings& settings) {
  const IntegratorSettings eff = effective_settings(settings, d);
  if (!(std::abs(s0.w) < 1.0 - eff.guard_delta)) {
    throw Error(ErrorCode::precondition, "simulate: |w0| must be below 1 - guard_delta");
  }
  Trajectory traj;
  const OdeSystem sys = make_bjj_system(p, d, eff, &traj.pole_crossings);
  const std::array<double, 2> y0{s0.w, s0.phi};
  const Solution sol = integrate(sys, y0, eff);
  traj.times = sol.times;
  traj.states.reserve(sol.size());
  for (std::size_t i = 0; i < sol.size(); ++i) {
    const auto row = sol.at(i);
    traj.states.push_back(State{row[0], row[1]});
  }
  traj.terminated_by = sol.terminated_by;
  return traj;
}

UniformSeries UniformSeries::slice(double t_a, double t_b) const {
  if (values.empty()) return *this;
  const double lo = std::max(t_a, t0);
  const double hi = std::min(t_b, t_last());
  UniformSeries out;
  out.dt = dt;
  if (hi < lo) {
    out.t0 = lo;
    return out;
  }
  const auto first = static_cast<std::size_t>(std::ceil((lo - t0) / dt - 1e-9));
  const auto last = static_cast<std::size_t>(std::floor((hi - t0) / dt + 1e-9));
  out.t0 = time(first);
  out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(first),
                    values.begin() + static_cast<std::ptrdiff_t>(std::min(last, size() - 1) + 1));
  return out;
}

UniformSeries resample(std::span<const double> times, std::span<const double> values, double dt) {
  if (times.empty() || times.size() != values.size()) {
    throw Error(ErrorCode::precondition, "resample: empty or mismatched input");
  }
  if (!(dt > 0.0)) throw Error(ErrorCode::precondition, "resample: dt must be positive");
  const double span = times.back() - times.front();
  if (dt > span) throw Error(ErrorCode::precondition, "resample: dt exceeds trajectory span");

  UniformSeries out;
  out.t0 = times.front();
  out.dt = dt;
  const auto count = static_cast<std::size_t>(std::floor(span / dt + 1e-9)) + 1;
  out.values.resize(count);
  const std::size_t m = times.size();
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = out.t0 + static_cast<double>(k) * dt;
    while (seg + 2 < m && times[seg + 1] <= t) ++seg;
    if (m < 4) {
      const std::size_t j = std::min(seg, m - 2);
      const double u = (t - times[j]) / (times[j + 1] - times[j]);
      out.values[k] = values[j] + u * (values[j + 1] - values[j]);
      continue;
    }
    // Four-point stencil around the bracketing interval [seg, seg + 1].
    std::size_t s = seg == 0 ? 0 : seg - 1;
    if (s + 3 >= m) s = m - 4;
    double acc = 0.0;
    for (std::size_t i = s; i < s + 4; ++i) {
      double basis = 1.0;
      for (std::size_t j = s; j < s + 4; ++j) {
        if (j != i) basis *= (t - times[j]) / (times[i] - times[j]);
      }
      acc += basis * values[i];
    }
    out.values[k] = acc;
  }
  return out;
}

UniformSeries resample(const Trajectory& traj, Channel channel, double dt) {
  std::vector<double> v;
  v.reserve(traj.size());
  for (const auto& s : traj.states) v.push_back(channel == Channel::w ? s.w : s.phi);
  return resample(traj.times, v, dt);
}

}  // namespace bjj
