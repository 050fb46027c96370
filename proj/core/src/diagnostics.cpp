#include "bjj/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <string>

#include "bjj/error.hpp"

namespace bjj::diag {

namespace {

constexpr double pi = std::numbers::pi;

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Times at which x changes sign, by linear interpolation.
std::vector<double> zero_crossings(const UniformSeries& s, std::span<const double> x) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const bool a = x[i] >= 0.0;
    const bool b = x[i + 1] >= 0.0;
    if (a != b) {
      const double frac = x[i] / (x[i] - x[i + 1]);
      out.push_back(s.time(i) + frac * s.dt);
    }
  }
  return out;
}

double periodogram(const UniformSeries& s, std::span<const double> x, double omega) {
  const std::size_t n = x.size();
  std::complex<double> acc(0.0, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(n - 1));
    const double phase = omega * (s.time(i) - s.t0);
    acc += hann * x[i] * std::complex<double>(std::cos(phase), -std::sin(phase));
  }
  return std::norm(acc);
}

// Least-squares slope of y against t.
double fit_slope(std::span<const double> t, std::span<const double> y) {
  const double tm = mean_of(t);
  const double ym = mean_of(y);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    num += (t[i] - tm) * (y[i] - ym);
    den += (t[i] - tm) * (t[i] - tm);
  }
  return den > 0.0 ? num / den : 0.0;
}

std::vector<double> moving_average(std::span<const double> v, std::size_t half) {
  // Centred window of 2*half+1 samples; output aligned with v[half .. n-half-1].
  const std::size_t n = v.size();
  std::vector<double> out;
  if (n < 2 * half + 1) return out;
  std::vector<long double> prefix(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + v[i];
  const auto width = static_cast<long double>(2 * half + 1);
  out.reserve(n - 2 * half);
  for (std::size_t k = half; k + half < n; ++k) {
    out.push_back(static_cast<double>((prefix[k + half + 1] - prefix[k - half]) / width));
  }
  return out;
}

}  // namespace

const char* to_string(Regime regime) noexcept {
  switch (regime) {
    case Regime::decay_to_fixed_point: return "decay_to_fixed_point";
    case Regime::sustained_periodic: return "sustained_periodic";
    case Regime::chaotic: return "chaotic";
    case Regime::singular_terminated: return "singular_terminated";
  }
  return "unknown";
}

FrequencyEstimate dominant_frequency(const UniformSeries& series) {
  if (series.size() < 8) throw Error(ErrorCode::no_oscillation, "dominant_frequency: series too short");
  const double m = mean_of(series.values);
  std::vector<double> x(series.values.size());
  std::transform(series.values.begin(), series.values.end(), x.begin(), [m](double v) { return v - m; });
  const auto zc = zero_crossings(series, x);
  if (zc.size() < 4) {
    throw Error(ErrorCode::no_oscillation,
                "dominant_frequency: only " + std::to_string(zc.size()) + " zero crossings");
  }
  FrequencyEstimate est;
  est.zero_crossing_omega = pi * static_cast<double>(zc.size() - 1) / (zc.back() - zc.front());
  est.resolution = 2.0 * pi / series.span();

  // Periodogram refinement within two resolution cells of the crossing estimate.
  const double lo = std::max(0.25 * est.resolution, est.zero_crossing_omega - 2.0 * est.resolution);
  const double hi = est.zero_crossing_omega + 2.0 * est.resolution;
  constexpr int grid = 200;
  double best = est.zero_crossing_omega;
  double best_power = -1.0;
  for (int i = 0; i <= grid; ++i) {
    const double om = lo + (hi - lo) * i / grid;
    const double pw = periodogram(series, x, om);
    if (pw > best_power) {
      best_power = pw;
      best = om;
    }
  }
  // Golden-section polish around the grid maximum.
  const double step = (hi - lo) / grid;
  double a = best - step, b = best + step;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c1 = b - g * (b - a), c2 = a + g * (b - a);
  double f1 = periodogram(series, x, c1), f2 = periodogram(series, x, c2);
  for (int it = 0; it < 60 && (b - a) > 1e-12 * std::abs(best); ++it) {
    if (f1 > f2) {
      b = c2; c2 = c1; f2 = f1;
      c1 = b - g * (b - a);
      f1 = periodogram(series, x, c1);
    } else {
      a = c1; c1 = c2; f1 = f2;
      c2 = a + g * (b - a);
      f2 = periodogram(series, x, c2);
    }
  }
  est.omega = 0.5 * (a + b);
  return est;
}

Envelope envelope(const UniformSeries& series, std::optional<double> centre) {
  Envelope env;
  env.centre = centre.value_or(series.size() ? mean_of(series.values) : 0.0);
  const auto& v = series.values;
  std::vector<double> x(v.size());
  std::transform(v.begin(), v.end(), x.begin(), [&](double y) { return y - env.centre; });

  // Sign-change indices; each half-cycle between two of them yields one peak.
  std::vector<std::size_t> cuts;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if ((x[i] >= 0.0) != (x[i + 1] >= 0.0)) cuts.push_back(i + 1);
  }
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    std::size_t arg = cuts[k];
    for (std::size_t i = cuts[k]; i < cuts[k + 1]; ++i) {
      if (std::abs(x[i]) > std::abs(x[arg])) arg = i;
    }
    double t_peak = series.time(arg);
    double value = std::abs(x[arg]);
    if (arg > 0 && arg + 1 < x.size()) {
      const double ym = x[arg - 1], y0 = x[arg], yp = x[arg + 1];
      const double den = ym - 2.0 * y0 + yp;
      if (den != 0.0) {
        const double delta = std::clamp(0.5 * (ym - yp) / den, -0.5, 0.5);
        t_peak += delta * series.dt;
        value = std::abs(y0 - 0.25 * (ym - yp) * delta);
      }
    }
    if (value > 0.0) {
      env.peak_times.push_back(t_peak);
      env.peak_values.push_back(value);
    }
  }
  if (env.peak_values.size() < 4) {
    throw Error(ErrorCode::too_few_extrema,
                "envelope: only " + std::to_string(env.peak_values.size()) + " extrema");
  }
  std::vector<double> logs(env.peak_values.size());
  std::transform(env.peak_values.begin(), env.peak_values.end(), logs.begin(),
                 [](double p) { return std::log(p); });
  env.fitted_rate = fit_slope(env.peak_times, logs);
  return env;
}

Classification classify_asymptotic(const Trajectory& traj, const Drive& drive,
                                   const ClassifierSettings& settings,
                                   std::optional<LyapunovEstimate> lyapunov) {
  if (traj.size() < 2) throw Error(ErrorCode::inconclusive, "classify_asymptotic: empty trajectory");
  const double span = traj.t_end() - traj.t_begin();
  const bool guarded = traj.terminated_by == Termination::singularity_guard;
  if (!guarded && drive.omega_p > 0.0) {
    const double period = 2.0 * pi / drive.omega_p;
    if (span < settings.min_drive_periods * period) {
      throw Error(ErrorCode::inconclusive, "classify_asymptotic: horizon shorter than " +
                                               std::to_string(settings.min_drive_periods) +
                                               " drive periods");
    }
  }

  Classification out;
  out.window_end = traj.t_end();
  out.window_begin = traj.t_end() - settings.window_fraction * span;
  const double dt = std::min(settings.analysis_dt, 0.5 * settings.window_fraction * span);
  const UniformSeries w = resample(traj, Channel::w, dt).slice(out.window_begin, out.window_end);
  const UniformSeries phi = resample(traj, Channel::phi, dt).slice(out.window_begin, out.window_end);
  const auto [lo, hi] = std::minmax_element(w.values.begin(), w.values.end());
  out.amplitude = 0.5 * (*hi - *lo);
  out.centre_w = mean_of(w.values);
  out.centre_phi = mean_of(phi.values);

  if (guarded) {
    out.label = Regime::singular_terminated;
    return out;
  }
  if (out.amplitude < settings.amplitude_tol) {
    out.label = Regime::decay_to_fixed_point;
    return out;
  }
  try {
    out.window_envelope_rate = envelope(w).fitted_rate;
  } catch (const Error&) {
    // Too few extrema in the window: no oscillation to speak of.
  }
  if (out.window_envelope_rate && *out.window_envelope_rate < -settings.decay_rate_tol) {
    out.label = Regime::decay_to_fixed_point;
    return out;
  }
  if (lyapunov) {
    out.lyapunov = lyapunov->lambda_max;
    out.label = lyapunov->lambda_max > settings.lambda_tol ? Regime::chaotic : Regime::sustained_periodic;
  } else {
    out.label = Regime::sustained_periodic;
  }
  return out;
}

std::vector<PhaseSlipEvent> detect_phase_slips(const UniformSeries& phi, const SlipSettings& settings) {
  std::vector<PhaseSlipEvent> events;
  if (!(settings.natural_period > 0.0)) {
    throw Error(ErrorCode::precondition, "detect_phase_slips: natural_period must be positive");
  }
  const double dt = phi.dt;
  const double period = settings.natural_period;
  const double slip_window = settings.slip_window_periods * period;
  const double ramp_tol = settings.ramp_tol.value_or(settings.slip_min / slip_window);

  const auto half1 = static_cast<std::size_t>(std::lround(0.5 * period / dt));
  const auto half2 = static_cast<std::size_t>(std::lround(0.5 * settings.plateau_periods * period / dt));
  const auto pass1 = moving_average(phi.values, half1);
  const auto smooth = moving_average(pass1, half2);
  if (smooth.size() < 3) return events;
  const std::size_t offset = half1 + half2;  // smooth[k] sits at phi index k + offset

  const std::size_t n = smooth.size();
  std::vector<char> moving(n, 0);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double slope = (smooth[k + 1] - smooth[k - 1]) / (2.0 * dt);
    moving[k] = std::abs(slope) >= ramp_tol;
  }
  // A step smeared by both averages spans one period plus the plateau window.
  const double max_duration = slip_window + (1.0 + settings.plateau_periods) * period;
  const auto plateau_len = static_cast<std::size_t>(std::lround(period / dt));
  // Moving runs [start, stop); gaps shorter than a period belong to the same
  // transition.
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t k = 1; k + 1 < n;) {
    if (!moving[k]) {
      ++k;
      continue;
    }
    const std::size_t start = k;
    while (k + 1 < n && moving[k]) ++k;
    if (!runs.empty() && start - runs.back().second < plateau_len) {
      runs.back().second = k;
    } else {
      runs.emplace_back(start, k);
    }
  }
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto [start, stop] = runs[r];
    const std::size_t before = start - (r == 0 ? 1 : runs[r - 1].second);
    const std::size_t after = (r + 1 < runs.size() ? runs[r + 1].first : n - 1) - stop;
    // The excursion must be bounded by plateaus on both sides.
    if (before < plateau_len || after < plateau_len) continue;
    const double duration = static_cast<double>(stop - start) * dt;
    const double jump = smooth[stop] - smooth[start - 1];
    if (duration <= max_duration && std::abs(jump) >= settings.slip_min) {
      PhaseSlipEvent ev;
      ev.pre_plateau = smooth[start - 1];
      ev.post_plateau = smooth[stop];
      ev.jump = jump;
      ev.t_mid = phi.time(offset + (start - 1 + stop) / 2) +
                 ((start - 1 + stop) % 2 ? 0.5 * dt : 0.0);
      events.push_back(ev);
    }
  }
  return events;
}

double mean_imbalance(const UniformSeries& w, double t_a, double t_b) {
  if (t_b < t_a || t_a < w.t0 - 1e-9 * std::max(1.0, std::abs(w.t0)) ||
      t_b > w.t_last() + 1e-9 * std::max(1.0, std::abs(w.t_last()))) {
    throw Error(ErrorCode::precondition, "mean_imbalance: window outside the series");
  }
  const UniformSeries part = w.slice(t_a, t_b);
  if (part.values.empty()) throw Error(ErrorCode::precondition, "mean_imbalance: empty window");
  return mean_of(part.values);
}

namespace {

OdeSystem pair_system(const OdeSystem& single) {
  const std::size_t n = single.dimension;
  OdeSystem pair;
  pair.dimension = 2 * n;
  pair.field = [single, n](double t, std::span<const double> y, std::span<double> dydt) {
    single.field(t, y.subspan(0, n), dydt.subspan(0, n));
    single.field(t, y.subspan(n, n), dydt.subspan(n, n));
  };
  if (single.guard_margin) {
    pair.guard_margin = [single, n](std::span<const double> y) {
      return std::min(single.guard_margin(y.subspan(0, n)), single.guard_margin(y.subspan(n, n)));
    };
  }
  if (single.on_guard) {
    pair.on_guard = [single, n](double t, std::span<double> y) {
      const bool a = single.on_guard(t, y.subspan(0, n));
      const bool b = single.on_guard(t, y.subspan(n, n));
      return a && b;
    };
  }
  return pair;
}

double distance(const SeparationMetric& metric, std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  if (metric.embed) {
    const auto ea = metric.embed(a);
    const auto eb = metric.embed(b);
    for (std::size_t i = 0; i < ea.size(); ++i) sum += (eb[i] - ea[i]) * (eb[i] - ea[i]);
  } else {
    for (std::size_t i = 0; i < a.size(); ++i) sum += (b[i] - a[i]) * (b[i] - a[i]);
  }
  return std::sqrt(sum);
}

}  // namespace

LyapunovEstimate lyapunov_max(const OdeSystem& system, std::span<const double> s0, const Drive& drive,
                              const LyapunovSettings& settings, const SeparationMetric& metric) {
  const std::size_t n = system.dimension;
  if (s0.size() != n) throw Error(ErrorCode::precondition, "lyapunov_max: state dimension mismatch");
  if (!(settings.horizon > 0.0) || !(settings.initial_offset > 0.0)) {
    throw Error(ErrorCode::precondition, "lyapunov_max: horizon and offset must be positive");
  }
  const double drive_period = drive.omega_p > 0.0 ? 2.0 * pi / drive.omega_p : 1.0;
  const double interval = settings.renorm_interval.value_or(drive_period);
  const auto intervals = static_cast<std::size_t>(std::ceil(settings.horizon / interval - 1e-9));
  const auto discard = static_cast<std::size_t>(std::floor(settings.discard_fraction * intervals));

  const OdeSystem pair = pair_system(system);
  std::vector<double> y(2 * n);
  std::copy(s0.begin(), s0.end(), y.begin());
  std::copy(s0.begin(), s0.end(), y.begin() + static_cast<std::ptrdiff_t>(n));
  y[n] += settings.initial_offset;
  const double d0 = distance(metric, std::span<const double>(y).subspan(0, n),
                             std::span<const double>(y).subspan(n, n));

  auto diff = [&](std::span<const double> a, std::span<const double> b) {
    if (metric.difference) return metric.difference(a, b);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = b[i] - a[i];
    return d;
  };

  IntegratorSettings is = settings.integrator;
  double sum = 0.0;
  double used_time = 0.0;
  double t = settings.integrator.t_begin;
  for (std::size_t k = 0; k < intervals; ++k) {
    is.t_begin = t;
    is.t_end = t + interval;
    is.sample_dt = interval;
    const Solution sol = integrate(pair, y, is);
    if (sol.terminated_by == Termination::singularity_guard) {
      throw Error(ErrorCode::guarded_estimate,
                  "lyapunov_max: trajectory reached the singularity guard at t = " +
                      std::to_string(sol.times.back()));
    }
    const auto end = sol.back();
    std::copy(end.begin(), end.end(), y.begin());
    const std::span<const double> a(y.data(), n), b(y.data() + n, n);
    const double d = distance(metric, a, b);
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw Error(ErrorCode::guarded_estimate, "lyapunov_max: degenerate separation");
    }
    if (k >= discard) {
      sum += std::log(d / d0);
      used_time += interval;
    }
    const auto delta = diff(a, b);
    const double scale = d0 / d;
    for (std::size_t i = 0; i < n; ++i) y[n + i] = y[i] + scale * delta[i];
    t = is.t_end;
  }
  LyapunovEstimate est;
  est.lambda_max = used_time > 0.0 ? sum / used_time : 0.0;
  est.horizon = static_cast<double>(intervals) * interval;
  est.renorm_interval = interval;
  est.accepted = est.horizon >= 50.0 * drive_period;
  return est;
}

LyapunovEstimate lyapunov_max(const SystemParams& p, const Drive& drive, const State& s0,
                              const LyapunovSettings& settings) {
  LyapunovSettings ls = settings;
  ls.integrator = effective_settings(settings.integrator, drive);
  if (!(std::abs(s0.w) < 1.0 - ls.integrator.guard_delta - settings.initial_offset)) {
    throw Error(ErrorCode::precondition, "lyapunov_max: |w0| too close to the guard");
  }
  const OdeSystem sys = make_bjj_system(p, drive, ls.integrator);
  SeparationMetric metric;
  metric.embed = [](std::span<const double> y) {
    const double r = std::sqrt(std::max(0.0, 1.0 - y[0] * y[0]));
    return std::vector<double>{r * std::cos(y[1]), r * std::sin(y[1]), y[0]};
  };
  metric.difference = [](std::span<const double> a, std::span<const double> b) {
    return std::vector<double>{b[0] - a[0], wrapped_phase(b[1] - a[1])};
  };
  const std::array<double, 2> y0{s0.w, s0.phi};
  return lyapunov_max(sys, y0, drive, ls, metric);
}

}  // namespace bjj::diag
