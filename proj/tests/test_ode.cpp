#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "bjj/error.hpp"
#include "bjj/model.hpp"
#include "bjj/ode.hpp"

using namespace bjj;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

OdeSystem oscillator() {
  OdeSystem sys;
  sys.dimension = 2;
  sys.field = [](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  };
  return sys;
}

double sup_error(const Solution& sol) {
  double err = 0.0;
  for (std::size_t i = 0; i < sol.size(); ++i) {
    const double t = sol.times[i];
    err = std::max(err, std::abs(sol.at(i)[0] - std::cos(t)));
    err = std::max(err, std::abs(sol.at(i)[1] + std::sin(t)));
  }
  return err;
}

}  // namespace

TEST_CASE("adaptive steps track the harmonic oscillator", "[ode]") {
  IntegratorSettings s;
  s.t_end = 20.0;
  s.sample_dt = 0.01;
  s.rel_tol = 1e-11;
  s.abs_tol = 1e-13;
  const std::vector<double> y0{1.0, 0.0};
  const Solution sol = integrate(oscillator(), y0, s);
  CHECK(sol.size() == 2001);
  CHECK_THAT(sol.times.back(), WithinAbs(20.0, 1e-12));
  CHECK(sup_error(sol) < 1e-9);
  CHECK(sol.terminated_by == Termination::reached_end);
}

TEST_CASE("fixed-step error falls at fifth order", "[ode]") {
  const std::vector<double> y0{1.0, 0.0};
  IntegratorSettings s;
  s.t_end = 10.0;
  s.sample_dt = 0.5;
  s.fixed_step = true;
  s.max_step = 0.2;
  const double coarse = sup_error(integrate(oscillator(), y0, s));
  s.max_step = 0.1;
  const double fine = sup_error(integrate(oscillator(), y0, s));
  INFO("coarse " << coarse << " fine " << fine);
  CHECK(coarse / fine >= 12.8);
}

TEST_CASE("identical inputs give bit-identical output", "[ode]") {
  const auto p = SystemParams::from_dimensionless(5.0, 0.02);
  IntegratorSettings s;
  s.t_end = 80.0;
  const Drive d{0.7, 4.95};
  const Trajectory a = simulate(p, d, State{0.5, 0.0}, s);
  const Trajectory b = simulate(p, d, State{0.5, 0.0}, s);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.times[i] == b.times[i]);
    CHECK(a.states[i].w == b.states[i].w);
    CHECK(a.states[i].phi == b.states[i].phi);
  }
}

TEST_CASE("guard stops a run at the singular set", "[ode]") {
  // y' = (1 - y)^(-1/2) reaches y = 1 at t = 2/3 and is undefined beyond it.
  OdeSystem sys;
  sys.dimension = 1;
  sys.field = [](double, std::span<const double> y, std::span<double> dy) { dy[0] = 1.0 / std::sqrt(1.0 - y[0]); };
  sys.guard_margin = [](std::span<const double> y) { return 1.0 - 1e-6 - y[0]; };
  IntegratorSettings s;
  s.t_end = 5.0;
  s.sample_dt = 0.25;
  const std::vector<double> y0{0.0};
  const Solution sol = integrate(sys, y0, s);
  CHECK(sol.terminated_by == Termination::singularity_guard);
  CHECK_THAT(sol.times.back(), WithinAbs(2.0 / 3.0, 1e-6));
  CHECK(sol.back()[0] >= 1.0 - 1e-6);
  CHECK(sol.back()[0] < 1.0);
  CHECK(sol.times[2] == 0.5);

  sys.on_guard = [](double, std::span<double> y) {
    y[0] -= 0.5;
    return true;
  };
  s.guard_rearm = 0.1;
  const Solution cont = integrate(sys, y0, s);
  CHECK(cont.terminated_by == Termination::reached_end);
  // Each cycle from y = 0.5 back to the guard takes 0.5^1.5 / 1.5.
  CHECK(cont.guard_times.size() == 19);
  CHECK_THAT(cont.guard_times[1] - cont.guard_times[0], WithinAbs(std::pow(0.5, 1.5) / 1.5, 1e-5));
  CHECK_THAT(cont.times.back(), WithinAbs(5.0, 1e-12));
}

TEST_CASE("bad settings and inputs are rejected", "[ode]") {
  IntegratorSettings s;
  s.rel_tol = -1.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = IntegratorSettings{};
  s.t_end = s.t_begin;
  CHECK_THROWS_AS(s.validate(), Error);

  const std::vector<double> wrong{1.0};
  try {
    integrate(oscillator(), wrong, IntegratorSettings{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::precondition);
  }
  const auto p = SystemParams::from_dimensionless(1.0, 0.0);
  CHECK_THROWS_AS(simulate(p, Drive{}, State{1.0, 0.0}, IntegratorSettings{}), Error);
  CHECK(parse_singularity_policy("pole_crossing") == SingularityPolicy::pole_crossing);
  CHECK_THROWS_AS(parse_singularity_policy("bounce"), Error);
}

TEST_CASE("drive-resolving step caps the driven integrator", "[ode]") {
  CHECK_THAT(drive_resolving_step(4.95), WithinRel(2.0 * std::numbers::pi / 99.0, 1e-14));
  IntegratorSettings s;
  CHECK_FALSE(effective_settings(s, Drive{0.0, 4.95}).max_step.has_value());
  CHECK(*effective_settings(s, Drive{0.5, 4.95}).max_step == drive_resolving_step(4.95));
  s.max_step = 0.01;
  CHECK(*effective_settings(s, Drive{0.5, 4.95}).max_step == 0.01);
}

TEST_CASE("pole crossings rotate the phase by pi", "[ode]") {
  // Unstable pi state with strong drive: the imbalance runs into a pole.
  const auto p = SystemParams::from_dimensionless(0.36, 0.02);
  const Drive d{0.37 * 2.3 * 2.3, 2.3};
  IntegratorSettings s;
  s.t_end = 400.0;
  s.guard_delta = 1e-7;
  const Trajectory stopped = simulate(p, d, State{0.01, std::numbers::pi}, s);
  REQUIRE(stopped.terminated_by == Termination::singularity_guard);
  CHECK(std::abs(stopped.states.back().w) >= 1.0 - 2e-7);

  s.singularity_policy = SingularityPolicy::pole_crossing;
  const Trajectory crossed = simulate(p, d, State{0.01, std::numbers::pi}, s);
  CHECK(crossed.terminated_by == Termination::reached_end);
  REQUIRE_FALSE(crossed.pole_crossings.empty());
  for (const PoleCrossing& c : crossed.pole_crossings) {
    CHECK_THAT(std::abs(c.phi_after - c.phi_before), WithinRel(std::numbers::pi, 1e-14));
    CHECK(std::abs(c.w) >= 1.0 - 2e-7);
  }
  for (const State& st : crossed.states) CHECK(std::abs(st.w) < 1.0);
}

TEST_CASE("cubic resampling is exact on cubics", "[ode]") {
  std::vector<double> t, v;
  for (int i = 0; i <= 40; ++i) {
    const double ti = 0.1 * i + 0.03 * std::sin(1.7 * i);
    t.push_back(ti);
    v.push_back(ti * ti * ti - 2.0 * ti + 0.5);
  }
  const UniformSeries u = resample(t, v, 0.037);
  REQUIRE(u.size() > 50);
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double x = u.time(k);
    CHECK_THAT(u.values[k], WithinAbs(x * x * x - 2.0 * x + 0.5, 1e-11));
  }
  CHECK_THROWS_AS(resample(t, v, 100.0), Error);
}

TEST_CASE("series slicing keeps grid alignment", "[ode]") {
  UniformSeries u;
  u.t0 = 1.0;
  u.dt = 0.5;
  u.values = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  const UniformSeries s = u.slice(2.2, 3.5);
  CHECK(s.t0 == 2.5);
  CHECK(s.values == std::vector<double>{3, 4, 5});
  CHECK(u.slice(10.0, 12.0).values.empty());
}
