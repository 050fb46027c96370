#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "bjj/error.hpp"
#include "bjj/model.hpp"
#include "bjj/ode.hpp"

using namespace bjj;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("raw parameters reduce to dimensionless ratios", "[model]") {
  RawParams raw;
  const SystemParams p = derive_params(raw);
  CHECK_THAT(p.lambda0, WithinRel(5.0, 1e-14));
  CHECK_THAT(p.kappa_zero, WithinRel(0.12, 1e-14));
  CHECK_THAT(p.omega_j_zero, WithinRel(std::sqrt(6.0), 1e-14));
  CHECK_FALSE(p.kappa_pi.has_value());
  CHECK_FALSE(p.omega_j_pi.has_value());

  raw.NU0 = 0.017;
  const SystemParams q = derive_params(raw);
  CHECK_THAT(q.lambda0, WithinAbs(0.3541667, 1e-7));
  REQUIRE(q.kappa_pi.has_value());
  CHECK_THAT(*q.kappa_pi, WithinRel(0.02 * (1.0 - q.lambda0), 1e-14));
  CHECK_THAT(*q.omega_j_pi, WithinRel(std::sqrt(1.0 - q.lambda0), 1e-14));
}

TEST_CASE("drive amplitude is lambda0 times modulation depth", "[model]") {
  RawParams raw;
  raw.zeta = 0.1;
  raw.omega_p = 4.95;
  const Drive d = Drive::from_raw(raw, derive_params(raw).lambda0);
  CHECK_THAT(d.h, WithinRel(0.5, 1e-14));
  CHECK(d.omega_p == 4.95);
}

TEST_CASE("invalid raw parameters are rejected", "[model]") {
  RawParams raw;
  raw.J = 0.0;
  CHECK_THROWS_AS(derive_params(raw), Error);
  raw = RawParams{};
  raw.N = 1;
  CHECK_THROWS_AS(validate(raw), Error);
  raw = RawParams{};
  raw.eta_over_N = -0.1;
  CHECK_THROWS_AS(validate(raw), Error);
  raw = RawParams{};
  raw.zeta = 1.0;
  CHECK_THROWS_AS(validate(raw), Error);
  try {
    SystemParams::from_dimensionless(-1.0, 0.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_parameter);
  }
}

TEST_CASE("modulated interaction", "[model]") {
  const Drive d{0.5, 4.95};
  CHECK(lambda_of_t(d, 5.0, 0.0) == 5.0);
  CHECK_THAT(lambda_of_t(d, 5.0, std::numbers::pi / (2 * 4.95)), WithinRel(5.5, 1e-14));
}

TEST_CASE("right-hand side at reference points", "[model]") {
  const auto p = SystemParams::from_dimensionless(5.0, 0.02);
  const Rates r = rhs(State{0.5, 0.3}, 0.0, p, Drive{0.0, 4.95});
  CHECK_THAT(r.dw, WithinAbs(-0.316959281883614, 1e-14));
  CHECK_THAT(r.dphi, WithinAbs(3.05156377916334, 1e-14));

  const auto q = SystemParams::from_dimensionless(0.354, 0.02);
  const Rates s = rhs(State{-0.2, 2.0}, 0.4, q, Drive{0.08, 2.3});
  CHECK_THAT(s.dw, WithinAbs(-0.890954207887069, 1e-14));
  CHECK_THAT(s.dphi, WithinAbs(0.00141599138057591, 1e-14));
}

TEST_CASE("rhs refuses states on or beyond the poles", "[model]") {
  const auto p = SystemParams::from_dimensionless(1.0, 0.0);
  try {
    rhs(State{1.0, 0.0}, 0.0, p, Drive{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::singularity);
  }
  CHECK_THROWS_AS(rhs(State{-1.5, 0.0}, 0.0, p, Drive{}), Error);
  CHECK_FALSE(std::isfinite(rhs_unchecked(State{1.0, 0.3}, 0.0, p, Drive{}).dphi));
}

TEST_CASE("steady points are fixed points of the flow", "[model]") {
  const auto p = SystemParams::from_dimensionless(2.5, 0.01);
  for (const State s : {State{0.0, 0.0}, State{0.0, std::numbers::pi}}) {
    const Rates r = rhs(s, 0.0, p, Drive{});
    CHECK_THAT(r.dw, WithinAbs(0.0, 1e-15));
    CHECK_THAT(r.dphi, WithinAbs(0.0, 1e-15));
  }
}

TEST_CASE("energy value and dissipation law", "[model]") {
  CHECK_THAT(bjj_energy(State{0.5, 0.3}, 5.0), WithinAbs(-0.202345668745011, 1e-14));
  CHECK_THROWS_AS(bjj_energy(State{1.0, 0.0}, 5.0), Error);

  // dE/dt = -(eta/N) phi_dot^2 at fixed Lambda: check by finite difference.
  const auto p = SystemParams::from_dimensionless(3.0, 0.05);
  const State s{0.3, 0.7};
  const Rates r = rhs(s, 0.0, p, Drive{});
  const double dt = 1e-6;
  const double e_plus = bjj_energy(State{s.w + dt * r.dw, s.phi + dt * r.dphi}, 3.0);
  const double e_minus = bjj_energy(State{s.w - dt * r.dw, s.phi - dt * r.dphi}, 3.0);
  CHECK_THAT((e_plus - e_minus) / (2 * dt), WithinAbs(-0.05 * r.dphi * r.dphi, 1e-8));
}

TEST_CASE("energy decreases monotonically along a damped run", "[model]") {
  const auto p = SystemParams::from_dimensionless(5.0, 0.02);
  IntegratorSettings s;
  s.t_end = 50.0;
  const Trajectory tr = simulate(p, Drive{}, State{0.5, 0.0}, s);
  double last = bjj_energy(tr.states.front(), 5.0);
  for (const State& st : tr.states) {
    const double e = bjj_energy(st, 5.0);
    CHECK(e <= last + 1e-12);
    last = e;
  }
}

TEST_CASE("phase wrapping", "[model]") {
  constexpr double pi = std::numbers::pi;
  CHECK(wrapped_phase(0.0) == 0.0);
  CHECK_THAT(wrapped_phase(pi), WithinAbs(pi, 1e-15));
  CHECK_THAT(wrapped_phase(-pi), WithinAbs(pi, 1e-15));
  CHECK_THAT(wrapped_phase(6.0 * pi + 0.25), WithinAbs(0.25, 1e-13));
  CHECK_THAT(wrapped_phase(-5.0 * pi / 2.0), WithinAbs(-pi / 2.0, 1e-13));
}
