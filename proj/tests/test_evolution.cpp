#include <catch2/catch_amalgamated.hpp>

#include "pe/navier_stokes.hpp"
#include "pe/problems.hpp"

using namespace pe;

namespace {

// Finite-difference residual of the Navier-Stokes momentum equation for
// manufactured (u, p, f): u_t + (u.grad)u - lap u + grad p - f.
template <typename UF, typename PF, typename FF>
Vec2 momentum_residual(const UF& u, const PF& p, const FF& f, double t, const Vec2& x,
                       double h = 1e-4) {
  const Vec2 ut = (u(t + h, x) - u(t - h, x)) / (2 * h);
  auto lap = [&](int m) {
    return (u(t, Vec2(x.x() + h, x.y()))[m] + u(t, Vec2(x.x() - h, x.y()))[m] +
            u(t, Vec2(x.x(), x.y() + h))[m] + u(t, Vec2(x.x(), x.y() - h))[m] -
            4 * u(t, x)[m]) /
           (h * h);
  };
  const Vec2 gradp((p(t, Vec2(x.x() + h, x.y())) - p(t, Vec2(x.x() - h, x.y()))) / (2 * h),
                   (p(t, Vec2(x.x(), x.y() + h)) - p(t, Vec2(x.x(), x.y() - h))) / (2 * h));
  Mat2 gu;
  for (int m = 0; m < 2; ++m) {
    gu(m, 0) = (u(t, Vec2(x.x() + h, x.y()))[m] - u(t, Vec2(x.x() - h, x.y()))[m]) / (2 * h);
    gu(m, 1) = (u(t, Vec2(x.x(), x.y() + h))[m] - u(t, Vec2(x.x(), x.y() - h))[m]) / (2 * h);
  }
  const Vec2 adv = gu * u(t, x);
  return ut + adv - Vec2(lap(0), lap(1)) + gradp - f(t, x);
}

}  // namespace

TEST_CASE("time grid validates the step count") {
  TimeGrid g{1e-3, 1.0};
  REQUIRE(g.steps() == 1000);
  REQUIRE(TimeGrid{4e-5, 1.0}.steps() == 25000);
  TimeGrid bad{3e-4, 1.0};
  REQUIRE_THROWS_AS(bad.steps(), std::invalid_argument);
  TimeGrid zero{0.0, 1.0};
  REQUIRE_THROWS_AS(zero.steps(), std::invalid_argument);
}

TEST_CASE("history buffer keeps ring semantics") {
  HistoryBuffer<int> h(3);
  h.push(1);
  REQUIRE(!h.full());
  h.push(2);
  h.push(3);
  REQUIRE(h.full());
  h.push(4);
  REQUIRE(h[0] == 4);
  REQUIRE(h[1] == 3);
  REQUIRE(h[2] == 2);
  REQUIRE_THROWS(h[3]);
}

TEST_CASE("manufactured torus navier-stokes fields satisfy the momentum equation") {
  auto u = [](double t, const Vec2& p) { return problems::ns_torus_velocity(t, p); };
  auto p = [](double t, const Vec2& q) { return problems::ns_torus_pressure(t, q); };
  auto f = [](double t, const Vec2& q) { return problems::ns_torus_forcing(t, q); };
  for (auto [t, x, y] : {std::array<double, 3>{0.3, 1.1, 2.0}, {0.7, 4.0, 3.3}, {1.0, 5.2, 1.7}})
    REQUIRE(momentum_residual(u, p, f, t, Vec2(x, y)).norm() < 1e-5);
  // Gradient closed form agrees with finite differences.
  const Vec2 x0(2.1, 0.8);
  Mat2 g = problems::stokes_velocity_gradient(x0);
  const double h = 1e-6;
  REQUIRE(g(0, 0) == Catch::Approx((problems::stokes_velocity(Vec2(x0.x() + h, x0.y())).x() -
                                    problems::stokes_velocity(Vec2(x0.x() - h, x0.y())).x()) /
                                   (2 * h))
                         .margin(1e-6));
  REQUIRE(g(1, 1) == Catch::Approx((problems::stokes_velocity(Vec2(x0.x(), x0.y() + h)).y() -
                                    problems::stokes_velocity(Vec2(x0.x(), x0.y() - h)).y()) /
                                   (2 * h))
                         .margin(1e-6));
}

TEST_CASE("manufactured channel navier-stokes fields satisfy the momentum equation") {
  auto u = [](double t, const Vec2& p) { return problems::ns_channel_velocity(t, p); };
  auto p = [](double t, const Vec2& q) { return problems::ns_channel_pressure(t, q); };
  auto f = [](double t, const Vec2& q) { return problems::ns_channel_forcing(t, q); };
  for (auto [t, x, y] : {std::array<double, 3>{0.2, 1.0, 0.5}, {0.6, 3.0, -1.2}, {1.0, 5.0, 1.8}})
    REQUIRE(momentum_residual(u, p, f, t, Vec2(x, y)).norm() < 2e-4);
  // The exact velocity satisfies no-slip at the walls.
  REQUIRE(problems::ns_channel_velocity(0.5, Vec2(1.0, 2.0)).norm() < 1e-14);
  REQUIRE(problems::ns_channel_velocity(0.5, Vec2(1.0, -2.0)).norm() < 1e-14);
}

TEST_CASE("bdf4 heat stepping preserves a steady state") {
  // u = ln(x) with f = 1/x^2 keeps u_t = 0; stepping must hold the state.
  auto domain = problems::interval_2_5(128);
  HeatStepper stepper(domain, 16, 1e-3, LsqOptions{0.0});
  auto exact = [](double, const Vec2& p) { return std::log(p.x()); };
  auto forcing = [](double, const Vec2& p) { return 1.0 / (p.x() * p.x()); };
  auto boundary = exact;

  HistoryBuffer<HeatStepper::State> history(4);
  for (int k = 3; k >= 0; --k) history.push(stepper.make_exact_state(k * 1e-3, exact));
  Vector u0 = history[0].u;
  for (int n = 0; n < 1000; ++n) history.push(stepper.step_bdf4(history, forcing, boundary));
  REQUIRE((history[0].u - u0).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("bdf4 heat run tracks the exact solution and boundary data") {
  auto domain = problems::interval_2_5(256);
  HeatStepper stepper(domain, 24, 1e-3, LsqOptions{0.0});
  auto exact = [](double t, const Vec2& p) { return problems::heat1d_exact(t, p.x()); };
  auto forcing = [](double t, const Vec2& p) { return problems::heat1d_forcing(t, p.x()); };
  TimeGrid grid{1e-3, 0.05};
  auto result = run_heat(stepper, grid, forcing, exact, exact);
  REQUIRE(*std::max_element(result.linf_error.begin(), result.linf_error.end()) < 1e-6);
  REQUIRE(*std::max_element(result.boundary_deviation.begin(),
                            result.boundary_deviation.end()) < 1e-6);
}

TEST_CASE("heat stepper is jointly linear in history, forcing, and boundary data") {
  auto domain = problems::interval_2_5(64);
  HeatStepper stepper(domain, 10, 1e-3, LsqOptions{0.0});
  auto f1 = [](double, const Vec2& p) { return std::sin(p.x()); };
  auto f2 = [](double, const Vec2& p) { return std::cos(2 * p.x()); };
  auto g1 = [](double, const Vec2& p) { return p.x(); };
  auto g2 = [](double, const Vec2& p) { return 1.0 / p.x(); };
  auto u1 = [](double, const Vec2& p) { return std::log(p.x()); };
  auto u2 = [](double, const Vec2& p) { return p.x() * p.x(); };

  auto history_of = [&](auto u) {
    HistoryBuffer<HeatStepper::State> h(4);
    for (int k = 3; k >= 0; --k) h.push(stepper.make_exact_state(k * 1e-3, u));
    return h;
  };
  auto h1 = history_of(u1), h2 = history_of(u2);
  auto sum = history_of([&](double t, const Vec2& p) { return u1(t, p) + u2(t, p); });

  auto s1 = stepper.step_bdf4(h1, f1, g1);
  auto s2 = stepper.step_bdf4(h2, f2, g2);
  auto s12 = stepper.step_bdf4(sum, [&](double t, const Vec2& p) { return f1(t, p) + f2(t, p); },
                               [&](double t, const Vec2& p) { return g1(t, p) + g2(t, p); });
  REQUIRE((s12.u - s1.u - s2.u).lpNorm<Eigen::Infinity>() <
          1e-10 * s12.u.lpNorm<Eigen::Infinity>());
}

TEST_CASE("backward-euler initialization satisfies the implicit equation") {
  auto domain = problems::interval_2_5(256);
  HeatStepper stepper(domain, 30, 1e-3, LsqOptions{0.0});
  auto exact = [](double t, const Vec2& p) { return problems::heat1d_exact(t, p.x()); };
  auto forcing = [](double t, const Vec2& p) { return problems::heat1d_forcing(t, p.x()); };
  auto s0 = stepper.make_exact_state(0.0, exact);
  auto s1 = stepper.step_backward_euler(s0, 1e-3, forcing, exact);
  REQUIRE(stepper.backward_euler_residual(s0, s1, forcing) < 1e-8);
}

TEST_CASE("heat run performs no factorizations after setup") {
  auto domain = problems::interval_2_5(64);
  HeatStepper stepper(domain, 10, 1e-3, LsqOptions{0.0});
  auto exact = [](double t, const Vec2& p) { return problems::heat1d_exact(t, p.x()); };
  auto forcing = [](double t, const Vec2& p) { return problems::heat1d_forcing(t, p.x()); };
  const long before = qr_factorization_count();
  TimeGrid grid{1e-3, 0.05};
  run_heat(stepper, grid, forcing, exact, exact);
  REQUIRE(qr_factorization_count() == before);
}

TEST_CASE("heat runs are deterministic and restartable") {
  auto domain = problems::interval_2_5(64);
  auto exact = [](double t, const Vec2& p) { return problems::heat1d_exact(t, p.x()); };
  auto forcing = [](double t, const Vec2& p) { return problems::heat1d_forcing(t, p.x()); };

  HeatStepper s1(domain, 10, 1e-3, LsqOptions{0.0});
  HeatStepper s2(domain, 10, 1e-3, LsqOptions{0.0});
  TimeGrid grid{1e-3, 0.03};
  auto r1 = run_heat(s1, grid, forcing, exact, exact);
  auto r2 = run_heat(s2, grid, forcing, exact, exact);
  REQUIRE(r1.boundary_deviation == r2.boundary_deviation);

  // Restart: continue from the recorded state and reproduce the series.
  HistoryBuffer<HeatStepper::State> h(4);
  for (int k = 3; k >= 0; --k) h.push(s1.make_exact_state(k * 1e-3, exact));
  std::vector<double> full, restarted;
  for (int n = 3; n < 20; ++n) {
    h.push(s1.step_bdf4(h, forcing, exact));
    full.push_back(s1.boundary_error(h[0], exact));
  }
  HistoryBuffer<HeatStepper::State> h2(4);
  for (int k = 3; k >= 0; --k) h2.push(s1.make_exact_state(k * 1e-3, exact));
  for (int n = 3; n < 10; ++n) h2.push(s1.step_bdf4(h2, forcing, exact));
  // snapshot-and-continue
  for (int n = 10; n < 20; ++n) {
    h2.push(s1.step_bdf4(h2, forcing, exact));
    restarted.push_back(s1.boundary_error(h2[0], exact));
  }
  REQUIRE(std::equal(restarted.begin(), restarted.end(), full.end() - restarted.size()));
}

TEST_CASE("imex step with zeroed advection equals the unsteady stokes step") {
  auto domain = problems::square_with_hole(24);
  TorusNavierStokes ns(domain, 6, 1e-3);
  NsExactData exact{[](double t, const Vec2& p) { return problems::ns_torus_velocity(t, p); },
                    [](double t, const Vec2& p) {
                      return Mat2(std::exp(t) * problems::stokes_velocity_gradient(p));
                    },
                    {},
                    {}};
  auto forcing = [](double t, const Vec2& p) { return problems::ns_torus_forcing(t, p); };
  auto boundary = [](double t, const Vec2& p) { return problems::ns_torus_velocity(t, p); };

  HistoryBuffer<NsState> h(4);
  for (int k = 3; k >= 0; --k) h.push(ns.exact_state(k * 1e-3, exact));

  ImexBdf4Stepper stepper(ns.hooks(6, false), 1e-3);
  auto f_at = [&](double t) { return sample_vector_interior(domain, t, forcing); };
  auto g_at = [&](double t) { return sample_vector_boundary(domain, t, boundary); };
  auto imex = stepper.step(h, f_at, g_at, /*zero_advection=*/true);

  // Dedicated unsteady-Stokes step assembled by hand from the same history.
  const double t_next = h[0].t + 1e-3;
  Vector rhs = (48.0 * h[0].u - 36.0 * h[1].u + 16.0 * h[2].u - 3.0 * h[3].u) / 25.0 +
               (12.0 * 1e-3 / 25.0) * f_at(t_next);
  auto direct = ns.system().solve(g_at(t_next), rhs, 6);
  REQUIRE((imex.sol.c - direct.c).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("imex stepper guards against divergence") {
  NsStepHooks hooks;
  hooks.solve = [](const Vector&, const Vector&) { return StokesSolution{}; };
  hooks.velocity = [](const StokesSolution&) {
    return Vector(Vector::Constant(4, 1e12));
  };
  hooks.advection = [](const StokesSolution&) { return Vector(Vector::Zero(4)); };
  ImexBdf4Stepper stepper(hooks, 1e-3);
  HistoryBuffer<NsState> h(4);
  for (int k = 0; k < 4; ++k) {
    NsState s;
    s.t = 0;
    s.u = Vector::Zero(4);
    s.adv = Vector::Zero(4);
    h.push(s);
  }
  auto f = [](double) { return Vector(Vector::Zero(4)); };
  REQUIRE_THROWS_AS(stepper.step(h, f, f), SolverError);
}

TEST_CASE("torus navier-stokes follows the manufactured solution") {
  auto domain = problems::square_with_hole(32);
  TorusNavierStokes ns(domain, 10, 1e-3);
  NsExactData exact{[](double t, const Vec2& p) { return problems::ns_torus_velocity(t, p); },
                    [](double t, const Vec2& p) {
                      return Mat2(std::exp(t) * problems::stokes_velocity_gradient(p));
                    },
                    {},
                    {}};
  NsRunConfig cfg;
  cfg.ne = 10;
  cfg.t_final = 0.02;
  cfg.init = InitPolicy::ExactHistory;
  auto state = ns.run(cfg, [](double t, const Vec2& p) { return problems::ns_torus_forcing(t, p); },
                      [](double t, const Vec2& p) { return problems::ns_torus_velocity(t, p); },
                      exact);
  Vector ref = sample_vector_interior(domain, state.t, exact.velocity);
  REQUIRE((state.u - ref).lpNorm<Eigen::Infinity>() < 1e-2);

  // Divergence-free throughout (spectral check on the final state).
  const double umax = state.u.lpNorm<Eigen::Infinity>();
  REQUIRE(ns.system().interior_divergence(state.sol).lpNorm<Eigen::Infinity>() < 1e-8 * umax);
}

TEST_CASE("channel navier-stokes follows the manufactured solution") {
  auto domain = problems::channel_with_disc(32, 30, two_pi, -2.0, 2.0, Vec2(pi, 0.0), 1.0);
  ChannelNavierStokes ns(domain, 8, 8, 1e-3, /*flow_rate=*/false);
  NsExactData exact{
      [](double t, const Vec2& p) { return problems::ns_channel_velocity(t, p); },
      [](double t, const Vec2& p) { return problems::ns_channel_velocity_gradient(t, p); },
      [](double t, const Vec2& p) {
        const double sx = std::sin(p.x()), cx = std::cos(p.x());
        const double e = std::exp(sx), y = p.y(), w = y * y - 4.0;
        return Vec2(std::exp(t) * (4.0 * y * w * (cx * cx - sx) + 24.0 * y) * e,
                    std::exp(t) * (-cx * e * (cx * cx - 3.0 * sx - 1.0) * w * w -
                                   cx * e * (12.0 * y * y - 16.0)));
      },
      {}};
  NsRunConfig cfg;
  cfg.ne = 8;
  cfg.t_final = 0.02;
  cfg.init = InitPolicy::ForwardEulerInit;
  cfg.init_substeps = 20;
  auto state =
      ns.run(cfg, [](double t, const Vec2& p) { return problems::ns_channel_forcing(t, p); },
             [](double t, const Vec2& p) { return problems::ns_channel_velocity(t, p); }, exact);
  Vector ref = sample_vector_interior(domain, state.t, exact.velocity);
  REQUIRE((state.u - ref).lpNorm<Eigen::Infinity>() < 5e-2);
}
