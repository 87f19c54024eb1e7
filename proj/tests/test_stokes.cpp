#include <catch2/catch_amalgamated.hpp>

#include <memory>
#include <random>

#include "pe/problems.hpp"
#include "pe/stokes_channel.hpp"
#include "pe/stokes_sphere.hpp"
#include "pe/stokes_torus.hpp"

using namespace pe;

namespace {

// Dense periodic Stokes oracle: spectral differentiation matrices on an N x N
// grid, saddle-point system solved by QR with mean pins. Independent of the
// closed-form mode inversion it checks.
struct DenseStokesOracle {
  Index n;
  Matrix dx, dy, lap;

  explicit DenseStokesOracle(Index grid_n) : n(grid_n) {
    const Index n2 = n * n;
    CMatrix dft(n, n), idft(n, n);
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < n; ++c) {
        dft(r, c) = std::exp(std::complex<double>(0, -two_pi * r * c / n)) / std::sqrt(double(n));
        idft(r, c) = std::exp(std::complex<double>(0, two_pi * r * c / n)) / std::sqrt(double(n));
      }
    // Odd n: symmetric frequency set, no Nyquist null direction.
    CVector ik(n), mk2(n);
    for (Index k = 0; k < n; ++k) {
      const double freq = k <= n / 2 ? double(k) : double(k) - double(n);
      ik[k] = std::complex<double>(0, freq);
      mk2[k] = -freq * freq;
    }
    Matrix d1 = (idft * ik.asDiagonal() * dft).real();
    Matrix l1 = (idft * mk2.asDiagonal() * dft).real();
    dx = Matrix::Zero(n2, n2);
    dy = Matrix::Zero(n2, n2);
    lap = Matrix::Zero(n2, n2);
    // Flattening x-major: flat = ix*n + iy.
    for (Index ax = 0; ax < n; ++ax)
      for (Index bx = 0; bx < n; ++bx)
        for (Index y = 0; y < n; ++y) {
          dx(ax * n + y, bx * n + y) += d1(ax, bx);
          lap(ax * n + y, bx * n + y) += l1(ax, bx);
        }
    for (Index x = 0; x < n; ++x)
      for (Index ay = 0; ay < n; ++ay)
        for (Index by = 0; by < n; ++by) {
          dy(x * n + ay, x * n + by) += d1(ay, by);
          lap(x * n + ay, x * n + by) += l1(ay, by);
        }
  }

  // Solves -lap u + grad p = f, div u = 0 with mean pins; returns (u1,u2,p).
  std::array<Vector, 3> solve(const Vector& f1, const Vector& f2) const {
    const Index n2 = n * n;
    Matrix a = Matrix::Zero(3 * n2 + 3, 3 * n2);
    a.block(0, 0, n2, n2) = -lap;
    a.block(0, 2 * n2, n2, n2) = dx;
    a.block(n2, n2, n2, n2) = -lap;
    a.block(n2, 2 * n2, n2, n2) = dy;
    a.block(2 * n2, 0, n2, n2) = dx;
    a.block(2 * n2, n2, n2, n2) = dy;
    a.row(3 * n2).segment(0, n2).setOnes();
    a.row(3 * n2 + 1).segment(n2, n2).setOnes();
    a.row(3 * n2 + 2).segment(2 * n2, n2).setOnes();
    Vector rhs = Vector::Zero(3 * n2 + 3);
    rhs.head(n2) = f1;
    rhs.segment(n2, n2) = f2;
    Vector z = a.colPivHouseholderQr().solve(rhs);
    return {z.head(n2), z.segment(n2, n2), z.tail(n2)};
  }
};

}  // namespace

TEST_CASE("periodic stokes mode solves match the dense grid oracle") {
  const Index n = 9;
  DenseStokesOracle oracle(n);
  const double h = two_pi / n;
  for (auto [j1, j2, l] : {std::array<int, 3>{1, 0, 0}, {0, 1, 0}, {2, 1, 1}, {1, 2, 0}}) {
    Vector f1 = Vector::Zero(n * n), f2 = Vector::Zero(n * n);
    for (Index ix = 0; ix < n; ++ix)
      for (Index iy = 0; iy < n; ++iy) {
        const double v = std::cos(j1 * ix * h + j2 * iy * h);
        (l == 0 ? f1 : f2)[ix * n + iy] = v;
      }
    auto [u1, u2, p] = oracle.solve(f1, f2);
    const double jj = double(j1) * j1 + double(j2) * j2;
    for (Index ix = 0; ix < n; ++ix)
      for (Index iy = 0; iy < n; ++iy) {
        const double c = std::cos(j1 * ix * h + j2 * iy * h);
        const double s = std::sin(j1 * ix * h + j2 * iy * h);
        const double jl = l == 0 ? j1 : j2;
        REQUIRE(u1[ix * n + iy] ==
                Catch::Approx(StokesMode::projector(0, l, j1, j2) / jj * c).margin(1e-8));
        REQUIRE(u2[ix * n + iy] ==
                Catch::Approx(StokesMode::projector(1, l, j1, j2) / jj * c).margin(1e-8));
        REQUIRE(p[ix * n + iy] == Catch::Approx(jl / jj * s).margin(1e-8));
      }
  }
}

TEST_CASE("mode projector identities") {
  // j=(1,0), forcing in x: velocity vanishes, pressure absorbs the forcing.
  REQUIRE(StokesMode::projector(0, 0, 1, 0) == Catch::Approx(0.0).margin(1e-15));
  // j=(0,1), forcing in x: u1 = 1, u2 = 0, p = 0.
  REQUIRE(StokesMode::projector(0, 0, 0, 1) == Catch::Approx(1.0));
  REQUIRE(StokesMode::projector(1, 0, 0, 1) == Catch::Approx(0.0).margin(1e-15));
  // Divergence: j . (proj column l) = 0 for all j, l.
  for (auto [j1, j2] : {std::pair<int, int>{1, 0}, {3, -2}, {5, 4}})
    for (int l = 0; l < 2; ++l)
      REQUIRE(std::abs(j1 * StokesMode::projector(0, l, j1, j2) +
                       j2 * StokesMode::projector(1, l, j1, j2)) < 1e-14);
}

TEST_CASE("torus stokes: zero data gives zero velocity and constant pressure") {
  auto domain = problems::square_with_hole(32);
  auto family = std::make_shared<FourierFamily>(2, 6);
  TorusStokesSystem sys(family, domain, ScalarOperator::neg_laplacian(), 1.0, LsqOptions{0.0});
  auto sol = sys.solve(Vector::Zero(2 * domain.boundary_count()),
                       Vector::Zero(2 * domain.interior_count()), 6);
  REQUIRE(sol.c.norm() == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(sys.pressure_on_grid(sol).norm() == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("torus stokes recovers the manufactured solution") {
  auto domain = problems::square_with_hole(64);
  auto family = std::make_shared<FourierFamily>(2, 12);
  auto sys = std::make_shared<TorusStokesSystem>(family, domain,
                                                 ScalarOperator::neg_laplacian(), 1.0,
                                                 LsqOptions{0.0});
  Vector g(2 * domain.boundary_count());
  Index row = 0;
  for (const auto& seg : domain.boundary)
    for (Index i = 0; i < seg.size(); ++i, row += 2) {
      const Vec2 u = problems::stokes_velocity(seg.nodes.row(i));
      g[row] = u.x();
      g[row + 1] = u.y();
    }
  Vector f(2 * domain.interior_count());
  for (Index i = 0; i < domain.interior_count(); ++i) {
    const Vec2 fv = problems::stokes_forcing(domain.grid->node2(domain.interior[i]));
    f[2 * i] = fv.x();
    f[2 * i + 1] = fv.y();
  }

  double prev_u = 1e300;
  for (int ne : {6, 9, 12}) {
    auto sol = sys->solve(g, f, ne);
    Vector u1 = sys->gather_interior(sys->velocity_on_grid(sol, 0));
    Vector u2 = sys->gather_interior(sys->velocity_on_grid(sol, 1));
    double sup = 0;
    for (Index i = 0; i < domain.interior_count(); ++i) {
      const Vec2 ue = problems::stokes_velocity(domain.grid->node2(domain.interior[i]));
      sup = std::max({sup, std::abs(u1[i] - ue.x()), std::abs(u2[i] - ue.y())});
    }
    REQUIRE(sup < prev_u);
    prev_u = sup;

    if (ne == 12) {
      REQUIRE(sup < 1e-4);
      // Pressure matches modulo its additive constant.
      Vector p = sys->gather_interior(sys->pressure_on_grid(sol));
      Vector pe(domain.interior_count());
      for (Index i = 0; i < pe.size(); ++i)
        pe[i] = problems::stokes_pressure(domain.grid->node2(domain.interior[i]));
      Vector w = sys->interior_weights();
      Vector dp = pressure_normalize(p, w) - pressure_normalize(pe, w);
      REQUIRE(dp.lpNorm<Eigen::Infinity>() < 1e-3);

      // Spectral divergence vanishes.
      const double umax = u1.lpNorm<Eigen::Infinity>();
      REQUIRE(sys->interior_divergence(sol).lpNorm<Eigen::Infinity>() < 1e-8 * umax);

      // The null-direction constraint keeps the constant forcing modes tiny.
      REQUIRE(std::abs(sol.c[0]) + std::abs(sol.c[1]) < 1e-6 * sol.c.norm());
    }
  }
}

TEST_CASE("pressure normalization is idempotent and exact on constants") {
  Vector w = Vector::Ones(5);
  Vector constant = Vector::Constant(5, 3.7);
  REQUIRE(pressure_normalize(constant, w).norm() == Catch::Approx(0.0).margin(1e-14));
  Vector p(5);
  p << 1, 2, 3, 4, 5;
  Vector p1 = pressure_normalize(p, w);
  Vector p2 = pressure_normalize(p1, w);
  REQUIRE((p1 - p2).norm() < 1e-14);
  REQUIRE(std::abs(p1.dot(w)) < 1e-12);
}

TEST_CASE("channel stokes: intrinsic walls and flow-rate bookkeeping") {
  auto domain = problems::channel_with_disc(48, 40, two_pi, -2.0, 2.0, Vec2(pi, 0.0), 1.0);
  ChannelStokesSystem::Options opt;
  opt.flow_rate = true;
  opt.flow_rate_x = 0.0;
  opt.lsq = LsqOptions{0.0};
  ChannelStokesSystem sys(domain, 10, 10, opt);

  Vector g = Vector::Zero(2 * domain.boundary_count());
  Vector f = Vector::Zero(2 * domain.interior_count());
  auto sol = sys.solve(g, f, 10, /*q=*/1.0);

  SECTION("no-slip at the lateral walls is structural") {
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> ux(0.0, two_pi);
    const Vector vc = sys.velocity_coeffs(sol);
    for (int k = 0; k < 64; ++k) {
      const double x = ux(gen);
      for (double y : {-2.0, 2.0}) {
        double u1 = 0, u2 = 0;
        for (Index fidx = 0; fidx < vc.size(); ++fidx) {
          u1 += vc[fidx] * sys.velocity_family().derivative(fidx, Vec2(x, y), 0, 1);
          u2 -= vc[fidx] * sys.velocity_family().derivative(fidx, Vec2(x, y), 1, 0);
        }
        REQUIRE(std::abs(u1) < 1e-10);
        REQUIRE(std::abs(u2) < 1e-10);
      }
    }
  }

  SECTION("flux is carried by the special element alone") {
    const double t_hi = 2.0 * (4.0 - 12.0), t_lo = -2.0 * (4.0 - 12.0);
    REQUIRE(sys.flow_rate(sol, 0.0) == Catch::Approx(sol.special * (t_hi - t_lo)).margin(1e-12));
    // Flux is station-independent (incompressibility + no-slip).
    REQUIRE(sys.flow_rate(sol, 1.7) == Catch::Approx(sys.flow_rate(sol, 0.0)).margin(1e-12));
  }
}

TEST_CASE("channel stokes: zero flow rate and no mismatch gives the zero field") {
  auto domain = problems::channel_with_disc(32, 24, two_pi, -2.0, 2.0, Vec2(pi, 0.0), 1.0);
  ChannelStokesSystem::Options opt;
  opt.flow_rate = true;
  opt.lsq = LsqOptions{0.0};
  ChannelStokesSystem sys(domain, 6, 6, opt);
  auto sol = sys.solve(Vector::Zero(2 * domain.boundary_count()),
                       Vector::Zero(2 * domain.interior_count()), 6, 0.0);
  REQUIRE(sol.c.norm() == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(sol.alpha == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("channel stokes converges once past the threshold cutoff") {
  // The flow-rate-driven problem needs a minimum number of extension
  // functions (around Ne = 18) before the LSQ system can represent the flow;
  // past it, the constraint errors and successive differences drop fast.
  auto domain = problems::channel_with_disc(96, 64, two_pi, -2.0, 2.0, Vec2(pi, 0.0), 1.0);
  ChannelStokesSystem::Options opt;
  opt.flow_rate = true;
  opt.lsq = LsqOptions{0.0};
  ChannelStokesSystem sys(domain, 24, 24, opt);
  Vector g = Vector::Zero(2 * domain.boundary_count());
  Vector f = Vector::Zero(2 * domain.interior_count());

  auto u_at = [&](const StokesSolution& s) {
    Vector u1 = sys.gather_interior(sys.velocity_on_grid(s, 0));
    Vector u2 = sys.gather_interior(sys.velocity_on_grid(s, 1));
    Vector out(2 * u1.size());
    out << u1, u2;
    return out;
  };
  auto s18 = sys.solve(g, f, 18, 1.0);
  auto s20 = sys.solve(g, f, 20, 1.0);
  auto s22 = sys.solve(g, f, 22, 1.0);
  auto s24 = sys.solve(g, f, 24, 1.0);
  const double d1 = (u_at(s18) - u_at(s20)).lpNorm<Eigen::Infinity>();
  const double d2 = (u_at(s20) - u_at(s22)).lpNorm<Eigen::Infinity>();
  const double d3 = (u_at(s22) - u_at(s24)).lpNorm<Eigen::Infinity>();
  REQUIRE(d2 < d1);
  REQUIRE(d3 < d2);
  REQUIRE(sys.flow_rate(s24, 0.0) == Catch::Approx(1.0).margin(1e-2));
  REQUIRE(sys.boundary_velocity(s24).lpNorm<Eigen::Infinity>() < 1e-2);
}

TEST_CASE("sphere stokes: zero data gives zero, single mode is recovered") {
  auto domain = problems::sphere_with_cap(32, 24, 40);
  SphereStokesSystem sys(domain, 8, LsqOptions{0.0});

  auto zero = sys.solve(Vector::Zero(2 * domain.boundary_count()),
                        Vector::Zero(2 * domain.interior_count()), 8);
  REQUIRE(zero.c.norm() == Catch::Approx(0.0).margin(1e-12));

  // Rigid rotation: forcing (-lap - K) Phi_1^0 with its own trace as g.
  const auto& vel = sys.velocity_family();
  const double lambda = vel.operator_eigenvalue(0);
  Vector f(2 * domain.interior_count());
  for (Index i = 0; i < domain.interior_count(); ++i) {
    const Index flat = domain.interior[i];
    const Index ntheta = domain.grid->axis_size(1);
    const double phi = domain.grid->axis_nodes[0][flat / ntheta];
    const double theta = domain.grid->axis_nodes[1][flat % ntheta];
    const Vec2 u = vel.value(0, theta, phi);
    f[2 * i] = lambda * u.x();
    f[2 * i + 1] = lambda * u.y();
  }
  Vector g(2 * domain.boundary_count());
  Index row = 0;
  for (const auto& seg : domain.boundary)
    for (Index i = 0; i < seg.size(); ++i, row += 2) {
      const Vec2 u = vel.value(0, seg.nodes(i, 0), seg.nodes(i, 1));
      g[row] = u.x();
      g[row + 1] = u.y();
    }
  auto sol = sys.solve(g, f, 8);
  Vector vc = sys.velocity_coeffs(sol);
  REQUIRE(vc[0] == Catch::Approx(1.0).margin(1e-8));
  vc[0] -= 1.0;
  REQUIRE(vc.norm() < 1e-8);
  REQUIRE(sys.pressure_coeffs(sol).norm() < 1e-8);
}

TEST_CASE("sphere stokes converges on the benchmark forcing") {
  auto domain = problems::sphere_with_cap(48, 36, 60);
  SphereStokesSystem sys(domain, 12, LsqOptions{0.0});
  Vector g = Vector::Zero(2 * domain.boundary_count());
  Vector f(2 * domain.interior_count());
  const Index ntheta = domain.grid->axis_size(1);
  for (Index i = 0; i < domain.interior_count(); ++i) {
    const Index flat = domain.interior[i];
    const double phi = domain.grid->axis_nodes[0][flat / ntheta];
    const double theta = domain.grid->axis_nodes[1][flat % ntheta];
    const Vec2 fv = problems::sphere_forcing(theta, phi);
    f[2 * i] = fv.x();
    f[2 * i + 1] = fv.y();
  }
  auto s8 = sys.solve(g, f, 8);
  auto s10 = sys.solve(g, f, 10);
  auto s12 = sys.solve(g, f, 12);
  const double d1 = (sys.velocity_on_interior(s8) - sys.velocity_on_interior(s10))
                        .lpNorm<Eigen::Infinity>();
  const double d2 = (sys.velocity_on_interior(s10) - sys.velocity_on_interior(s12))
                        .lpNorm<Eigen::Infinity>();
  REQUIRE(d2 < d1);
  // Boundary no-slip approached.
  REQUIRE(sys.boundary_velocity(s12).lpNorm<Eigen::Infinity>() < 0.05);
}
