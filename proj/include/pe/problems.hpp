#pragma once

#include <cmath>
#include <memory>

#include "pe/geometry.hpp"
#include "pe/types.hpp"

// Benchmark domains and manufactured fields shared by the solvers, the CLI
// registry, and the tests. All formulas are closed-form; the tests verify
// them against finite-difference residuals of the governing equations.

namespace pe::problems {

// ---------------------------------------------------------------- domains --

/// Omega = (2,5) on the 1D torus.
inline PhysicalDomain interval_2_5(Index n, BcKind left = BcKind::Dirichlet,
                                   BcKind right = BcKind::Dirichlet) {
  auto grid = std::make_shared<ComputationalDomain>(build_torus_domain(1, n));
  auto level = [](const Vec2& p) { return std::max(2.0 - p.x(), p.x() - 5.0); };
  return make_physical_domain(
      grid, level, {boundary_point(2.0, -1.0, left), boundary_point(5.0, 1.0, right)});
}

/// Star-shaped domain r(t) = 1.5 + 0.35 cos(5t) about (pi,pi).
inline PhysicalDomain star_domain(Index n) {
  auto grid = std::make_shared<ComputationalDomain>(build_torus_domain(2, n));
  auto level = [](const Vec2& p) {
    const Vec2 d = p - Vec2(pi, pi);
    const double t = std::atan2(d.y(), d.x());
    return d.norm() - (1.5 + 0.35 * std::cos(5.0 * t));
  };
  auto seg = discretize_boundary(make_star_curve(Vec2(pi, pi), 1.5, 0.35, 5),
                                 two_pi / static_cast<double>(n), BcKind::Dirichlet);
  return make_physical_domain(grid, level, {seg});
}

/// Disc of radius 2 about (pi,pi), optionally split into a Neumann upper and
/// Dirichlet lower semicircle (junction nodes go to the Dirichlet segment).
inline PhysicalDomain disc_domain(Index n, bool mixed_bc = false) {
  auto grid = std::make_shared<ComputationalDomain>(build_torus_domain(2, n));
  auto level = [](const Vec2& p) { return (p - Vec2(pi, pi)).norm() - 2.0; };
  auto circle = discretize_boundary(make_circle(Vec2(pi, pi), 2.0),
                                    two_pi / static_cast<double>(n), BcKind::Dirichlet);
  if (!mixed_bc) return make_physical_domain(grid, level, {circle});

  BoundarySegment upper, lower;
  upper.kind = BcKind::Neumann;
  lower.kind = BcKind::Dirichlet;
  std::vector<Index> up, lo;
  for (Index i = 0; i < circle.size(); ++i) (circle.nodes(i, 1) > pi ? up : lo).push_back(i);
  auto fill = [&](BoundarySegment& seg, const std::vector<Index>& idx) {
    seg.nodes.resize(idx.size(), 2);
    seg.normals.resize(idx.size(), 2);
    seg.weights.resize(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      seg.nodes.row(r) = circle.nodes.row(idx[r]);
      seg.normals.row(r) = circle.normals.row(idx[r]);
      seg.weights[r] = circle.weights[idx[r]];
    }
  };
  fill(upper, up);
  fill(lower, lo);
  return make_physical_domain(grid, level, {upper, lower});
}

/// Square [0.6, 2pi-0.6]^2 minus the closed unit disc about (pi,pi); the
/// domain of the torus fluid tests. Wall segments are discretized
/// independently at spacing ~ds (cell centers), the hole as a closed loop.
inline PhysicalDomain square_with_hole(Index n, double spacing_factor = 1.0) {
  auto grid = std::make_shared<ComputationalDomain>(build_torus_domain(2, n));
  const double lo = 0.6, hi = two_pi - 0.6;
  auto level = [=](const Vec2& p) {
    const double box =
        std::max({lo - p.x(), p.x() - hi, lo - p.y(), p.y() - hi});
    const double hole = 1.0 - (p - Vec2(pi, pi)).norm();
    return std::max(box, hole);
  };
  const double ds = spacing_factor * two_pi / static_cast<double>(n);
  std::vector<BoundarySegment> segs;
  segs.push_back(discretize_boundary(make_segment(Vec2(lo, lo), Vec2(hi, lo)), ds,
                                     BcKind::Dirichlet));
  segs.push_back(discretize_boundary(make_segment(Vec2(hi, lo), Vec2(hi, hi)), ds,
                                     BcKind::Dirichlet));
  segs.push_back(discretize_boundary(make_segment(Vec2(hi, hi), Vec2(lo, hi)), ds,
                                     BcKind::Dirichlet));
  segs.push_back(discretize_boundary(make_segment(Vec2(lo, hi), Vec2(lo, lo)), ds,
                                     BcKind::Dirichlet));
  segs.push_back(discretize_boundary(make_circle(Vec2(pi, pi), 1.0, /*hole=*/true), ds,
                                     BcKind::Dirichlet));
  return make_physical_domain(grid, level, segs);
}

/// Periodic channel (period Lx, walls at yLo/yHi) minus a closed unit disc.
inline PhysicalDomain channel_with_disc(Index nx, Index ny, double x_period, double y_lo,
                                        double y_hi, Vec2 disc_center, double disc_radius,
                                        double x_origin = 0.0, double spacing_factor = 1.0) {
  auto grid = std::make_shared<ComputationalDomain>(
      build_channel_domain(nx, ny, x_period, y_lo, y_hi, x_origin));
  auto level = [=](const Vec2& p) { return disc_radius - (p - disc_center).norm(); };
  const double ds = spacing_factor * x_period / static_cast<double>(nx);
  auto seg = discretize_boundary(make_circle(disc_center, disc_radius, /*hole=*/true), ds,
                                 BcKind::Dirichlet);
  return make_physical_domain(grid, level, {seg});
}

/// Unit sphere minus the skullcap y >= 0.8 (y = sin(theta) sin(phi)). The
/// boundary circle of radius 0.6 lies in the y = 0.8 plane; nodes are stored
/// as (theta, phi) pairs with tangent-plane outward normals.
inline PhysicalDomain sphere_with_cap(Index n_phi, Index n_theta, Index n_boundary) {
  auto grid = std::make_shared<ComputationalDomain>(build_sphere_domain(n_phi, n_theta, 1.0));
  // node2 gives (phi, theta); inside Omega when sin(theta) sin(phi) < 0.8.
  auto level = [](const Vec2& p) { return std::sin(p.y()) * std::sin(p.x()) - 0.8; };
  BoundarySegment seg;
  seg.kind = BcKind::Dirichlet;
  const double r = 0.6;
  seg.nodes.resize(n_boundary, 2);
  seg.normals.resize(n_boundary, 2);
  seg.weights = Vector::Constant(n_boundary, two_pi * r / static_cast<double>(n_boundary));
  for (Index i = 0; i < n_boundary; ++i) {
    const double t = two_pi * static_cast<double>(i) / static_cast<double>(n_boundary);
    const double cx = r * std::cos(t), cy = 0.8, cz = r * std::sin(t);
    const double theta = std::acos(cz);
    const double phi = std::atan2(cy, cx);
    seg.nodes(i, 0) = theta;
    seg.nodes(i, 1) = phi;
    // Outward normal: surface gradient of sin(theta) sin(phi), normalized.
    Vec2 nrm(std::cos(theta) * std::sin(phi), std::cos(phi));
    seg.normals.row(i) = nrm.normalized();
  }
  return make_physical_domain(grid, level, {seg});
}

// ------------------------------------------------- scalar elliptic fields --

inline double poisson1d_exact(double x) {
  const double c1 = (-2.0 - 5.0 * std::log(5.0) + 2.0 * std::log(2.0)) / 3.0;
  const double c2 = 1.0 - 2.0 * std::log(2.0) - 2.0 * c1;
  return x * std::log(x) + c1 * x + c2;
}
inline double poisson1d_forcing(double x) { return 1.0 / x; }

inline double poisson2d_exact(const Vec2& p) { return 1.0 / p.squaredNorm(); }
inline double poisson2d_forcing(const Vec2& p) {
  const double s = p.squaredNorm();
  return -4.0 / (s * s);
}

inline double mixed_exact(const Vec2& p) { return 1.0 / (p.x() * p.y()); }
inline Vec2 mixed_gradient(const Vec2& p) {
  return Vec2(-1.0 / (p.x() * p.x() * p.y()), -1.0 / (p.x() * p.y() * p.y()));
}
inline double mixed_forcing(const Vec2& p) {
  return -(2.0 / (p.x() * p.y())) * (1.0 / (p.x() * p.x()) + 1.0 / (p.y() * p.y()));
}

// ------------------------------------------------------------ heat fields --

inline double heat1d_exact(double t, double x) { return std::log(x) * std::cos(two_pi * t); }
inline double heat1d_forcing(double t, double x) {
  return -two_pi * std::log(x) * std::sin(two_pi * t) +
         std::cos(two_pi * t) / (x * x);
}

inline double heat2d_exact(double t, const Vec2& p) {
  return std::log(p.squaredNorm()) * std::cos(two_pi * t);
}
inline double heat2d_forcing(double t, const Vec2& p) {
  return -two_pi * std::log(p.squaredNorm()) * std::sin(two_pi * t);
}

// ------------------------------------------------- torus Stokes / NS fields --

/// Steady manufactured Stokes fields on the square-with-hole domain.
inline Vec2 stokes_velocity(const Vec2& p) {
  const double e = std::exp(std::sin(p.x()));
  return Vec2(e * std::cos(p.y()), -e * std::sin(p.y()) * std::cos(p.x()));
}
inline double stokes_pressure(const Vec2& p) { return std::exp(2.0 * std::cos(p.x())); }
inline Vec2 stokes_forcing(const Vec2& p) {
  const double sx = std::sin(p.x()), cx = std::cos(p.x());
  const double e = std::exp(sx);
  return Vec2(e * std::cos(p.y()) * (1.0 + sx - cx * cx) -
                  2.0 * sx * std::exp(2.0 * cx),
              e * std::sin(p.y()) * cx * (cx * cx - 3.0 * sx - 2.0));
}

/// Velocity gradient of the steady field (for advection terms):
/// rows are components, columns are derivative directions.
inline Mat2 stokes_velocity_gradient(const Vec2& p) {
  const double sx = std::sin(p.x()), cx = std::cos(p.x());
  const double e = std::exp(sx), sy = std::sin(p.y()), cy = std::cos(p.y());
  Mat2 g;
  g(0, 0) = cx * e * cy;
  g(0, 1) = -e * sy;
  g(1, 0) = -e * sy * (cx * cx - sx);
  g(1, 1) = -e * cy * cx;
  return g;
}

/// Inflow-outflow data of the torus tests: a sin^2 profile on the
/// left/right walls, no-slip everywhere else.
inline Vec2 inflow_data(const Vec2& p) {
  const double lo = 0.6, hi = two_pi - 0.6;
  if (std::abs(p.x() - lo) < 1e-9 || std::abs(p.x() - hi) < 1e-9) {
    const double s = std::sin(pi * (p.y() - lo) / (hi - lo));
    return Vec2(s * s, 0.0);
  }
  return Vec2::Zero();
}

/// Unsteady manufactured Navier-Stokes data (steady fields times e^t):
/// f = e^t (U + f_stokes) + e^{2t} (U.grad) U.
inline Vec2 ns_torus_velocity(double t, const Vec2& p) { return std::exp(t) * stokes_velocity(p); }
inline double ns_torus_pressure(double t, const Vec2& p) {
  return std::exp(t) * stokes_pressure(p);
}
inline Vec2 ns_torus_forcing(double t, const Vec2& p) {
  const Vec2 u = stokes_velocity(p);
  const Vec2 adv = stokes_velocity_gradient(p) * u;
  return std::exp(t) * (u + stokes_forcing(p)) + std::exp(2.0 * t) * adv;
}

// ------------------------------------------------------ channel NS fields --

/// Exact channel Navier-Stokes solution: the curl of e^{sin x}(y^2-4)^2 times
/// e^t, with pressure e^{2 cos x} cos(y) e^t.
inline Vec2 ns_channel_velocity(double t, const Vec2& p) {
  const double e = std::exp(std::sin(p.x())), y = p.y();
  return std::exp(t) *
         Vec2(4.0 * y * (y * y - 4.0) * e,
              -std::cos(p.x()) * e * std::pow(y * y - 4.0, 2));
}
inline double ns_channel_pressure(double t, const Vec2& p) {
  return std::exp(t) * std::exp(2.0 * std::cos(p.x())) * std::cos(p.y());
}
inline Mat2 ns_channel_velocity_gradient(double t, const Vec2& p) {
  const double sx = std::sin(p.x()), cx = std::cos(p.x());
  const double e = std::exp(sx), y = p.y(), w = y * y - 4.0;
  Mat2 g;
  g(0, 0) = 4.0 * y * w * cx * e;
  g(0, 1) = (12.0 * y * y - 16.0) * e;
  g(1, 0) = -(cx * cx - sx) * e * w * w;
  g(1, 1) = -cx * e * 4.0 * y * w;
  return std::exp(t) * g;
}
inline Vec2 ns_channel_forcing(double t, const Vec2& p) {
  const double sx = std::sin(p.x()), cx = std::cos(p.x());
  const double e = std::exp(sx), y = p.y(), w = y * y - 4.0;
  const Vec2 u = ns_channel_velocity(t, p);
  const Vec2 adv = ns_channel_velocity_gradient(t, p) * u;
  // Laplacian of the steady velocity profile.
  const double lap1 = (4.0 * y * w * (cx * cx - sx) + 24.0 * y) * e;
  const double lap2 = -cx * e * (cx * cx - 3.0 * sx - 1.0) * w * w - cx * e * (12.0 * y * y - 16.0);
  const double px = -2.0 * sx * std::exp(2.0 * cx) * std::cos(y);
  const double py = -std::exp(2.0 * cx) * std::sin(y);
  return u + adv - std::exp(t) * Vec2(lap1, lap2) + std::exp(t) * Vec2(px, py);
}

// ------------------------------------------------------------ sphere field --

/// Forcing of the spherical-surface Stokes test, components (theta, phi).
inline Vec2 sphere_forcing(double theta, double phi) {
  return Vec2(-std::cos(phi) + std::sin(2.0 * phi) * std::sin(theta) * std::cos(theta),
              std::sin(phi) * std::cos(theta) + std::cos(2.0 * phi) * std::sin(theta));
}

}  // namespace pe::problems
