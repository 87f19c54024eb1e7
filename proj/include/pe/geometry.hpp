#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "pe/curves.hpp"
#include "pe/quadrature.hpp"
#include "pe/types.hpp"

namespace pe {

enum class DomainKind { Torus1D, Torus2D, PeriodicChannel, Sphere };

/// The simple computational domain carrying the global basis: a periodic
/// torus, a periodic-in-x channel with a Gauss-Legendre y-axis, or the unit
/// sphere (uniform azimuthal x Gauss-Legendre polar grid). Immutable after
/// construction; node weights are the tensor quadrature weights.
struct ComputationalDomain {
  DomainKind kind;
  std::vector<Vector> axis_nodes;    // per-axis node lists
  std::vector<Vector> axis_weights;  // per-axis quadrature weights
  double x_period = two_pi;          // torus/channel x-period
  double x_origin = 0.0;             // left end of the periodic x-interval
  double y_lo = 0.0, y_hi = 0.0;     // channel wall positions
  double radius = 1.0;               // sphere radius

  Index axis_size(int a) const { return axis_nodes[a].size(); }
  int dims() const { return static_cast<int>(axis_nodes.size()); }
  Index node_count() const {
    Index n = 1;
    for (const auto& ax : axis_nodes) n *= ax.size();
    return n;
  }

  /// Flat index convention: first axis major (i0 * N1 + i1 in 2D).
  Vec2 node2(Index flat) const {
    const Index n1 = axis_nodes[1].size();
    return Vec2(axis_nodes[0][flat / n1], axis_nodes[1][flat % n1]);
  }
  double node_weight(Index flat) const {
    if (dims() == 1) return axis_weights[0][flat];
    const Index n1 = axis_nodes[1].size();
    return axis_weights[0][flat / n1] * axis_weights[1][flat % n1];
  }
};

/// Equispaced periodic grid on [0,2pi)^dims with weight h^dims per node.
inline ComputationalDomain build_torus_domain(int dims, Index n) {
  if (dims != 1 && dims != 2) throw std::invalid_argument("build_torus_domain: dims must be 1 or 2");
  if (n < 4 || n % 2 != 0)
    throw std::invalid_argument("build_torus_domain: N >= 4 and even required");
  ComputationalDomain d;
  d.kind = dims == 1 ? DomainKind::Torus1D : DomainKind::Torus2D;
  Vector nodes(n), weights(n);
  const double h = two_pi / static_cast<double>(n);
  for (Index k = 0; k < n; ++k) {
    nodes[k] = h * static_cast<double>(k);
    weights[k] = h;
  }
  for (int a = 0; a < dims; ++a) {
    d.axis_nodes.push_back(nodes);
    d.axis_weights.push_back(weights);
  }
  return d;
}

/// Periodic channel: x equispaced on [x0, x0 + xPeriod), y Gauss-Legendre on [yLo,yHi].
inline ComputationalDomain build_channel_domain(Index nx, Index ny, double x_period,
                                                double y_lo, double y_hi,
                                                double x_origin = 0.0) {
  if (nx < 4 || nx % 2 != 0)
    throw std::invalid_argument("build_channel_domain: Nx >= 4 and even required");
  if (ny < 2) throw std::invalid_argument("build_channel_domain: Ny >= 2 required");
  if (!(y_lo < y_hi)) throw std::invalid_argument("build_channel_domain: yLo < yHi required");
  if (!(x_period > 0)) throw std::invalid_argument("build_channel_domain: xPeriod > 0 required");
  ComputationalDomain d;
  d.kind = DomainKind::PeriodicChannel;
  d.x_period = x_period;
  d.x_origin = x_origin;
  d.y_lo = y_lo;
  d.y_hi = y_hi;
  Vector xn(nx), xw(nx);
  const double h = x_period / static_cast<double>(nx);
  for (Index k = 0; k < nx; ++k) {
    xn[k] = x_origin + h * static_cast<double>(k);
    xw[k] = h;
  }
  QuadratureRule gl = gauss_legendre(static_cast<int>(ny), y_lo, y_hi);
  d.axis_nodes = {xn, gl.nodes};
  d.axis_weights = {xw, gl.weights};
  return d;
}

/// Unit-measure spherical grid: azimuthal uniform on [0,2pi), polar
/// Gauss-Legendre directly on [0,pi]; combined node weight (2pi/Nphi) sin(theta_l) w_l.
/// Axis order: (phi, theta).
inline ComputationalDomain build_sphere_domain(Index n_phi, Index n_theta, double radius) {
  if (n_phi < 4 || n_phi % 2 != 0)
    throw std::invalid_argument("build_sphere_domain: Nphi >= 4 and even required");
  if (n_theta < 2) throw std::invalid_argument("build_sphere_domain: Ntheta >= 2 required");
  if (!(radius > 0)) throw std::invalid_argument("build_sphere_domain: radius > 0 required");
  ComputationalDomain d;
  d.kind = DomainKind::Sphere;
  d.radius = radius;
  Vector pn(n_phi), pw(n_phi);
  const double hphi = two_pi / static_cast<double>(n_phi);
  for (Index k = 0; k < n_phi; ++k) {
    pn[k] = hphi * static_cast<double>(k);
    pw[k] = hphi;
  }
  QuadratureRule gl = gauss_legendre(static_cast<int>(n_theta), 0.0, pi);
  Vector tw(n_theta);
  for (Index l = 0; l < n_theta; ++l) tw[l] = std::sin(gl.nodes[l]) * gl.weights[l];
  d.axis_nodes = {pn, gl.nodes};
  d.axis_weights = {pw, tw};
  return d;
}

enum class BcKind { Dirichlet, Neumann, Intrinsic, FlowRate };

/// Discretized boundary piece: nodes on the physical boundary with per-node
/// arc weights, outward unit normals, and a boundary-condition kind.
struct BoundarySegment {
  Matrix nodes;    // n_b x 2 points (or (theta,phi) pairs on the sphere)
  Vector weights;  // arc weight per node
  Matrix normals;  // n_b x 2 outward unit normals
  BcKind kind = BcKind::Dirichlet;

  Index size() const { return nodes.rows(); }
};

/// Places round(L/targetSpacing) nodes equidistant in arc length along the
/// curve. Closed loops use node phases i*ds; open segments use cell centers
/// (i+1/2)*ds so that shared corner points are not duplicated across segments.
inline BoundarySegment discretize_boundary(const ParametricCurve& curve, double target_spacing,
                                           BcKind kind) {
  if (!(target_spacing > 0))
    throw std::invalid_argument("discretize_boundary: targetSpacing > 0 required");
  const double length = arc_length(curve);
  if (!(length > 0)) throw std::invalid_argument("discretize_boundary: zero-length curve");
  const Index n = std::max<Index>(1, static_cast<Index>(std::llround(length / target_spacing)));
  const double ds = length / static_cast<double>(n);

  BoundarySegment seg;
  seg.kind = kind;
  seg.nodes.resize(n, 2);
  seg.normals.resize(n, 2);
  seg.weights = Vector::Constant(n, ds);

  ArcLengthTable table(curve);
  for (Index i = 0; i < n; ++i) {
    const double s = curve.closed ? ds * static_cast<double>(i)
                                  : ds * (static_cast<double>(i) + 0.5);
    const double t = table.parameter_at(s);
    const Vec2 p = curve.position(t);
    Vec2 tangent = curve.derivative(t).normalized();
    Vec2 normal(tangent.y(), -tangent.x());  // right-hand normal of a CCW loop
    if (curve.flip_normal) normal = -normal;
    seg.nodes.row(i) = p;
    seg.normals.row(i) = normal;
  }
  return seg;
}

/// One-dimensional boundary: two endpoint "segments" with unit weight.
inline BoundarySegment boundary_point(double x, double outward, BcKind kind) {
  BoundarySegment seg;
  seg.kind = kind;
  seg.nodes = Matrix::Zero(1, 2);
  seg.nodes(0, 0) = x;
  seg.normals = Matrix::Zero(1, 2);
  seg.normals(0, 0) = outward;
  seg.weights = Vector::Ones(1);
  return seg;
}

/// The embedded physical domain: a level function (negative inside), the set
/// of grid nodes strictly inside, and the discretized boundary segments.
struct PhysicalDomain {
  std::shared_ptr<const ComputationalDomain> grid;
  std::function<double(const Vec2&)> level;  // < 0 inside Omega
  std::vector<Index> interior;               // flat indices of nodes in Omega
  std::vector<BoundarySegment> boundary;

  Index interior_count() const { return static_cast<Index>(interior.size()); }
  Index boundary_count() const {
    Index n = 0;
    for (const auto& s : boundary) n += s.size();
    return n;
  }
};

/// Grid nodes with level < -tol; nodes within tol of the boundary are
/// treated as exterior so they are never double-counted with boundary terms.
inline std::vector<Index> classify_interior(const ComputationalDomain& domain,
                                            const std::function<double(const Vec2&)>& level,
                                            double tol = 1e-12) {
  std::vector<Index> inside;
  const Index n = domain.node_count();
  if (domain.dims() == 1) {
    for (Index k = 0; k < n; ++k)
      if (level(Vec2(domain.axis_nodes[0][k], 0.0)) < -tol) inside.push_back(k);
  } else {
    for (Index k = 0; k < n; ++k)
      if (level(domain.node2(k)) < -tol) inside.push_back(k);
  }
  return inside;
}

inline PhysicalDomain make_physical_domain(std::shared_ptr<const ComputationalDomain> grid,
                                           std::function<double(const Vec2&)> level,
                                           std::vector<BoundarySegment> boundary) {
  PhysicalDomain pd;
  pd.grid = std::move(grid);
  pd.level = std::move(level);
  pd.boundary = std::move(boundary);
  pd.interior = classify_interior(*pd.grid, pd.level);
  if (pd.interior.empty()) throw std::invalid_argument("physical domain has no interior nodes");
  return pd;
}

}  // namespace pe
