#pragma once

#include <memory>
#include <optional>

#include "pe/geometry.hpp"
#include "pe/legendre.hpp"
#include "pe/lsq.hpp"
#include "pe/stokes_torus.hpp"
#include "pe/types.hpp"

namespace pe {

/// Solution-extension Stokes solver on a spherical surface. Velocities are
/// rotated gradients of spherical harmonics (tangent and divergence-free),
/// on which the operator (-Laplace - K) acts by its scalar eigenvalue; the
/// pressure basis is the harmonics without the constant. Components are
/// (theta, phi) pairs, interleaved per node.
class SphereStokesSystem {
 public:
  SphereStokesSystem(PhysicalDomain domain, int lmax, LsqOptions lsq_opt = {},
                     bool keep_matrix = false)
      : domain_(std::move(domain)),
        velocity_(lmax),
        pressure_(lmax, /*include_constant=*/false) {
    if (domain_.grid->kind != DomainKind::Sphere)
      throw std::invalid_argument("SphereStokesSystem: sphere grid required");
    rho_ = domain_.grid->radius;
    build_columns(lmax);
    build_weights();
    Matrix a = assemble();
    if (keep_matrix) matrix_ = a;
    qr_.compute(std::move(a), lsq_opt);
  }

  const PhysicalDomain& domain() const { return domain_; }
  const SphereVelocityFamily& velocity_family() const { return velocity_; }
  const SphereScalarFamily& pressure_family() const { return pressure_; }
  Index rows() const { return qr_.rows(); }
  Index cols() const { return qr_.cols(); }
  Index prefix(int l) const { return prefix_.at(std::min<int>(l, prefix_.size() - 1)); }
  const std::optional<Matrix>& retained_matrix() const { return matrix_; }

  /// g: boundary velocity (theta,phi per node); f: interior forcing (2 per node).
  StokesSolution solve(const Vector& g, const Vector& f, int lmax) const {
    const Index nb2 = 2 * domain_.boundary_count(), ni2 = 2 * domain_.interior_count();
    if (g.size() != nb2) throw std::invalid_argument("solve: boundary data size mismatch");
    if (f.size() != ni2) throw std::invalid_argument("solve: forcing size mismatch");
    Vector rhs(nb2 + ni2);
    rhs.head(nb2) = g.cwiseProduct(boundary_sqrt2_);
    rhs.tail(ni2) = f.cwiseProduct(domain_sqrt2_);
    Vector z = qr_.solve_prefix(rhs, prefix(lmax));
    StokesSolution sol;
    sol.c = Vector::Zero(velocity_.size() + pressure_.size());
    for (Index k = 0; k < z.size(); ++k) {
      const auto [is_vel, f] = interleave_[k];
      sol.c[is_vel ? f : velocity_.size() + f] = z[k];
    }
    return sol;
  }

  Vector velocity_coeffs(const StokesSolution& sol) const { return sol.c.head(velocity_.size()); }
  Vector pressure_coeffs(const StokesSolution& sol) const { return sol.c.tail(pressure_.size()); }

  /// Velocity (theta,phi components) at the interior nodes, node-major.
  Vector velocity_on_interior(const StokesSolution& sol) const {
    const Vector vc = velocity_coeffs(sol);
    Vector out = Vector::Zero(2 * domain_.interior_count());
    for (Index i = 0; i < domain_.interior_count(); ++i) {
      const auto [phi, theta] = node_angles(domain_.interior[i]);
      for (Index f = 0; f < vc.size(); ++f) {
        if (vc[f] == 0.0) continue;
        const Vec2 u = velocity_.value(f, theta, phi);
        out[2 * i] += vc[f] * u.x();
        out[2 * i + 1] += vc[f] * u.y();
      }
    }
    return out;
  }

  Vector pressure_on_interior(const StokesSolution& sol) const {
    const Vector pc = pressure_coeffs(sol);
    Vector out = Vector::Zero(domain_.interior_count());
    for (Index i = 0; i < domain_.interior_count(); ++i) {
      const auto [phi, theta] = node_angles(domain_.interior[i]);
      for (Index f = 0; f < pc.size(); ++f)
        if (pc[f] != 0.0) out[i] += pc[f] * pressure_.value(f, theta, phi);
    }
    return out;
  }

  Vector boundary_velocity(const StokesSolution& sol) const {
    const Vector vc = velocity_coeffs(sol);
    Vector out = Vector::Zero(2 * domain_.boundary_count());
    Index row = 0;
    for (const auto& seg : domain_.boundary)
      for (Index i = 0; i < seg.size(); ++i, row += 2) {
        const double theta = seg.nodes(i, 0), phi = seg.nodes(i, 1);
        for (Index f = 0; f < vc.size(); ++f) {
          if (vc[f] == 0.0) continue;
          const Vec2 u = velocity_.value(f, theta, phi);
          out[row] += vc[f] * u.x();
          out[row + 1] += vc[f] * u.y();
        }
      }
    return out;
  }

  Vector interior_weights() const {
    Vector w(domain_.interior_count());
    for (Index i = 0; i < w.size(); ++i) w[i] = domain_.grid->node_weight(domain_.interior[i]);
    return w;
  }

 private:
  std::pair<double, double> node_angles(Index flat) const {
    const Index ntheta = domain_.grid->axis_size(1);
    return {domain_.grid->axis_nodes[0][flat / ntheta],
            domain_.grid->axis_nodes[1][flat % ntheta]};
  }

  void build_columns(int lmax) {
    // Interleave velocity and pressure functions by degree so prefixes work.
    interleave_.clear();
    prefix_.assign(lmax + 1, 0);
    Index v = 0, p = 0;
    for (int l = 0; l <= lmax; ++l) {
      while (v < velocity_.prefix_size(l)) interleave_.emplace_back(true, v++);
      while (p < pressure_.prefix_size(l)) interleave_.emplace_back(false, p++);
      prefix_[l] = static_cast<Index>(interleave_.size());
    }
  }

  void build_weights() {
    const Index nb = domain_.boundary_count(), ni = domain_.interior_count();
    boundary_sqrt2_.resize(2 * nb);
    Index row = 0;
    for (const auto& seg : domain_.boundary)
      for (Index i = 0; i < seg.size(); ++i) {
        const double w = std::sqrt(seg.weights[i]);
        boundary_sqrt2_[row++] = w;
        boundary_sqrt2_[row++] = w;
      }
    domain_sqrt2_.resize(2 * ni);
    for (Index i = 0; i < ni; ++i) {
      const double w = std::sqrt(domain_.grid->node_weight(domain_.interior[i]));
      domain_sqrt2_[2 * i] = w;
      domain_sqrt2_[2 * i + 1] = w;
    }
  }

  Matrix assemble() const {
    const Index nb = domain_.boundary_count(), ni = domain_.interior_count();
    const Index rows = 2 * nb + 2 * ni, cols = static_cast<Index>(interleave_.size());
    if (rows < cols)
      throw std::invalid_argument("sphere system is underdetermined; reduce the cutoff");
    Matrix a = Matrix::Zero(rows, cols);
    for (Index k = 0; k < cols; ++k) {
      const auto [is_vel, f] = interleave_[k];
      if (is_vel) {
        const double lambda = velocity_.operator_eigenvalue(f, rho_);
        Index row = 0;
        for (const auto& seg : domain_.boundary)
          for (Index i = 0; i < seg.size(); ++i, row += 2) {
            const Vec2 u = velocity_.value(f, seg.nodes(i, 0), seg.nodes(i, 1));
            const double ws = std::sqrt(seg.weights[i]);
            a(row, k) = u.x() * ws;
            a(row + 1, k) = u.y() * ws;
          }
        for (Index i = 0; i < ni; ++i) {
          const auto [phi, theta] = node_angles(domain_.interior[i]);
          const Vec2 u = velocity_.value(f, theta, phi);
          a(2 * nb + 2 * i, k) = lambda * u.x() * domain_sqrt2_[2 * i];
          a(2 * nb + 2 * i + 1, k) = lambda * u.y() * domain_sqrt2_[2 * i];
        }
      } else {
        for (Index i = 0; i < ni; ++i) {
          const auto [phi, theta] = node_angles(domain_.interior[i]);
          const Vec2 grad = pressure_.surface_gradient(f, theta, phi) / rho_;
          a(2 * nb + 2 * i, k) = grad.x() * domain_sqrt2_[2 * i];
          a(2 * nb + 2 * i + 1, k) = grad.y() * domain_sqrt2_[2 * i];
        }
      }
    }
    return a;
  }

  PhysicalDomain domain_;
  SphereVelocityFamily velocity_;
  SphereScalarFamily pressure_;
  double rho_ = 1.0;
  std::vector<std::pair<bool, Index>> interleave_;
  std::vector<Index> prefix_;
  Vector boundary_sqrt2_, domain_sqrt2_;
  LeastSquaresQR qr_;
  std::optional<Matrix> matrix_;
};

}  // namespace pe
