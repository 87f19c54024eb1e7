#pragma once

#include <cmath>
#include <vector>

#include "pe/types.hpp"

namespace pe {

/// Associated Legendre functions P_l^m(x) for fixed m and all l <= lmax, by
/// the stable upward recurrence in l. No Condon-Shortley phase and no
/// normalization: P_m^m(x) = (2m-1)!! (1-x^2)^{m/2}.
inline std::vector<double> legendre_plm_row(int lmax, int m, double x) {
  std::vector<double> p(lmax + 1, 0.0);
  if (m > lmax) return p;
  double pmm = 1.0;
  const double somx2 = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
  for (int k = 1; k <= m; ++k) pmm *= (2.0 * k - 1.0) * somx2;
  p[m] = pmm;
  if (m + 1 <= lmax) p[m + 1] = x * (2.0 * m + 1.0) * pmm;
  for (int l = m + 2; l <= lmax; ++l)
    p[l] = (x * (2.0 * l - 1.0) * p[l - 1] - (l + m - 1.0) * p[l - 2]) / (l - m);
  return p;
}

inline double legendre_plm(int l, int m, double x) {
  if (m < 0 || m > l) throw std::invalid_argument("legendre_plm: need 0 <= m <= l");
  return legendre_plm_row(l, m, x)[l];
}

/// P_l^m(cos theta) together with its theta-derivative, from the same-m
/// identity (1-x^2) dP_l^m/dx = (l+m) P_{l-1}^m - l x P_l^m.
struct PlmTheta {
  double p, dp_dtheta;
};

inline PlmTheta legendre_plm_theta(int l, int m, double theta) {
  const double x = std::cos(theta), s = std::sin(theta);
  const auto row = legendre_plm_row(l, m, x);
  const double plm = row[l];
  const double plm1 = (l - 1 >= m && l >= 1) ? row[l - 1] : 0.0;
  // dP/dtheta = (l x P_l - (l+m) P_{l-1}) / sin(theta)
  const double dp = (l * x * plm - (l + m) * plm1) / s;
  return {plm, dp};
}

/// Real spherical harmonics on the sphere: P_l^0, cos(m phi) P_l^m, and
/// sin(m phi) P_l^m, ordered by degree l (then m, cosine before sine), so the
/// leading block of any assembled system realizes a smaller cutoff.
class SphereScalarFamily {
 public:
  enum Trig { Zonal = 0, Cos = 1, Sin = 2 };
  struct Fn {
    int l, m;
    Trig trig;
  };

  SphereScalarFamily(int lmax, bool include_constant) : lmax_(lmax) {
    prefix_.assign(lmax + 1, 0);
    for (int l = 0; l <= lmax; ++l) {
      if (l > 0 || include_constant) fns_.push_back({l, 0, Zonal});
      for (int m = 1; m <= l; ++m) {
        fns_.push_back({l, m, Cos});
        fns_.push_back({l, m, Sin});
      }
      prefix_[l] = static_cast<Index>(fns_.size());
    }
  }

  int lmax() const { return lmax_; }
  Index size() const { return static_cast<Index>(fns_.size()); }
  Index prefix_size(int l) const { return prefix_.at(std::min(l, lmax_)); }
  const Fn& fn(Index f) const { return fns_[f]; }

  double value(Index f, double theta, double phi) const {
    const Fn& fn = fns_[f];
    const double p = legendre_plm(fn.l, fn.m, std::cos(theta));
    return p * azimuthal(fn, phi);
  }

  /// Surface gradient components (d/dtheta, (1/sin) d/dphi) on the unit sphere.
  Vec2 surface_gradient(Index f, double theta, double phi) const {
    const Fn& fn = fns_[f];
    const PlmTheta pt = legendre_plm_theta(fn.l, fn.m, theta);
    const double g_theta = pt.dp_dtheta * azimuthal(fn, phi);
    const double g_phi = pt.p * azimuthal_derivative(fn, phi) / std::sin(theta);
    return Vec2(g_theta, g_phi);
  }

  /// Eigenvalue of -Laplace_sphere on degree-l harmonics (unit radius).
  double laplace_eigenvalue(Index f) const {
    const int l = fns_[f].l;
    return static_cast<double>(l) * (l + 1);
  }

 private:
  double azimuthal(const Fn& fn, double phi) const {
    if (fn.trig == Zonal) return 1.0;
    return fn.trig == Cos ? std::cos(fn.m * phi) : std::sin(fn.m * phi);
  }
  double azimuthal_derivative(const Fn& fn, double phi) const {
    if (fn.trig == Zonal) return 0.0;
    return fn.trig == Cos ? -fn.m * std::sin(fn.m * phi) : fn.m * std::cos(fn.m * phi);
  }

  int lmax_;
  std::vector<Fn> fns_;
  std::vector<Index> prefix_;
};

/// Tangent, surface-divergence-free velocity fields obtained by rotating the
/// harmonic gradients: components (u_theta, u_phi) = (-(1/sin) dY/dphi, dY/dtheta).
/// Degree l = 0 is excluded (identically zero field).
class SphereVelocityFamily {
 public:
  explicit SphereVelocityFamily(int lmax) : scalars_(lmax, /*include_constant=*/false) {}

  Index size() const { return scalars_.size(); }
  Index prefix_size(int l) const { return scalars_.prefix_size(l); }
  const SphereScalarFamily::Fn& fn(Index f) const { return scalars_.fn(f); }
  const SphereScalarFamily& scalars() const { return scalars_; }

  /// (u_theta, u_phi) at a point on the unit sphere.
  Vec2 value(Index f, double theta, double phi) const {
    const Vec2 g = scalars_.surface_gradient(f, theta, phi);
    return Vec2(-g.y(), g.x());
  }

  /// Eigenvalue of the vector operator (-Laplace - K) on this field, radius rho;
  /// the vector Laplacian commutes with the rotation so the scalar eigenvalue
  /// carries over, shifted by the curvature K = 1/rho^2.
  double operator_eigenvalue(Index f, double rho = 1.0) const {
    return (scalars_.laplace_eigenvalue(f) - 1.0) / (rho * rho);
  }

 private:
  SphereScalarFamily scalars_;
};

}  // namespace pe
