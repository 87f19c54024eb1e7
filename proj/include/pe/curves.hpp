#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pe/quadrature.hpp"
#include "pe/types.hpp"

namespace pe {

/// A planar parametric curve t in [t0,t1] -> R^2 with analytic derivative.
/// Closed curves identify t0 and t1; `outward_left` flips the normal for
/// curves traversed so that the domain lies to the right (interior holes).
struct ParametricCurve {
  std::function<Vec2(double)> position;
  std::function<Vec2(double)> derivative;
  double t0 = 0.0;
  double t1 = 1.0;
  bool closed = true;
  bool flip_normal = false;
};

inline ParametricCurve make_circle(Vec2 center, double radius, bool hole = false) {
  ParametricCurve c;
  c.position = [=](double t) {
    return Vec2(center.x() + radius * std::cos(t), center.y() + radius * std::sin(t));
  };
  c.derivative = [=](double t) { return Vec2(-radius * std::sin(t), radius * std::cos(t)); };
  c.t0 = 0.0;
  c.t1 = two_pi;
  c.closed = true;
  c.flip_normal = hole;
  return c;
}

/// Polar curve r(theta) about a center, e.g. the star r = base + amp*cos(lobes*theta).
inline ParametricCurve make_polar_curve(Vec2 center, std::function<double(double)> r,
                                        std::function<double(double)> dr) {
  ParametricCurve c;
  c.position = [=](double t) {
    const double rad = r(t);
    return Vec2(center.x() + rad * std::cos(t), center.y() + rad * std::sin(t));
  };
  c.derivative = [=](double t) {
    const double rad = r(t), drad = dr(t);
    return Vec2(drad * std::cos(t) - rad * std::sin(t),
                drad * std::sin(t) + rad * std::cos(t));
  };
  c.t0 = 0.0;
  c.t1 = two_pi;
  c.closed = true;
  return c;
}

inline ParametricCurve make_star_curve(Vec2 center, double base, double amp, int lobes) {
  return make_polar_curve(
      center, [=](double t) { return base + amp * std::cos(lobes * t); },
      [=](double t) { return -amp * lobes * std::sin(lobes * t); });
}

inline ParametricCurve make_segment(Vec2 a, Vec2 b) {
  ParametricCurve c;
  c.position = [=](double t) { return Vec2(a + t * (b - a)); };
  c.derivative = [=](double /*t*/) { return Vec2(b - a); };
  c.t0 = 0.0;
  c.t1 = 1.0;
  c.closed = false;
  return c;
}

inline double curve_speed(const ParametricCurve& c, double t) {
  return c.derivative(t).norm();
}

/// Total arc length by adaptive Simpson quadrature of the speed.
inline double arc_length(const ParametricCurve& c, double tol = 1e-10) {
  return adaptive_simpson([&](double t) { return curve_speed(c, t); }, c.t0, c.t1, tol);
}

/// Cumulative arc length s(t) tabulated on a fine partition; inverts s(t) by
/// bracketed bisection with adaptive Simpson on the local piece.
class ArcLengthTable {
 public:
  ArcLengthTable(const ParametricCurve& c, int samples = 4096, double tol = 1e-10)
      : curve_(&c), tol_(tol) {
    t_.resize(samples + 1);
    s_.resize(samples + 1);
    s_[0] = 0.0;
    for (int i = 0; i <= samples; ++i)
      t_[i] = c.t0 + (c.t1 - c.t0) * static_cast<double>(i) / samples;
    for (int i = 1; i <= samples; ++i)
      s_[i] = s_[i - 1] + adaptive_simpson([&](double u) { return curve_speed(c, u); },
                                           t_[i - 1], t_[i], tol / samples);
  }

  double total_length() const { return s_.back(); }

  /// Parameter t with cumulative arc length equal to `target`.
  double parameter_at(double target) const {
    if (target <= 0.0) return t_.front();
    if (target >= s_.back()) return t_.back();
    auto it = std::upper_bound(s_.begin(), s_.end(), target);
    std::size_t hi_idx = static_cast<std::size_t>(it - s_.begin());
    double lo = t_[hi_idx - 1], hi = t_[hi_idx];
    const double s0 = s_[hi_idx - 1];
    auto local = [&](double t) {
      return s0 + adaptive_simpson([&](double u) { return curve_speed(*curve_, u); }, lo, t,
                                   tol_);
    };
    double a = lo, b = hi;
    for (int iter = 0; iter < 80 && b - a > 1e-14 * (curve_->t1 - curve_->t0); ++iter) {
      const double mid = 0.5 * (a + b);
      (local(mid) < target ? a : b) = mid;
    }
    return 0.5 * (a + b);
  }

 private:
  const ParametricCurve* curve_;
  double tol_;
  std::vector<double> t_;
  std::vector<double> s_;
};

}  // namespace pe
