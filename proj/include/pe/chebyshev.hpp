#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "pe/types.hpp"

namespace pe {

/// Chebyshev polynomial of the first kind with derivatives up to third order,
/// by forward recurrence (valid on the whole interval including endpoints).
/// The interval [a,b] is mapped affinely to [-1,1]; chain-rule factors are
/// applied so derivatives are with respect to the physical coordinate.
struct ChebyshevValues {
  double f, d1, d2, d3;
};

inline ChebyshevValues chebyshev_derivs(int n, double y, double a, double b) {
  const double s = 2.0 / (b - a);
  const double x = s * (y - a) - 1.0;
  // t[k] = T_k(x) and derivatives in x
  std::array<double, 4> prev{1.0, 0.0, 0.0, 0.0};  // T_0
  if (n == 0) return {1.0, 0.0, 0.0, 0.0};
  std::array<double, 4> cur{x, 1.0, 0.0, 0.0};  // T_1
  for (int k = 1; k < n; ++k) {
    std::array<double, 4> next;
    next[0] = 2.0 * x * cur[0] - prev[0];
    next[1] = 2.0 * cur[0] + 2.0 * x * cur[1] - prev[1];
    next[2] = 4.0 * cur[1] + 2.0 * x * cur[2] - prev[2];
    next[3] = 6.0 * cur[2] + 2.0 * x * cur[3] - prev[3];
    prev = cur;
    cur = next;
  }
  return {cur[0], cur[1] * s, cur[2] * s * s, cur[3] * s * s * s};
}

/// Wall factor w(y) = (y-a)^2 (y-b)^2 and derivatives; every stream basis
/// element carries it so channel velocities vanish at both walls.
inline ChebyshevValues wall_factor_derivs(double y, double a, double b) {
  const double u = y - a, v = y - b;
  const double f = u * u * v * v;
  const double d1 = 2.0 * u * v * (u + v);
  const double d2 = 2.0 * (u * u + 4.0 * u * v + v * v);
  const double d3 = 12.0 * (u + v);
  return {f, d1, d2, d3};
}

/// The lowest-degree polynomial whose derivative vanishes at both walls
/// without being constant: t(y) = y^3 - (3/2)(a+b) y^2 + 3ab y, with
/// t'(y) = 3 (y-a)(y-b). On [-2,2] this is y(y^2 - 12).
inline ChebyshevValues special_stream_derivs(double y, double a, double b) {
  const double f = y * y * y - 1.5 * (a + b) * y * y + 3.0 * a * b * y;
  const double d1 = 3.0 * (y - a) * (y - b);
  const double d2 = 6.0 * y - 3.0 * (a + b);
  return {f, d1, d2, 6.0};
}

enum class ChannelYKind { Pressure, Stream };

/// Tensor-product scalar family on the periodic channel: trigonometric in x
/// (period L, wavenumber 2 pi j1 / L) and Chebyshev in y, optionally weighted
/// by the wall factor (stream functions). The stream family additionally
/// carries the special element as its first member. Functions are ordered by
/// grade = max(|j1|, j2) so column prefixes realize smaller cutoffs.
class ChannelScalarFamily {
 public:
  enum Trig { Const = 0, Cos = 1, Sin = 2 };
  enum class YKind { Cheb, Special };
  struct Fn {
    int j1, j2;
    Trig trig;
    YKind ykind;
    int grade;
  };

  ChannelScalarFamily(int ne_x, int ne_y, double x_period, double y_lo, double y_hi,
                      ChannelYKind kind, bool include_constant)
      : ne_x_(ne_x), ne_y_(ne_y), x_period_(x_period), y_lo_(y_lo), y_hi_(y_hi), kind_(kind) {
    if (ne_x < 0 || ne_y < 0) throw std::invalid_argument("ChannelScalarFamily: bad cutoffs");
    const int gmax = std::max(ne_x, ne_y);
    prefix_.assign(gmax + 1, 0);
    if (kind == ChannelYKind::Stream)
      fns_.push_back({0, 0, Const, YKind::Special, 0});
    for (int g = 0; g <= gmax; ++g) {
      for (int j1 = 0; j1 <= std::min(g, ne_x); ++j1)
        for (int j2 = 0; j2 <= std::min(g, ne_y); ++j2) {
          if (std::max(j1, j2) != g) continue;
          if (j1 == 0 && j2 == 0 && kind == ChannelYKind::Pressure && !include_constant)
            continue;
          if (j1 == 0) {
            fns_.push_back({0, j2, Const, YKind::Cheb, g});
          } else {
            fns_.push_back({j1, j2, Cos, YKind::Cheb, g});
            fns_.push_back({j1, j2, Sin, YKind::Cheb, g});
          }
        }
      prefix_[g] = static_cast<Index>(fns_.size());
    }
  }

  Index size() const { return static_cast<Index>(fns_.size()); }
  Index prefix_size(int ne) const { return prefix_.at(std::min<int>(ne, prefix_.size() - 1)); }
  const Fn& fn(Index f) const { return fns_[f]; }
  double x_period() const { return x_period_; }
  double y_lo() const { return y_lo_; }
  double y_hi() const { return y_hi_; }
  int ne_x() const { return ne_x_; }
  int ne_y() const { return ne_y_; }
  ChannelYKind kind() const { return kind_; }

  double wavenumber(int j1) const { return two_pi * j1 / x_period_; }

  /// x-trig factor and derivatives up to order `max_order` at x.
  std::array<double, 4> x_factor(Index f, double x) const {
    const Fn& fn = fns_[f];
    std::array<double, 4> out{1.0, 0.0, 0.0, 0.0};
    if (fn.trig == Const) return out;
    const double w = wavenumber(fn.j1);
    const double c = std::cos(w * x), s = std::sin(w * x);
    if (fn.trig == Cos)
      out = {c, -w * s, -w * w * c, w * w * w * s};
    else
      out = {s, w * c, -w * w * s, -w * w * w * c};
    return out;
  }

  /// y factor and derivatives up to third order at y.
  ChebyshevValues y_factor(Index f, double y) const {
    const Fn& fn = fns_[f];
    if (fn.ykind == YKind::Special) return special_stream_derivs(y, y_lo_, y_hi_);
    const ChebyshevValues t = chebyshev_derivs(fn.j2, y, y_lo_, y_hi_);
    if (kind_ == ChannelYKind::Pressure) return t;
    const ChebyshevValues w = wall_factor_derivs(y, y_lo_, y_hi_);
    ChebyshevValues out;
    out.f = t.f * w.f;
    out.d1 = t.d1 * w.f + t.f * w.d1;
    out.d2 = t.d2 * w.f + 2.0 * t.d1 * w.d1 + t.f * w.d2;
    out.d3 = t.d3 * w.f + 3.0 * t.d2 * w.d1 + 3.0 * t.d1 * w.d2 + t.f * w.d3;
    return out;
  }

  /// Mixed partial derivative d^(px+py) f / dx^px dy^py at a point.
  double derivative(Index f, const Vec2& p, int px, int py) const {
    const auto xf = x_factor(f, p.x());
    const ChebyshevValues yf = y_factor(f, p.y());
    const double yv = py == 0 ? yf.f : py == 1 ? yf.d1 : py == 2 ? yf.d2 : yf.d3;
    return xf[px] * yv;
  }

  double value(Index f, const Vec2& p) const { return derivative(f, p, 0, 0); }

 private:
  int ne_x_, ne_y_;
  double x_period_, y_lo_, y_hi_;
  ChannelYKind kind_;
  std::vector<Fn> fns_;
  std::vector<Index> prefix_;
};

/// Shared per-point evaluation: one recurrence pass per axis yields all
/// function values and derivatives at a single point in O(ne_x + ne_y), so
/// summing a full expansion costs O(1) per coefficient. Used by the drag
/// quadratures, which evaluate many fields at off-grid points.
class ChannelPointTables {
 public:
  ChannelPointTables(const ChannelScalarFamily& family, const Vec2& p) : family_(&family) {
    const int nx = family.ne_x(), ny = family.ne_y();
    cx_.resize(nx + 1);
    sx_.resize(nx + 1);
    w_.resize(nx + 1);
    for (int j = 0; j <= nx; ++j) {
      w_[j] = family.wavenumber(j);
      cx_[j] = std::cos(w_[j] * p.x());
      sx_[j] = std::sin(w_[j] * p.x());
    }
    ycheb_.resize(ny + 1);
    for (int n = 0; n <= ny; ++n)
      ycheb_[n] = chebyshev_derivs(n, p.y(), family.y_lo(), family.y_hi());
    wall_ = wall_factor_derivs(p.y(), family.y_lo(), family.y_hi());
    special_ = special_stream_derivs(p.y(), family.y_lo(), family.y_hi());
  }

  double derivative(Index f, int px, int py) const {
    const auto& fn = family_->fn(f);
    double xv;
    if (fn.trig == ChannelScalarFamily::Const) {
      xv = px == 0 ? 1.0 : 0.0;
    } else {
      const double w = w_[fn.j1];
      const double c = cx_[fn.j1], s = sx_[fn.j1];
      const double wp = std::pow(w, px);
      if (fn.trig == ChannelScalarFamily::Cos)
        xv = wp * (px % 4 == 0 ? c : px % 4 == 1 ? -s : px % 4 == 2 ? -c : s);
      else
        xv = wp * (px % 4 == 0 ? s : px % 4 == 1 ? c : px % 4 == 2 ? -s : -c);
    }
    double yv;
    if (fn.ykind == ChannelScalarFamily::YKind::Special) {
      yv = pick(special_, py);
    } else if (family_->kind() == ChannelYKind::Pressure) {
      yv = pick(ycheb_[fn.j2], py);
    } else {
      const ChebyshevValues& t = ycheb_[fn.j2];
      switch (py) {
        case 0: yv = t.f * wall_.f; break;
        case 1: yv = t.d1 * wall_.f + t.f * wall_.d1; break;
        case 2: yv = t.d2 * wall_.f + 2.0 * t.d1 * wall_.d1 + t.f * wall_.d2; break;
        default:
          yv = t.d3 * wall_.f + 3.0 * t.d2 * wall_.d1 + 3.0 * t.d1 * wall_.d2 + t.f * wall_.d3;
      }
    }
    return xv * yv;
  }

  /// Expansion value sum_f coeffs[f] d^(px,py) basis_f at the point.
  double sum(const Vector& coeffs, int px, int py) const {
    double v = 0.0;
    for (Index f = 0; f < coeffs.size(); ++f)
      if (coeffs[f] != 0.0) v += coeffs[f] * derivative(f, px, py);
    return v;
  }

 private:
  static double pick(const ChebyshevValues& v, int p) {
    return p == 0 ? v.f : p == 1 ? v.d1 : p == 2 ? v.d2 : v.d3;
  }

  const ChannelScalarFamily* family_;
  std::vector<double> cx_, sx_, w_;
  std::vector<ChebyshevValues> ycheb_;
  ChebyshevValues wall_{}, special_{};
};

/// Grid evaluation of channel tensor families: one table per axis and
/// derivative order, combined per-function by outer products. Also used to
/// assemble interior blocks column-by-column.
class ChannelGridTables {
 public:
  ChannelGridTables(const ChannelScalarFamily& family, const Vector& x_nodes,
                    const Vector& y_nodes, int max_order = 3)
      : family_(&family), max_order_(max_order) {
    const Index nf = family.size();
    x_tab_.resize(max_order + 1);
    y_tab_.resize(max_order + 1);
    for (int p = 0; p <= max_order; ++p) {
      x_tab_[p].resize(x_nodes.size(), nf);
      y_tab_[p].resize(y_nodes.size(), nf);
    }
    for (Index f = 0; f < nf; ++f) {
      for (Index k = 0; k < x_nodes.size(); ++k) {
        const auto xf = family.x_factor(f, x_nodes[k]);
        for (int p = 0; p <= max_order; ++p) x_tab_[p](k, f) = xf[p];
      }
      for (Index l = 0; l < y_nodes.size(); ++l) {
        const ChebyshevValues yf = family.y_factor(f, y_nodes[l]);
        const double yv[4] = {yf.f, yf.d1, yf.d2, yf.d3};
        for (int p = 0; p <= max_order; ++p) y_tab_[p](l, f) = yv[p];
      }
    }
  }

  /// Sampled derivative of basis function f over the whole grid, flattened
  /// x-major (index k*Ny + l).
  Vector column(Index f, int px, int py) const {
    const Matrix& xt = x_tab_[px];
    const Matrix& yt = y_tab_[py];
    Vector out(xt.rows() * yt.rows());
    Index idx = 0;
    for (Index k = 0; k < xt.rows(); ++k)
      for (Index l = 0; l < yt.rows(); ++l) out[idx++] = xt(k, f) * yt(l, f);
    return out;
  }

  const Matrix& x_table(int order) const { return x_tab_[order]; }
  const Matrix& y_table(int order) const { return y_tab_[order]; }

  /// Nodal values of sum_f coeffs[f] d^(px,py) basis_f over the grid (Nx x Ny).
  Matrix evaluate(const Vector& coeffs, int px, int py) const {
    const Matrix& xt = x_tab_[px];
    const Matrix& yt = y_tab_[py];
    const Index n = std::min<Index>(coeffs.size(), family_->size());
    return xt.leftCols(n) * coeffs.head(n).asDiagonal() * yt.leftCols(n).transpose();
  }

 private:
  const ChannelScalarFamily* family_;
  int max_order_;
  std::vector<Matrix> x_tab_, y_tab_;
};

}  // namespace pe
