#pragma once

#include <memory>
#include <vector>

#include "pe/chebyshev.hpp"
#include "pe/quadrature.hpp"
#include "pe/stokes_channel.hpp"
#include "pe/types.hpp"

namespace pe {

/// Oldroyd-B parameters; lambda and xi are the derived dimensionless groups.
struct OldroydBParams {
  double nu_s = 0.59;
  double nu_p = 0.41;
  double wi = 0.1;
  double length_scale = 1.0;    // X
  double velocity_scale = 1.0;  // U = q / channel height
  double q = 4.0;

  double lambda() const { return velocity_scale / length_scale * wi; }
  double xi() const { return nu_p / (nu_s * lambda()); }
};

/// Nodal symmetric 2x2 tensor field; b21 == b12 by storage.
struct SymTensorField {
  Vector c11, c12, c22;

  static SymTensorField identity(Index n) {
    return {Vector::Ones(n), Vector::Zero(n), Vector::Ones(n)};
  }
  static SymTensorField zero(Index n) {
    return {Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
  }
  Index size() const { return c11.size(); }

  Mat2 at(Index i) const {
    Mat2 m;
    m << c11[i], c12[i], c12[i], c22[i];
    return m;
  }
};

/// Rotation rate making b (grad v)^T + a b symmetric for symmetric b, with
/// a = [[0, w], [-w, 0]]: w = (m21 - m12) / tr(b), m = b (grad v)^T.
inline double antisymmetric_rotation(const Mat2& b, const Mat2& gradv) {
  const double tr = b(0, 0) + b(1, 1);
  if (std::abs(tr) <= 1e-12)
    throw SolverError("antisymmetric_rotation: degenerate b (trace ~ 0)");
  const Mat2 m = b * gradv.transpose();
  return (m(1, 0) - m(0, 1)) / tr;
}

/// Right-hand side of the square-root evolution at one node:
/// F = -(v.grad)b + b(grad v)^T + a b + 1/(2 lambda) (b^{-1} - b).
/// advect holds the nodal advection tensor (v.grad)b.
inline Mat2 sqrt_conformation_rhs(const Mat2& b, const Mat2& gradv, const Mat2& advect,
                                  double lambda) {
  const double det = b(0, 0) * b(1, 1) - b(0, 1) * b(1, 0);
  if (!(det > 0.0)) throw SolverError("sqrt_conformation_rhs: singular b");
  Mat2 binv;
  binv << b(1, 1), -b(0, 1), -b(1, 0), b(0, 0);
  binv /= det;
  const double w = antisymmetric_rotation(b, gradv);
  Mat2 a;
  a << 0.0, w, -w, 0.0;
  return -advect + b * gradv.transpose() + a * b + (binv - b) / (2.0 * lambda);
}

/// Extrapolated BDF-3 update: three-step explicit scheme, third order,
/// monotonicity-preserving when initialized by forward Euler.
/// b^{n+1} = (18 b^n - 9 b^{n-1} + 2 b^{n-2})/11
///         + (6 dt/11)(3 F^n - 3 F^{n-1} + F^{n-2}).
template <typename T>
T ebdf3_combine(const T& b0, const T& b1, const T& b2, const T& f0, const T& f1, const T& f2,
                double dt) {
  return (18.0 * b0 - 9.0 * b1 + 2.0 * b2) / 11.0 +
         (6.0 * dt / 11.0) * (3.0 * f0 - 3.0 * f1 + f2);
}

/// Least-squares fit of nodal data on the physical domain onto the tensor
/// basis including the constant; one factorization serves all components and
/// all time steps.
class TensorReextension {
 public:
  TensorReextension(const PhysicalDomain& domain, int ne_x, int ne_y,
                    LsqOptions lsq = LsqOptions{0.0})
      : domain_(&domain),
        family_(std::make_unique<ChannelScalarFamily>(ne_x, ne_y, domain.grid->x_period,
                                                      domain.grid->y_lo, domain.grid->y_hi,
                                                      ChannelYKind::Pressure,
                                                      /*include_constant=*/true)),
        tables_(std::make_unique<ChannelGridTables>(*family_, domain.grid->axis_nodes[0],
                                                    domain.grid->axis_nodes[1], 1)) {
    const Index ni = domain.interior_count();
    if (ni < family_->size())
      throw std::invalid_argument("reextension system is underdetermined");
    sqrt_w_.resize(ni);
    for (Index i = 0; i < ni; ++i)
      sqrt_w_[i] = std::sqrt(domain.grid->node_weight(domain.interior[i]));
    Matrix a(ni, family_->size());
    const Index ny = domain.grid->axis_size(1);
    for (Index f = 0; f < family_->size(); ++f)
      for (Index i = 0; i < ni; ++i) {
        const Index flat = domain.interior[i];
        a(i, f) = tables_->x_table(0)(flat / ny, f) * tables_->y_table(0)(flat % ny, f) *
                  sqrt_w_[i];
      }
    qr_.compute(std::move(a), lsq);
  }

  const ChannelScalarFamily& family() const { return *family_; }
  const ChannelGridTables& tables() const { return *tables_; }

  Vector fit(const Vector& nodal) const {
    return qr_.solve(nodal.cwiseProduct(sqrt_w_));
  }

  /// Fitted values gathered back at the interior nodes.
  Vector values_on_interior(const Vector& coeffs, int px = 0, int py = 0) const {
    Matrix grid = tables_->evaluate(coeffs, px, py);
    const Index ny = domain_->grid->axis_size(1);
    Vector out(domain_->interior_count());
    for (Index i = 0; i < out.size(); ++i) {
      const Index flat = domain_->interior[i];
      out[i] = grid(flat / ny, flat % ny);
    }
    return out;
  }

  double value_at(const Vector& coeffs, const Vec2& p, int px = 0, int py = 0) const {
    double v = 0.0;
    for (Index f = 0; f < coeffs.size(); ++f)
      if (coeffs[f] != 0.0) v += coeffs[f] * family_->derivative(f, p, px, py);
    return v;
  }

 private:
  const PhysicalDomain* domain_;
  std::unique_ptr<ChannelScalarFamily> family_;
  std::unique_ptr<ChannelGridTables> tables_;
  Vector sqrt_w_;
  LeastSquaresQR qr_;
};

/// Coupled Stokes-Oldroyd-B simulation in the periodic channel with a
/// circular obstacle: extrapolated BDF-3 for the square-root conformation
/// tensor (forward-Euler initialized) alternating with flow-rate-driven
/// Stokes solves forced by xi * div(sigma).
class OldroydBSimulation {
 public:
  struct State {
    double t = 0.0;
    SymTensorField b;      // nodal on the interior
    Matrix b_coeffs;       // re-extension coefficients, one column per component
    SymTensorField f_rhs;  // F(b, v) at the same time level
    StokesSolution flow;
    Vector velocity;  // 2 per interior node
  };

  struct Diagnostics {
    double t = 0.0;
    double drag_boundary = 0.0;
    double drag_bulk = 0.0;
    double alpha = 0.0;
    double flow_rate_error = 0.0;
    double noslip_error = 0.0;
    double min_eig_sigma = 0.0;
  };

  /// The re-extension cutoffs default to the Stokes cutoffs; pass
  /// reext_ne_x/y to override.
  OldroydBSimulation(PhysicalDomain domain, OldroydBParams params, int ne_x, int ne_y,
                     double dt, Vec2 obstacle_center = Vec2(0.0, 0.0),
                     double obstacle_radius = 1.0, Index drag_angles = 128,
                     Index drag_radii = 32, int reext_ne_x = 0, int reext_ne_y = 0)
      : domain_(std::move(domain)),
        params_(params),
        dt_(dt),
        center_(obstacle_center),
        radius_(obstacle_radius),
        drag_angles_(drag_angles),
        drag_radii_(drag_radii) {
    ChannelStokesSystem::Options opt;
    opt.op = ScalarOperator::neg_laplacian();
    opt.pressure_scale = 1.0;
    opt.flow_rate = true;
    opt.flow_rate_x = domain_.grid->x_origin;
    opt.lsq = LsqOptions{0.0};
    stokes_ = std::make_unique<ChannelStokesSystem>(domain_, ne_x, ne_y, opt);
    reext_ = std::make_unique<TensorReextension>(domain_, reext_ne_x > 0 ? reext_ne_x : ne_x,
                                                 reext_ne_y > 0 ? reext_ne_y : ne_y);
    ne_ = std::max(ne_x, ne_y);
  }

  const ChannelStokesSystem& stokes() const { return *stokes_; }
  const TensorReextension& reextension() const { return *reext_; }
  const PhysicalDomain& domain() const { return domain_; }
  double dt() const { return dt_; }

  /// Initial state: tau_p = 0 (b = I) and the corresponding Newtonian flow;
  /// the first two steps advance b by forward Euler to fill the history.
  State initial_state() const {
    State s;
    s.t = 0.0;
    s.b = SymTensorField::identity(domain_.interior_count());
    complete_state(s);
    return s;
  }

  /// One coupled step: advance b (eBDF-3 on full history, forward Euler
  /// otherwise), re-extend, rebuild sigma forcing, solve the flow, refresh F.
  State step(const std::vector<State>& history) const {
    if (history.empty()) throw SolverError("oldroyd-b step: empty history");
    const State& cur = history.back();
    State next;
    next.t = cur.t + dt_;
    const Index ni = domain_.interior_count();
    next.b = SymTensorField::zero(ni);
    if (history.size() >= 3) {
      const State& m1 = history[history.size() - 2];
      const State& m2 = history[history.size() - 3];
      next.b.c11 = ebdf3_combine<Vector>(cur.b.c11, m1.b.c11, m2.b.c11, cur.f_rhs.c11,
                                         m1.f_rhs.c11, m2.f_rhs.c11, dt_);
      next.b.c12 = ebdf3_combine<Vector>(cur.b.c12, m1.b.c12, m2.b.c12, cur.f_rhs.c12,
                                         m1.f_rhs.c12, m2.f_rhs.c12, dt_);
      next.b.c22 = ebdf3_combine<Vector>(cur.b.c22, m1.b.c22, m2.b.c22, cur.f_rhs.c22,
                                         m1.f_rhs.c22, m2.f_rhs.c22, dt_);
    } else {
      next.b.c11 = cur.b.c11 + dt_ * cur.f_rhs.c11;
      next.b.c12 = cur.b.c12 + dt_ * cur.f_rhs.c12;
      next.b.c22 = cur.b.c22 + dt_ * cur.f_rhs.c22;
    }
    check_positive(next.b, next.t);
    complete_state(next);
    return next;
  }

  Diagnostics diagnostics(const State& s) const {
    Diagnostics d;
    d.t = s.t;
    d.alpha = s.flow.alpha;
    d.drag_boundary = drag_boundary(s);
    d.drag_bulk = drag_bulk(s);
    d.flow_rate_error =
        std::abs(stokes_->flow_rate(s.flow, domain_.grid->x_origin) - params_.q) / params_.q;
    d.noslip_error = stokes_->boundary_velocity(s.flow).lpNorm<Eigen::Infinity>();
    d.min_eig_sigma = min_sigma_eigenvalue(s.b);
    return d;
  }

  /// Smallest eigenvalue of sigma = b^T b over the interior nodes.
  static double min_sigma_eigenvalue(const SymTensorField& b) {
    double mn = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < b.size(); ++i) {
      const Mat2 bb = b.at(i);
      const Mat2 sig = bb.transpose() * bb;
      const double tr = sig(0, 0) + sig(1, 1);
      const double disc = std::sqrt(std::pow(sig(0, 0) - sig(1, 1), 2) +
                                    4.0 * sig(0, 1) * sig(0, 1));
      mn = std::min(mn, 0.5 * (tr - disc));
    }
    return mn;
  }

  /// Polymer stress component tau_xx at a point, from the re-extension.
  double tau_xx_at(const State& s, const Vec2& p) const {
    ChannelPointTables tab(reext_->family(), p);
    const double b11 = tab.sum(s.b_coeffs.col(0), 0, 0);
    const double b12 = tab.sum(s.b_coeffs.col(1), 0, 0);
    const double sigma11 = b11 * b11 + b12 * b12;
    return params_.nu_p / params_.wi * (sigma11 - 1.0);
  }

  /// Boundary-integral drag around the obstacle (trapezoid over the circle).
  double drag_boundary(const State& s) const {
    const Index n = 128;
    const double ds = two_pi * radius_ / n;
    double cd = 0.0;
    for (Index k = 0; k < n; ++k) {
      const double t = two_pi * k / n;
      const Vec2 nrm(std::cos(t), std::sin(t));
      const Vec2 p = center_ + radius_ * nrm;
      cd += ds * (momentum_tensor_row(s, p) + Vec2(dimensional_alpha(s), 0.0)).dot(nrm);
    }
    return cd;
  }

  /// Bulk drag: divergence of the momentum-current row integrated over the
  /// obstacle interior on a polar rule (uniform angle x Gauss radius).
  double drag_bulk(const State& s) const {
    ensure_polar_rule();
    double cd = 0.0;
    for (Index k = 0; k < static_cast<Index>(polar_nodes_.size()); ++k)
      cd += polar_weights_[k] * momentum_divergence_x(s, polar_nodes_[k]);
    return cd;
  }

 private:
  double dimensional_alpha(const State& s) const { return params_.nu_s * s.flow.alpha; }

  /// Row x of the stress tensor tau_p - p I + nu_s (grad u + grad u^T) at a
  /// point, evaluated from the coefficient representations (the constant
  /// alpha x-hat(x)x-hat term is added by the caller; it integrates to zero
  /// on closed contours either way).
  Vec2 momentum_tensor_row(const State& s, const Vec2& p) const {
    ChannelPointTables btab(reext_->family(), p);
    const double b11 = btab.sum(s.b_coeffs.col(0), 0, 0);
    const double b12 = btab.sum(s.b_coeffs.col(1), 0, 0);
    const double b22 = btab.sum(s.b_coeffs.col(2), 0, 0);
    const double sig11 = b11 * b11 + b12 * b12;
    const double sig12 = b12 * (b11 + b22);
    const double tau11 = params_.nu_p / params_.wi * (sig11 - 1.0);
    const double tau12 = params_.nu_p / params_.wi * sig12;
    const Vector vc = stokes_->velocity_coeffs(s.flow);
    const Vector pc = stokes_->pressure_coeffs(s.flow);
    ChannelPointTables vtab(stokes_->velocity_family(), p);
    ChannelPointTables ptab(stokes_->pressure_family(), p);
    const double u1x = vtab.sum(vc, 1, 1);       // u1 = phi_y
    const double u1y = vtab.sum(vc, 0, 2);
    const double u2x = -vtab.sum(vc, 2, 0);      // u2 = -phi_x
    const double p_dim = params_.nu_s * ptab.sum(pc, 0, 0);
    return Vec2(tau11 - p_dim + 2.0 * params_.nu_s * u1x,
                tau12 + params_.nu_s * (u1y + u2x));
  }

  /// x-component of div(M) with M = alpha xx + tau_p - pI + nu_s(grad u +
  /// grad u^T); the constant alpha term has zero divergence.
  double momentum_divergence_x(const State& s, const Vec2& p) const {
    ChannelPointTables btab(reext_->family(), p);
    const double b11 = btab.sum(s.b_coeffs.col(0), 0, 0);
    const double b12 = btab.sum(s.b_coeffs.col(1), 0, 0);
    const double b22 = btab.sum(s.b_coeffs.col(2), 0, 0);
    const double b11x = btab.sum(s.b_coeffs.col(0), 1, 0);
    const double b12x = btab.sum(s.b_coeffs.col(1), 1, 0);
    const double b11y = btab.sum(s.b_coeffs.col(0), 0, 1);
    const double b12y = btab.sum(s.b_coeffs.col(1), 0, 1);
    const double b22y = btab.sum(s.b_coeffs.col(2), 0, 1);
    const double k = params_.nu_p / params_.wi;
    const double dsig11_dx = 2.0 * (b11 * b11x + b12 * b12x);
    const double dsig12_dy = b12y * (b11 + b22) + b12 * (b11y + b22y);
    const Vector vc = stokes_->velocity_coeffs(s.flow);
    const Vector pc = stokes_->pressure_coeffs(s.flow);
    ChannelPointTables vtab(stokes_->velocity_family(), p);
    ChannelPointTables ptab(stokes_->pressure_family(), p);
    // 2 nu dxx u1 + nu (dyy u1 + dxy u2) with u = curl(phi) collapses to
    // nu [phi_xxy + phi_yyy + phi_xxy - phi_xxy] = nu (phi_xxy + phi_yyy).
    const double lap_u1 = vtab.sum(vc, 2, 1) + vtab.sum(vc, 0, 3);
    const double px = ptab.sum(pc, 1, 0);
    return k * (dsig11_dx + dsig12_dy) - params_.nu_s * px + params_.nu_s * lap_u1;
  }

  void check_positive(const SymTensorField& b, double t) const {
    for (Index i = 0; i < b.size(); ++i) {
      const double det = b.c11[i] * b.c22[i] - b.c12[i] * b.c12[i];
      if (!(det > 0.0))
        throw SolverError("square-root tensor lost positivity at t = " + std::to_string(t) +
                          ", node " + std::to_string(i));
    }
  }

  /// Re-extends b, solves the flow, and computes F(b, v) for the state.
  void complete_state(State& s) const {
    const Index ni = domain_.interior_count();
    s.b_coeffs.resize(reext_->family().size(), 3);
    s.b_coeffs.col(0) = reext_->fit(s.b.c11);
    s.b_coeffs.col(1) = reext_->fit(s.b.c12);
    s.b_coeffs.col(2) = reext_->fit(s.b.c22);

    // div(sigma) from nodal b and re-extended derivatives (product rule).
    Vector b11x = reext_->values_on_interior(s.b_coeffs.col(0), 1, 0);
    Vector b11y = reext_->values_on_interior(s.b_coeffs.col(0), 0, 1);
    Vector b12x = reext_->values_on_interior(s.b_coeffs.col(1), 1, 0);
    Vector b12y = reext_->values_on_interior(s.b_coeffs.col(1), 0, 1);
    Vector b22x = reext_->values_on_interior(s.b_coeffs.col(2), 1, 0);
    Vector b22y = reext_->values_on_interior(s.b_coeffs.col(2), 0, 1);

    Vector f(2 * ni);
    const double xi = params_.xi();
    for (Index i = 0; i < ni; ++i) {
      const double b11 = s.b.c11[i], b12 = s.b.c12[i], b22 = s.b.c22[i];
      const double dsig11_dx = 2.0 * (b11 * b11x[i] + b12 * b12x[i]);
      const double dsig12_dy = b12y[i] * (b11 + b22) + b12 * (b11y[i] + b22y[i]);
      const double dsig12_dx = b12x[i] * (b11 + b22) + b12 * (b11x[i] + b22x[i]);
      const double dsig22_dy = 2.0 * (b12 * b12y[i] + b22 * b22y[i]);
      f[2 * i] = xi * (dsig11_dx + dsig12_dy);
      f[2 * i + 1] = xi * (dsig12_dx + dsig22_dy);
    }
    s.flow = stokes_->solve(Vector::Zero(2 * domain_.boundary_count()), f, ne_, params_.q);

    // Velocity, velocity gradient, and F(b, v) at the nodes.
    Vector u1 = stokes_->gather_interior(stokes_->velocity_on_grid(s.flow, 0));
    Vector u2 = stokes_->gather_interior(stokes_->velocity_on_grid(s.flow, 1));
    Vector u1x = stokes_->gather_interior(stokes_->velocity_on_grid(s.flow, 0, 1, 0));
    Vector u1y = stokes_->gather_interior(stokes_->velocity_on_grid(s.flow, 0, 0, 1));
    Vector u2x = stokes_->gather_interior(stokes_->velocity_on_grid(s.flow, 1, 1, 0));
    Vector u2y = stokes_->gather_interior(stokes_->velocity_on_grid(s.flow, 1, 0, 1));
    s.velocity.resize(2 * ni);
    s.f_rhs = SymTensorField::zero(ni);
    const double lambda = params_.lambda();
    for (Index i = 0; i < ni; ++i) {
      s.velocity[2 * i] = u1[i];
      s.velocity[2 * i + 1] = u2[i];
      Mat2 gradv;
      gradv << u1x[i], u1y[i], u2x[i], u2y[i];
      Mat2 advect;
      advect << u1[i] * b11x[i] + u2[i] * b11y[i], u1[i] * b12x[i] + u2[i] * b12y[i],
          u1[i] * b12x[i] + u2[i] * b12y[i], u1[i] * b22x[i] + u2[i] * b22y[i];
      const Mat2 fr = sqrt_conformation_rhs(s.b.at(i), gradv, advect, lambda);
      s.f_rhs.c11[i] = fr(0, 0);
      s.f_rhs.c12[i] = 0.5 * (fr(0, 1) + fr(1, 0));
      s.f_rhs.c22[i] = fr(1, 1);
      if (std::abs(fr(0, 1) - fr(1, 0)) > 1e-10 * (1.0 + fr.norm()))
        throw SolverError("conformation rhs lost symmetry at node " + std::to_string(i));
    }
  }

  void ensure_polar_rule() const {
    if (!polar_nodes_.empty()) return;
    QuadratureRule gl = gauss_legendre(static_cast<int>(drag_radii_), 0.0, radius_);
    for (Index a = 0; a < drag_angles_; ++a) {
      const double t = two_pi * a / static_cast<double>(drag_angles_);
      for (Index r = 0; r < drag_radii_; ++r) {
        const double rad = gl.nodes[r];
        polar_nodes_.push_back(center_ + rad * Vec2(std::cos(t), std::sin(t)));
        polar_weights_.push_back(gl.weights[r] * rad * two_pi / drag_angles_);
      }
    }
  }

  PhysicalDomain domain_;
  OldroydBParams params_;
  double dt_;
  Vec2 center_;
  double radius_;
  Index drag_angles_, drag_radii_;
  int ne_ = 0;
  std::unique_ptr<ChannelStokesSystem> stokes_;
  std::unique_ptr<TensorReextension> reext_;
  mutable std::vector<Vec2> polar_nodes_;
  mutable std::vector<double> polar_weights_;
};

}  // namespace pe
