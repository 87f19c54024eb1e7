#pragma once

#include <memory>
#include <optional>

#include "pe/chebyshev.hpp"
#include "pe/fourier.hpp"
#include "pe/geometry.hpp"
#include "pe/lsq.hpp"
#include "pe/stokes_torus.hpp"
#include "pe/types.hpp"

namespace pe {

/// Solution-extension Stokes solver on the periodic channel. Velocities are
/// curls of wall-weighted stream functions, so incompressibility and no-slip
/// at the lateral walls hold structurally; only the obstacle boundary enters
/// the least-squares objective. An optional flow-rate constraint adds the
/// constant Lagrange forcing (alpha, 0) as an unknown column plus one row
/// pinning the flux carried by the special stream element.
class ChannelStokesSystem {
 public:
  struct Options {
    ScalarOperator op = ScalarOperator::neg_laplacian();
    double pressure_scale = 1.0;  // multiplies grad(p) and the alpha column
    bool flow_rate = false;
    double flow_rate_x = 0.0;  // station where the flux is pinned
    LsqOptions lsq = {};
    bool keep_matrix = false;
  };

  enum class ColKind { Alpha, Velocity, Pressure };
  struct Column {
    ColKind kind;
    Index fn = 0;
  };

  ChannelStokesSystem(PhysicalDomain domain, int ne_x, int ne_y, Options opt)
      : domain_(std::move(domain)), opt_(opt) {
    const auto& grid = *domain_.grid;
    if (grid.kind != DomainKind::PeriodicChannel)
      throw std::invalid_argument("ChannelStokesSystem: periodic-channel grid required");
    velocity_ = std::make_unique<ChannelScalarFamily>(ne_x, ne_y, grid.x_period, grid.y_lo,
                                                      grid.y_hi, ChannelYKind::Stream, true);
    pressure_ = std::make_unique<ChannelScalarFamily>(ne_x, ne_y, grid.x_period, grid.y_lo,
                                                      grid.y_hi, ChannelYKind::Pressure, false);
    build_columns(std::max(ne_x, ne_y));
    build_weights();
    vel_tables_ = std::make_unique<ChannelGridTables>(*velocity_, grid.axis_nodes[0],
                                                      grid.axis_nodes[1], 3);
    pres_tables_ = std::make_unique<ChannelGridTables>(*pressure_, grid.axis_nodes[0],
                                                       grid.axis_nodes[1], 1);
    Matrix a = assemble();
    if (opt.keep_matrix) matrix_ = a;
    qr_.compute(std::move(a), opt.lsq);
  }

  const PhysicalDomain& domain() const { return domain_; }
  const ChannelScalarFamily& velocity_family() const { return *velocity_; }
  const ChannelScalarFamily& pressure_family() const { return *pressure_; }
  Index rows() const { return qr_.rows(); }
  Index cols() const { return qr_.cols(); }
  Index prefix(int ne) const { return prefix_.at(std::min<int>(ne, prefix_.size() - 1)); }
  const std::vector<Column>& column_map() const { return columns_; }
  const std::optional<Matrix>& retained_matrix() const { return matrix_; }

  /// g: obstacle velocity data (2 per node, node-major); f: momentum forcing
  /// (2 per interior node); q: prescribed flow rate (ignored without the
  /// flow-rate constraint).
  StokesSolution solve(const Vector& g, const Vector& f, int ne, double q = 0.0) const {
    const Index nb2 = 2 * domain_.boundary_count(), ni2 = 2 * domain_.interior_count();
    if (g.size() != nb2) throw std::invalid_argument("solve: boundary data size mismatch");
    if (f.size() != ni2) throw std::invalid_argument("solve: forcing size mismatch");
    Vector rhs(nb2 + ni2 + (opt_.flow_rate ? 1 : 0));
    rhs.head(nb2) = g.cwiseProduct(boundary_sqrt2_);
    rhs.segment(nb2, ni2) = f.cwiseProduct(domain_sqrt2_);
    if (opt_.flow_rate) rhs[nb2 + ni2] = q;
    Vector z = qr_.solve_prefix(rhs, prefix(ne));
    return split(z);
  }

  StokesSolution split(const Vector& z) const {
    StokesSolution sol;
    sol.c = Vector::Zero(velocity_->size() + pressure_->size());
    for (Index k = 0; k < z.size(); ++k) {
      const Column& col = columns_[k];
      if (col.kind == ColKind::Alpha)
        sol.alpha = z[k];
      else if (col.kind == ColKind::Velocity)
        sol.c[col.fn] = z[k];
      else
        sol.c[velocity_->size() + col.fn] = z[k];
    }
    sol.special = sol.c[0];  // special stream element is velocity fn 0
    return sol;
  }

  Vector velocity_coeffs(const StokesSolution& sol) const { return sol.c.head(velocity_->size()); }
  Vector pressure_coeffs(const StokesSolution& sol) const { return sol.c.tail(pressure_->size()); }

  /// Velocity component on the grid: u1 = d_y phi, u2 = -d_x phi, with
  /// optional extra derivatives (px,py).
  Matrix velocity_on_grid(const StokesSolution& sol, int m, int px = 0, int py = 0) const {
    const Vector vc = velocity_coeffs(sol);
    return m == 0 ? vel_tables_->evaluate(vc, px, py + 1)
                  : Matrix(-vel_tables_->evaluate(vc, px + 1, py));
  }

  Matrix pressure_on_grid(const StokesSolution& sol, int px = 0, int py = 0) const {
    return pres_tables_->evaluate(pressure_coeffs(sol), px, py);
  }

  Vector gather_interior(const Matrix& grid_values) const {
    const Index ny = domain_.grid->axis_size(1);
    Vector out(domain_.interior_count());
    for (Index i = 0; i < out.size(); ++i) {
      const Index flat = domain_.interior[i];
      out[i] = grid_values(flat / ny, flat % ny);
    }
    return out;
  }

  /// Velocity at the obstacle boundary nodes (2 per node, node-major).
  Vector boundary_velocity(const StokesSolution& sol) const {
    const Vector vc = velocity_coeffs(sol);
    Vector out(2 * domain_.boundary_count());
    Index row = 0;
    for (const auto& seg : domain_.boundary)
      for (Index i = 0; i < seg.size(); ++i, row += 2) {
        const Vec2 s = seg.nodes.row(i);
        double u1 = 0, u2 = 0;
        for (Index f = 0; f < vc.size(); ++f) {
          if (vc[f] == 0.0) continue;
          u1 += vc[f] * velocity_->derivative(f, s, 0, 1);
          u2 -= vc[f] * velocity_->derivative(f, s, 1, 0);
        }
        out[row] = u1;
        out[row + 1] = u2;
      }
    return out;
  }

  /// Exact flux integral_yLo^yHi u1 dy at station x; only the special element
  /// contributes because all wall-weighted stream functions vanish at the walls.
  double flow_rate(const StokesSolution& sol, double x) const {
    const Vector vc = velocity_coeffs(sol);
    double q = 0.0;
    for (Index f = 0; f < vc.size(); ++f) {
      if (vc[f] == 0.0) continue;
      q += vc[f] * (velocity_->value(f, Vec2(x, velocity_->y_hi())) -
                    velocity_->value(f, Vec2(x, velocity_->y_lo())));
    }
    return q;
  }

  Vector interior_weights() const {
    Vector w(domain_.interior_count());
    for (Index i = 0; i < w.size(); ++i) w[i] = domain_.grid->node_weight(domain_.interior[i]);
    return w;
  }

 private:
  void build_columns(int gmax) {
    columns_.clear();
    prefix_.assign(gmax + 1, 0);
    if (opt_.flow_rate) columns_.push_back({ColKind::Alpha, 0});
    Index v = 0, p = 0;
    for (int g = 0; g <= gmax; ++g) {
      while (v < velocity_->prefix_size(g)) columns_.push_back({ColKind::Velocity, v++});
      while (p < pressure_->prefix_size(g)) columns_.push_back({ColKind::Pressure, p++});
      prefix_[g] = static_cast<Index>(columns_.size());
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

  // Momentum image of a velocity column: L Phi with Phi = (phi_y, -phi_x).
  // For L = a*I - s*Lap: comp0 = a phi_y - s (phi_xxy + phi_yyy),
  //                      comp1 = -a phi_x + s (phi_xxx + phi_xyy).
  std::pair<double, double> op_factors() const {
    switch (opt_.op.kind) {
      case ScalarOperator::Kind::Identity: return {1.0, 0.0};
      case ScalarOperator::Kind::NegLaplacian: return {0.0, 1.0};
      case ScalarOperator::Kind::Helmholtz: return {1.0, opt_.op.sigma};
      case ScalarOperator::Kind::Laplacian: return {0.0, -1.0};
    }
    return {0.0, 1.0};
  }

  Matrix assemble() const {
    const Index nb = domain_.boundary_count(), ni = domain_.interior_count();
    const Index rows = 2 * nb + 2 * ni + (opt_.flow_rate ? 1 : 0);
    const Index cols = static_cast<Index>(columns_.size());
    if (rows < cols)
      throw std::invalid_argument("channel system is underdetermined; reduce the cutoff");
    Matrix a = Matrix::Zero(rows, cols);
    const auto [ai, as] = op_factors();
    const Index ny = domain_.grid->axis_size(1);
    const Index base = 2 * nb;
    const Index frow = 2 * nb + 2 * ni;

    // Cache interior (ix, iy) pairs.
    std::vector<std::pair<Index, Index>> in_xy(ni);
    for (Index i = 0; i < ni; ++i)
      in_xy[i] = {domain_.interior[i] / ny, domain_.interior[i] % ny};

    for (Index k = 0; k < cols; ++k) {
      const Column& col = columns_[k];
      if (col.kind == ColKind::Alpha) {
        for (Index i = 0; i < ni; ++i)
          a(base + 2 * i, k) = -opt_.pressure_scale * domain_sqrt2_[2 * i];
        continue;
      }
      if (col.kind == ColKind::Velocity) {
        const Index f = col.fn;
        // Obstacle boundary rows: velocity trace.
        Index row = 0;
        for (const auto& seg : domain_.boundary)
          for (Index i = 0; i < seg.size(); ++i, row += 2) {
            const Vec2 s = seg.nodes.row(i);
            const double ws = std::sqrt(seg.weights[i]);
            a(row, k) = velocity_->derivative(f, s, 0, 1) * ws;
            a(row + 1, k) = -velocity_->derivative(f, s, 1, 0) * ws;
          }
        // Momentum rows via tensor tables.
        const Matrix& x0 = vel_tables_->x_table(0);
        const Matrix& x1 = vel_tables_->x_table(1);
        const Matrix& x2 = vel_tables_->x_table(2);
        const Matrix& x3 = vel_tables_->x_table(3);
        const Matrix& y0 = vel_tables_->y_table(0);
        const Matrix& y1 = vel_tables_->y_table(1);
        const Matrix& y2 = vel_tables_->y_table(2);
        const Matrix& y3 = vel_tables_->y_table(3);
        for (Index i = 0; i < ni; ++i) {
          const auto [ix, iy] = in_xy[i];
          const double phi_y = x0(ix, f) * y1(iy, f);
          const double phi_x = x1(ix, f) * y0(iy, f);
          const double phi_xxy = x2(ix, f) * y1(iy, f);
          const double phi_yyy = x0(ix, f) * y3(iy, f);
          const double phi_xxx = x3(ix, f) * y0(iy, f);
          const double phi_xyy = x1(ix, f) * y2(iy, f);
          a(base + 2 * i, k) = (ai * phi_y - as * (phi_xxy + phi_yyy)) * domain_sqrt2_[2 * i];
          a(base + 2 * i + 1, k) =
              (-ai * phi_x + as * (phi_xxx + phi_xyy)) * domain_sqrt2_[2 * i];
        }
        // Flow-rate row: flux carried through the station x = flow_rate_x.
        if (opt_.flow_rate) {
          const double flux =
              velocity_->value(f, Vec2(opt_.flow_rate_x, velocity_->y_hi())) -
              velocity_->value(f, Vec2(opt_.flow_rate_x, velocity_->y_lo()));
          a(frow, k) = flux;
        }
        continue;
      }
      // Pressure column: kappa * grad(eta) in the momentum rows.
      const Index f = col.fn;
      const Matrix& px0 = pres_tables_->x_table(0);
      const Matrix& px1 = pres_tables_->x_table(1);
      const Matrix& py0 = pres_tables_->y_table(0);
      const Matrix& py1 = pres_tables_->y_table(1);
      for (Index i = 0; i < ni; ++i) {
        const auto [ix, iy] = in_xy[i];
        a(base + 2 * i, k) = opt_.pressure_scale * px1(ix, f) * py0(iy, f) * domain_sqrt2_[2 * i];
        a(base + 2 * i + 1, k) =
            opt_.pressure_scale * px0(ix, f) * py1(iy, f) * domain_sqrt2_[2 * i];
      }
    }
    return a;
  }

  PhysicalDomain domain_;
  Options opt_;
  std::unique_ptr<ChannelScalarFamily> velocity_, pressure_;
  std::unique_ptr<ChannelGridTables> vel_tables_, pres_tables_;
  std::vector<Column> columns_;
  std::vector<Index> prefix_;
  Vector boundary_sqrt2_, domain_sqrt2_;
  LeastSquaresQR qr_;
  std::optional<Matrix> matrix_;
};

}  // namespace pe
