#pragma once

#include <memory>
#include <optional>

#include "pe/extension.hpp"
#include "pe/fourier.hpp"
#include "pe/geometry.hpp"
#include "pe/lsq.hpp"
#include "pe/types.hpp"

namespace pe {

/// Velocity/pressure coefficients of a Stokes solve plus the extras used by
/// individual formulations (constant null-space velocities, Lagrange forcing).
struct StokesSolution {
  Vector c;        // formulation-specific column coefficients
  Vector d_null;   // constant-velocity null coefficients (forcing extension)
  double alpha = 0.0;
  double special = 0.0;
};

/// Closed-form periodic Stokes mode solve: for unit forcing e_l trig(j.x) the
/// velocity is the Leray-projected diagonal inversion and the pressure takes
/// the partner trig function. pressure_scale multiplies the gradient term in
/// the momentum operator (1 for steady Stokes, the time-step factor for the
/// implicit-explicit stepper).
struct StokesMode {
  // velocity_m = proj(m,l) / lambda * trig(j.x)
  // pressure   = sign * (j_l / |j|^2) / pressure_scale * partner_trig(j.x)
  static double projector(int m, int l, int j1, int j2) {
    const double jj = static_cast<double>(j1) * j1 + static_cast<double>(j2) * j2;
    const double jm = m == 0 ? j1 : j2;
    const double jl = l == 0 ? j1 : j2;
    return (m == l ? 1.0 : 0.0) - jm * jl / jj;
  }
};

/// Forcing-extension Stokes solver on the 2D torus. The unknowns are the
/// coefficients of the extended forcing in the basis {e_l phi_j}; boundary
/// columns are traces of the closed-form periodic mode solves, interior rows
/// are the forcing samples, and a divergence-free constant null space is
/// carried when the operator annihilates constants. Vector components are
/// interleaved per node. Columns are ordered [null | (comp0,comp1) per basis
/// function, graded], so one factorization serves a whole refinement sweep.
class TorusStokesSystem {
 public:
  TorusStokesSystem(std::shared_ptr<const FourierFamily> family, PhysicalDomain domain,
                    ScalarOperator op, double pressure_scale = 1.0, LsqOptions lsq_opt = {},
                    bool keep_matrix = false)
      : family_(std::move(family)),
        domain_(std::move(domain)),
        op_(op),
        kappa_(pressure_scale),
        null_dim_(op.eigenvalue(0.0) == 0.0 ? 2 : 0) {
    build_weights();
    Matrix a = assemble();
    if (keep_matrix) matrix_ = a;
    qr_.compute(std::move(a), lsq_opt);
  }

  const FourierFamily& family() const { return *family_; }
  const PhysicalDomain& domain() const { return domain_; }
  int null_dim() const { return null_dim_; }
  Index rows() const { return qr_.rows(); }
  Index cols() const { return qr_.cols(); }
  Index prefix(int ne) const { return null_dim_ + 2 * family_->prefix_size(ne); }
  const std::optional<Matrix>& retained_matrix() const { return matrix_; }

  /// g: boundary velocity data, 2 per node (node-major); f: interior forcing,
  /// 2 per node.
  StokesSolution solve(const Vector& g, const Vector& f, int ne) const {
    const Index nb2 = 2 * domain_.boundary_count(), ni2 = 2 * domain_.interior_count();
    if (g.size() != nb2) throw std::invalid_argument("solve: boundary data size mismatch");
    if (f.size() != ni2) throw std::invalid_argument("solve: forcing size mismatch");
    Vector rhs(nb2 + ni2 + null_dim_);
    rhs.head(nb2) = g.cwiseProduct(boundary_sqrt2_);
    rhs.segment(nb2, ni2) = f.cwiseProduct(domain_sqrt2_);
    rhs.tail(null_dim_).setZero();
    Vector z = qr_.solve_prefix(rhs, prefix(ne));
    StokesSolution sol;
    sol.d_null = z.head(null_dim_);
    sol.c = z.tail(z.size() - null_dim_);
    return sol;
  }

  /// Scalar-basis coefficients of velocity component m (inverted modes).
  Vector velocity_component_coeffs(const StokesSolution& sol, int m) const {
    const Index nf = sol.c.size() / 2;
    Vector out = Vector::Zero(nf);
    for (Index f = 0; f < nf; ++f) {
      const auto& fn = family_->fn(f);
      const double lambda = op_.eigenvalue(family_->freq_sq(f));
      if (fn.trig == FourierFamily::Const) {
        if (lambda != 0.0) out[f] = sol.c[2 * f + m] / lambda;
        continue;
      }
      for (int l = 0; l < 2; ++l)
        out[f] += StokesMode::projector(m, l, fn.j1, fn.j2) / lambda * sol.c[2 * f + l];
    }
    return out;
  }

  /// Scalar-basis coefficients of the pressure (partner trig per mode).
  Vector pressure_coeffs(const StokesSolution& sol) const {
    const Index nf = sol.c.size() / 2;
    Vector out = Vector::Zero(nf);
    for (Index f = 0; f < nf; ++f) {
      const auto& fn = family_->fn(f);
      if (fn.trig == FourierFamily::Const) continue;
      const double jj = family_->freq_sq(f);
      const Index partner = fn.trig == FourierFamily::Cos ? f + 1 : f - 1;
      const double sign = fn.trig == FourierFamily::Cos ? 1.0 : -1.0;
      for (int l = 0; l < 2; ++l) {
        const double jl = l == 0 ? fn.j1 : fn.j2;
        out[partner] += sign * jl / jj / kappa_ * sol.c[2 * f + l];
      }
    }
    return out;
  }

  /// Nodal velocity component on the full grid, with optional derivatives.
  Matrix velocity_on_grid(const StokesSolution& sol, int m, int px = 0, int py = 0) const {
    ensure_evaluator();
    Matrix vals = evaluator_->evaluate(velocity_component_coeffs(sol, m), px, py);
    if (px == 0 && py == 0 && null_dim_ == 2 && sol.d_null.size() == 2)
      vals.array() += sol.d_null[m] / two_pi;  // Psi_m = e_m / (2 pi)
    return vals;
  }

  Matrix pressure_on_grid(const StokesSolution& sol, int px = 0, int py = 0) const {
    ensure_evaluator();
    return evaluator_->evaluate(pressure_coeffs(sol), px, py);
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

  /// Velocity at the boundary nodes, 2 per node, node-major.
  Vector boundary_velocity(const StokesSolution& sol) const {
    Vector out(2 * domain_.boundary_count());
    Vector cc[2] = {velocity_component_coeffs(sol, 0), velocity_component_coeffs(sol, 1)};
    Index row = 0;
    for (const auto& seg : domain_.boundary)
      for (Index i = 0; i < seg.size(); ++i) {
        const Vec2 s = seg.nodes.row(i);
        for (int m = 0; m < 2; ++m, ++row) {
          double v = null_dim_ == 2 && sol.d_null.size() == 2 ? sol.d_null[m] / two_pi : 0.0;
          for (Index f = 0; f < cc[m].size(); ++f)
            if (cc[m][f] != 0.0) v += cc[m][f] * family_->value(f, s);
          out[row] = v;
        }
      }
    return out;
  }

  /// Spectral divergence of the velocity at interior nodes (diagnostic).
  Vector interior_divergence(const StokesSolution& sol) const {
    Matrix div = velocity_on_grid(sol, 0, 1, 0) + velocity_on_grid(sol, 1, 0, 1);
    return gather_interior(div);
  }

  /// Interior node weights (for mean normalization and norms).
  Vector interior_weights() const {
    Vector w(domain_.interior_count());
    for (Index i = 0; i < w.size(); ++i) w[i] = domain_.grid->node_weight(domain_.interior[i]);
    return w;
  }

 private:
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
    const Index nf = family_->size();
    const Index rows = 2 * nb + 2 * ni + null_dim_, cols = null_dim_ + 2 * nf;
    if (rows < cols)
      throw std::invalid_argument("stokes system is underdetermined; reduce the cutoff");
    Matrix a = Matrix::Zero(rows, cols);

    // Null-member trace columns: constant velocities e_k / (2 pi).
    for (int k = 0; k < null_dim_; ++k) {
      Index row = 0;
      for (const auto& seg : domain_.boundary)
        for (Index i = 0; i < seg.size(); ++i) {
          a(row + k, k) = std::sqrt(seg.weights[i]) / two_pi;
          row += 2;
        }
    }

    // Boundary rows: traces of the mode solves.
    Index row = 0;
    for (const auto& seg : domain_.boundary) {
      for (Index i = 0; i < seg.size(); ++i, row += 2) {
        const Vec2 s = seg.nodes.row(i);
        const double ws = std::sqrt(seg.weights[i]);
        for (Index f = 0; f < nf; ++f) {
          const auto& fn = family_->fn(f);
          const double lambda = op_.eigenvalue(family_->freq_sq(f));
          if (fn.trig == FourierFamily::Const) {
            if (lambda != 0.0)
              for (int l = 0; l < 2; ++l) a(row + l, null_dim_ + 2 * f + l) = ws / lambda;
            continue;
          }
          const double phi = family_->value(f, s);
          for (int m = 0; m < 2; ++m)
            for (int l = 0; l < 2; ++l)
              a(row + m, null_dim_ + 2 * f + l) =
                  StokesMode::projector(m, l, fn.j1, fn.j2) / lambda * phi * ws;
        }
      }
    }

    // Interior rows: forcing samples e_l phi_f, via per-axis trig tables.
    const int g = family_->max_grade();
    const Vector& xs = domain_.grid->axis_nodes[0];
    const Vector& ys = domain_.grid->axis_nodes[1];
    Matrix cx(xs.size(), g + 1), sx(xs.size(), g + 1), cy(ys.size(), g + 1),
        sy(ys.size(), g + 1);
    for (Index i = 0; i < xs.size(); ++i)
      for (int j = 0; j <= g; ++j) {
        cx(i, j) = std::cos(j * xs[i]);
        sx(i, j) = std::sin(j * xs[i]);
      }
    for (Index i = 0; i < ys.size(); ++i)
      for (int j = 0; j <= g; ++j) {
        cy(i, j) = std::cos(j * ys[i]);
        sy(i, j) = std::sin(j * ys[i]);
      }
    const Index ny = domain_.grid->axis_size(1);
    const Index base = 2 * nb;
    for (Index f = 0; f < nf; ++f) {
      const auto& fn = family_->fn(f);
      const int aj1 = std::abs(fn.j1), aj2 = std::abs(fn.j2);
      const double s1 = fn.j1 < 0 ? -1.0 : 1.0, s2 = fn.j2 < 0 ? -1.0 : 1.0;
      for (Index i = 0; i < ni; ++i) {
        const Index ix = domain_.interior[i] / ny, iy = domain_.interior[i] % ny;
        double v;
        if (fn.trig == FourierFamily::Const) {
          v = 1.0;
        } else {
          const double c = cx(ix, aj1) * cy(iy, aj2) - s1 * s2 * sx(ix, aj1) * sy(iy, aj2);
          const double s = s1 * sx(ix, aj1) * cy(iy, aj2) + s2 * cx(ix, aj1) * sy(iy, aj2);
          v = fn.trig == FourierFamily::Cos ? c : s;
        }
        for (int l = 0; l < 2; ++l)
          a(base + 2 * i + l, null_dim_ + 2 * f + l) = v * domain_sqrt2_[2 * i];
      }
    }

    // Null-space constraint rows: <Psi_k, e_l phi_f> = 2 pi for the constant mode.
    for (int k = 0; k < null_dim_; ++k)
      a(2 * nb + 2 * ni + k, null_dim_ + 2 * 0 + k) = two_pi;
    return a;
  }

  void ensure_evaluator() const {
    if (!evaluator_)
      evaluator_ = std::make_unique<TorusGridEvaluator>(*family_, domain_.grid->axis_nodes[0],
                                                        domain_.grid->axis_nodes[1]);
  }

  std::shared_ptr<const FourierFamily> family_;
  PhysicalDomain domain_;
  ScalarOperator op_;
  double kappa_;
  int null_dim_;
  Vector boundary_sqrt2_, domain_sqrt2_;
  LeastSquaresQR qr_;
  std::optional<Matrix> matrix_;
  mutable std::unique_ptr<TorusGridEvaluator> evaluator_;
};

/// Subtracts the interior quadrature mean from a pressure field sampled at
/// the interior nodes; errors against references are computed modulo this.
inline Vector pressure_normalize(const Vector& pressure, const Vector& weights) {
  const double mean = pressure.dot(weights) / weights.sum();
  return pressure.array() - mean;
}

}  // namespace pe
