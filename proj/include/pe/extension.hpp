#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "pe/fourier.hpp"
#include "pe/geometry.hpp"
#include "pe/lsq.hpp"
#include "pe/pext.hpp"
#include "pe/types.hpp"

namespace pe {

/// Forcing extension (boundary columns are traces of operator-inverted basis
/// functions) versus solution extension (interior rows carry operator images).
enum class Formulation { ForcingExtension, SolutionExtension };

/// Coefficients of an extended field: basis coefficients c, null-space
/// coefficients d, and named auxiliary scalars (e.g. the Lagrange forcing).
struct FieldCoefficients {
  Vector c;
  Vector d;
  double alpha = 0.0;
  double special = 0.0;  // coefficient of the special channel element
};

/// Square roots of the quadrature weights entering each block row.
struct InnerProductSpec {
  Vector boundary_sqrt;  // sqrt(arc weight) per boundary node
  Vector domain_sqrt;    // sqrt(node weight) per interior node
  Vector full_domain;    // node weight per grid node (R-block quadrature)
};

/// Orthonormal basis of the operator's null space on the computational
/// domain. Only constant members arise here; they are stored with their
/// normalization so traces and reconstructions share one definition.
struct NullSpaceSpec {
  int dim = 0;
  double member_value = 0.0;  // value of each (constant) member on Pi

  static NullSpaceSpec none() { return {0, 0.0}; }
  static NullSpaceSpec constants(int domain_dims) {
    NullSpaceSpec n;
    n.dim = 1;
    n.member_value = domain_dims == 1 ? 1.0 / std::sqrt(two_pi) : 1.0 / two_pi;
    return n;
  }
};

/// The assembled least-squares operator for scalar problems on the torus:
/// stacked boundary rows, interior rows, and null-space constraint rows,
/// factorized once and reused for every right-hand side. Columns are ordered
/// [null-space | basis graded by cutoff], so solve() can restrict to any
/// cutoff Ne below the assembly cutoff using the same factorization.
class ScalarExtensionSystem {
 public:
  ScalarExtensionSystem(std::shared_ptr<const FourierFamily> family, PhysicalDomain domain,
                        ScalarOperator op, Formulation form, NullSpaceSpec null_space,
                        LsqOptions lsq_opt = {}, bool keep_matrix = false)
      : family_(std::move(family)),
        domain_(std::move(domain)),
        op_(op),
        form_(form),
        null_(null_space) {
    build_weights();
    Matrix a = assemble();
    if (keep_matrix) matrix_ = a;
    qr_.compute(std::move(a), lsq_opt);
  }

  const FourierFamily& family() const { return *family_; }
  const PhysicalDomain& domain() const { return domain_; }
  ScalarOperator op() const { return op_; }
  Formulation formulation() const { return form_; }
  int null_dim() const { return null_.dim; }
  const InnerProductSpec& weights() const { return weights_; }
  Index rows() const { return qr_.rows(); }
  Index cols() const { return qr_.cols(); }
  Index prefix(int ne) const { return null_.dim + family_->prefix_size(ne); }
  const std::optional<Matrix>& retained_matrix() const { return matrix_; }

  /// Solves the least-squares problem for boundary data g (values on
  /// Dirichlet segments, normal derivatives on Neumann segments, concatenated
  /// in segment order) and interior forcing f, restricted to cutoff ne.
  FieldCoefficients solve(const Vector& g, const Vector& f, int ne) const {
    Vector rhs = assemble_rhs(g, f);
    Vector z = qr_.solve_prefix(rhs, prefix(ne));
    FieldCoefficients out;
    out.d = z.head(null_.dim);
    out.c = z.tail(z.size() - null_.dim);
    return out;
  }

  Vector assemble_rhs(const Vector& g, const Vector& f) const {
    const Index nb = domain_.boundary_count(), ni = domain_.interior_count();
    if (g.size() != nb) throw std::invalid_argument("solve: boundary data size mismatch");
    if (f.size() != ni) throw std::invalid_argument("solve: forcing size mismatch");
    Vector rhs(nb + ni + null_.dim);
    rhs.head(nb) = g.cwiseProduct(weights_.boundary_sqrt);
    rhs.segment(nb, ni) = f.cwiseProduct(weights_.domain_sqrt);
    rhs.tail(null_.dim).setZero();
    return rhs;
  }

  /// Residual norm ||A z - r||_2 reconstructed from evaluations, so it does
  /// not depend on the matrix being retained.
  double residual_norm(const FieldCoefficients& coeffs, const Vector& g, const Vector& f) const {
    Vector bres = boundary_values(coeffs, /*use_bc_kind=*/true) - g;
    bres = bres.cwiseProduct(weights_.boundary_sqrt);
    Vector ires = forcing_residual_on_interior(coeffs, f).cwiseProduct(weights_.domain_sqrt);
    double r2 = bres.squaredNorm() + ires.squaredNorm();
    if (null_.dim > 0) {
      // Null-space penalty row: <psi, f_e> over the full domain.
      double dot = null_.member_value * family_->full_domain_integral(0) *
                   (coeffs.c.size() > 0 ? coeffs.c[0] : 0.0);
      r2 += dot * dot;
    }
    return std::sqrt(r2);
  }

  /// Discrete inner product of the extended forcing with each null member.
  double null_space_pairing(const FieldCoefficients& coeffs) const {
    if (null_.dim == 0) return 0.0;
    return null_.member_value * family_->full_domain_integral(0) *
           (coeffs.c.size() > 0 ? coeffs.c[0] : 0.0);
  }

  /// Solution value at an arbitrary point of the computational domain.
  double solution_at(const FieldCoefficients& coeffs, const Vec2& x) const {
    double u = 0.0;
    for (Index f = 0; f < coeffs.c.size(); ++f) {
      const double m = inversion_multiplier(f);
      if (m != 0.0) u += coeffs.c[f] * m * family_->value(f, x);
    }
    if (null_.dim > 0 && coeffs.d.size() > 0) u += coeffs.d[0] * null_.member_value;
    return u;
  }

  /// Extended forcing at an arbitrary point (forcing-extension form).
  double forcing_at(const FieldCoefficients& coeffs, const Vec2& x) const {
    double fe = 0.0;
    for (Index f = 0; f < coeffs.c.size(); ++f) fe += coeffs.c[f] * family_->value(f, x);
    return fe;
  }

  /// Solution sampled on the full tensor grid (Nx x Ny; Ny = 1 in 1D).
  Matrix solution_on_grid(const FieldCoefficients& coeffs) const {
    ensure_evaluator();
    Vector cu = coeffs.c;
    for (Index f = 0; f < cu.size(); ++f) cu[f] *= inversion_multiplier(f);
    Matrix vals = evaluator_->evaluate(cu);
    if (null_.dim > 0 && coeffs.d.size() > 0)
      vals.array() += coeffs.d[0] * null_.member_value;
    return vals;
  }

  /// Solution gathered at the interior nodes, in interior-list order.
  Vector solution_on_interior(const FieldCoefficients& coeffs) const {
    return gather_interior(solution_on_grid(coeffs));
  }

  Vector gather_interior(const Matrix& grid_values) const {
    const auto& interior = domain_.interior;
    Vector out(static_cast<Index>(interior.size()));
    const Index ny = family_->dims() == 2 ? domain_.grid->axis_size(1) : 1;
    for (std::size_t i = 0; i < interior.size(); ++i)
      out[static_cast<Index>(i)] = grid_values(interior[i] / ny, interior[i] % ny);
    return out;
  }

  /// Extended forcing gathered at the interior nodes minus the given data.
  Vector forcing_residual_on_interior(const FieldCoefficients& coeffs, const Vector& f) const {
    if (form_ == Formulation::ForcingExtension) {
      ensure_evaluator();
      return gather_interior(evaluator_->evaluate(coeffs.c)) - f;
    }
    // Solution extension: interior rows carry L u_e.
    ensure_evaluator();
    Vector cl = coeffs.c;
    for (Index fidx = 0; fidx < cl.size(); ++fidx)
      cl[fidx] *= op_.eigenvalue(family_->freq_sq(fidx));
    return gather_interior(evaluator_->evaluate(cl)) - f;
  }

  /// Solution traces at all boundary nodes (values, or normal derivatives on
  /// Neumann segments when use_bc_kind is set), in segment order.
  Vector boundary_values(const FieldCoefficients& coeffs, bool use_bc_kind = false) const {
    Vector out(domain_.boundary_count());
    Index row = 0;
    for (const auto& seg : domain_.boundary) {
      const bool neumann = use_bc_kind && seg.kind == BcKind::Neumann;
      for (Index i = 0; i < seg.size(); ++i, ++row) {
        const Vec2 s = seg.nodes.row(i);
        double v = 0.0;
        for (Index f = 0; f < coeffs.c.size(); ++f) {
          const double m = inversion_multiplier(f);
          if (m == 0.0) continue;
          v += coeffs.c[f] * m *
               (neumann ? family_->gradient(f, s).dot(Vec2(seg.normals.row(i))) :
                          family_->value(f, s));
        }
        if (!neumann && null_.dim > 0 && coeffs.d.size() > 0)
          v += coeffs.d[0] * null_.member_value;
        out[row] = v;
      }
    }
    return out;
  }

  /// Dumps the retained system matrix in the binary container format.
  void dump_matrix(const std::string& path) const {
    if (!matrix_) throw SolverError("dump_matrix: system was not built with keep_matrix");
    write_pext(path, *matrix_);
  }

 private:
  // Multiplier turning a forcing coefficient into a solution coefficient:
  // 1/lambda for the forcing extension (0 on the null mode), 1 for the
  // solution extension.
  double inversion_multiplier(Index f) const {
    if (form_ == Formulation::SolutionExtension) return 1.0;
    const double lambda = op_.eigenvalue(family_->freq_sq(f));
    return lambda == 0.0 ? 0.0 : 1.0 / lambda;
  }

  void build_weights() {
    const Index nb = domain_.boundary_count(), ni = domain_.interior_count();
    weights_.boundary_sqrt.resize(nb);
    Index row = 0;
    for (const auto& seg : domain_.boundary)
      for (Index i = 0; i < seg.size(); ++i) weights_.boundary_sqrt[row++] = std::sqrt(seg.weights[i]);
    weights_.domain_sqrt.resize(ni);
    for (Index i = 0; i < ni; ++i)
      weights_.domain_sqrt[i] = std::sqrt(domain_.grid->node_weight(domain_.interior[i]));
    weights_.full_domain.resize(domain_.grid->node_count());
    for (Index k = 0; k < weights_.full_domain.size(); ++k)
      weights_.full_domain[k] = domain_.grid->node_weight(k);
  }

  Matrix assemble() const {
    const Index nb = domain_.boundary_count(), ni = domain_.interior_count();
    const Index nf = family_->size();
    const int k = null_.dim;
    if (nb + ni + k < nf + k)
      throw std::invalid_argument("extension system is underdetermined; reduce the cutoff");
    if (form_ == Formulation::ForcingExtension && k == 0)
      for (Index f = 0; f < nf; ++f)
        if (op_.eigenvalue(family_->freq_sq(f)) == 0.0)
          throw std::invalid_argument(
              "operator is not invertible on the basis and no null space was provided");

    Matrix a = Matrix::Zero(nb + ni + k, k + nf);

    // Boundary rows.
    Index row = 0;
    for (const auto& seg : domain_.boundary) {
      for (Index i = 0; i < seg.size(); ++i, ++row) {
        const Vec2 s = seg.nodes.row(i);
        const double ws = weights_.boundary_sqrt[row];
        const bool neumann = seg.kind == BcKind::Neumann;
        for (Index f = 0; f < nf; ++f) {
          double m = form_ == Formulation::ForcingExtension ? inversion_multiplier(f) : 1.0;
          if (m == 0.0) continue;
          const double v = neumann ? family_->gradient(f, s).dot(Vec2(seg.normals.row(i)))
                                   : family_->value(f, s);
          a(row, k + f) = m * v * ws;
        }
        if (k > 0 && !neumann) a(row, 0) = null_.member_value * ws;
      }
    }

    // Interior rows via per-axis trig tables.
    assemble_interior_block(a.block(nb, k, ni, nf));

    // Null-space constraint rows: <psi, phi_j> over the full domain.
    for (int m = 0; m < k; ++m)
      for (Index f = 0; f < nf; ++f)
        a(nb + ni + m, k + f) = null_.member_value * family_->full_domain_integral(f);
    return a;
  }

  template <typename Block>
  void assemble_interior_block(Block block) const {
    const Index nf = family_->size();
    const auto& interior = domain_.interior;
    const int g = family_->max_grade();
    const bool two_d = family_->dims() == 2;
    const Vector& xs = domain_.grid->axis_nodes[0];
    const Index ny = two_d ? domain_.grid->axis_size(1) : 1;

    // cos/sin tables per axis for frequencies 0..g.
    auto tables = [&](const Vector& nodes) {
      std::pair<Matrix, Matrix> t{Matrix(nodes.size(), g + 1), Matrix(nodes.size(), g + 1)};
      for (Index i = 0; i < nodes.size(); ++i)
        for (int j = 0; j <= g; ++j) {
          t.first(i, j) = std::cos(j * nodes[i]);
          t.second(i, j) = std::sin(j * nodes[i]);
        }
      return t;
    };
    auto [cx, sx] = tables(xs);
    Matrix cy, sy;
    if (two_d) std::tie(cy, sy) = tables(domain_.grid->axis_nodes[1]);

    for (Index f = 0; f < nf; ++f) {
      const auto& fn = family_->fn(f);
      const double scale =
          form_ == Formulation::SolutionExtension ? op_.eigenvalue(family_->freq_sq(f)) : 1.0;
      const int aj1 = std::abs(fn.j1), aj2 = std::abs(fn.j2);
      const double s1 = fn.j1 < 0 ? -1.0 : 1.0, s2 = fn.j2 < 0 ? -1.0 : 1.0;
      for (std::size_t i = 0; i < interior.size(); ++i) {
        const Index ix = two_d ? interior[i] / ny : interior[i];
        const Index iy = two_d ? interior[i] % ny : 0;
        double v;
        if (fn.trig == FourierFamily::Const) {
          v = 1.0;
        } else if (!two_d) {
          v = fn.trig == FourierFamily::Cos ? cx(ix, aj1) : s1 * sx(ix, aj1);
        } else {
          // cos/sin(j1 x + j2 y) by the angle-addition formula.
          const double c = cx(ix, aj1) * cy(iy, aj2) - s1 * s2 * sx(ix, aj1) * sy(iy, aj2);
          const double s = s1 * sx(ix, aj1) * cy(iy, aj2) + s2 * cx(ix, aj1) * sy(iy, aj2);
          v = fn.trig == FourierFamily::Cos ? c : s;
        }
        block(static_cast<Index>(i), f) = scale * v * weights_.domain_sqrt[static_cast<Index>(i)];
      }
    }
  }

  void ensure_evaluator() const {
    if (evaluator_) return;
    const Vector& xs = domain_.grid->axis_nodes[0];
    Vector ys = family_->dims() == 2 ? domain_.grid->axis_nodes[1] : Vector();
    evaluator_ = std::make_unique<TorusGridEvaluator>(*family_, xs, ys);
  }

  std::shared_ptr<const FourierFamily> family_;
  PhysicalDomain domain_;
  ScalarOperator op_;
  Formulation form_;
  NullSpaceSpec null_;
  InnerProductSpec weights_;
  LeastSquaresQR qr_;
  std::optional<Matrix> matrix_;
  mutable std::unique_ptr<TorusGridEvaluator> evaluator_;
};

}  // namespace pe
