#pragma once

#include <functional>
#include <memory>

#include "pe/extension.hpp"
#include "pe/types.hpp"

namespace pe {

/// L-infinity and weighted L2 error over the interior nodes.
struct ErrorNorms {
  double linf = 0.0;
  double l2 = 0.0;
};

inline ErrorNorms error_norms(const Vector& values, const Vector& reference,
                              const Vector& weights) {
  ErrorNorms e;
  double sum = 0.0;
  for (Index i = 0; i < values.size(); ++i) {
    const double d = std::abs(values[i] - reference[i]);
    e.linf = std::max(e.linf, d);
    sum += weights[i] * d * d;
  }
  e.l2 = std::sqrt(sum);
  return e;
}

/// A scalar elliptic problem on an embedded domain: Poisson (either sign) or
/// Helmholtz operator, nodal forcing, and per-segment boundary data.
struct EllipticProblem {
  PhysicalDomain domain;
  ScalarOperator op;
  std::function<double(const Vec2&)> forcing;
  // Boundary data per segment: Dirichlet values or normal derivatives.
  std::function<double(const Vec2&, const Vec2& normal, BcKind)> boundary_data;
};

struct EllipticSolution {
  FieldCoefficients coeffs;
  std::shared_ptr<const ScalarExtensionSystem> system;

  double at(const Vec2& x) const { return system->solution_at(coeffs, x); }
  Vector on_interior() const { return system->solution_on_interior(coeffs); }
};

inline Vector sample_interior(const PhysicalDomain& domain,
                              const std::function<double(const Vec2&)>& f) {
  Vector out(domain.interior_count());
  for (Index i = 0; i < out.size(); ++i) {
    const Index flat = domain.interior[i];
    const Vec2 p = domain.grid->dims() == 1 ? Vec2(domain.grid->axis_nodes[0][flat], 0.0)
                                            : domain.grid->node2(flat);
    out[i] = f(p);
  }
  return out;
}

inline Vector sample_boundary(const PhysicalDomain& domain,
                              const std::function<double(const Vec2&, const Vec2&, BcKind)>& g) {
  Vector out(domain.boundary_count());
  Index row = 0;
  for (const auto& seg : domain.boundary)
    for (Index i = 0; i < seg.size(); ++i, ++row)
      out[row] = g(seg.nodes.row(i), seg.normals.row(i), seg.kind);
  return out;
}

/// Builds the extension system for an elliptic problem at assembly cutoff
/// ne_max; solve_elliptic() then solves at any cutoff <= ne_max.
inline std::shared_ptr<ScalarExtensionSystem> build_elliptic_system(
    const EllipticProblem& problem, int ne_max, Formulation form,
    LsqOptions lsq_opt = {}) {
  const int dims = problem.domain.grid->dims();
  auto family = std::make_shared<FourierFamily>(dims, ne_max);
  const bool invertible = problem.op.eigenvalue(0.0) != 0.0;
  NullSpaceSpec null = (form == Formulation::ForcingExtension && !invertible)
                           ? NullSpaceSpec::constants(dims)
                           : NullSpaceSpec::none();
  return std::make_shared<ScalarExtensionSystem>(family, problem.domain, problem.op, form,
                                                 null, lsq_opt);
}

inline EllipticSolution solve_elliptic(const EllipticProblem& problem,
                                       std::shared_ptr<const ScalarExtensionSystem> system,
                                       int ne) {
  EllipticSolution sol;
  sol.system = std::move(system);
  const Vector g = sample_boundary(problem.domain, problem.boundary_data);
  const Vector f = sample_interior(problem.domain, problem.forcing);
  sol.coeffs = sol.system->solve(g, f, ne);
  return sol;
}

/// One-shot Poisson solve (operator must be Poisson-type).
inline EllipticSolution solve_poisson(const EllipticProblem& problem, int ne, int /*n*/,
                                      Formulation form = Formulation::ForcingExtension) {
  return solve_elliptic(problem, build_elliptic_system(problem, ne, form), ne);
}

/// One-shot Helmholtz solve (sigma > 0, invertible, no null space).
inline EllipticSolution solve_helmholtz(const EllipticProblem& problem, int ne, int /*n*/) {
  if (!(problem.op.kind == ScalarOperator::Kind::Helmholtz && problem.op.sigma > 0))
    throw std::invalid_argument("solve_helmholtz: Helmholtz operator with sigma > 0 required");
  return solve_elliptic(problem, build_elliptic_system(problem, ne, Formulation::ForcingExtension),
                        ne);
}

/// Errors of a solution against a reference function, over the interior nodes.
inline ErrorNorms compute_error_norms(const EllipticSolution& sol,
                                      const std::function<double(const Vec2&)>& reference) {
  const auto& domain = sol.system->domain();
  Vector ref = sample_interior(domain, reference);
  Vector vals = sol.on_interior();
  Vector w(domain.interior_count());
  for (Index i = 0; i < w.size(); ++i) w[i] = domain.grid->node_weight(domain.interior[i]);
  return error_norms(vals, ref, w);
}

/// Errors between two solutions on the same grid (successive refinement).
inline ErrorNorms compute_successive_norms(const EllipticSolution& coarse,
                                           const EllipticSolution& fine) {
  const auto& domain = coarse.system->domain();
  Vector w(domain.interior_count());
  for (Index i = 0; i < w.size(); ++i) w[i] = domain.grid->node_weight(domain.interior[i]);
  return error_norms(coarse.on_interior(), fine.on_interior(), w);
}

}  // namespace pe
