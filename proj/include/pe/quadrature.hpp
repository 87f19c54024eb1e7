#pragma once

#include <cmath>
#include <vector>

#include "pe/types.hpp"

extern "C" {
void dstev_(const char* jobz, const int* n, double* d, double* e, double* z,
            const int* ldz, double* work, int* info);
}

namespace pe {

/// A one-dimensional quadrature rule: nodes plus strictly positive weights.
struct QuadratureRule {
  Vector nodes;
  Vector weights;
};

/// Gauss-Legendre rule on [-1,1] via the Golub-Welsch eigenvalue method
/// (symmetric tridiagonal Jacobi matrix, LAPACK dstev).
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");
  std::vector<double> diag(n, 0.0), sub(std::max(n - 1, 1));
  for (int k = 1; k < n; ++k) sub[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  Matrix z(n, n);
  std::vector<double> work(std::max(1, 2 * n - 2));
  int info = 0;
  const char jobz = 'V';
  dstev_(&jobz, &n, diag.data(), sub.data(), z.data(), &n, work.data(), &info);
  if (info != 0) throw SolverError("gauss_legendre: dstev failed");
  QuadratureRule rule;
  rule.nodes = Eigen::Map<Vector>(diag.data(), n);
  rule.weights.resize(n);
  for (int k = 0; k < n; ++k) rule.weights[k] = 2.0 * z(0, k) * z(0, k);
  return rule;
}

/// Gauss-Legendre rule mapped to [a,b].
inline QuadratureRule gauss_legendre(int n, double a, double b) {
  if (!(a < b)) throw std::invalid_argument("gauss_legendre: a < b required");
  QuadratureRule rule = gauss_legendre(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  rule.nodes = (rule.nodes.array() * half + mid).matrix();
  rule.weights *= half;
  return rule;
}

/// Adaptive Simpson quadrature; used for arc-length computations.
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol, int depth = 48) {
  auto simpson = [&f](double lo, double hi) {
    return (hi - lo) / 6.0 * (f(lo) + 4.0 * f(0.5 * (lo + hi)) + f(hi));
  };
  struct Rec {
    const F& f;
    double tol_floor;
    double run(double lo, double hi, double whole, double tol, int depth) const {
      const double mid = 0.5 * (lo + hi);
      const double left = (mid - lo) / 6.0 * (f(lo) + 4.0 * f(0.5 * (lo + mid)) + f(mid));
      const double right = (hi - mid) / 6.0 * (f(mid) + 4.0 * f(0.5 * (mid + hi)) + f(hi));
      if (depth <= 0 || std::abs(left + right - whole) < 15.0 * std::max(tol, tol_floor))
        return left + right + (left + right - whole) / 15.0;
      return run(lo, mid, left, 0.5 * tol, depth - 1) +
             run(mid, hi, right, 0.5 * tol, depth - 1);
    }
  };
  Rec rec{f, 1e-300};
  return rec.run(a, b, simpson(a, b), tol, depth);
}

}  // namespace pe
