#pragma once

#include <atomic>
#include <utility>

#include "pe/types.hpp"

extern "C" {
void dgeqrf_(const int* m, const int* n, double* a, const int* lda, double* tau,
             double* work, const int* lwork, int* info);
void dormqr_(const char* side, const char* trans, const int* m, const int* n,
             const int* k, const double* a, const int* lda, const double* tau,
             double* c, const int* ldc, double* work, const int* lwork, int* info);
void dtrtrs_(const char* uplo, const char* trans, const char* diag, const int* n,
             const int* nrhs, const double* a, const int* lda, double* b,
             const int* ldb, int* info);
}

namespace pe {

namespace detail {
inline std::atomic<long>& qr_factorization_counter() {
  static std::atomic<long> count{0};
  return count;
}
}  // namespace detail

/// Number of QR factorizations performed so far in this process. Time-stepping
/// tests use this to assert that step loops reuse a single factorization.
inline long qr_factorization_count() { return detail::qr_factorization_counter().load(); }

struct LsqOptions {
  /// Relative threshold on the triangular factor's diagonal; entries below
  /// rank_tolerance * max|R_jj| raise RankDeficiencyError. Zero disables the
  /// check (used by sweeps that deliberately run into the round-off plateau).
  double rank_tolerance = 1e-12;
};

/// Householder-QR least-squares solver for dense overdetermined systems.
///
/// The factorization is computed once and may be reused for many right-hand
/// sides. When the column order is graded (coarse basis functions first),
/// solve_prefix() solves the least-squares problem restricted to the leading
/// k columns using the same factorization, which makes refinement sweeps
/// essentially free beyond the initial factorization.
class LeastSquaresQR {
 public:
  LeastSquaresQR() = default;

  /// Factorizes A in place (A is consumed).
  explicit LeastSquaresQR(Matrix a, const LsqOptions& opt = {}) { compute(std::move(a), opt); }

  void compute(Matrix a, const LsqOptions& opt = {}) {
    rows_ = a.rows();
    cols_ = a.cols();
    if (rows_ < cols_)
      throw std::invalid_argument("LeastSquaresQR: system must be overdetermined (rows >= cols)");
    qr_ = std::move(a);
    tau_.resize(cols_);
    const int m = static_cast<int>(rows_), n = static_cast<int>(cols_);
    int info = 0, lwork = -1;
    double wq = 0;
    dgeqrf_(&m, &n, qr_.data(), &m, tau_.data(), &wq, &lwork, &info);
    lwork = static_cast<int>(wq);
    Vector work(lwork);
    dgeqrf_(&m, &n, qr_.data(), &m, tau_.data(), work.data(), &lwork, &info);
    if (info != 0) throw SolverError("LeastSquaresQR: dgeqrf failed");
    detail::qr_factorization_counter()++;
    if (opt.rank_tolerance > 0.0) check_rank(cols_, opt.rank_tolerance);
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  /// Magnitude of the k-th diagonal entry of R.
  double r_diagonal(Index k) const { return std::abs(qr_(k, k)); }

  /// Least-squares solution over all columns.
  Vector solve(const Vector& rhs) const { return solve_prefix(rhs, cols_); }

  /// Least-squares solution restricted to the leading `k` columns.
  Vector solve_prefix(const Vector& rhs, Index k) const {
    if (rhs.size() != rows_) throw std::invalid_argument("LeastSquaresQR: rhs size mismatch");
    if (k < 1 || k > cols_) throw std::invalid_argument("LeastSquaresQR: bad column prefix");
    Vector y = rhs;
    const int m = static_cast<int>(rows_), one = 1, kk = static_cast<int>(k);
    int info = 0, lwork = -1;
    double wq = 0;
    const char side = 'L', trans = 'T';
    dormqr_(&side, &trans, &m, &one, &kk, qr_.data(), &m, tau_.data(), y.data(), &m,
            &wq, &lwork, &info);
    lwork = static_cast<int>(wq);
    Vector work(lwork);
    dormqr_(&side, &trans, &m, &one, &kk, qr_.data(), &m, tau_.data(), y.data(), &m,
            work.data(), &lwork, &info);
    if (info != 0) throw SolverError("LeastSquaresQR: dormqr failed");
    const char uplo = 'U', ntrans = 'N', diag = 'N';
    dtrtrs_(&uplo, &ntrans, &diag, &kk, &one, qr_.data(), &m, y.data(), &m, &info);
    if (info != 0)
      throw RankDeficiencyError(info - 1, r_diagonal(info - 1), max_r_diagonal(k));
    return y.head(k);
  }

  /// Raises RankDeficiencyError if any |R_jj| over the leading k columns falls
  /// below tol * max |R_jj|, naming the offending column.
  void check_rank(Index k, double tol) const {
    const double dmax = max_r_diagonal(k);
    for (Index j = 0; j < k; ++j)
      if (r_diagonal(j) < tol * dmax) throw RankDeficiencyError(j, r_diagonal(j), dmax);
  }

 private:
  double max_r_diagonal(Index k) const {
    double dmax = 0;
    for (Index j = 0; j < k; ++j) dmax = std::max(dmax, r_diagonal(j));
    return dmax;
  }

  Matrix qr_;
  Vector tau_;
  Index rows_ = 0;
  Index cols_ = 0;
};

}  // namespace pe
