#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pe {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Index = Eigen::Index;

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double pi = std::numbers::pi;

/// Thrown when a least-squares factorization detects a numerically
/// rank-deficient triangular factor.
class RankDeficiencyError : public std::runtime_error {
 public:
  RankDeficiencyError(Index column, double diag, double max_diag)
      : std::runtime_error("rank-deficient least-squares system: |R(" +
                           std::to_string(column) + "," + std::to_string(column) +
                           ")| = " + std::to_string(diag) + " below tolerance relative to " +
                           std::to_string(max_diag)),
        column_(column) {}
  Index column() const { return column_; }

 private:
  Index column_;
};

/// Thrown when a solver cannot proceed (divergence, singular state, ...).
class SolverError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pe
