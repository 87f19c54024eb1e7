#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "pe/types.hpp"

namespace pe {

/// Scalar differential operators diagonal on trigonometric bases.
/// Helmholtz means I - sigma * Laplacian.
struct ScalarOperator {
  enum class Kind { Identity, Laplacian, NegLaplacian, Helmholtz };
  Kind kind = Kind::Laplacian;
  double sigma = 0.0;

  static ScalarOperator identity() { return {Kind::Identity, 0.0}; }
  static ScalarOperator laplacian() { return {Kind::Laplacian, 0.0}; }
  static ScalarOperator neg_laplacian() { return {Kind::NegLaplacian, 0.0}; }
  static ScalarOperator helmholtz(double sigma) { return {Kind::Helmholtz, sigma}; }

  /// Eigenvalue on a mode with squared wavenumber k2.
  double eigenvalue(double k2) const {
    switch (kind) {
      case Kind::Identity: return 1.0;
      case Kind::Laplacian: return -k2;
      case Kind::NegLaplacian: return k2;
      case Kind::Helmholtz: return 1.0 + sigma * k2;
    }
    return 0.0;
  }
};

/// Real trigonometric basis on the 1D or 2D torus [0,2pi)^d. Frequencies are
/// kept in a half-space so that {1} u {cos(j.x), sin(j.x)} spans the same
/// space as the complex modes with max|j_i| <= grade. Functions are ordered
/// by grade = max|j_i| ascending, so that the leading prefix_size(Ne) columns
/// of any assembled system form the cutoff-Ne basis.
class FourierFamily {
 public:
  enum Trig { Const = 0, Cos = 1, Sin = 2 };
  struct Fn {
    int j1, j2;
    Trig trig;
    int grade;
  };

  FourierFamily(int dims, int max_grade) : dims_(dims), max_grade_(max_grade) {
    if (dims != 1 && dims != 2) throw std::invalid_argument("FourierFamily: dims must be 1 or 2");
    if (max_grade < 0) throw std::invalid_argument("FourierFamily: grade >= 0 required");
    fns_.push_back({0, 0, Const, 0});
    prefix_.assign(max_grade + 1, 0);
    prefix_[0] = 1;
    for (int g = 1; g <= max_grade; ++g) {
      for (const auto& j : half_space_slots(g)) {
        fns_.push_back({j.first, j.second, Cos, g});
        fns_.push_back({j.first, j.second, Sin, g});
      }
      prefix_[g] = static_cast<Index>(fns_.size());
    }
  }

  int dims() const { return dims_; }
  int max_grade() const { return max_grade_; }
  Index size() const { return static_cast<Index>(fns_.size()); }
  Index prefix_size(int grade) const { return prefix_.at(grade); }
  const Fn& fn(Index f) const { return fns_[f]; }

  /// Squared wavenumber |j|^2 of function f.
  double freq_sq(Index f) const {
    const Fn& fn = fns_[f];
    return static_cast<double>(fn.j1) * fn.j1 + static_cast<double>(fn.j2) * fn.j2;
  }

  double value(Index f, const Vec2& x) const {
    const Fn& fn = fns_[f];
    if (fn.trig == Const) return 1.0;
    const double arg = fn.j1 * x.x() + fn.j2 * x.y();
    return fn.trig == Cos ? std::cos(arg) : std::sin(arg);
  }

  /// Gradient of function f; the partner trig function appears with factor j.
  Vec2 gradient(Index f, const Vec2& x) const {
    const Fn& fn = fns_[f];
    if (fn.trig == Const) return Vec2::Zero();
    const double arg = fn.j1 * x.x() + fn.j2 * x.y();
    const double d = fn.trig == Cos ? -std::sin(arg) : std::cos(arg);
    return Vec2(fn.j1 * d, fn.j2 * d);
  }

  /// Integral over the full torus; zero except for the constant mode.
  double full_domain_integral(Index f) const {
    if (fns_[f].trig != Const) return 0.0;
    return dims_ == 1 ? two_pi : two_pi * two_pi;
  }

 private:
  // Half-space representatives with max(|j1|,|j2|) == g: j1 > 0, or j1 == 0
  // and j2 > 0. In 1D only (g, 0).
  std::vector<std::pair<int, int>> half_space_slots(int g) const {
    std::vector<std::pair<int, int>> out;
    if (dims_ == 1) {
      out.emplace_back(g, 0);
      return out;
    }
    for (int j1 = 0; j1 <= g; ++j1)
      for (int j2 = -g; j2 <= g; ++j2) {
        if (std::max(std::abs(j1), std::abs(j2)) != g) continue;
        if (j1 == 0 && j2 <= 0) continue;
        out.emplace_back(j1, j2);
      }
    std::sort(out.begin(), out.end());
    return out;
  }

  int dims_;
  int max_grade_;
  std::vector<Fn> fns_;
  std::vector<Index> prefix_;
};

/// Evaluates real trigonometric sums (and their derivatives) on a tensor grid
/// by two complex matrix products; exact for any cutoff below the grid Nyquist.
class TorusGridEvaluator {
 public:
  TorusGridEvaluator(const FourierFamily& family, Vector x_nodes, Vector y_nodes)
      : family_(&family), g_(family.max_grade()) {
    fx_ = axis_table(x_nodes);
    if (family.dims() == 2) fy_ = axis_table(y_nodes);
  }

  /// Nodal values of sum_f coeffs[f] * d^(px,py) basis_f over the grid.
  /// Returns an Nx x Ny matrix (Nx-vector reshaped for 1D).
  Matrix evaluate(const Vector& coeffs, int px = 0, int py = 0) const {
    const int w = 2 * g_ + 1;
    CMatrix chat = CMatrix::Zero(w, family_->dims() == 2 ? w : 1);
    const std::complex<double> iu(0.0, 1.0);
    for (Index f = 0; f < std::min<Index>(coeffs.size(), family_->size()); ++f) {
      if (coeffs[f] == 0.0) continue;
      const auto& fn = family_->fn(f);
      std::complex<double> c;
      if (fn.trig == FourierFamily::Const)
        c = coeffs[f];
      else if (fn.trig == FourierFamily::Cos)
        c = 0.5 * coeffs[f];
      else
        c = -0.5 * iu * coeffs[f];
      add_mode(chat, fn.j1, fn.j2, c, px, py);
      if (fn.trig != FourierFamily::Const) add_mode(chat, -fn.j1, -fn.j2, std::conj(c), px, py);
    }
    if (family_->dims() == 1) return (fx_ * chat).real();
    return (fx_ * chat * fy_.transpose()).real();
  }

 private:
  CMatrix axis_table(const Vector& nodes) const {
    CMatrix t(nodes.size(), 2 * g_ + 1);
    for (Index k = 0; k < nodes.size(); ++k)
      for (int j = -g_; j <= g_; ++j)
        t(k, j + g_) = std::exp(std::complex<double>(0.0, j * nodes[k]));
    return t;
  }

  void add_mode(CMatrix& chat, int j1, int j2, std::complex<double> c, int px, int py) const {
    const std::complex<double> iu(0.0, 1.0);
    std::complex<double> factor = 1.0;
    for (int p = 0; p < px; ++p) factor *= iu * static_cast<double>(j1);
    for (int p = 0; p < py; ++p) factor *= iu * static_cast<double>(j2);
    chat(j1 + g_, family_->dims() == 2 ? j2 + g_ : 0) += factor * c;
  }

  const FourierFamily* family_;
  int g_;
  CMatrix fx_, fy_;
};

}  // namespace pe
