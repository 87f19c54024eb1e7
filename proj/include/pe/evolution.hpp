#pragma once

#include <deque>
#include <functional>
#include <memory>

#include "pe/extension.hpp"
#include "pe/pext.hpp"
#include "pe/stokes_channel.hpp"
#include "pe/stokes_torus.hpp"
#include "pe/types.hpp"

namespace pe {

enum class TimeScheme { BDF4, ExtrapolatedBDF3, BackwardEuler, ForwardEuler };
enum class InitPolicy { ExactHistory, BackwardEulerInit, ForwardEulerInit };

struct TimeGrid {
  double dt = 0.0;
  double t_final = 0.0;
  TimeScheme scheme = TimeScheme::BDF4;
  InitPolicy init = InitPolicy::ExactHistory;
  int init_substeps = 1;  // sub-stepping ratio for the ramp scheme

  Index steps() const {
    if (!(dt > 0)) throw std::invalid_argument("TimeGrid: dt > 0 required");
    const Index n = static_cast<Index>(std::llround(t_final / dt));
    if (std::abs(n * dt - t_final) > 1e-12 * std::max(1.0, t_final))
      throw std::invalid_argument("TimeGrid: t_final must be an integer number of steps");
    return n;
  }
};

/// Fixed-depth ring buffer of past states; index 0 is the most recent.
template <typename State>
class HistoryBuffer {
 public:
  explicit HistoryBuffer(std::size_t depth) : depth_(depth) {}

  bool full() const { return buf_.size() == depth_; }
  std::size_t size() const { return buf_.size(); }
  std::size_t depth() const { return depth_; }

  void push(State s) {
    buf_.push_front(std::move(s));
    if (buf_.size() > depth_) buf_.pop_back();
  }

  /// State from `back` steps ago (0 = latest).
  const State& operator[](std::size_t back) const { return buf_.at(back); }

 private:
  std::size_t depth_;
  std::deque<State> buf_;
};

// ----------------------------------------------------------------- heat ----

/// BDF-4 heat stepping: each step is one extension solve with the fixed
/// operator I - (12 dt/25) Lap, factorized once for the whole run.
class HeatStepper {
 public:
  struct State {
    double t = 0.0;
    Vector u;  // interior nodal values
    FieldCoefficients coeffs;
  };

  using ScalarField = std::function<double(double, const Vec2&)>;

  HeatStepper(PhysicalDomain domain, int ne, double dt, LsqOptions lsq = {})
      : domain_(std::move(domain)), ne_(ne), dt_(dt) {
    auto family = std::make_shared<FourierFamily>(domain_.grid->dims(), ne);
    system_ = std::make_unique<ScalarExtensionSystem>(
        family, domain_, ScalarOperator::helmholtz(12.0 * dt / 25.0),
        Formulation::ForcingExtension, NullSpaceSpec::none(), lsq);
  }

  const ScalarExtensionSystem& system() const { return *system_; }
  const PhysicalDomain& domain() const { return domain_; }

  Vector sample_interior(double t, const ScalarField& f) const {
    Vector out(domain_.interior_count());
    for (Index i = 0; i < out.size(); ++i) out[i] = f(t, interior_point(i));
    return out;
  }

  Vector sample_boundary(double t, const ScalarField& g) const {
    Vector out(domain_.boundary_count());
    Index row = 0;
    for (const auto& seg : domain_.boundary)
      for (Index i = 0; i < seg.size(); ++i, ++row) out[row] = g(t, seg.nodes.row(i));
    return out;
  }

  State make_exact_state(double t, const ScalarField& u_exact) const {
    State s;
    s.t = t;
    s.u = sample_interior(t, u_exact);
    return s;
  }

  /// One BDF-4 step given four past states (history[0] = most recent).
  State step_bdf4(const HistoryBuffer<State>& history, const ScalarField& forcing,
                  const ScalarField& boundary) const {
    if (!history.full()) throw SolverError("step_bdf4: history underfull");
    const double t_next = history[0].t + dt_;
    Vector rhs = (12.0 * dt_ * sample_interior(t_next, forcing) + 48.0 * history[0].u -
                  36.0 * history[1].u + 16.0 * history[2].u - 3.0 * history[3].u) /
                 25.0;
    return implicit_solve(t_next, rhs, boundary);
  }

  /// Backward-Euler ramp step (operator I - dt' Lap), used by the init policy.
  State step_backward_euler(const State& prev, double dt_sub, const ScalarField& forcing,
                            const ScalarField& boundary) {
    if (!be_system_ || be_dt_ != dt_sub) {
      auto family = std::make_shared<FourierFamily>(domain_.grid->dims(), ne_);
      be_system_ = std::make_unique<ScalarExtensionSystem>(
          family, domain_, ScalarOperator::helmholtz(dt_sub), Formulation::ForcingExtension,
          NullSpaceSpec::none(), LsqOptions{0.0});
      be_dt_ = dt_sub;
    }
    const double t_next = prev.t + dt_sub;
    Vector rhs = prev.u + dt_sub * sample_interior(t_next, forcing);
    State s;
    s.t = t_next;
    s.coeffs = be_system_->solve(sample_boundary(t_next, boundary), rhs, ne_);
    s.u = be_system_->solution_on_interior(s.coeffs);
    return s;
  }

  /// Residual of the backward-Euler equation for a ramp state (diagnostic).
  double backward_euler_residual(const State& prev, const State& next,
                                 const ScalarField& forcing) const {
    if (!be_system_) throw SolverError("no backward-Euler system built");
    Vector lhs = next.u - prev.u;
    Vector rhs = be_dt_ * (sample_interior(next.t, forcing) +
                           be_system_->gather_interior(laplacian_of(next, *be_system_)));
    return (lhs - rhs).lpNorm<Eigen::Infinity>();
  }

  /// Max boundary deviation |S*u - g(t)|.
  double boundary_error(const State& s, const ScalarField& boundary) const {
    Vector trace = system_->boundary_values(s.coeffs);
    Vector g = sample_boundary(s.t, boundary);
    return (trace - g).lpNorm<Eigen::Infinity>();
  }

  Vec2 interior_point(Index i) const {
    const Index flat = domain_.interior[i];
    return domain_.grid->dims() == 1 ? Vec2(domain_.grid->axis_nodes[0][flat], 0.0)
                                     : domain_.grid->node2(flat);
  }

 private:
  State implicit_solve(double t_next, const Vector& rhs, const ScalarField& boundary) const {
    State s;
    s.t = t_next;
    s.coeffs = system_->solve(sample_boundary(t_next, boundary), rhs, ne_);
    s.u = system_->solution_on_interior(s.coeffs);
    return s;
  }

  Matrix laplacian_of(const State& s, const ScalarExtensionSystem& sys) const {
    // Laplacian of the solution via the coefficient representation.
    Vector cu = s.coeffs.c;
    for (Index f = 0; f < cu.size(); ++f) {
      const double lambda = sys.op().eigenvalue(sys.family().freq_sq(f));
      const double inv = lambda == 0.0 ? 0.0 : 1.0 / lambda;
      cu[f] *= inv * (-sys.family().freq_sq(f));
    }
    TorusGridEvaluator eval(sys.family(), domain_.grid->axis_nodes[0],
                            domain_.grid->dims() == 2 ? domain_.grid->axis_nodes[1] : Vector());
    return eval.evaluate(cu);
  }

  PhysicalDomain domain_;
  int ne_;
  double dt_;
  std::unique_ptr<ScalarExtensionSystem> system_;
  std::unique_ptr<ScalarExtensionSystem> be_system_;
  double be_dt_ = 0.0;
};

/// Drives a full heat run; returns the error and boundary-deviation series.
struct HeatRunResult {
  std::vector<double> times;
  std::vector<double> linf_error;
  std::vector<double> boundary_deviation;
  HeatStepper::State final_state;
};

inline HeatRunResult run_heat(HeatStepper& stepper, const TimeGrid& grid,
                              const HeatStepper::ScalarField& forcing,
                              const HeatStepper::ScalarField& boundary,
                              const HeatStepper::ScalarField& exact,
                              const std::string& checkpoint_prefix = "",
                              Index checkpoint_stride = 0) {
  HistoryBuffer<HeatStepper::State> history(4);
  if (grid.init == InitPolicy::ExactHistory) {
    for (int k = 3; k >= 0; --k) history.push(stepper.make_exact_state(k * grid.dt, exact));
  } else {
    auto s = stepper.make_exact_state(0.0, exact);
    history.push(s);
    const double dt_sub = grid.dt / grid.init_substeps;
    for (int k = 0; k < 3; ++k) {
      auto prev = history[0];
      HeatStepper::State cur = prev;
      for (int r = 0; r < grid.init_substeps; ++r)
        cur = stepper.step_backward_euler(cur, dt_sub, forcing, boundary);
      history.push(cur);
    }
  }

  HeatRunResult out;
  const Index steps = grid.steps();
  for (Index n = 3; n < steps; ++n) {
    auto next = stepper.step_bdf4(history, forcing, boundary);
    history.push(next);
    Vector ref = stepper.sample_interior(next.t, exact);
    out.times.push_back(next.t);
    out.linf_error.push_back((next.u - ref).lpNorm<Eigen::Infinity>());
    out.boundary_deviation.push_back(stepper.boundary_error(next, boundary));
    if (!next.u.allFinite()) throw SolverError("heat run diverged at step " + std::to_string(n));
    if (checkpoint_stride > 0 && n % checkpoint_stride == 0)
      write_pext(checkpoint_prefix + "_step" + std::to_string(n) + ".pext",
                 Matrix(next.coeffs.c));
  }
  out.final_state = history[0];
  return out;
}

// --------------------------------------------------------- navier-stokes ----

/// Interface the IMEX stepper needs from a Stokes solver: one factorized
/// system, velocity and spectral advection samples at the interior nodes.
struct NsStepHooks {
  std::function<StokesSolution(const Vector& g, const Vector& f)> solve;
  std::function<Vector(const StokesSolution&)> velocity;   // 2 ni, node-major
  std::function<Vector(const StokesSolution&)> advection;  // (u.grad)u, 2 ni
};

struct NsState {
  double t = 0.0;
  Vector u;    // interior velocity, 2 per node
  Vector adv;  // advection term at the same time level
  StokesSolution sol;
};

/// Implicit-explicit BDF-4: viscous and pressure terms implicit through one
/// factorized Stokes solve per step, advection extrapolated from the history.
class ImexBdf4Stepper {
 public:
  ImexBdf4Stepper(NsStepHooks hooks, double dt, double divergence_guard = 1e6)
      : hooks_(std::move(hooks)), dt_(dt), guard_(divergence_guard) {}

  NsState step(const HistoryBuffer<NsState>& history,
               const std::function<Vector(double)>& forcing,
               const std::function<Vector(double)>& boundary, bool zero_advection = false) const {
    if (!history.full()) throw SolverError("imex step: history underfull");
    const double t_next = history[0].t + dt_;
    Vector rhs = (48.0 * history[0].u - 36.0 * history[1].u + 16.0 * history[2].u -
                  3.0 * history[3].u) /
                 25.0;
    Vector expl = forcing(t_next);
    if (!zero_advection)
      expl += -4.0 * history[0].adv + 6.0 * history[1].adv - 4.0 * history[2].adv +
              history[3].adv;
    rhs += (12.0 * dt_ / 25.0) * expl;
    NsState next;
    next.t = t_next;
    next.sol = hooks_.solve(boundary(t_next), rhs);
    next.u = hooks_.velocity(next.sol);
    next.adv = zero_advection ? Vector(Vector::Zero(next.u.size()))
                              : hooks_.advection(next.sol);
    if (!next.u.allFinite() || next.u.lpNorm<Eigen::Infinity>() > guard_)
      throw SolverError("navier-stokes step diverged at t = " + std::to_string(t_next));
    return next;
  }

  double dt() const { return dt_; }

 private:
  NsStepHooks hooks_;
  double dt_;
  double guard_;
};

}  // namespace pe
