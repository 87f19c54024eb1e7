#pragma once

#include <functional>
#include <memory>

#include "pe/evolution.hpp"
#include "pe/stokes_channel.hpp"
#include "pe/stokes_torus.hpp"

namespace pe {

using VectorField = std::function<Vec2(double, const Vec2&)>;
using TensorField = std::function<Mat2(double, const Vec2&)>;

inline Vector sample_vector_interior(const PhysicalDomain& domain, double t,
                                     const VectorField& f) {
  Vector out(2 * domain.interior_count());
  for (Index i = 0; i < domain.interior_count(); ++i) {
    const Vec2 v = f(t, domain.grid->node2(domain.interior[i]));
    out[2 * i] = v.x();
    out[2 * i + 1] = v.y();
  }
  return out;
}

inline Vector sample_vector_boundary(const PhysicalDomain& domain, double t,
                                     const VectorField& g) {
  Vector out(2 * domain.boundary_count());
  Index row = 0;
  for (const auto& seg : domain.boundary)
    for (Index i = 0; i < seg.size(); ++i, row += 2) {
      const Vec2 v = g(t, seg.nodes.row(i));
      out[row] = v.x();
      out[row + 1] = v.y();
    }
  return out;
}

/// Closed forms describing the exact solution of a manufactured run; the
/// gradient supplies history advection terms, the Laplacian seeds explicit
/// ramp steps from the initial data.
struct NsExactData {
  VectorField velocity;
  TensorField velocity_gradient;
  VectorField velocity_laplacian;                     // optional
  std::function<double(double, const Vec2&)> pressure;  // optional
};

struct NsRunConfig {
  int ne = 8;
  double t_final = 1.0;
  InitPolicy init = InitPolicy::BackwardEulerInit;
  int init_substeps = 1;
  bool zero_advection = false;  // test hook: reduces to unsteady Stokes
  bool dealias = false;         // optional 2/3-rule on advection inputs
};

namespace detail {

/// Applies the 2/3-rule in place on a graded coefficient vector.
template <typename PrefixFn>
void dealias_coeffs(Vector& c, int ne, const PrefixFn& prefix_size) {
  const int keep = (2 * ne) / 3;
  const Index k = prefix_size(keep);
  for (Index f = k; f < c.size(); ++f) c[f] = 0.0;
}

}  // namespace detail

/// IMEX BDF-4 Navier-Stokes on the torus (forcing-extension Stokes solves).
class TorusNavierStokes {
 public:
  TorusNavierStokes(PhysicalDomain domain, int ne_max, double dt, LsqOptions lsq = LsqOptions{0.0})
      : domain_(std::move(domain)), ne_max_(ne_max), dt_(dt) {
    const double sigma = 12.0 * dt / 25.0;
    family_ = std::make_shared<FourierFamily>(2, ne_max);
    system_ = std::make_unique<TorusStokesSystem>(family_, domain_,
                                                  ScalarOperator::helmholtz(sigma), sigma, lsq);
  }

  const TorusStokesSystem& system() const { return *system_; }
  const PhysicalDomain& domain() const { return domain_; }

  Vector velocity_interior(const StokesSolution& sol) const {
    return interleave(system_->gather_interior(system_->velocity_on_grid(sol, 0)),
                      system_->gather_interior(system_->velocity_on_grid(sol, 1)));
  }

  Vector advection_interior(const StokesSolution& sol, bool dealias, int ne) const {
    StokesSolution s = sol;
    if (dealias)
      detail::dealias_coeffs(s.c, ne, [&](int g) { return 2 * family_->prefix_size(g); });
    Matrix u1 = system_->velocity_on_grid(s, 0), u2 = system_->velocity_on_grid(s, 1);
    Matrix a1 = u1.cwiseProduct(system_->velocity_on_grid(s, 0, 1, 0)) +
                u2.cwiseProduct(system_->velocity_on_grid(s, 0, 0, 1));
    Matrix a2 = u1.cwiseProduct(system_->velocity_on_grid(s, 1, 1, 0)) +
                u2.cwiseProduct(system_->velocity_on_grid(s, 1, 0, 1));
    return interleave(system_->gather_interior(a1), system_->gather_interior(a2));
  }

  NsStepHooks hooks(int ne, bool dealias) const {
    NsStepHooks h;
    h.solve = [this, ne](const Vector& g, const Vector& f) { return system_->solve(g, f, ne); };
    h.velocity = [this](const StokesSolution& s) { return velocity_interior(s); };
    h.advection = [this, dealias, ne](const StokesSolution& s) {
      return advection_interior(s, dealias, ne);
    };
    return h;
  }

  /// Runs to t_final; returns the final state.
  NsState run(const NsRunConfig& cfg, const VectorField& forcing, const VectorField& boundary,
              const NsExactData& exact) {
    ImexBdf4Stepper stepper(hooks(cfg.ne, cfg.dealias), dt_);
    auto f_at = [&](double t) { return sample_vector_interior(domain_, t, forcing); };
    auto g_at = [&](double t) { return sample_vector_boundary(domain_, t, boundary); };

    HistoryBuffer<NsState> history(4);
    if (cfg.init == InitPolicy::ExactHistory) {
      for (int k = 3; k >= 0; --k) history.push(exact_state(k * dt_, exact));
    } else {
      // Backward-Euler (implicit-viscous) ramp from the initial data.
      const double dts = dt_ / cfg.init_substeps;
      const double sigma = dts;
      TorusStokesSystem ramp(family_, domain_, ScalarOperator::helmholtz(sigma), sigma,
                             LsqOptions{0.0});
      NsState cur = exact_state(0.0, exact);
      history.push(cur);
      for (int k = 0; k < 3; ++k) {
        for (int r = 0; r < cfg.init_substeps; ++r) {
          const double t_next = cur.t + dts;
          Vector rhs = cur.u + dts * (f_at(t_next) - cur.adv);
          NsState nxt;
          nxt.t = t_next;
          nxt.sol = ramp.solve(g_at(t_next), rhs, cfg.ne);
          nxt.u = interleave(ramp.gather_interior(ramp.velocity_on_grid(nxt.sol, 0)),
                             ramp.gather_interior(ramp.velocity_on_grid(nxt.sol, 1)));
          Matrix u1 = ramp.velocity_on_grid(nxt.sol, 0), u2 = ramp.velocity_on_grid(nxt.sol, 1);
          Matrix a1 = u1.cwiseProduct(ramp.velocity_on_grid(nxt.sol, 0, 1, 0)) +
                      u2.cwiseProduct(ramp.velocity_on_grid(nxt.sol, 0, 0, 1));
          Matrix a2 = u1.cwiseProduct(ramp.velocity_on_grid(nxt.sol, 1, 1, 0)) +
                      u2.cwiseProduct(ramp.velocity_on_grid(nxt.sol, 1, 0, 1));
          nxt.adv = interleave(ramp.gather_interior(a1), ramp.gather_interior(a2));
          cur = nxt;
        }
        history.push(cur);
      }
    }

    NsState state = history[0];
    const Index steps = TimeGrid{dt_, cfg.t_final}.steps();
    for (Index n = 3; n < steps; ++n) {
      state = stepper.step(history, f_at, g_at, cfg.zero_advection);
      history.push(state);
    }
    return state;
  }

  NsState exact_state(double t, const NsExactData& exact) const {
    NsState s;
    s.t = t;
    s.u = sample_vector_interior(domain_, t, exact.velocity);
    s.adv = sample_vector_interior(domain_, t, [&](double tt, const Vec2& p) {
      return Vec2(exact.velocity_gradient(tt, p) * exact.velocity(tt, p));
    });
    return s;
  }

 private:
  static Vector interleave(const Vector& a, const Vector& b) {
    Vector out(2 * a.size());
    for (Index i = 0; i < a.size(); ++i) {
      out[2 * i] = a[i];
      out[2 * i + 1] = b[i];
    }
    return out;
  }

  PhysicalDomain domain_;
  int ne_max_;
  double dt_;
  std::shared_ptr<FourierFamily> family_;
  std::unique_ptr<TorusStokesSystem> system_;
};

/// IMEX BDF-4 Navier-Stokes on the periodic channel (solution extension);
/// supports the flow-rate-driven form with the Lagrange forcing, and a
/// forward-Euler ramp at a finer step for initialization.
class ChannelNavierStokes {
 public:
  ChannelNavierStokes(PhysicalDomain domain, int ne_x, int ne_y, double dt, bool flow_rate,
                      double q = 0.0, LsqOptions lsq = LsqOptions{0.0})
      : domain_(std::move(domain)), ne_x_(ne_x), ne_y_(ne_y), q_(q), flow_rate_(flow_rate),
        dt_(dt) {
    const double sigma = 12.0 * dt / 25.0;
    ChannelStokesSystem::Options opt;
    opt.op = ScalarOperator::helmholtz(sigma);
    opt.pressure_scale = sigma;
    opt.flow_rate = flow_rate;
    opt.flow_rate_x = domain_.grid->x_origin;
    opt.lsq = lsq;
    system_ = std::make_unique<ChannelStokesSystem>(domain_, ne_x, ne_y, opt);
  }

  const ChannelStokesSystem& system() const { return *system_; }
  const PhysicalDomain& domain() const { return domain_; }

  Vector velocity_interior(const StokesSolution& sol) const {
    return interleave(system_->gather_interior(system_->velocity_on_grid(sol, 0)),
                      system_->gather_interior(system_->velocity_on_grid(sol, 1)));
  }

  Vector advection_interior(const ChannelStokesSystem& sys, const StokesSolution& sol) const {
    Matrix u1 = sys.velocity_on_grid(sol, 0), u2 = sys.velocity_on_grid(sol, 1);
    Matrix a1 = u1.cwiseProduct(sys.velocity_on_grid(sol, 0, 1, 0)) +
                u2.cwiseProduct(sys.velocity_on_grid(sol, 0, 0, 1));
    Matrix a2 = u1.cwiseProduct(sys.velocity_on_grid(sol, 1, 1, 0)) +
                u2.cwiseProduct(sys.velocity_on_grid(sol, 1, 0, 1));
    return interleave(sys.gather_interior(a1), sys.gather_interior(a2));
  }

  NsState run(const NsRunConfig& cfg, const VectorField& forcing, const VectorField& boundary,
              const NsExactData& exact) {
    NsStepHooks h;
    h.solve = [this, &cfg](const Vector& g, const Vector& f) {
      return system_->solve(g, f, cfg.ne, q_);
    };
    h.velocity = [this](const StokesSolution& s) { return velocity_interior(s); };
    h.advection = [this](const StokesSolution& s) { return advection_interior(*system_, s); };
    ImexBdf4Stepper stepper(h, dt_);
    auto f_at = [&](double t) { return sample_vector_interior(domain_, t, forcing); };
    auto g_at = [&](double t) { return sample_vector_boundary(domain_, t, boundary); };

    HistoryBuffer<NsState> history(4);
    if (cfg.init == InitPolicy::ExactHistory) {
      for (int k = 3; k >= 0; --k) history.push(exact_state(k * dt_, exact));
    } else {
      // Literal forward Euler on the momentum equation at a finer step: the
      // identity-operator system fits u^k + dt(f + lap u^k - adv^k) back into
      // the divergence-free basis with the boundary and flux constraints.
      const double dts = dt_ / cfg.init_substeps;
      ChannelStokesSystem::Options opt;
      opt.op = ScalarOperator::identity();
      opt.pressure_scale = dts;
      opt.flow_rate = flow_rate_;
      opt.flow_rate_x = domain_.grid->x_origin;
      opt.lsq = LsqOptions{0.0};
      ChannelStokesSystem ramp(domain_, ne_x_, ne_y_, opt);

      NsState cur = exact_state(0.0, exact);
      Vector lap = sample_vector_interior(domain_, 0.0, exact.velocity_laplacian);
      history.push(cur);
      for (int k = 0; k < 3; ++k) {
        for (int r = 0; r < cfg.init_substeps; ++r) {
          const double t_next = cur.t + dts;
          Vector rhs = cur.u + dts * (f_at(cur.t) + lap - cur.adv);
          NsState nxt;
          nxt.t = t_next;
          nxt.sol = ramp.solve(g_at(t_next), rhs, cfg.ne, q_);
          nxt.u = interleave(ramp.gather_interior(ramp.velocity_on_grid(nxt.sol, 0)),
                             ramp.gather_interior(ramp.velocity_on_grid(nxt.sol, 1)));
          nxt.adv = advection_interior(ramp, nxt.sol);
          Matrix l1 = ramp.velocity_on_grid(nxt.sol, 0, 2, 0) +
                      ramp.velocity_on_grid(nxt.sol, 0, 0, 2);
          Matrix l2 = ramp.velocity_on_grid(nxt.sol, 1, 2, 0) +
                      ramp.velocity_on_grid(nxt.sol, 1, 0, 2);
          lap = interleave(ramp.gather_interior(l1), ramp.gather_interior(l2));
          cur = nxt;
        }
        history.push(cur);
      }
    }

    NsState state = history[0];
    const Index steps = TimeGrid{dt_, cfg.t_final}.steps();
    for (Index n = 3; n < steps; ++n) {
      state = stepper.step(history, f_at, g_at, cfg.zero_advection);
      history.push(state);
    }
    return state;
  }

  NsState exact_state(double t, const NsExactData& exact) const {
    NsState s;
    s.t = t;
    s.u = sample_vector_interior(domain_, t, exact.velocity);
    s.adv = sample_vector_interior(domain_, t, [&](double tt, const Vec2& p) {
      return Vec2(exact.velocity_gradient(tt, p) * exact.velocity(tt, p));
    });
    return s;
  }

 private:
  static Vector interleave(const Vector& a, const Vector& b) {
    Vector out(2 * a.size());
    for (Index i = 0; i < a.size(); ++i) {
      out[2 * i] = a[i];
      out[2 * i + 1] = b[i];
    }
    return out;
  }

  PhysicalDomain domain_;
  int ne_x_, ne_y_;
  double q_;
  bool flow_rate_;
  double dt_ = 0.0;
  std::unique_ptr<ChannelStokesSystem> system_;
};

}  // namespace pe
