#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pe/elliptic.hpp"
#include "pe/navier_stokes.hpp"
#include "pe/problems.hpp"
#include "pe/stokes_sphere.hpp"
#include "pe/viscoelastic.hpp"

namespace pe::harness {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string problem;
  Index n = 0, nx = 0, ny = 0, nphi = 0, ntheta = 0;
  std::vector<int> ne_sweep;
  int ne_x = 0, ne_y = 0;
  double boundary_spacing = 1.0;  // multiples of the grid spacing
  double dt = 0.0, t_final = 0.0;
  std::string init = "exact";
  int init_substeps = 1;
  bool dealias = false;
  std::string output_dir = ".";
  Index stride = 0;
  int jobs = 1;
  bool paper_scale = false;
};

inline const std::vector<std::string>& registry_keys() {
  static const std::vector<std::string> keys = {
      "poisson1d",        "poisson2d_star",     "poisson2d_mixed", "heat1d",
      "heat2d",           "stokes_torus_exact", "stokes_torus_forced",
      "stokes_torus_inflow", "stokes_channel",  "stokes_sphere",
      "ns_torus_exact",   "ns_torus_noslip",    "ns_torus_inflow",
      "ns_channel_exact", "ns_channel_flowrate", "oldroydb_channel"};
  return keys;
}

/// Per-problem defaults; user configuration overrides field by field.
inline json default_config(const std::string& key) {
  json d;
  d["spec_version"] = 1;
  d["problem"] = key;
  json& disc = d["discretization"];
  json& time = d["time"];
  if (key == "poisson1d") {
    disc["N"] = 1024;
    disc["Ne_sweep"] = json::array();
    for (int ne = 4; ne <= 40; ne += 4) disc["Ne_sweep"].push_back(ne);
  } else if (key == "poisson2d_star") {
    disc["N"] = 256;
    for (int ne = 8; ne <= 32; ne += 2) disc["Ne_sweep"].push_back(ne);
  } else if (key == "poisson2d_mixed") {
    disc["N"] = 256;
    for (int ne = 8; ne <= 24; ne += 2) disc["Ne_sweep"].push_back(ne);
  } else if (key == "heat1d") {
    disc["N"] = 256;
    for (int ne = 6; ne <= 22; ne += 4) disc["Ne_sweep"].push_back(ne);
    time["dt"] = 1e-4;
    time["T"] = 1.0;
    time["init"] = "exact";
  } else if (key == "heat2d") {
    disc["N"] = 256;
    for (int ne = 8; ne <= 32; ne += 8) disc["Ne_sweep"].push_back(ne);
    time["dt"] = 1e-4;
    time["T"] = 1.0;
    time["init"] = "exact";
  } else if (key == "stokes_torus_exact") {
    disc["N"] = 128;
    for (int ne = 4; ne <= 20; ne += 2) disc["Ne_sweep"].push_back(ne);
  } else if (key == "stokes_torus_forced" || key == "stokes_torus_inflow") {
    disc["N"] = 128;
    for (int ne = 4; ne <= 24; ne += 2) disc["Ne_sweep"].push_back(ne);
  } else if (key == "stokes_channel") {
    disc["Nx"] = 128;
    disc["Ny"] = 96;
    for (int ne = 10; ne <= 32; ne += 2) disc["Ne_sweep"].push_back(ne);
  } else if (key == "stokes_sphere") {
    disc["Nphi"] = 64;
    disc["Ntheta"] = 72;
    for (int ne = 4; ne <= 20; ne += 2) disc["Ne_sweep"].push_back(ne);
  } else if (key == "ns_torus_exact" || key == "ns_torus_noslip" ||
             key == "ns_torus_inflow") {
    disc["N"] = 64;
    for (int ne = 6; ne <= 14; ne += 2) disc["Ne_sweep"].push_back(ne);
    time["dt"] = 1e-3;
    time["T"] = 1.0;
    time["init"] = key == "ns_torus_exact" ? "exact" : "backward_euler";
  } else if (key == "ns_channel_exact") {
    disc["Nx"] = 48;
    disc["Ny"] = 48;
    for (int ne = 6; ne <= 14; ne += 2) disc["Ne_sweep"].push_back(ne);
    time["dt"] = 2e-4;
    time["T"] = 1.0;
    time["init"] = "forward_euler";
    time["init_substeps"] = 100;
  } else if (key == "ns_channel_flowrate") {
    disc["Nx"] = 96;
    disc["Ny"] = 64;
    for (int ne = 16; ne <= 28; ne += 4) disc["Ne_sweep"].push_back(ne);
    time["dt"] = 2e-4;
    time["T"] = 0.4;
    time["init"] = "forward_euler";
    time["init_substeps"] = 100;
  } else if (key == "oldroydb_channel") {
    // Reduced desk scale: half-length channel at the full spatial density
    // and wavenumber content of the long-channel run.
    disc["Nx"] = 224;
    disc["Ny"] = 72;
    disc["Ne_x"] = 72;
    disc["Ne_y"] = 24;
    time["dt"] = 5e-3;
    time["T"] = 3.0;
  } else {
    throw ConfigError("unknown problem key: " + key);
  }
  d["output"] = {{"dir", "."}, {"stride", 0}};
  return d;
}

inline json merge_config(json base, const json& user) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    if (it->is_object() && base.contains(it.key()) && base[it.key()].is_object())
      base[it.key()] = merge_config(base[it.key()], *it);
    else
      base[it.key()] = *it;
  }
  return base;
}

inline ExperimentConfig parse_config(const json& user) {
  if (!user.contains("problem") || !user["problem"].is_string())
    throw ConfigError("config must name a problem");
  const std::string key = user["problem"];
  const auto& keys = registry_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end())
    throw ConfigError("unknown problem key: " + key);
  json cfg = merge_config(default_config(key), user);
  if (cfg.value("spec_version", 1) != 1) throw ConfigError("unsupported spec_version");

  ExperimentConfig out;
  out.problem = key;
  const json disc = cfg["discretization"].is_object() ? cfg["discretization"] : json::object();
  out.n = disc.value("N", 0);
  out.nx = disc.value("Nx", 0);
  out.ny = disc.value("Ny", 0);
  out.nphi = disc.value("Nphi", 0);
  out.ntheta = disc.value("Ntheta", 0);
  out.ne_x = disc.value("Ne_x", 0);
  out.ne_y = disc.value("Ne_y", 0);
  out.boundary_spacing = disc.value("boundary_spacing", 1.0);
  if (disc.contains("Ne_sweep")) {
    out.ne_sweep = disc["Ne_sweep"].get<std::vector<int>>();
    if (out.ne_sweep.empty()) throw ConfigError("Ne_sweep must not be empty");
    for (std::size_t i = 1; i < out.ne_sweep.size(); ++i)
      if (out.ne_sweep[i] <= out.ne_sweep[i - 1])
        throw ConfigError("Ne_sweep must be strictly increasing");
  }
  if (cfg.contains("time") && cfg["time"].is_object()) {
    const json& t = cfg["time"];
    out.dt = t.value("dt", 0.0);
    out.t_final = t.value("T", 0.0);
    out.init = t.value("init", "exact");
    out.init_substeps = t.value("init_substeps", 1);
    out.dealias = t.value("dealias", false);
    if (out.init != "exact" && out.init != "backward_euler" && out.init != "forward_euler")
      throw ConfigError("init must be exact | backward_euler | forward_euler");
  }
  const json o = cfg["output"].is_object() ? cfg["output"] : json::object();
  out.output_dir = o.value("dir", ".");
  out.stride = o.value("stride", 0);
  out.jobs = cfg.value("jobs", 1);
  out.paper_scale = cfg.value("paper_scale", false);
  if (out.jobs < 1) throw ConfigError("jobs must be >= 1");
  return out;
}

// ------------------------------------------------------------- reporting --

struct ConvergenceRow {
  int ne = 0;
  double linf = 0.0, l2 = 0.0, seconds = 0.0;
};

struct RateFit {
  bool valid = false;
  double a = 0.0, r2 = 0.0;
  int ne_min = 0, ne_max = 0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  RateFit fit_linf, fit_l2;
};

/// Least-squares line on (Ne, log error) over the pre-plateau window: points
/// with error above 100x the smallest error of the sweep. a = exp(slope).
inline RateFit fit_geometric_rate(const std::vector<std::pair<int, double>>& points) {
  RateFit fit;
  double floor = std::numeric_limits<double>::infinity();
  for (const auto& [ne, err] : points)
    if (err > 0) floor = std::min(floor, err);
  std::vector<std::pair<int, double>> window;
  for (const auto& [ne, err] : points)
    if (err > 100.0 * floor) window.emplace_back(ne, err);
  if (window.size() < 3) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& [ne, err] : window) {
    const double x = ne, y = std::log(err);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double n = static_cast<double>(window.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double ss_tot = syy - sy * sy / n;
  const double ss_res = ss_tot - slope * (sxy - sx * sy / n);
  fit.valid = true;
  fit.a = std::exp(slope);
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.ne_min = window.front().first;
  fit.ne_max = window.back().first;
  return fit;
}

inline RateFit fit_from_rows(const std::vector<ConvergenceRow>& rows, bool use_l2) {
  std::vector<std::pair<int, double>> pts;
  for (const auto& r : rows) pts.emplace_back(r.ne, use_l2 ? r.l2 : r.linf);
  return fit_geometric_rate(pts);
}

inline std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void emit_convergence_csv(const ConvergenceReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SolverError("cannot open " + path);
  out << "Ne,Linf,L2,seconds\r\n";
  for (const auto& r : report.rows)
    out << r.ne << ',' << format_g17(r.linf) << ',' << format_g17(r.l2) << ','
        << format_g17(r.seconds) << "\r\n";
}

inline void emit_fit_csv(const ConvergenceReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SolverError("cannot open " + path);
  out << "norm,a,r2,ne_min,ne_max\r\n";
  auto row = [&](const char* name, const RateFit& f) {
    if (!f.valid) {
      out << name << ",,,," << "\r\n";
      return;
    }
    out << name << ',' << format_g17(f.a) << ',' << format_g17(f.r2) << ',' << f.ne_min << ','
        << f.ne_max << "\r\n";
  };
  row("Linf", report.fit_linf);
  row("L2", report.fit_l2);
}

inline void emit_series_csv(const std::vector<std::string>& columns,
                            const std::vector<std::vector<double>>& rows,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SolverError("cannot open " + path);
  for (std::size_t c = 0; c < columns.size(); ++c)
    out << columns[c] << (c + 1 < columns.size() ? "," : "");
  out << "\r\n";
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c)
      out << format_g17(r[c]) << (c + 1 < r.size() ? "," : "");
    out << "\r\n";
  }
}

/// Parses a CSV produced by emit_series_csv / emit_convergence_csv back into
/// numbers (testing aid for the round-trip property).
inline std::vector<std::vector<double>> parse_csv_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SolverError("cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

// ------------------------------------------------------------ experiments --

namespace detail {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

template <typename SolveFn>
ConvergenceReport sweep_report(const std::vector<int>& sweep, int jobs, const SolveFn& solve) {
  ConvergenceReport report;
  report.rows.resize(sweep.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < sweep.size(); ++i) report.rows[i] = solve(sweep[i]);
  } else {
    std::vector<std::future<ConvergenceRow>> futures;
    std::size_t next = 0;
    while (next < sweep.size()) {
      const std::size_t batch = std::min<std::size_t>(jobs, sweep.size() - next);
      futures.clear();
      for (std::size_t k = 0; k < batch; ++k)
        futures.push_back(std::async(std::launch::async, solve, sweep[next + k]));
      for (std::size_t k = 0; k < batch; ++k) report.rows[next + k] = futures[k].get();
      next += batch;
    }
  }
  report.fit_linf = fit_from_rows(report.rows, false);
  report.fit_l2 = fit_from_rows(report.rows, true);
  return report;
}

inline Vector boundary_data_vector(const PhysicalDomain& domain,
                                   const std::function<double(const Vec2&, const Vec2&, BcKind)>& g) {
  return sample_boundary(domain, g);
}

}  // namespace detail

/// Scalar elliptic sweep (shared by the Poisson benchmarks).
inline ConvergenceReport run_elliptic_sweep(const EllipticProblem& prob,
                                            const std::vector<int>& sweep, int jobs,
                                            const std::function<double(const Vec2&)>& exact) {
  auto system = build_elliptic_system(prob, sweep.back(), Formulation::ForcingExtension,
                                      LsqOptions{0.0});
  return detail::sweep_report(sweep, jobs, [&](int ne) {
    detail::Timer timer;
    auto sol = solve_elliptic(prob, system, ne);
    auto err = compute_error_norms(sol, exact);
    return ConvergenceRow{ne, err.linf, err.l2, timer.seconds()};
  });
}

struct RunArtifacts {
  std::vector<std::string> files;
};

inline std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.output_dir);
  return (std::filesystem::path(cfg.output_dir) / name).string();
}

RunArtifacts run_experiment(const ExperimentConfig& cfg);  // defined below

// Individual experiment drivers ------------------------------------------

inline ConvergenceReport poisson1d_report(const ExperimentConfig& cfg) {
  EllipticProblem prob;
  prob.domain = problems::interval_2_5(cfg.n);
  prob.op = ScalarOperator::laplacian();
  prob.forcing = [](const Vec2& p) { return problems::poisson1d_forcing(p.x()); };
  prob.boundary_data = [](const Vec2& p, const Vec2&, BcKind) {
    return problems::poisson1d_exact(p.x());
  };
  return run_elliptic_sweep(prob, cfg.ne_sweep, cfg.jobs,
                            [](const Vec2& p) { return problems::poisson1d_exact(p.x()); });
}

inline ConvergenceReport poisson2d_star_report(const ExperimentConfig& cfg) {
  EllipticProblem prob;
  prob.domain = problems::star_domain(cfg.n);
  prob.op = ScalarOperator::neg_laplacian();
  prob.forcing = problems::poisson2d_forcing;
  prob.boundary_data = [](const Vec2& p, const Vec2&, BcKind) {
    return problems::poisson2d_exact(p);
  };
  return run_elliptic_sweep(prob, cfg.ne_sweep, cfg.jobs, problems::poisson2d_exact);
}

inline ConvergenceReport poisson2d_mixed_report(const ExperimentConfig& cfg) {
  EllipticProblem prob;
  prob.domain = problems::disc_domain(cfg.n, /*mixed_bc=*/true);
  prob.op = ScalarOperator::neg_laplacian();
  prob.forcing = problems::mixed_forcing;
  prob.boundary_data = [](const Vec2& p, const Vec2& nrm, BcKind kind) {
    return kind == BcKind::Neumann ? problems::mixed_gradient(p).dot(nrm)
                                   : problems::mixed_exact(p);
  };
  return run_elliptic_sweep(prob, cfg.ne_sweep, cfg.jobs, problems::mixed_exact);
}

struct HeatArtifacts {
  ConvergenceReport report;
  std::vector<std::vector<double>> series;  // t, linf, boundary deviation
};

inline HeatArtifacts heat_report(const ExperimentConfig& cfg, bool two_d) {
  HeatArtifacts out;
  PhysicalDomain domain =
      two_d ? problems::disc_domain(cfg.n) : problems::interval_2_5(cfg.n);
  HeatStepper::ScalarField exact, forcing;
  if (two_d) {
    exact = [](double t, const Vec2& p) { return problems::heat2d_exact(t, p); };
    forcing = [](double t, const Vec2& p) { return problems::heat2d_forcing(t, p); };
  } else {
    exact = [](double t, const Vec2& p) { return problems::heat1d_exact(t, p.x()); };
    forcing = [](double t, const Vec2& p) { return problems::heat1d_forcing(t, p.x()); };
  }
  TimeGrid grid{cfg.dt, cfg.t_final, TimeScheme::BDF4,
                cfg.init == "exact" ? InitPolicy::ExactHistory : InitPolicy::BackwardEulerInit,
                cfg.init_substeps};
  for (std::size_t i = 0; i < cfg.ne_sweep.size(); ++i) {
    const int ne = cfg.ne_sweep[i];
    detail::Timer timer;
    HeatStepper stepper(domain, ne, cfg.dt, LsqOptions{0.0});
    auto run = run_heat(stepper, grid, forcing, exact, exact);
    Vector w(domain.interior_count());
    for (Index k = 0; k < w.size(); ++k) w[k] = domain.grid->node_weight(domain.interior[k]);
    Vector ref = stepper.sample_interior(run.final_state.t, exact);
    auto err = error_norms(run.final_state.u, ref, w);
    out.report.rows.push_back({ne, err.linf, err.l2, timer.seconds()});
    if (i + 1 == cfg.ne_sweep.size()) {
      for (std::size_t k = 0; k < run.times.size(); ++k)
        out.series.push_back({run.times[k], run.linf_error[k], run.boundary_deviation[k]});
    }
  }
  out.report.fit_linf = fit_from_rows(out.report.rows, false);
  out.report.fit_l2 = fit_from_rows(out.report.rows, true);
  return out;
}

enum class TorusStokesVariant { Exact, Forced, Inflow };

/// Steady torus Stokes sweeps; the exact variant reports errors against the
/// manufactured solution, the others successive-refinement differences.
inline ConvergenceReport stokes_torus_report(const ExperimentConfig& cfg,
                                             TorusStokesVariant variant) {
  auto domain = problems::square_with_hole(cfg.n, cfg.boundary_spacing);
  const int ne_max = cfg.ne_sweep.back();
  auto family = std::make_shared<FourierFamily>(2, ne_max);
  TorusStokesSystem system(family, domain, ScalarOperator::neg_laplacian(), 1.0,
                           LsqOptions{0.0});

  Vector g(2 * domain.boundary_count()), f(2 * domain.interior_count());
  {
    Index row = 0;
    for (const auto& seg : domain.boundary)
      for (Index i = 0; i < seg.size(); ++i, row += 2) {
        Vec2 gv = Vec2::Zero();
        if (variant == TorusStokesVariant::Exact)
          gv = problems::stokes_velocity(seg.nodes.row(i));
        else if (variant == TorusStokesVariant::Inflow)
          gv = problems::inflow_data(seg.nodes.row(i));
        g[row] = gv.x();
        g[row + 1] = gv.y();
      }
    for (Index i = 0; i < domain.interior_count(); ++i) {
      Vec2 fv = Vec2::Zero();
      if (variant != TorusStokesVariant::Inflow)
        fv = problems::stokes_forcing(domain.grid->node2(domain.interior[i]));
      f[2 * i] = fv.x();
      f[2 * i + 1] = fv.y();
    }
  }

  Vector w = system.interior_weights();

  auto fields = [&](int ne) {
    auto sol = system.solve(g, f, ne);
    Vector u1 = system.gather_interior(system.velocity_on_grid(sol, 0));
    Vector u2 = system.gather_interior(system.velocity_on_grid(sol, 1));
    Vector p = pressure_normalize(system.gather_interior(system.pressure_on_grid(sol)), w);
    Vector all(3 * u1.size());
    all << u1, u2, p;
    return all;
  };

  ConvergenceReport report;
  if (variant == TorusStokesVariant::Exact) {
    Vector ref(3 * domain.interior_count());
    {
      Vector pe(domain.interior_count());
      for (Index i = 0; i < domain.interior_count(); ++i) {
        const Vec2 p = domain.grid->node2(domain.interior[i]);
        const Vec2 ue = problems::stokes_velocity(p);
        ref[i] = ue.x();
        ref[domain.interior_count() + i] = ue.y();
        pe[i] = problems::stokes_pressure(p);
      }
      ref.tail(domain.interior_count()) = pressure_normalize(pe, w);
    }
    for (int ne : cfg.ne_sweep) {
      detail::Timer timer;
      Vector u = fields(ne);
      const double linf = (u - ref).lpNorm<Eigen::Infinity>();
      // L2 over the velocity components with quadrature weights.
      double acc = 0;
      for (Index i = 0; i < w.size(); ++i) {
        acc += w[i] * std::pow(u[i] - ref[i], 2);
        acc += w[i] * std::pow(u[w.size() + i] - ref[w.size() + i], 2);
      }
      report.rows.push_back({ne, linf, std::sqrt(acc), timer.seconds()});
    }
  } else {
    std::optional<Vector> prev;
    int prev_ne = 0;
    for (int ne : cfg.ne_sweep) {
      detail::Timer timer;
      Vector u = fields(ne);
      if (prev) {
        double linf = (u - *prev).lpNorm<Eigen::Infinity>();
        double acc = 0;
        for (Index i = 0; i < w.size(); ++i) {
          acc += w[i] * std::pow(u[i] - (*prev)[i], 2);
          acc += w[i] * std::pow(u[w.size() + i] - (*prev)[w.size() + i], 2);
        }
        report.rows.push_back({prev_ne, linf, std::sqrt(acc), timer.seconds()});
      }
      prev = u;
      prev_ne = ne;
    }
  }
  report.fit_linf = fit_from_rows(report.rows, false);
  report.fit_l2 = fit_from_rows(report.rows, true);
  return report;
}

inline ConvergenceReport stokes_channel_report(const ExperimentConfig& cfg) {
  auto domain = problems::channel_with_disc(cfg.nx, cfg.ny, two_pi, -2.0, 2.0, Vec2(pi, 0.0),
                                            1.0, 0.0, cfg.boundary_spacing);
  ChannelStokesSystem::Options opt;
  opt.flow_rate = true;
  opt.flow_rate_x = 0.0;
  opt.lsq = LsqOptions{0.0};
  const int ne_max = cfg.ne_sweep.back();
  ChannelStokesSystem system(domain, ne_max, ne_max, opt);
  Vector g = Vector::Zero(2 * domain.boundary_count());
  Vector f = Vector::Zero(2 * domain.interior_count());
  Vector w = system.interior_weights();

  auto fields = [&](int ne) {
    auto sol = system.solve(g, f, ne, /*q=*/1.0);
    Vector u1 = system.gather_interior(system.velocity_on_grid(sol, 0));
    Vector u2 = system.gather_interior(system.velocity_on_grid(sol, 1));
    Vector p = pressure_normalize(system.gather_interior(system.pressure_on_grid(sol)), w);
    Vector all(3 * u1.size());
    all << u1, u2, p;
    return all;
  };

  ConvergenceReport report;
  std::optional<Vector> prev;
  int prev_ne = 0;
  for (int ne : cfg.ne_sweep) {
    detail::Timer timer;
    Vector u = fields(ne);
    if (prev) {
      double acc = 0;
      for (Index i = 0; i < w.size(); ++i) {
        acc += w[i] * std::pow(u[i] - (*prev)[i], 2);
        acc += w[i] * std::pow(u[w.size() + i] - (*prev)[w.size() + i], 2);
      }
      report.rows.push_back(
          {prev_ne, (u - *prev).lpNorm<Eigen::Infinity>(), std::sqrt(acc), timer.seconds()});
    }
    prev = u;
    prev_ne = ne;
  }
  report.fit_linf = fit_from_rows(report.rows, false);
  report.fit_l2 = fit_from_rows(report.rows, true);
  return report;
}

inline ConvergenceReport stokes_sphere_report(const ExperimentConfig& cfg) {
  const Index nb = static_cast<Index>(
      std::llround(two_pi * 0.6 / (pi / static_cast<double>(cfg.ntheta))));
  auto domain = problems::sphere_with_cap(cfg.nphi, cfg.ntheta, nb);
  SphereStokesSystem system(domain, cfg.ne_sweep.back(), LsqOptions{0.0});
  Vector g = Vector::Zero(2 * domain.boundary_count());
  Vector f(2 * domain.interior_count());
  const Index ntheta = domain.grid->axis_size(1);
  for (Index i = 0; i < domain.interior_count(); ++i) {
    const Index flat = domain.interior[i];
    const Vec2 fv = problems::sphere_forcing(domain.grid->axis_nodes[1][flat % ntheta],
                                             domain.grid->axis_nodes[0][flat / ntheta]);
    f[2 * i] = fv.x();
    f[2 * i + 1] = fv.y();
  }
  Vector w = system.interior_weights();

  ConvergenceReport report;
  std::optional<Vector> prev;
  int prev_ne = 0;
  for (int ne : cfg.ne_sweep) {
    detail::Timer timer;
    auto sol = system.solve(g, f, ne);
    Vector u = system.velocity_on_interior(sol);
    Vector p = pressure_normalize(system.pressure_on_interior(sol), w);
    Vector all(u.size() + p.size());
    all << u, p;
    if (prev) {
      Vector d = all - *prev;
      double acc = 0;
      for (Index i = 0; i < w.size(); ++i)
        acc += w[i] * (std::pow(d[2 * i], 2) + std::pow(d[2 * i + 1], 2));
      report.rows.push_back(
          {prev_ne, d.lpNorm<Eigen::Infinity>(), std::sqrt(acc), timer.seconds()});
    }
    prev = all;
    prev_ne = ne;
  }
  report.fit_linf = fit_from_rows(report.rows, false);
  report.fit_l2 = fit_from_rows(report.rows, true);
  return report;
}

enum class NsVariant { TorusExact, TorusNoslip, TorusInflow, ChannelExact, ChannelFlowRate };

inline ConvergenceReport ns_report(const ExperimentConfig& cfg, NsVariant variant) {
  const bool torus = variant == NsVariant::TorusExact || variant == NsVariant::TorusNoslip ||
                     variant == NsVariant::TorusInflow;
  NsExactData exact;
  exact.velocity = torus
                       ? VectorField([](double t, const Vec2& p) {
                           return problems::ns_torus_velocity(t, p);
                         })
                       : VectorField([](double t, const Vec2& p) {
                           return problems::ns_channel_velocity(t, p);
                         });
  exact.velocity_gradient =
      torus ? TensorField([](double t, const Vec2& p) {
               return Mat2(std::exp(t) * problems::stokes_velocity_gradient(p));
             })
            : TensorField([](double t, const Vec2& p) {
               return problems::ns_channel_velocity_gradient(t, p);
             });
  if (!torus)
    exact.velocity_laplacian = [](double t, const Vec2& p) {
      const double sx = std::sin(p.x()), cx = std::cos(p.x());
      const double e = std::exp(sx), y = p.y(), w = y * y - 4.0;
      return Vec2(std::exp(t) * (4.0 * y * w * (cx * cx - sx) + 24.0 * y) * e,
                  std::exp(t) * (-cx * e * (cx * cx - 3.0 * sx - 1.0) * w * w -
                                 cx * e * (12.0 * y * y - 16.0)));
    };

  VectorField forcing, boundary;
  switch (variant) {
    case NsVariant::TorusExact:
      forcing = [](double t, const Vec2& p) { return problems::ns_torus_forcing(t, p); };
      boundary = exact.velocity;
      break;
    case NsVariant::TorusNoslip:
      forcing = [](double t, const Vec2& p) { return problems::ns_torus_forcing(t, p); };
      boundary = [](double, const Vec2&) { return Vec2::Zero(); };
      break;
    case NsVariant::TorusInflow:
      forcing = [](double, const Vec2&) { return Vec2::Zero(); };
      boundary = [](double, const Vec2& p) { return problems::inflow_data(p); };
      break;
    case NsVariant::ChannelExact:
      forcing = [](double t, const Vec2& p) { return problems::ns_channel_forcing(t, p); };
      boundary = exact.velocity;
      break;
    case NsVariant::ChannelFlowRate:
      forcing = [](double, const Vec2&) { return Vec2::Zero(); };
      boundary = [](double, const Vec2&) { return Vec2::Zero(); };
      break;
  }

  NsRunConfig run_cfg;
  run_cfg.t_final = cfg.t_final;
  run_cfg.init = cfg.init == "exact"
                     ? InitPolicy::ExactHistory
                     : (cfg.init == "forward_euler" ? InitPolicy::ForwardEulerInit
                                                    : InitPolicy::BackwardEulerInit);
  run_cfg.init_substeps = cfg.init_substeps;
  run_cfg.dealias = cfg.dealias;

  ConvergenceReport report;
  const bool exact_ref = variant == NsVariant::TorusExact || variant == NsVariant::ChannelExact;

  if (torus) {
    auto domain = problems::square_with_hole(cfg.n, cfg.boundary_spacing);
    TorusNavierStokes ns(domain, cfg.ne_sweep.back(), cfg.dt);
    Vector w = ns.system().interior_weights();
    std::optional<Vector> prev;
    int prev_ne = 0;
    for (int ne : cfg.ne_sweep) {
      detail::Timer timer;
      run_cfg.ne = ne;
      auto state = ns.run(run_cfg, forcing, boundary, exact);
      Vector p = pressure_normalize(
          ns.system().gather_interior(ns.system().pressure_on_grid(state.sol)), w);
      Vector all(state.u.size() + p.size());
      all << state.u, p;
      if (exact_ref) {
        Vector uref = sample_vector_interior(domain, state.t, exact.velocity);
        Vector pref(w.size());
        for (Index i = 0; i < w.size(); ++i)
          pref[i] =
              problems::ns_torus_pressure(state.t, domain.grid->node2(domain.interior[i]));
        Vector rall(all.size());
        rall << uref, pressure_normalize(pref, w);
        Vector d = all - rall;
        double acc = 0;
        for (Index i = 0; i < w.size(); ++i)
          acc += w[i] * (std::pow(d[2 * i], 2) + std::pow(d[2 * i + 1], 2));
        report.rows.push_back({ne, d.lpNorm<Eigen::Infinity>(), std::sqrt(acc), timer.seconds()});
      } else if (prev) {
        Vector d = all - *prev;
        double acc = 0;
        for (Index i = 0; i < w.size(); ++i)
          acc += w[i] * (std::pow(d[2 * i], 2) + std::pow(d[2 * i + 1], 2));
        report.rows.push_back(
            {prev_ne, d.lpNorm<Eigen::Infinity>(), std::sqrt(acc), timer.seconds()});
      }
      prev = all;
      prev_ne = ne;
    }
  } else {
    auto domain = problems::channel_with_disc(cfg.nx, cfg.ny, two_pi, -2.0, 2.0, Vec2(pi, 0.0),
                                              1.0, 0.0, cfg.boundary_spacing);
    const bool flow_rate = variant == NsVariant::ChannelFlowRate;
    ChannelNavierStokes ns(domain, cfg.ne_sweep.back(), cfg.ne_sweep.back(), cfg.dt, flow_rate,
                           flow_rate ? 1.0 : 0.0);
    Vector w = ns.system().interior_weights();
    std::optional<Vector> prev;
    int prev_ne = 0;
    for (int ne : cfg.ne_sweep) {
      detail::Timer timer;
      run_cfg.ne = ne;
      auto state = ns.run(run_cfg, forcing, boundary, exact);
      Vector p = pressure_normalize(
          ns.system().gather_interior(ns.system().pressure_on_grid(state.sol)), w);
      Vector all(state.u.size() + p.size());
      all << state.u, p;
      if (exact_ref) {
        Vector uref = sample_vector_interior(domain, state.t, exact.velocity);
        Vector pref(w.size());
        for (Index i = 0; i < w.size(); ++i)
          pref[i] =
              problems::ns_channel_pressure(state.t, domain.grid->node2(domain.interior[i]));
        Vector rall(all.size());
        rall << uref, pressure_normalize(pref, w);
        Vector d = all - rall;
        double acc = 0;
        for (Index i = 0; i < w.size(); ++i)
          acc += w[i] * (std::pow(d[2 * i], 2) + std::pow(d[2 * i + 1], 2));
        report.rows.push_back({ne, d.lpNorm<Eigen::Infinity>(), std::sqrt(acc), timer.seconds()});
      } else if (prev) {
        Vector d = all - *prev;
        double acc = 0;
        for (Index i = 0; i < w.size(); ++i)
          acc += w[i] * (std::pow(d[2 * i], 2) + std::pow(d[2 * i + 1], 2));
        report.rows.push_back(
            {prev_ne, d.lpNorm<Eigen::Infinity>(), std::sqrt(acc), timer.seconds()});
      }
      prev = all;
      prev_ne = ne;
    }
  }
  report.fit_linf = fit_from_rows(report.rows, false);
  report.fit_l2 = fit_from_rows(report.rows, true);
  return report;
}

struct OldroydBArtifacts {
  std::vector<std::vector<double>> series;  // per the time-series schema
  OldroydBSimulation::Diagnostics final;
  double tau_xx_boundary_max = 0.0;
  double tau_xx_interior_sample_max = 0.0;
  double min_sigma_over_run = std::numeric_limits<double>::infinity();
};

inline OldroydBArtifacts run_oldroydb(const ExperimentConfig& cfg) {
  OldroydBParams params;
  params.q = 4.0;

  double x_half = 3.0 * pi;  // reduced desk scale
  Index nx = cfg.nx, ny = cfg.ny;
  int ne_x = cfg.ne_x, ne_y = cfg.ne_y;
  double dt = cfg.dt;
  if (cfg.paper_scale) {
    x_half = 6.0 * pi;
    nx = 768;
    ny = 120;
    ne_x = 240;
    ne_y = 40;
    dt = 2.5e-3;
  }
  auto domain = problems::channel_with_disc(nx, ny, 2.0 * x_half, -2.0, 2.0, Vec2(0.0, 0.0),
                                            1.0, -x_half, cfg.boundary_spacing);
  OldroydBSimulation sim(domain, params, ne_x, ne_y, dt, Vec2(0.0, 0.0), 1.0);

  OldroydBArtifacts out;
  std::vector<OldroydBSimulation::State> history{sim.initial_state()};
  {
    auto d0 = sim.diagnostics(history.back());
    out.series.push_back({d0.t, d0.drag_boundary, d0.drag_bulk, d0.alpha, d0.flow_rate_error,
                          d0.noslip_error, d0.min_eig_sigma});
    out.min_sigma_over_run = std::min(out.min_sigma_over_run, d0.min_eig_sigma);
  }
  const Index steps = TimeGrid{dt, cfg.t_final}.steps();
  for (Index n = 0; n < steps; ++n) {
    auto next = sim.step(history);
    history.push_back(next);
    if (history.size() > 3) history.erase(history.begin());
    auto d = sim.diagnostics(next);
    out.series.push_back({d.t, d.drag_boundary, d.drag_bulk, d.alpha, d.flow_rate_error,
                          d.noslip_error, d.min_eig_sigma});
    out.min_sigma_over_run = std::min(out.min_sigma_over_run, d.min_eig_sigma);
    out.final = d;
  }

  // tau_xx location diagnostic: boundary maximum vs an interior sample ring.
  const auto& last = history.back();
  for (int k = 0; k < 64; ++k) {
    const double t = two_pi * k / 64.0;
    out.tau_xx_boundary_max =
        std::max(out.tau_xx_boundary_max,
                 sim.tau_xx_at(last, Vec2(std::cos(t), std::sin(t))));
    out.tau_xx_interior_sample_max =
        std::max(out.tau_xx_interior_sample_max,
                 sim.tau_xx_at(last, Vec2(1.8 * std::cos(t), 1.9 * std::sin(t))));
  }
  return out;
}

inline RunArtifacts run_experiment(const ExperimentConfig& cfg) {
  RunArtifacts art;
  auto emit_report = [&](const ConvergenceReport& report) {
    const std::string conv = out_path(cfg, cfg.problem + "_convergence.csv");
    const std::string fit = out_path(cfg, cfg.problem + "_fit.csv");
    emit_convergence_csv(report, conv);
    emit_fit_csv(report, fit);
    art.files = {conv, fit};
  };

  if (cfg.problem == "poisson1d") {
    emit_report(poisson1d_report(cfg));
  } else if (cfg.problem == "poisson2d_star") {
    emit_report(poisson2d_star_report(cfg));
  } else if (cfg.problem == "poisson2d_mixed") {
    emit_report(poisson2d_mixed_report(cfg));
  } else if (cfg.problem == "heat1d" || cfg.problem == "heat2d") {
    auto heat = heat_report(cfg, cfg.problem == "heat2d");
    emit_report(heat.report);
    const std::string series = out_path(cfg, cfg.problem + "_series.csv");
    emit_series_csv({"t", "linf_error", "boundary_deviation"}, heat.series, series);
    art.files.push_back(series);
  } else if (cfg.problem == "stokes_torus_exact") {
    emit_report(stokes_torus_report(cfg, TorusStokesVariant::Exact));
  } else if (cfg.problem == "stokes_torus_forced") {
    emit_report(stokes_torus_report(cfg, TorusStokesVariant::Forced));
  } else if (cfg.problem == "stokes_torus_inflow") {
    emit_report(stokes_torus_report(cfg, TorusStokesVariant::Inflow));
  } else if (cfg.problem == "stokes_channel") {
    emit_report(stokes_channel_report(cfg));
  } else if (cfg.problem == "stokes_sphere") {
    emit_report(stokes_sphere_report(cfg));
  } else if (cfg.problem == "ns_torus_exact") {
    emit_report(ns_report(cfg, NsVariant::TorusExact));
  } else if (cfg.problem == "ns_torus_noslip") {
    emit_report(ns_report(cfg, NsVariant::TorusNoslip));
  } else if (cfg.problem == "ns_torus_inflow") {
    emit_report(ns_report(cfg, NsVariant::TorusInflow));
  } else if (cfg.problem == "ns_channel_exact") {
    emit_report(ns_report(cfg, NsVariant::ChannelExact));
  } else if (cfg.problem == "ns_channel_flowrate") {
    emit_report(ns_report(cfg, NsVariant::ChannelFlowRate));
  } else if (cfg.problem == "oldroydb_channel") {
    auto oldb = run_oldroydb(cfg);
    const std::string series = out_path(cfg, cfg.problem + "_series.csv");
    emit_series_csv({"t", "C_D_boundary", "C_D_bulk", "alpha", "flowrate_error", "noslip_error",
                     "min_eig_sigma"},
                    oldb.series, series);
    art.files.push_back(series);
  } else {
    throw ConfigError("unknown problem key: " + cfg.problem);
  }
  return art;
}

}  // namespace pe::harness
