#pragma once

// Thermodynamic functions of a model: canonical free energy, constrained
// entropy, their curve sweeps, and the four mixed-ensemble variants obtained
// by treating the leading component canonically or the trailing one by
// conditioning.

#include <vector>

#include "ensemblekit/common.hpp"
#include "ensemblekit/lft.hpp"
#include "ensemblekit/model.hpp"
#include "ensemblekit/solvers.hpp"

namespace ek {

struct ThermoPoint {
  double value = -kInf;      // function value; -inf marks an unattainable target
  bool feasible = true;
  SolveDiag diag;
  std::vector<Macrostate> minimizers;
};

struct ThermoCurve {
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<SolveDiag> diags;
  std::vector<bool> feasible;

  SampledCurve sampled() const { return SampledCurve{grid, values}; }
};

namespace detail {

inline SolverOptions at_point(const SolverOptions& opt, std::uint64_t point) {
  SolverOptions o = opt;
  o.point_index = point;
  return o;
}

inline void require_mixed(const Model& m) {
  if (m.sigma != 2 || m.tau != 1)
    throw ConfigError("mixed-ensemble functions need sigma = 2, tau = 1");
}

// Attained-range precheck shared by the sweep loops, so grid points outside
// the reachable window skip the constrained solve entirely.
struct RangeGate {
  double lo = -kInf, hi = kInf, margin = 0.0;
  bool outside(double u) const { return u < lo - margin || u > hi + margin; }
};

inline RangeGate component_gate(const Model& m, int comp, const SolverOptions& opt) {
  RangeGate g;
  if (m.kind == ModelKind::Tabular) return g;  // exact slicing is cheap
  auto range = repr_attained_range(m, comp, opt);
  g.lo = range.first;
  g.hi = range.second;
  g.margin = std::max(opt.tol_feas, 1e-6 * std::max(1.0, g.hi - g.lo));
  return g;
}

}  // namespace detail

// phi(beta) = inf over the hidden space of I + <beta, H>.
inline ThermoPoint free_energy(const Model& m, const std::vector<double>& beta,
                               const SolverOptions& opt = {}) {
  auto r = minimize_tilted(m, beta, opt);
  ThermoPoint p;
  p.value = r.value;
  p.diag = r.diag;
  p.minimizers = std::move(r.minimizers);
  return p;
}

inline ThermoPoint free_energy(const Model& m, double beta, const SolverOptions& opt = {}) {
  if (m.sigma != 1) throw ShapeError("scalar multiplier requires sigma = 1");
  return free_energy(m, std::vector<double>{beta}, opt);
}

// s(u) = -inf{I : H = u}; -inf when u is outside the attained range of H.
inline ThermoPoint entropy_point(const Model& m, const std::vector<double>& u,
                                 const SolverOptions& opt = {}) {
  if (int(u.size()) != m.sigma) throw ShapeError("conserved value length must equal sigma");
  std::vector<int> comps(size_t(m.sigma), 0);
  for (int i = 0; i < m.sigma; ++i) comps[size_t(i)] = i;
  auto r = minimize_constrained(m, comps, u, std::vector<double>(size_t(m.sigma), 0.0), opt);
  ThermoPoint p;
  p.diag = r.diag;
  if (!r.feasible) {
    p.feasible = false;
    p.value = -kInf;
    // A target inside the attained range that the solver could not hit is a
    // diagnostic failure, not an empty constraint set.
    bool outside = false;
    double margin = 0.0;
    for (int i = 0; i < m.sigma; ++i) {
      auto range = repr_attained_range(m, i, opt);
      margin = std::max(opt.tol_feas, 1e-6 * std::max(1.0, range.second - range.first));
      if (u[size_t(i)] < range.first - margin || u[size_t(i)] > range.second + margin) outside = true;
    }
    p.diag.converged = outside;  // clean infeasibility is not a solver failure
    return p;
  }
  p.value = -r.value;
  p.minimizers = std::move(r.minimizers);
  return p;
}

inline ThermoPoint entropy_point(const Model& m, double u, const SolverOptions& opt = {}) {
  if (m.sigma != 1) throw ShapeError("scalar conserved value requires sigma = 1");
  return entropy_point(m, std::vector<double>{u}, opt);
}

// Sweep of entropy_point over a grid (sigma = 1); per-point diagnostics are
// recorded without aborting the sweep.
inline ThermoCurve entropy_curve(const Model& m, const std::vector<double>& grid,
                                 const SolverOptions& opt = {}) {
  if (m.sigma != 1) throw ShapeError("entropy_curve requires sigma = 1");
  ThermoCurve c;
  c.grid = grid;
  c.values.assign(grid.size(), -kInf);
  c.diags.assign(grid.size(), SolveDiag{});
  c.feasible.assign(grid.size(), false);
  auto gate = detail::component_gate(m, 0, opt);
  parallel_for(grid.size(), [&](size_t i) {
    if (gate.outside(grid[i])) return;  // stays -inf, cleanly infeasible
    auto p = entropy_point(m, grid[i], detail::at_point(opt, i));
    c.values[i] = p.value;
    c.diags[i] = p.diag;
    c.feasible[i] = p.feasible;
  });
  return c;
}

inline ThermoCurve free_energy_curve(const Model& m, const std::vector<double>& grid,
                                     const SolverOptions& opt = {}) {
  if (m.sigma != 1) throw ShapeError("free_energy_curve requires sigma = 1");
  ThermoCurve c;
  c.grid = grid;
  c.values.assign(grid.size(), 0.0);
  c.diags.assign(grid.size(), SolveDiag{});
  c.feasible.assign(grid.size(), true);
  parallel_for(grid.size(), [&](size_t i) {
    auto p = free_energy(m, grid[i], detail::at_point(opt, i));
    c.values[i] = p.value;
    c.diags[i] = p.diag;
  });
  return c;
}

// ---------------------------------------------------------------------------
// Mixed ensembles (sigma = 2, tau = 1): component 0 carries the canonical
// tilt, component 1 the conditioning.

// phi1(b1) = inf{I + b1 H1}.
inline ThermoPoint leading_free_energy(const Model& m, double beta1, const SolverOptions& opt = {}) {
  detail::require_mixed(m);
  return free_energy(m, std::vector<double>{beta1, 0.0}, opt);
}

// s_b1(u2) = -inf{I + b1 H1 : H2 = u2} + phi1(b1).
inline ThermoPoint mixed_entropy_point_fixed_beta1(const Model& m, double beta1, double u2,
                                                   double phi1, const SolverOptions& opt = {}) {
  detail::require_mixed(m);
  auto r = minimize_constrained(m, {1}, {u2}, {beta1, 0.0}, opt);
  ThermoPoint p;
  p.diag = r.diag;
  if (!r.feasible) {
    p.feasible = false;
    p.value = -kInf;
    auto range = repr_attained_range(m, 1, opt);
    double margin = std::max(opt.tol_feas, 1e-6 * std::max(1.0, range.second - range.first));
    p.diag.converged = (u2 < range.first - margin || u2 > range.second + margin);
    return p;
  }
  p.value = -r.value + phi1;
  p.minimizers = std::move(r.minimizers);
  return p;
}

inline ThermoCurve mixed_entropy_fixed_beta1(const Model& m, double beta1,
                                             const std::vector<double>& u2_grid,
                                             const SolverOptions& opt = {}) {
  detail::require_mixed(m);
  const double phi1 = leading_free_energy(m, beta1, opt).value;
  ThermoCurve c;
  c.grid = u2_grid;
  c.values.assign(u2_grid.size(), -kInf);
  c.diags.assign(u2_grid.size(), SolveDiag{});
  c.feasible.assign(u2_grid.size(), false);
  auto gate = detail::component_gate(m, 1, opt);
  parallel_for(u2_grid.size(), [&](size_t i) {
    if (gate.outside(u2_grid[i])) return;
    auto p = mixed_entropy_point_fixed_beta1(m, beta1, u2_grid[i], phi1, detail::at_point(opt, i));
    c.values[i] = p.value;
    c.diags[i] = p.diag;
    c.feasible[i] = p.feasible;
  });
  return c;
}

// J2(u2) = inf{I : H2 = u2}; the conditioning must be attainable.
inline ThermoPoint trailing_constraint_rate(const Model& m, double u2, const SolverOptions& opt = {}) {
  detail::require_mixed(m);
  auto r = minimize_constrained(m, {1}, {u2}, {0.0, 0.0}, opt);
  ThermoPoint p;
  p.diag = r.diag;
  p.feasible = r.feasible;
  p.value = r.feasible ? r.value : kInf;
  p.minimizers = std::move(r.minimizers);
  return p;
}

// s^{u2}(u1) = -J(u1,u2) + J2(u2).
inline ThermoCurve mixed_entropy_fixed_u2(const Model& m, double u2,
                                          const std::vector<double>& u1_grid,
                                          const SolverOptions& opt = {}) {
  detail::require_mixed(m);
  auto j2 = trailing_constraint_rate(m, u2, opt);
  if (!j2.feasible)
    throw FeasibilityError("conditioned value u2 = " + format_double(u2) +
                           " is outside the attained range of H2");
  ThermoCurve c;
  c.grid = u1_grid;
  c.values.assign(u1_grid.size(), -kInf);
  c.diags.assign(u1_grid.size(), SolveDiag{});
  c.feasible.assign(u1_grid.size(), false);
  auto gate = detail::component_gate(m, 0, opt);  // necessary condition only
  parallel_for(u1_grid.size(), [&](size_t i) {
    if (gate.outside(u1_grid[i])) return;
    auto r = minimize_constrained(m, {0, 1}, {u1_grid[i], u2}, {0.0, 0.0},
                                  detail::at_point(opt, i));
    c.diags[i] = r.diag;
    if (r.feasible) {
      c.values[i] = -(r.value - j2.value);
      c.feasible[i] = true;
    } else {
      c.diags[i].converged = true;  // joint constraint genuinely empty on tabular
    }
  });
  return c;
}

// phi_b1(b2) = inf{I + b1 H1 + b2 H2} - phi1(b1).
inline ThermoPoint mixed_free_energy_canonical(const Model& m, double beta1, double beta2,
                                               const SolverOptions& opt = {}) {
  detail::require_mixed(m);
  const double phi1 = leading_free_energy(m, beta1, opt).value;
  auto r = minimize_tilted(m, {beta1, beta2}, opt);
  ThermoPoint p;
  p.value = r.value - phi1;
  p.diag = r.diag;
  p.minimizers = std::move(r.minimizers);
  return p;
}

// phi^{u2}(b1) = inf{I + b1 H1 : H2 = u2} - J2(u2).
inline ThermoPoint mixed_free_energy_conditioned(const Model& m, double u2, double beta1,
                                                 const SolverOptions& opt = {}) {
  detail::require_mixed(m);
  auto j2 = trailing_constraint_rate(m, u2, opt);
  if (!j2.feasible)
    throw FeasibilityError("conditioned value u2 = " + format_double(u2) +
                           " is outside the attained range of H2");
  auto r = minimize_constrained(m, {1}, {u2}, {beta1, 0.0}, opt);
  ThermoPoint p;
  p.diag = r.diag;
  if (!r.feasible) {
    p.feasible = false;
    p.value = kInf;
    return p;
  }
  p.value = r.value - j2.value;
  p.minimizers = std::move(r.minimizers);
  return p;
}

}  // namespace ek
