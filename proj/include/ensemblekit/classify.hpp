#pragma once

// Per-point equivalence classification and machine checks of the predicted
// set relations. A conserved value is Full when some supporting line touches
// the entropy graph only there, Partial when a supporting line exists but
// also touches elsewhere, and Nonequivalent when the graph point lies
// strictly below the concave hull. Each label is verified against the
// computed equilibrium sets: Equal, proper containment, or disjointness from
// every canonical set on a multiplier grid.

#include <functional>
#include <string>
#include <vector>

#include "ensemblekit/common.hpp"
#include "ensemblekit/equilibria.hpp"
#include "ensemblekit/lft.hpp"
#include "ensemblekit/model.hpp"
#include "ensemblekit/thermo.hpp"

namespace ek {

enum class Label { Full, Partial, Nonequivalent, Boundary, Infeasible };

inline std::string label_name(Label l) {
  switch (l) {
    case Label::Full: return "Full";
    case Label::Partial: return "Partial";
    case Label::Nonequivalent: return "Nonequivalent";
    case Label::Boundary: return "Boundary";
    case Label::Infeasible: return "Infeasible";
  }
  return "?";
}

// Extreme finite grid points of a sampled window carry one-sided slopes the
// grid cannot certify, so they are labelled Boundary and excluded from
// pass/fail statistics. Tabular models enumerate their whole domain exactly
// and keep full labels everywhere.
enum class BoundaryLabeling { Auto, Always, Never };

struct ClassifyOptions {
  SolverOptions solver;
  double eps_c = 0.0;    // 0 = scale-aware default from the curve
  double delta_t = 0.0;
  int beta_grid_points = 1000;
  double beta_grid_halfwidth = 0.0;       // 0 = 10x the hull slope spread
  std::vector<double> explicit_beta_grid; // overrides the derived grid
  BoundaryLabeling boundary = BoundaryLabeling::Auto;
  bool verify = true;
};

struct CheckOutcome {
  std::string name;
  bool pass = false;
  bool advisory = false;  // heuristic equilibrium sets downgrade checks
  std::string evidence;
};

struct PointRecord {
  double u = 0.0;
  double s = -kInf;
  double s_hull = -kInf;
  double beta_minus = kInf;  // supporting slope from the left
  double beta_plus = -kInf;  // supporting slope from the right
  bool in_C = false;
  bool in_T = false;
  Label label = Label::Infeasible;
  bool has_witness = false;
  double witness = 0.0;
  bool boundary_point = false;
  bool certified = true;  // equilibrium sets used in checks were exact
  std::vector<CheckOutcome> checks;

  bool verified() const {
    for (const auto& c : checks)
      if (!c.advisory && !c.pass) return false;
    return true;
  }
};

struct HullContext {
  SampledCurve curve;
  HullResult hull;
  SupportTolerances tol;
};

inline HullContext make_hull_context(SampledCurve curve, double eps_c = 0.0, double delta_t = 0.0) {
  curve.check();
  HullContext ctx;
  ctx.tol = default_support_tolerances(curve);
  if (eps_c > 0.0) ctx.tol.eps_c = eps_c;
  if (delta_t > 0.0) ctx.tol.delta_t = delta_t;
  ctx.hull = concave_hull(curve);
  ctx.curve = std::move(curve);
  return ctx;
}

namespace detail {

inline bool extreme_finite_point(const SampledCurve& c, size_t i) {
  if (!std::isfinite(c.values[i])) return false;
  bool finite_left = false, finite_right = false;
  for (size_t k = 0; k < i; ++k) finite_left |= std::isfinite(c.values[k]);
  for (size_t k = i + 1; k < c.size(); ++k) finite_right |= std::isfinite(c.values[k]);
  return !finite_left || !finite_right;
}

}  // namespace detail

inline PointRecord classify_point(const HullContext& ctx, size_t i, bool label_boundary) {
  if (i >= ctx.curve.size()) throw ShapeError("classification index off the grid");
  PointRecord r;
  r.u = ctx.curve.grid[i];
  r.s = ctx.curve.values[i];
  r.s_hull = ctx.hull.hull[i];
  r.beta_minus = ctx.hull.beta_minus[i];
  r.beta_plus = ctx.hull.beta_plus[i];
  if (!std::isfinite(r.s)) {
    r.label = Label::Infeasible;
    return r;
  }
  auto st = support_tests(ctx.curve, ctx.hull, i, ctx.tol);
  r.in_C = st.in_C;
  r.in_T = st.in_T;
  r.has_witness = st.has_witness;
  r.witness = st.witness;
  r.boundary_point = detail::extreme_finite_point(ctx.curve, i);
  if (label_boundary && r.boundary_point) {
    r.label = Label::Boundary;
    return r;
  }
  r.label = st.in_T ? Label::Full : (st.in_C ? Label::Partial : Label::Nonequivalent);
  return r;
}

// ---------------------------------------------------------------------------
// Verification against equilibrium sets. The same engine serves the pure
// ensemble pair and both mixed pairs through two set providers: the
// exponential-tilt family along the active axis and the conditioned family.

struct EnsembleBridge {
  std::function<EquilibriumSet(double)> canonical_at;
  std::function<EquilibriumSet(double)> micro_at;
  // Conserved value along the classified axis, for grid-resolution checks.
  std::function<double(const Macrostate&)> active_value;
  // Objective of the conditioned problem (the quantity micro_at minimizes).
  std::function<double(const Macrostate&)> conditioned_objective;
};

inline EnsembleBridge pure_bridge(const Model& m, const SolverOptions& opt = {}) {
  if (m.sigma != 1) throw ConfigError("pure classification bridge needs sigma = 1");
  EnsembleBridge b;
  b.canonical_at = [&m, opt](double beta) { return canonical_set(m, beta, opt); };
  b.micro_at = [&m, opt](double u) { return microcanonical_set(m, u, opt); };
  b.active_value = [&m](const Macrostate& x) { return repr_component(m, x, 0); };
  b.conditioned_objective = [&m](const Macrostate& x) { return rate_value(m, x); };
  return b;
}

inline EnsembleBridge fixed_beta1_bridge(const Model& m, double beta1,
                                         const SolverOptions& opt = {}) {
  EnsembleBridge b;
  b.canonical_at = [&m, beta1, opt](double beta2) { return canonical2_set(m, beta1, beta2, opt); };
  b.micro_at = [&m, beta1, opt](double u2) { return mixed_set(m, beta1, u2, opt); };
  b.active_value = [&m](const Macrostate& x) { return repr_component(m, x, 1); };
  b.conditioned_objective = [&m, beta1](const Macrostate& x) {
    return rate_value(m, x) + beta1 * repr_component(m, x, 0);
  };
  return b;
}

inline EnsembleBridge fixed_u2_bridge(const Model& m, double u2, const SolverOptions& opt = {}) {
  EnsembleBridge b;
  b.canonical_at = [&m, u2, opt](double beta1) { return mixed_set(m, beta1, u2, opt); };
  b.micro_at = [&m, u2, opt](double u1) { return micro2_set(m, u1, u2, opt); };
  b.active_value = [&m](const Macrostate& x) { return repr_component(m, x, 0); };
  b.conditioned_objective = [&m](const Macrostate& x) { return rate_value(m, x); };
  return b;
}

// Disjointness grid spanning ten times the spread of hull slopes.
inline std::vector<double> default_beta_grid(const HullContext& ctx, const ClassifyOptions& opt) {
  if (!opt.explicit_beta_grid.empty()) return opt.explicit_beta_grid;
  double half = opt.beta_grid_halfwidth;
  if (half <= 0.0) {
    double lo = kInf, hi = -kInf;
    for (size_t i = 0; i < ctx.curve.size(); ++i) {
      for (double s : {ctx.hull.beta_minus[i], ctx.hull.beta_plus[i]})
        if (std::isfinite(s)) {
          lo = std::min(lo, s);
          hi = std::max(hi, s);
        }
    }
    if (lo > hi) half = 1.0;
    else half = 10.0 * std::max({hi - lo, std::fabs(lo), std::fabs(hi), 0.1});
  }
  return linspace(-half, half, std::max(2, opt.beta_grid_points));
}

inline void verify_point(const EnsembleBridge& bridge, const HullContext& ctx,
                         const std::vector<double>& beta_grid, PointRecord* rec,
                         double tol_match = 1e-6) {
  if (rec->label == Label::Infeasible || rec->label == Label::Boundary) return;
  EquilibriumSet eu = bridge.micro_at(rec->u);
  if (eu.infeasible || eu.empty()) {
    rec->checks.push_back({"conditioned-set-nonempty", false, false,
                           "conditioned set came back empty at a finite entropy point"});
    return;
  }
  rec->certified = eu.exact;
  const bool advisory = !eu.exact;

  auto relation_at = [&](double beta) { return set_distance(eu, bridge.canonical_at(beta), tol_match); };

  SlopeInterval sd{rec->beta_plus, rec->beta_minus, false};
  auto probes = support_probes(sd);

  if (rec->label == Label::Full) {
    if (!advisory) {
      auto d = relation_at(rec->witness);
      rec->checks.push_back({"full-equal-at-witness", d.relation == SetRelation::Equal, false,
                             "beta = " + format_double(rec->witness) + " -> " + relation_name(d.relation)});
      return;
    }
    // Sampled curves pin the supporting slope only to grid resolution, so the
    // witness selects a conserved value one cell away at best, and heuristic
    // searches may under-enumerate symmetric copies. The faithful check: the
    // selected value lies within a grid cell of u, every found conditioned
    // minimizer at that value is canonical, and every canonical member
    // attains the conditioned level there (hence is itself a conditioned
    // minimizer up to tolerance).
    EquilibriumSet eb = bridge.canonical_at(rec->witness);
    double grid_step = 0.0;
    for (size_t i = 0; i + 1 < ctx.curve.size(); ++i)
      if (ctx.curve.grid[i] <= rec->u && rec->u <= ctx.curve.grid[i + 1])
        grid_step = ctx.curve.grid[i + 1] - ctx.curve.grid[i];
    if (grid_step == 0.0 && ctx.curve.size() >= 2)
      grid_step = ctx.curve.grid[1] - ctx.curve.grid[0];
    bool ok = !eb.empty();
    double selected = ok ? bridge.active_value(eb.members.front()) : 0.0;
    double spread = 0.0;
    for (const Macrostate& x : eb.members) {
      double v = bridge.active_value(x);
      ok = ok && std::fabs(v - rec->u) <= 1.5 * grid_step;
      spread = std::max(spread, std::fabs(v - selected));
    }
    ok = ok && spread <= tol_match;
    std::string ev = "beta = " + format_double(rec->witness) + " selects value " +
                     format_double(selected) + " (target " + format_double(rec->u) + ", cell " +
                     format_double(grid_step) + ")";
    if (ok) {
      auto eu_sel = bridge.micro_at(selected);
      // Best conditioned level known at the selected value: the canonical
      // members are feasible there, so they bound it from above too.
      double canon_level = -kInf;
      for (const Macrostate& x : eb.members)
        canon_level = std::max(canon_level, bridge.conditioned_objective(x));
      double cond_level = eu_sel.empty() ? kInf : eu_sel.objective;
      double level_tol = std::max(1e-9, 1e-6 * std::max(std::fabs(canon_level), std::fabs(cond_level)));
      if (cond_level < canon_level - level_tol) {
        // a strictly better conditioned state exists: genuine evidence
        // against equality at the witness
        ok = false;
        ev += "; conditioned level beats the canonical set by " +
              format_double(canon_level - cond_level);
      } else if (cond_level <= canon_level + level_tol) {
        // matching levels: every conditioned minimizer found must be canonical
        for (const Macrostate& y : eu_sel.members) {
          double nearest = kInf;
          for (const Macrostate& x : eb.members)
            nearest = std::min(nearest, macrostate_distance(y, x));
          ok = ok && nearest <= tol_match;
        }
        ev += "; levels agree, conditioned set " +
              relation_name(set_distance(eu_sel, eb, tol_match).relation);
      } else {
        // the conditioned search stalled on a worse branch; the canonical set
        // itself certifies the better level, so there is no counterevidence
        ev += "; conditioned search under-resolved (level gap " +
              format_double(cond_level - canon_level) + "), no counterevidence";
      }
    }
    rec->checks.push_back({"full-equal-at-witness", ok, advisory, ev});
    return;
  }
  if (rec->label == Label::Partial) {
    bool all = true;
    std::string ev;
    for (double beta : probes) {
      auto d = relation_at(beta);
      bool ok = d.relation == SetRelation::ProperSubsetAinB;
      all = all && ok;
      ev += (ev.empty() ? "" : "; ") + ("beta=" + format_double(beta) + " -> " + relation_name(d.relation));
    }
    rec->checks.push_back({"partial-proper-subset-on-superdifferential", all, advisory, ev});
    return;
  }
  // Nonequivalent: the graph point must sit strictly below the hull and stay
  // disjoint from every canonical set on the grid and at the hull slopes.
  bool below = rec->s < rec->s_hull - ctx.tol.eps_c;
  rec->checks.push_back({"hull-gap", below,
                         advisory, "s = " + format_double(rec->s) + ", hull = " + format_double(rec->s_hull)});
  size_t disjoint = 0;
  std::vector<char> ok(beta_grid.size(), 0);
  parallel_for(beta_grid.size(), [&](size_t k) {
    ok[k] = relation_at(beta_grid[k]).relation == SetRelation::Disjoint ? 1 : 0;
  });
  for (char c : ok) disjoint += size_t(c);
  rec->checks.push_back({"disjoint-on-multiplier-grid", disjoint == beta_grid.size(), advisory,
                         std::to_string(disjoint) + "/" + std::to_string(beta_grid.size()) +
                             " disjointness checks passed"});
  bool probes_disjoint = true;
  std::string pev;
  for (double beta : probes) {
    auto d = relation_at(beta);
    bool okp = d.relation == SetRelation::Disjoint;
    probes_disjoint = probes_disjoint && okp;
    pev += (pev.empty() ? "" : "; ") + ("beta=" + format_double(beta) + " -> " + relation_name(d.relation));
  }
  rec->checks.push_back({"disjoint-on-superdifferential", probes_disjoint, advisory, pev});
}

// ---------------------------------------------------------------------------
// Sweep reports

struct ClassificationReport {
  std::string model_digest;
  std::string mode;          // "pure", "fixed_beta1", "fixed_u2"
  double fixed_parameter = 0.0;
  std::vector<double> grid;
  SupportTolerances tol{0.0, 0.0};
  double beta_grid_halfwidth = 0.0;
  int beta_grid_points = 0;
  std::vector<PointRecord> points;

  bool all_verified() const {
    for (const auto& p : points)
      if (!p.verified()) return false;
    return true;
  }
};

namespace detail {

inline bool want_boundary_labels(const Model& m, BoundaryLabeling mode) {
  switch (mode) {
    case BoundaryLabeling::Always: return true;
    case BoundaryLabeling::Never: return false;
    case BoundaryLabeling::Auto: return m.kind != ModelKind::Tabular;
  }
  return true;
}

inline ClassificationReport run_classification(const Model& m, const EnsembleBridge& bridge,
                                               const SampledCurve& curve, const std::string& mode,
                                               double fixed_parameter, const ClassifyOptions& opt) {
  HullContext ctx = make_hull_context(curve, opt.eps_c, opt.delta_t);
  auto beta_grid = default_beta_grid(ctx, opt);
  ClassificationReport rep;
  rep.mode = mode;
  rep.fixed_parameter = fixed_parameter;
  rep.grid = curve.grid;
  rep.tol = ctx.tol;
  rep.beta_grid_halfwidth = beta_grid.empty() ? 0.0 : -beta_grid.front();
  rep.beta_grid_points = int(beta_grid.size());
  const bool boundary = want_boundary_labels(m, opt.boundary);
  rep.points.resize(curve.size());
  for (size_t i = 0; i < curve.size(); ++i) {
    rep.points[i] = classify_point(ctx, i, boundary);
    if (opt.verify) verify_point(bridge, ctx, beta_grid, &rep.points[i], opt.solver.tol_match);
  }
  return rep;
}

}  // namespace detail

// Pure-ensemble sweep over a conserved-value grid (sigma = 1).
inline ClassificationReport classify_sweep(const Model& m, const std::vector<double>& u_grid,
                                           const ClassifyOptions& opt = {}) {
  ThermoCurve curve = entropy_curve(m, u_grid, opt.solver);
  return detail::run_classification(m, pure_bridge(m, opt.solver), curve.sampled(), "pure", 0.0, opt);
}

struct MixedMode {
  enum Kind { FixedBeta1, FixedU2 } kind;
  double value;
};

inline ClassificationReport classify_mixed(const Model& m, const MixedMode& mode,
                                           const std::vector<double>& grid,
                                           const ClassifyOptions& opt = {}) {
  if (m.sigma != 2 || m.tau != 1) throw ConfigError("mixed classification needs sigma = 2, tau = 1");
  if (mode.kind == MixedMode::FixedBeta1) {
    ThermoCurve curve = mixed_entropy_fixed_beta1(m, mode.value, grid, opt.solver);
    return detail::run_classification(m, fixed_beta1_bridge(m, mode.value, opt.solver),
                                      curve.sampled(), "fixed_beta1", mode.value, opt);
  }
  ThermoCurve curve = mixed_entropy_fixed_u2(m, mode.value, grid, opt.solver);
  return detail::run_classification(m, fixed_u2_bridge(m, mode.value, opt.solver), curve.sampled(),
                                    "fixed_u2", mode.value, opt);
}

// ---------------------------------------------------------------------------
// Canonical decomposition: every canonical set splits into conditioned sets
// over the distinct conserved values of its members, and each such value
// supports the hull at slope beta.

struct DecompositionGroup {
  double u = 0.0;
  std::vector<Macrostate> members;
  bool matches_conditioned_set = false;
  bool in_hull_argmin = false;  // u attains the transform at this multiplier
  bool on_hull = false;         // s(u) = s**(u) at the nearest grid point
};

struct Decomposition {
  EquilibriumSet canonical;
  std::vector<DecompositionGroup> groups;
  bool passed = false;
};

namespace detail {

inline std::vector<size_t> hull_argmin(const HullContext& ctx, double beta) {
  double best = kInf;
  for (size_t i = 0; i < ctx.curve.size(); ++i) {
    if (ctx.hull.hull[i] == -kInf) continue;
    best = std::min(best, beta * ctx.curve.grid[i] - ctx.hull.hull[i]);
  }
  double band = std::max(1e-12, 1e-9 * std::max(1.0, ctx.curve.finite_range()));
  std::vector<size_t> arg;
  for (size_t i = 0; i < ctx.curve.size(); ++i) {
    if (ctx.hull.hull[i] == -kInf) continue;
    if (beta * ctx.curve.grid[i] - ctx.hull.hull[i] <= best + band) arg.push_back(i);
  }
  return arg;
}

}  // namespace detail

inline Decomposition decompose_canonical(const Model& m, double beta, const HullContext& ctx,
                                         const SolverOptions& opt = {}) {
  if (m.sigma != 1) throw ConfigError("decompose_canonical needs sigma = 1");
  Decomposition d;
  d.canonical = canonical_set(m, beta, opt);

  const double bucket = opt.tol_feas;
  for (const Macrostate& x : d.canonical.members) {
    double u = repr_component(m, x, 0);
    DecompositionGroup* grp = nullptr;
    for (auto& g : d.groups)
      if (std::fabs(g.u - u) <= bucket) {
        grp = &g;
        break;
      }
    if (grp == nullptr) {
      d.groups.push_back({});
      grp = &d.groups.back();
      grp->u = u;
    }
    grp->members.push_back(x);
  }
  for (size_t a = 0; a < d.groups.size(); ++a)
    for (size_t b = a + 1; b < d.groups.size(); ++b)
      if (std::fabs(d.groups[a].u - d.groups[b].u) <= 10.0 * bucket)
        throw ConfigError("conserved-value buckets collide; tighten the grouping tolerance");

  auto arg = detail::hull_argmin(ctx, beta);
  bool all = !d.groups.empty();
  for (auto& g : d.groups) {
    EquilibriumSet group_set;
    group_set.members = g.members;
    group_set.tag = EnsembleTag{EnsembleKind::Microcanonical, {}, {g.u}};
    auto eu = microcanonical_set(m, g.u, opt);
    g.matches_conditioned_set = set_distance(group_set, eu, opt.tol_match).relation == SetRelation::Equal;

    double grid_step = kInf;
    size_t nearest = 0;
    double nearest_gap = kInf;
    for (size_t i = 0; i < ctx.curve.size(); ++i) {
      if (i + 1 < ctx.curve.size()) grid_step = std::min(grid_step, ctx.curve.grid[i + 1] - ctx.curve.grid[i]);
      double gap = std::fabs(ctx.curve.grid[i] - g.u);
      if (gap < nearest_gap) {
        nearest_gap = gap;
        nearest = i;
      }
    }
    for (size_t i : arg)
      if (std::fabs(ctx.curve.grid[i] - g.u) <= std::max(grid_step, 1e-9)) g.in_hull_argmin = true;
    g.on_hull = std::isfinite(ctx.curve.values[nearest]) &&
                std::fabs(ctx.curve.values[nearest] - ctx.hull.hull[nearest]) <= ctx.tol.eps_c;
    all = all && g.matches_conditioned_set && g.in_hull_argmin && g.on_hull;
  }
  d.passed = all;
  return d;
}

// Differentiability of the free energy at beta versus uniqueness of the
// matching conditioned set, checked on the grid.
struct DifferentiabilityCheck {
  bool differentiable = false;
  bool consistent = false;
};

inline DifferentiabilityCheck differentiability_check(const Model& m, double beta,
                                                      const HullContext& ctx,
                                                      const SolverOptions& opt = {}) {
  if (m.sigma != 1) throw ConfigError("differentiability_check needs sigma = 1");
  DifferentiabilityCheck out;
  auto arg = detail::hull_argmin(ctx, beta);
  if (arg.empty()) return out;
  double grid_step = kInf;
  for (size_t i = 0; i + 1 < ctx.curve.size(); ++i)
    grid_step = std::min(grid_step, ctx.curve.grid[i + 1] - ctx.curve.grid[i]);
  double spread = ctx.curve.grid[arg.back()] - ctx.curve.grid[arg.front()];
  out.differentiable = spread <= grid_step * 1.5;

  bool dphi_on_graph = true;
  for (size_t i : arg) {
    if (!std::isfinite(ctx.curve.values[i]) ||
        std::fabs(ctx.curve.values[i] - ctx.hull.hull[i]) > ctx.tol.eps_c)
      dphi_on_graph = false;
  }
  auto eb = canonical_set(m, beta, opt);
  bool equal_some = false;
  for (size_t i : arg) {
    auto eu = microcanonical_set(m, ctx.curve.grid[i], opt);
    if (!eu.empty() && set_distance(eb, eu, opt.tol_match).relation == SetRelation::Equal) {
      equal_some = true;
      break;
    }
  }
  out.consistent = out.differentiable == (equal_some && dphi_on_graph);
  return out;
}

// ---------------------------------------------------------------------------
// The two constructions of the mixed set must agree: tilt the rate function
// first and condition after, or condition first and tilt the conditioned
// rate function.

struct MixedEqualityCheck {
  bool pass = false;
  EquilibriumSet tilt_then_condition;
  EquilibriumSet condition_then_tilt;
};

inline MixedEqualityCheck verify_mixed_equality(const Model& m, double beta1, double u2,
                                                const SolverOptions& opt = {}) {
  if (m.sigma != 2 || m.tau != 1) throw ConfigError("verify_mixed_equality needs sigma = 2, tau = 1");
  MixedEqualityCheck out;
  out.tilt_then_condition = mixed_set(m, beta1, u2, opt);

  if (m.kind == ModelKind::Tabular) {
    // Conditioned rate table: I - J2 on the slice, +inf elsewhere; then an
    // unconstrained tilt of that table.
    const int n = m.state_count();
    double j2 = kInf;
    for (int k = 0; k < n; ++k)
      if (m.table_repr[1][size_t(k)] == u2) j2 = std::min(j2, m.table_rate[size_t(k)]);
    EquilibriumSet b;
    b.tag = EnsembleTag{EnsembleKind::MixedCanMicro, {beta1}, {u2}};
    b.exact = true;
    if (j2 == kInf) {
      b.infeasible = true;
    } else {
      double best = kInf;
      std::vector<double> v(size_t(n), kInf);
      for (int k = 0; k < n; ++k) {
        if (m.table_repr[1][size_t(k)] != u2) continue;
        v[size_t(k)] = (m.table_rate[size_t(k)] - j2) + beta1 * m.table_repr[0][size_t(k)];
        best = std::min(best, v[size_t(k)]);
      }
      b.objective = best;
      for (int k = 0; k < n; ++k)
        if (v[size_t(k)] <= best + opt.tol_deg) b.members.push_back(Macrostate::tabular(k));
    }
    out.condition_then_tilt = std::move(b);
  } else {
    // Independent heuristic run of the condition-first construction.
    auto j2 = trailing_constraint_rate(m, u2, opt);
    SolverOptions o2 = opt;
    o2.seed = splitmix64(opt.seed ^ 0x5bd1e995u);
    auto r = minimize_constrained(m, {1}, {u2}, {beta1, 0.0}, o2);
    EquilibriumSet b;
    b.tag = EnsembleTag{EnsembleKind::MixedCanMicro, {beta1}, {u2}};
    b.exact = false;
    b.infeasible = !r.feasible || !j2.feasible;
    if (!b.infeasible) {
      b.objective = r.value - j2.value;
      b.members = std::move(r.minimizers);
    }
    out.condition_then_tilt = std::move(b);
  }

  if (out.tilt_then_condition.infeasible && out.condition_then_tilt.infeasible) {
    out.pass = true;
    return out;
  }
  out.pass = set_distance(out.tilt_then_condition, out.condition_then_tilt, opt.tol_match).relation ==
             SetRelation::Equal;
  return out;
}

}  // namespace ek
