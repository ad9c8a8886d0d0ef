#pragma once

// Equilibrium macrostate sets: minimizer sets of the ensemble variational
// problems, a brute-force oracle over small state spaces, and set comparison
// in the Hausdorff/containment sense.

#include <functional>
#include <string>
#include <vector>

#include "ensemblekit/common.hpp"
#include "ensemblekit/macrostate.hpp"
#include "ensemblekit/model.hpp"
#include "ensemblekit/solvers.hpp"

namespace ek {

enum class EnsembleKind { Canonical, Microcanonical, MixedCanMicro, Canonical2, Micro2 };

struct EnsembleTag {
  EnsembleKind kind = EnsembleKind::Canonical;
  std::vector<double> beta;  // canonical parameters (leading components)
  std::vector<double> u;     // conditioned values (trailing components)

  std::string describe() const {
    auto list = [](const std::vector<double>& v) {
      std::string s;
      for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
      return s;
    };
    switch (kind) {
      case EnsembleKind::Canonical: return "canonical{beta=" + list(beta) + "}";
      case EnsembleKind::Microcanonical: return "microcanonical{u=" + list(u) + "}";
      case EnsembleKind::MixedCanMicro:
        return "mixed{beta1=" + list(beta) + ",u2=" + list(u) + "}";
      case EnsembleKind::Canonical2: return "canonical2{beta=" + list(beta) + "}";
      case EnsembleKind::Micro2: return "micro2{u=" + list(u) + "}";
    }
    return "?";
  }
};

struct EquilibriumSet {
  std::vector<Macrostate> members;
  double objective = kInf;
  EnsembleTag tag;
  bool exact = false;       // exact enumeration (tabular) vs heuristic search
  bool infeasible = false;  // empty because the conditioning is unattainable
  SolveDiag diag;

  size_t size() const { return members.size(); }
  bool empty() const { return members.empty(); }
};

namespace detail {

inline EquilibriumSet from_variational(const Model& m, VariationalResult r, EnsembleTag tag) {
  EquilibriumSet s;
  s.tag = std::move(tag);
  s.exact = (m.kind == ModelKind::Tabular);
  s.objective = r.value;
  s.diag = r.diag;
  if (!r.feasible) {
    s.infeasible = true;
    return s;
  }
  s.members = std::move(r.minimizers);
  return s;
}

}  // namespace detail

inline EquilibriumSet canonical_set(const Model& m, const std::vector<double>& beta,
                                    const SolverOptions& opt = {}) {
  EnsembleTag tag{EnsembleKind::Canonical, beta, {}};
  return detail::from_variational(m, minimize_tilted(m, beta, opt), tag);
}

inline EquilibriumSet canonical_set(const Model& m, double beta, const SolverOptions& opt = {}) {
  if (m.sigma != 1) throw ShapeError("scalar multiplier requires sigma = 1");
  return canonical_set(m, std::vector<double>{beta}, opt);
}

inline EquilibriumSet microcanonical_set(const Model& m, const std::vector<double>& u,
                                         const SolverOptions& opt = {}) {
  if (int(u.size()) != m.sigma) throw ShapeError("conserved value length must equal sigma");
  std::vector<int> comps(size_t(m.sigma), 0);
  for (int i = 0; i < m.sigma; ++i) comps[size_t(i)] = i;
  EnsembleTag tag{EnsembleKind::Microcanonical, {}, u};
  auto r = minimize_constrained(m, comps, u, std::vector<double>(size_t(m.sigma), 0.0), opt);
  return detail::from_variational(m, std::move(r), tag);
}

inline EquilibriumSet microcanonical_set(const Model& m, double u, const SolverOptions& opt = {}) {
  if (m.sigma != 1) throw ShapeError("scalar conserved value requires sigma = 1");
  return microcanonical_set(m, std::vector<double>{u}, opt);
}

// Minimizers of I + b1 H1 on {H2 = u2}.
inline EquilibriumSet mixed_set(const Model& m, double beta1, double u2,
                                const SolverOptions& opt = {}) {
  if (m.sigma != 2 || m.tau != 1) throw ConfigError("mixed sets need sigma = 2, tau = 1");
  EnsembleTag tag{EnsembleKind::MixedCanMicro, {beta1}, {u2}};
  auto r = minimize_constrained(m, {1}, {u2}, {beta1, 0.0}, opt);
  return detail::from_variational(m, std::move(r), tag);
}

inline EquilibriumSet canonical2_set(const Model& m, double beta1, double beta2,
                                     const SolverOptions& opt = {}) {
  if (m.sigma != 2) throw ConfigError("canonical2 sets need sigma = 2");
  EnsembleTag tag{EnsembleKind::Canonical2, {beta1, beta2}, {}};
  return detail::from_variational(m, minimize_tilted(m, {beta1, beta2}, opt), tag);
}

inline EquilibriumSet micro2_set(const Model& m, double u1, double u2,
                                 const SolverOptions& opt = {}) {
  if (m.sigma != 2) throw ConfigError("micro2 sets need sigma = 2");
  EnsembleTag tag{EnsembleKind::Micro2, {}, {u1, u2}};
  auto r = minimize_constrained(m, {0, 1}, {u1, u2}, {0.0, 0.0}, opt);
  return detail::from_variational(m, std::move(r), tag);
}

inline EquilibriumSet equilibrium_set(const Model& m, const EnsembleTag& tag,
                                      const SolverOptions& opt = {}) {
  switch (tag.kind) {
    case EnsembleKind::Canonical: return canonical_set(m, tag.beta, opt);
    case EnsembleKind::Microcanonical: return microcanonical_set(m, tag.u, opt);
    case EnsembleKind::MixedCanMicro: return mixed_set(m, tag.beta.at(0), tag.u.at(0), opt);
    case EnsembleKind::Canonical2: return canonical2_set(m, tag.beta.at(0), tag.beta.at(1), opt);
    case EnsembleKind::Micro2: return micro2_set(m, tag.u.at(0), tag.u.at(1), opt);
  }
  throw ConfigError("unknown ensemble tag");
}

// ---------------------------------------------------------------------------
// Brute-force oracle: exhaustive enumeration over the state table (exact) or
// over a uniform simplex grid for small alphabets. Constrained ensembles use
// a feasibility band scaled to the grid resolution.

inline void enumerate_simplex_grid(int letters, int resolution,
                                   const std::function<void(const std::vector<double>&)>& visit) {
  std::vector<double> x(size_t(letters), 0.0);
  std::vector<int> counts(size_t(letters), 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == letters - 1) {
      counts[size_t(pos)] = left;
      for (int j = 0; j < letters; ++j) x[size_t(j)] = double(counts[size_t(j)]) / double(resolution);
      visit(x);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      counts[size_t(pos)] = k;
      rec(pos + 1, left - k);
    }
  };
  rec(0, resolution);
}

inline EquilibriumSet brute_force_set(const Model& m, const EnsembleTag& tag, int resolution = 200,
                                      const SolverOptions& opt = {}) {
  if (m.kind == ModelKind::Tabular) {
    EquilibriumSet s = equilibrium_set(m, tag, opt);  // exact enumeration already
    s.exact = true;
    return s;
  }
  if (m.kind != ModelKind::MeanField || m.alphabet_size() > 3)
    throw CapacityError("brute force supports tabular models or mean-field alphabets of size <= 3");

  std::vector<double> tilt(size_t(m.sigma), 0.0);
  std::vector<int> constrained;
  std::vector<double> targets;
  switch (tag.kind) {
    case EnsembleKind::Canonical:
      for (int i = 0; i < m.sigma; ++i) tilt[size_t(i)] = tag.beta.at(size_t(i));
      break;
    case EnsembleKind::Canonical2:
      tilt[0] = tag.beta.at(0);
      tilt[1] = tag.beta.at(1);
      break;
    case EnsembleKind::Microcanonical:
      for (int i = 0; i < m.sigma; ++i) {
        constrained.push_back(i);
        targets.push_back(tag.u.at(size_t(i)));
      }
      break;
    case EnsembleKind::MixedCanMicro:
      tilt[0] = tag.beta.at(0);
      constrained.push_back(1);
      targets.push_back(tag.u.at(0));
      break;
    case EnsembleKind::Micro2:
      constrained = {0, 1};
      targets = {tag.u.at(0), tag.u.at(1)};
      break;
  }

  // Feasibility band wide enough that the grid can see the constraint set.
  std::vector<double> bands(constrained.size(), 0.0);
  for (size_t c = 0; c < constrained.size(); ++c) {
    auto range = repr_attained_range(m, constrained[c], opt);
    bands[c] = std::max(opt.tol_feas, 2.0 * (range.second - range.first) / double(resolution));
  }

  EquilibriumSet s;
  s.tag = tag;
  s.exact = false;
  double best = kInf;
  std::vector<std::vector<double>> argbest;
  enumerate_simplex_grid(m.alphabet_size(), resolution, [&](const std::vector<double>& w) {
    Macrostate x = Macrostate::simplex(w);
    bool ok = true;
    for (size_t c = 0; c < constrained.size(); ++c)
      if (std::fabs(repr_component(m, x, constrained[c]) - targets[c]) > bands[c]) {
        ok = false;
        break;
      }
    if (!ok) return;
    double v = rate_value(m, x);
    for (int i = 0; i < m.sigma; ++i)
      if (tilt[size_t(i)] != 0.0) v += tilt[size_t(i)] * repr_component(m, x, i);
    if (v < best - opt.tol_deg) {
      best = v;
      argbest.clear();
    }
    if (v <= best + opt.tol_deg) argbest.push_back(w);
  });
  if (argbest.empty()) {
    s.infeasible = true;
    return s;
  }
  s.objective = best;
  for (auto& w : argbest) s.members.push_back(Macrostate::simplex(w));
  return s;
}

// ---------------------------------------------------------------------------
// Set comparison

enum class SetRelation { Equal, ProperSubsetAinB, ProperSubsetBinA, Disjoint, Overlap };

struct SetDistance {
  double hausdorff = 0.0;
  SetRelation relation = SetRelation::Equal;
};

inline std::string relation_name(SetRelation r) {
  switch (r) {
    case SetRelation::Equal: return "Equal";
    case SetRelation::ProperSubsetAinB: return "ProperSubset(a in b)";
    case SetRelation::ProperSubsetBinA: return "ProperSubset(b in a)";
    case SetRelation::Disjoint: return "Disjoint";
    case SetRelation::Overlap: return "Overlap";
  }
  return "?";
}

inline SetDistance set_distance(const EquilibriumSet& a, const EquilibriumSet& b,
                                double tol_match = 1e-6) {
  auto one_sided = [&](const EquilibriumSet& p, const EquilibriumSet& q) {
    double worst = 0.0;
    for (const Macrostate& x : p.members) {
      double nearest = kInf;
      for (const Macrostate& y : q.members) nearest = std::min(nearest, macrostate_distance(x, y));
      worst = std::max(worst, nearest);
    }
    return worst;
  };
  SetDistance d;
  if (a.empty() && b.empty()) return d;
  if (a.empty() || b.empty()) {
    d.hausdorff = kInf;
    d.relation = SetRelation::Disjoint;
    return d;
  }
  double ab = one_sided(a, b), ba = one_sided(b, a);
  d.hausdorff = std::max(ab, ba);
  bool a_in_b = ab <= tol_match, b_in_a = ba <= tol_match;
  bool any_common = false;
  for (const Macrostate& x : a.members) {
    for (const Macrostate& y : b.members)
      if (macrostate_distance(x, y) <= tol_match) {
        any_common = true;
        break;
      }
    if (any_common) break;
  }
  if (a_in_b && b_in_a) d.relation = SetRelation::Equal;
  else if (a_in_b) d.relation = SetRelation::ProperSubsetAinB;
  else if (b_in_a) d.relation = SetRelation::ProperSubsetBinA;
  else if (any_common) d.relation = SetRelation::Overlap;
  else d.relation = SetRelation::Disjoint;
  return d;
}

}  // namespace ek
