#pragma once

// Optimization engine for the variational problems: exact enumeration on
// tabular models; damped mean-field fixed-point iteration for unconstrained
// tilted objectives; penalty continuation plus a feasibility polish for
// constrained ones. Multi-start with deterministic per-(point, start) seeds.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ensemblekit/common.hpp"
#include "ensemblekit/macrostate.hpp"
#include "ensemblekit/model.hpp"

namespace ek {

struct SolverOptions {
  int multistarts = 8;
  double damping = 0.5;       // weight kept on the previous iterate
  int max_iterations = 100000;
  int stage_iterations = 4000;   // per penalty stage
  double fp_tol = 1e-12;      // max-norm step for fixed-point convergence
  std::vector<double> penalty_schedule = {1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
  double tol_feas = 1e-8;
  double tol_deg = 1e-8;   // objective band for degenerate minimizers
  double tol_match = 1e-6; // max-norm dedup/matching distance
  std::uint64_t seed = 0;
  std::uint64_t point_index = 0;
};

struct SolveDiag {
  bool converged = true;
  double residual = 0.0;
  int restarts = 0;
  int iterations = 0;
};

struct VariationalResult {
  bool feasible = true;
  double value = kInf;
  std::vector<Macrostate> minimizers;
  SolveDiag diag;
};

namespace detail {

inline double unit_uniform(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

inline int weight_rows(const Model& m) { return m.kind == ModelKind::Lattice ? m.cells : 1; }

// Reusable buffers for the iteration inner loop.
struct SolverScratch {
  std::vector<double> exponents;
  std::vector<double> kx;
  std::vector<double> means;
  std::vector<double> km;
  std::vector<double> log_prior;

  void prepare(const Model& m) {
    const int q = weight_rows(m);
    const int mlen = m.alphabet_size();
    exponents.assign(size_t(q) * mlen, 0.0);
    kx.assign(size_t(mlen), 0.0);
    means.assign(size_t(q), 0.0);
    km.assign(size_t(q), 0.0);
    log_prior.resize(size_t(mlen));
    for (int j = 0; j < mlen; ++j) log_prior[size_t(j)] = std::log(m.prior[size_t(j)]);
  }
};

// q * d(sum_i tilt_i H_i)/dx, the exponent scale of the per-row Gibbs update.
inline void tilt_exponents_into(const Model& m, const Macrostate& x,
                                const std::vector<double>& tilt, SolverScratch& sc) {
  const int q = weight_rows(m);
  const int mlen = m.alphabet_size();
  std::fill(sc.exponents.begin(), sc.exponents.end(), 0.0);
  if (m.kind == ModelKind::MeanField) {
    for (int i = 0; i < m.sigma; ++i) {
      const double t = tilt[size_t(i)];
      if (t == 0.0) continue;
      const ReprTerm& term = m.repr[size_t(i)];
      if (!term.kernel.empty()) {
        term.kernel.multiply(x.weights.data(), sc.kx.data());
        for (int j = 0; j < mlen; ++j) sc.exponents[size_t(j)] += t * sc.kx[size_t(j)];
      }
      if (!term.linear.empty())
        for (int j = 0; j < mlen; ++j) sc.exponents[size_t(j)] += t * term.linear[size_t(j)];
    }
    return;
  }
  bool have_means = false;
  for (int i = 0; i < m.sigma; ++i) {
    const double t = tilt[size_t(i)];
    if (t == 0.0) continue;
    if (i == 0) {
      if (!have_means) {
        for (int c = 0; c < q; ++c) {
          double s = 0.0;
          for (int j = 0; j < mlen; ++j) s += m.alphabet[size_t(j)] * x.row(c, j);
          sc.means[size_t(c)] = s;
        }
        m.cell_kernel.multiply(sc.means.data(), sc.km.data());
        have_means = true;
      }
      for (int c = 0; c < q; ++c) {
        double f = t * sc.km[size_t(c)] / double(q);
        for (int j = 0; j < mlen; ++j)
          sc.exponents[size_t(c) * mlen + j] += f * m.alphabet[size_t(j)];
      }
    } else {
      const std::vector<double>& coef = m.cell_linear[size_t(i) - 1];
      for (int c = 0; c < q; ++c)
        for (int j = 0; j < mlen; ++j) sc.exponents[size_t(c) * mlen + j] += t * coef[size_t(j)];
    }
  }
}

inline void gibbs_rows(const Model& m, const SolverScratch& sc, Macrostate* out) {
  const int q = weight_rows(m);
  const int mlen = m.alphabet_size();
  for (int c = 0; c < q; ++c) {
    double hi = -kInf;
    for (int j = 0; j < mlen; ++j) {
      double w = sc.log_prior[size_t(j)] - sc.exponents[size_t(c) * mlen + j];
      out->row(c, j) = w;
      hi = std::max(hi, w);
    }
    double z = 0.0;
    for (int j = 0; j < mlen; ++j) {
      double w = std::exp(out->row(c, j) - hi);
      out->row(c, j) = w;
      z += w;
    }
    for (int j = 0; j < mlen; ++j) out->row(c, j) /= z;
  }
}

inline Macrostate uniform_rows_state(const Model& m) {
  const int q = weight_rows(m);
  const int mlen = m.alphabet_size();
  Macrostate x = Macrostate::cell_matrix(q, mlen, std::vector<double>(size_t(q) * mlen));
  for (int c = 0; c < q; ++c)
    for (int j = 0; j < mlen; ++j) x.row(c, j) = m.prior[size_t(j)];
  if (q == 1) x.cells = 1;
  return x;
}

inline std::vector<Macrostate> solver_starts(const Model& m, const SolverOptions& opt) {
  const int q = weight_rows(m);
  const int mlen = m.alphabet_size();
  std::vector<Macrostate> starts;
  starts.push_back(uniform_rows_state(m));
  // Near-vertex starts: a whisker of mass stays on the other letters so the
  // multiplicative updates can leave the corner.
  int vertex_starts = std::min(mlen, std::max(0, opt.multistarts - 1 - 2));
  const double whisker = 1e-9;
  for (int v = 0; v < vertex_starts; ++v) {
    Macrostate x = uniform_rows_state(m);
    for (int c = 0; c < q; ++c)
      for (int j = 0; j < mlen; ++j)
        x.row(c, j) = (j == v) ? 1.0 - whisker : whisker / double(mlen - 1);
    starts.push_back(std::move(x));
  }
  int random_starts = std::max(0, opt.multistarts - int(starts.size()));
  for (int r = 0; r < random_starts; ++r) {
    std::mt19937_64 rng(derive_seed(opt.seed, opt.point_index, size_t(r) + 101));
    Macrostate x = uniform_rows_state(m);
    for (int c = 0; c < q; ++c) {
      double z = 0.0;
      for (int j = 0; j < mlen; ++j) {
        double g = -std::log(std::max(unit_uniform(rng), 1e-300));
        x.row(c, j) = g;
        z += g;
      }
      for (int j = 0; j < mlen; ++j) x.row(c, j) /= z;
    }
    starts.push_back(std::move(x));
  }
  return starts;
}

struct FixedPointOutcome {
  Macrostate state;
  bool converged = false;
  int iterations = 0;
};

// Damped self-consistent Gibbs iteration. `effective_tilt` may depend on the
// current iterate (penalty terms); it is re-evaluated every step.
template <typename TiltFn>
FixedPointOutcome run_fixed_point(const Model& m, Macrostate x, TiltFn&& effective_tilt,
                                  const SolverOptions& opt, int iteration_cap) {
  Macrostate next = x;
  SolverScratch sc;
  sc.prepare(m);
  FixedPointOutcome out;
  for (int it = 0; it < iteration_cap; ++it) {
    tilt_exponents_into(m, x, effective_tilt(x), sc);
    gibbs_rows(m, sc, &next);
    double step = 0.0;
    for (size_t k = 0; k < x.weights.size(); ++k) {
      double nx = opt.damping * x.weights[k] + (1.0 - opt.damping) * next.weights[k];
      step = std::max(step, std::fabs(nx - x.weights[k]));
      x.weights[k] = nx;
    }
    out.iterations = it + 1;
    if (step <= opt.fp_tol) {
      out.converged = true;
      break;
    }
  }
  out.state = std::move(x);
  return out;
}

// Monotone mirror-descent step on a composite objective
//   I(x) + <free_tilt, H(x)> + kappa * |H_c(x) - target|^2,
// i.e. projected gradient in the simplex geometry, with backtracking on the
// step size. The full step (eta = 1) is the Gibbs map; stiff penalty weights
// just shorten the step instead of oscillating.
struct PenaltyObjective {
  const Model* model;
  const std::vector<double>* free_tilt;
  const std::vector<int>* constrained;
  const std::vector<double>* targets;
  double kappa = 0.0;

  double value(const Macrostate& x) const {
    const Model& m = *model;
    double v = rate_value(m, x);
    for (int i = 0; i < m.sigma; ++i)
      if ((*free_tilt)[size_t(i)] != 0.0) v += (*free_tilt)[size_t(i)] * repr_component(m, x, i);
    for (size_t c = 0; c < constrained->size(); ++c) {
      double r = repr_component(m, x, (*constrained)[c]) - (*targets)[c];
      v += kappa * r * r;
    }
    return v;
  }

  // Effective tilt seen by the representation terms at the current iterate.
  void effective_tilt(const Macrostate& x, std::vector<double>* t) const {
    *t = *free_tilt;
    for (size_t c = 0; c < constrained->size(); ++c)
      (*t)[size_t((*constrained)[c])] +=
          2.0 * kappa * (repr_component(*model, x, (*constrained)[c]) - (*targets)[c]);
  }
};

struct MirrorOutcome {
  Macrostate state;
  bool converged = false;
  int iterations = 0;
};

inline MirrorOutcome mirror_descent(const Model& m, Macrostate x, const PenaltyObjective& obj,
                                    const SolverOptions& opt, int iteration_cap) {
  const int q = weight_rows(m);
  const int mlen = m.alphabet_size();
  SolverScratch sc;
  sc.prepare(m);
  Macrostate trial = x;
  std::vector<double> tilt(size_t(m.sigma), 0.0);
  MirrorOutcome out;
  double fx = obj.value(x);
  int stall = 0;
  for (int it = 0; it < iteration_cap; ++it) {
    out.iterations = it + 1;
    obj.effective_tilt(x, &tilt);
    tilt_exponents_into(m, x, tilt, sc);
    // log x + eta * (log prior - log x - exponents); zero weights stay zero
    double eta = 1.0;
    bool accepted = false;
    double step = 0.0;
    for (int bt = 0; bt < 24; ++bt) {
      for (int c = 0; c < q; ++c) {
        double hi = -kInf;
        for (int j = 0; j < mlen; ++j) {
          double base = x.row(c, j);
          double lw;
          if (base > 0.0) {
            double lx = std::log(base);
            lw = lx + eta * (sc.log_prior[size_t(j)] - lx - sc.exponents[size_t(c) * mlen + j]);
          } else {
            lw = -kInf;
          }
          trial.row(c, j) = lw;
          hi = std::max(hi, lw);
        }
        double z = 0.0;
        for (int j = 0; j < mlen; ++j) {
          double w = trial.row(c, j) == -kInf ? 0.0 : std::exp(trial.row(c, j) - hi);
          trial.row(c, j) = w;
          z += w;
        }
        for (int j = 0; j < mlen; ++j) trial.row(c, j) /= z;
      }
      double ft = obj.value(trial);
      if (ft <= fx - 1e-15 * (std::fabs(fx) + 1e-15)) {
        step = 0.0;
        for (size_t k = 0; k < x.weights.size(); ++k)
          step = std::max(step, std::fabs(trial.weights[k] - x.weights[k]));
        x.weights.swap(trial.weights);
        fx = ft;
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted || step <= opt.fp_tol) {
      out.converged = true;
      break;
    }
    stall = step <= 1e-9 ? stall + 1 : 0;
    if (stall >= 8) {
      out.converged = true;
      break;
    }
  }
  out.state = std::move(x);
  return out;
}

// Bracketing fallback for targets the exponential tilt cannot reach, e.g.
// near a degenerate quadratic minimum where the gradient vanishes: walk the
// straight segments from x toward the uniform state and toward each vertex
// and bisect the component value where a segment brackets the target.
inline bool segment_snap(const Model& m, Macrostate* x, int comp, double target, double tol) {
  const int q = weight_rows(m);
  const int mlen = m.alphabet_size();
  std::vector<Macrostate> anchors;
  anchors.push_back(uniform_rows_state(m));
  for (int v = 0; v < mlen; ++v) {
    Macrostate a = uniform_rows_state(m);
    for (int c = 0; c < q; ++c)
      for (int j = 0; j < mlen; ++j) a.row(c, j) = j == v ? 1.0 : 0.0;
    anchors.push_back(std::move(a));
  }
  Macrostate lerp = *x;
  auto value_at = [&](const Macrostate& a, double lam) {
    for (size_t k = 0; k < lerp.weights.size(); ++k)
      lerp.weights[k] = (1.0 - lam) * x->weights[k] + lam * a.weights[k];
    return repr_component(m, lerp, comp);
  };
  double r0 = repr_component(m, *x, comp) - target;
  double best_rate = kInf;
  Macrostate best;
  bool found = false;
  for (const Macrostate& a : anchors) {
    double r1 = value_at(a, 1.0) - target;
    if (r0 * r1 > 0.0) continue;
    double lo = 0.0, hi = 1.0;
    for (int k = 0; k < 120; ++k) {
      double mid = 0.5 * (lo + hi);
      double rm = value_at(a, mid) - target;
      if (r0 * rm > 0.0) lo = mid;
      else hi = mid;
      if (std::fabs(rm) <= 1e-3 * tol) break;
    }
    value_at(a, 0.5 * (lo + hi));
    if (std::fabs(repr_component(m, lerp, comp) - target) > tol) continue;
    double rate = rate_value(m, lerp);
    if (rate < best_rate) {
      best_rate = rate;
      best = lerp;
      found = true;
    }
  }
  if (found) *x = std::move(best);
  return found;
}

// Exponential tilt along one representation gradient, solved so that the
// constrained component hits its target; drives the penalty solution onto
// the constraint surface.
inline bool polish_feasibility(const Model& m, Macrostate* x, const std::vector<int>& comps,
                               const std::vector<double>& targets, double tol) {
  const int q = weight_rows(m);
  const int mlen = m.alphabet_size();
  for (int round = 0; round < 8; ++round) {
    int worst = -1;
    double worst_res = tol;
    for (size_t k = 0; k < comps.size(); ++k) {
      double res = std::fabs(repr_component(m, *x, comps[k]) - targets[k]);
      if (res > worst_res) {
        worst_res = res;
        worst = int(k);
      }
    }
    if (worst < 0) return true;
    const int comp = comps[size_t(worst)];
    const double target = targets[size_t(worst)];
    std::vector<double> g = repr_gradient(m, *x, comp);
    for (double& v : g) v *= double(q);

    auto tilted = [&](double t) {
      Macrostate y = *x;
      for (int c = 0; c < q; ++c) {
        double hi = -kInf;
        for (int j = 0; j < mlen; ++j) {
          double base = x->row(c, j);
          double w = base > 0.0 ? std::log(base) - t * g[size_t(c) * mlen + j] : -kInf;
          y.row(c, j) = w;
          hi = std::max(hi, w);
        }
        double z = 0.0;
        for (int j = 0; j < mlen; ++j) {
          double w = y.row(c, j) == -kInf ? 0.0 : std::exp(y.row(c, j) - hi);
          y.row(c, j) = w;
          z += w;
        }
        for (int j = 0; j < mlen; ++j) y.row(c, j) /= z;
      }
      return y;
    };
    auto residual_at = [&](double t) { return repr_component(m, tilted(t), comp) - target; };

    double r0 = residual_at(0.0);
    if (std::fabs(r0) <= tol) continue;
    // A vanishing gradient leaves the tilt family stuck (uniform state of a
    // positive-semidefinite coupling); bracket along straight segments first.
    double gnorm = 0.0;
    for (double v : g) gnorm = std::max(gnorm, std::fabs(v));
    if (gnorm <= 1e-12 * std::max(1.0, std::fabs(target))) {
      if (!segment_snap(m, x, comp, target, tol)) return false;
      continue;
    }
    // Tilting down the gradient lowers the component, so move toward the
    // target; |residual| may cross zero (bisect) or bottom out tangentially
    // at a branch boundary (golden section on the magnitude).
    const double dir = r0 > 0.0 ? 1.0 : -1.0;
    double t_prev = 0.0, t_cur = 0.0;
    double a_prev = std::fabs(r0), a_cur = a_prev;
    double step = 1e-3;
    bool crossed = false;
    double cross_lo = 0.0, cross_hi = 0.0;
    for (int k = 0; k < 70; ++k) {
      double t_next = dir * step;
      double r_next = residual_at(t_next);
      if (r0 * r_next <= 0.0) {
        crossed = true;
        cross_lo = t_cur;
        cross_hi = t_next;
        break;
      }
      double a_next = std::fabs(r_next);
      if (a_next > a_cur && a_cur <= a_prev && k > 0) {
        // magnitude bottomed out inside [t_prev, t_next]
        break;
      }
      t_prev = t_cur;
      a_prev = a_cur;
      t_cur = t_next;
      a_cur = a_next;
      step *= 2.0;
    }
    double t_star;
    if (crossed) {
      double a = cross_lo, b = cross_hi;
      for (int k = 0; k < 200; ++k) {
        double mid = 0.5 * (a + b);
        double rm = residual_at(mid);
        if (r0 * rm > 0.0) a = mid;
        else b = mid;
        if (std::fabs(rm) <= 1e-3 * tol || std::fabs(b - a) < 1e-18) break;
      }
      t_star = 0.5 * (a + b);
    } else {
      // golden section on |residual| over [t_prev, dir * step]
      const double gr = 0.6180339887498949;
      double a = std::min(t_prev, dir * step), b = std::max(t_prev, dir * step);
      double c = b - gr * (b - a), d = a + gr * (b - a);
      double fc = std::fabs(residual_at(c)), fd = std::fabs(residual_at(d));
      for (int k = 0; k < 120 && (b - a) > 1e-18 * std::max(1.0, std::fabs(b)); ++k) {
        if (fc < fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - gr * (b - a);
          fc = std::fabs(residual_at(c));
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + gr * (b - a);
          fd = std::fabs(residual_at(d));
        }
      }
      t_star = 0.5 * (a + b);
      if (std::fabs(residual_at(t_star)) >= std::fabs(r0)) {
        // the tilt direction bottomed out short of the target
        if (!segment_snap(m, x, comp, target, tol)) return false;
        continue;
      }
    }
    *x = tilted(t_star);
  }
  double worst = 0.0;
  for (size_t k = 0; k < comps.size(); ++k)
    worst = std::max(worst, std::fabs(repr_component(m, *x, comps[k]) - targets[k]));
  return worst <= tol;
}

inline void collect_minimizer(std::vector<Macrostate>* set, const Macrostate& x, double tol_match) {
  for (const Macrostate& y : *set)
    if (macrostate_distance(x, y) <= tol_match) return;
  set->push_back(x);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Unconstrained tilted objective: inf over the hidden space of
// I(x) + <tilt, H(x)>, with every minimizer within tol_deg retained.

inline VariationalResult minimize_tilted(const Model& m, const std::vector<double>& tilt,
                                         const SolverOptions& opt = {}) {
  if (int(tilt.size()) != m.sigma) throw ShapeError("tilt length must equal sigma");
  VariationalResult res;
  if (m.kind == ModelKind::Tabular) {
    const int n = m.state_count();
    std::vector<double> v(size_t(n), 0.0);
    for (int k = 0; k < n; ++k) {
      double s = m.table_rate[size_t(k)];
      for (int i = 0; i < m.sigma; ++i) s += tilt[size_t(i)] * m.table_repr[size_t(i)][size_t(k)];
      v[size_t(k)] = s;
      res.value = std::min(res.value, s);
    }
    for (int k = 0; k < n; ++k)
      if (v[size_t(k)] <= res.value + opt.tol_deg) res.minimizers.push_back(Macrostate::tabular(k));
    return res;
  }

  auto objective = [&](const Macrostate& x) {
    double s = rate_value(m, x);
    for (int i = 0; i < m.sigma; ++i) s += tilt[size_t(i)] * repr_component(m, x, i);
    return s;
  };
  auto tilt_fn = [&](const Macrostate&) -> const std::vector<double>& { return tilt; };

  struct Candidate {
    Macrostate x;
    double value;
    bool settled;  // the Gibbs iteration itself reached its fixed point
  };
  std::vector<Candidate> cands;
  auto starts = detail::solver_starts(m, opt);
  std::vector<int> no_constraints;
  std::vector<double> no_targets;
  detail::PenaltyObjective plain{&m, &tilt, &no_constraints, &no_targets, 0.0};
  res.diag.converged = false;
  bool any_descent_converged = false;
  for (const Macrostate& s0 : starts) {
    auto out = detail::run_fixed_point(m, s0, tilt_fn, opt, opt.max_iterations);
    res.diag.iterations += out.iterations;
    // Monotone descent pass: a no-op where the iteration settled, a stable
    // finisher where it oscillated (stiff positive couplings).
    auto refined = detail::mirror_descent(m, std::move(out.state), plain, opt, opt.stage_iterations);
    res.diag.iterations += refined.iterations;
    any_descent_converged = any_descent_converged || refined.converged;
    cands.push_back({std::move(refined.state), 0.0, out.converged});
    cands.back().value = objective(cands.back().x);
  }
  res.diag.restarts = int(starts.size()) - 1;
  res.value = kInf;
  for (const auto& c : cands) res.value = std::min(res.value, c.value);
  bool any_settled_near_best = false;
  for (const auto& c : cands)
    if (c.settled && c.value <= res.value + opt.tol_deg) any_settled_near_best = true;
  // best candidate first, so each dedup cluster keeps its best representative
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
  for (const auto& c : cands) {
    if (c.value > res.value + opt.tol_deg) continue;
    if (any_settled_near_best && !c.settled) continue;  // drop unsettled stragglers
    res.diag.converged = true;
    detail::collect_minimizer(&res.minimizers, c.x, opt.tol_match);
  }
  res.diag.converged = res.diag.converged && (any_settled_near_best || any_descent_converged);
  return res;
}

// ---------------------------------------------------------------------------
// Constrained objective: inf of I(x) + <tilt_free, H_free(x)> subject to
// H_c(x) = target_c for c in `constrained`. Infeasible targets yield
// feasible = false.

inline VariationalResult minimize_constrained(const Model& m, const std::vector<int>& constrained,
                                              const std::vector<double>& targets,
                                              const std::vector<double>& free_tilt,
                                              const SolverOptions& opt = {}) {
  if (constrained.size() != targets.size()) throw ShapeError("constraint/target length mismatch");
  if (int(free_tilt.size()) != m.sigma) throw ShapeError("tilt length must equal sigma");
  VariationalResult res;

  if (m.kind == ModelKind::Tabular) {
    const int n = m.state_count();
    res.feasible = false;
    std::vector<double> v(size_t(n), kInf);
    for (int k = 0; k < n; ++k) {
      bool ok = true;
      for (size_t c = 0; c < constrained.size(); ++c)
        if (m.table_repr[size_t(constrained[c])][size_t(k)] != targets[c]) {
          ok = false;
          break;
        }
      if (!ok) continue;
      res.feasible = true;
      double s = m.table_rate[size_t(k)];
      for (int i = 0; i < m.sigma; ++i) s += free_tilt[size_t(i)] * m.table_repr[size_t(i)][size_t(k)];
      v[size_t(k)] = s;
      res.value = std::min(res.value, s);
    }
    if (!res.feasible) return res;
    for (int k = 0; k < n; ++k)
      if (v[size_t(k)] <= res.value + opt.tol_deg) res.minimizers.push_back(Macrostate::tabular(k));
    return res;
  }

  auto objective = [&](const Macrostate& x) {
    double s = rate_value(m, x);
    for (int i = 0; i < m.sigma; ++i) s += free_tilt[size_t(i)] * repr_component(m, x, i);
    return s;
  };
  auto residual = [&](const Macrostate& x) {
    double r = 0.0;
    for (size_t c = 0; c < constrained.size(); ++c)
      r = std::max(r, std::fabs(repr_component(m, x, constrained[c]) - targets[c]));
    return r;
  };

  struct Candidate {
    Macrostate x;
    double value;
    double residual;
  };
  std::vector<Candidate> cands;
  auto push_candidate = [&](Macrostate x, bool feas) {
    cands.push_back({std::move(x), 0.0, 0.0});
    cands.back().value = objective(cands.back().x);
    cands.back().residual = residual(cands.back().x);
    if (!feas) cands.back().residual = std::max(cands.back().residual, opt.tol_feas * 2);
  };
  auto starts = detail::solver_starts(m, opt);
  for (const Macrostate& s0 : starts) {
    Macrostate x = s0;
    // Pull the start onto the nearest feasible branch before the continuation;
    // otherwise an early large penalty step can hop basins and jam against a
    // branch end. The snapshot stays a candidate so feasibility cannot be
    // lost to a later stage wandering off.
    if (detail::polish_feasibility(m, &x, constrained, targets, opt.tol_feas))
      push_candidate(x, true);
    detail::PenaltyObjective obj{&m, &free_tilt, &constrained, &targets, 0.0};
    for (double kappa : opt.penalty_schedule) {
      obj.kappa = kappa;
      auto out = detail::mirror_descent(m, std::move(x), obj, opt, opt.stage_iterations);
      x = std::move(out.state);
      res.diag.iterations += out.iterations;
    }
    bool feas = detail::polish_feasibility(m, &x, constrained, targets, opt.tol_feas);
    push_candidate(std::move(x), feas);
  }
  res.diag.restarts = int(starts.size()) - 1;

  double best = kInf, best_res = kInf;
  for (const auto& c : cands) {
    best_res = std::min(best_res, c.residual);
    if (c.residual <= opt.tol_feas) best = std::min(best, c.value);
  }
  res.diag.residual = best_res;
  if (best == kInf) {
    res.feasible = false;
    res.diag.converged = false;
    // Distinguish an unattainable target from a failed solve by the attained
    // component ranges.
    res.value = kInf;
    return res;
  }
  res.value = best;
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
  for (const auto& c : cands) {
    if (c.residual > opt.tol_feas || c.value > best + opt.tol_deg) continue;
    detail::collect_minimizer(&res.minimizers, c.x, opt.tol_match);
  }
  return res;
}

// Attained range of one representation component, located by minimizing the
// component under a dominant tilt from every start.
inline std::pair<double, double> repr_attained_range(const Model& m, int comp,
                                                     const SolverOptions& opt = {}) {
  if (m.kind == ModelKind::Tabular) {
    double lo = kInf, hi = -kInf;
    for (double v : m.table_repr[size_t(comp)]) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return {lo, hi};
  }
  double scale = 1.0;
  if (m.kind == ModelKind::MeanField) {
    const ReprTerm& t = m.repr[size_t(comp)];
    if (!t.kernel.empty()) scale = std::max(scale, t.kernel.max_abs());
    for (double v : t.linear) scale = std::max(scale, std::fabs(v));
  } else {
    scale = std::max(scale, m.cell_kernel.max_abs());
    if (comp > 0)
      for (double v : m.cell_linear[size_t(comp) - 1]) scale = std::max(scale, std::fabs(v));
  }
  const double big = 1e9 / scale;
  double lo = kInf, hi = -kInf;
  // Single-letter states bound the per-cell means from both sides.
  {
    const int q = detail::weight_rows(m);
    const int mlen = m.alphabet_size();
    for (int v = 0; v < mlen; ++v) {
      Macrostate x = Macrostate::cell_matrix(q, mlen, std::vector<double>(size_t(q) * mlen, 0.0));
      if (q == 1) x.cells = 1;
      for (int c = 0; c < q; ++c) x.row(c, v) = 1.0;
      double val = repr_component(m, x, comp);
      lo = std::min(lo, val);
      hi = std::max(hi, val);
    }
  }
  std::vector<int> no_constraints;
  std::vector<double> no_targets;
  SolverOptions ropt = opt;
  ropt.multistarts = 4;
  for (double sign : {1.0, -1.0}) {
    std::vector<double> tilt(size_t(m.sigma), 0.0);
    tilt[size_t(comp)] = sign * big;
    detail::PenaltyObjective obj{&m, &tilt, &no_constraints, &no_targets, 0.0};
    for (const Macrostate& s0 : detail::solver_starts(m, ropt)) {
      auto out = detail::mirror_descent(m, s0, obj, ropt, 5000);
      double v = repr_component(m, out.state, comp);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return {lo, hi};
}

}  // namespace ek
