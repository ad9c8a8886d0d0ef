#pragma once

// Discrete Legendre transforms, concave hulls, superdifferentials, and
// supporting-line tests on sampled one-dimensional curves. Values of -inf
// mark grid points outside the effective domain.

#include <algorithm>
#include <string>
#include <vector>

#include "ensemblekit/common.hpp"

namespace ek {

struct SampledCurve {
  std::vector<double> grid;    // strictly increasing
  std::vector<double> values;  // -inf allowed

  size_t size() const { return grid.size(); }

  void check() const {
    if (grid.size() != values.size()) throw ShapeError("curve grid/value length mismatch");
    if (grid.size() < 2) throw ShapeError("curve needs at least two grid points");
    for (size_t i = 1; i < grid.size(); ++i)
      if (!(grid[i - 1] < grid[i])) throw ShapeError("curve grid must be strictly increasing");
    for (double v : values)
      if (std::isfinite(v)) return;
    throw ShapeError("curve has no finite values");
  }

  double finite_range() const {
    double lo = kInf, hi = -kInf;
    for (double v : values)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    return hi - lo;
  }
};

struct HullResult {
  std::vector<double> hull;        // concave hull values on the curve grid
  std::vector<int> vertices;       // grid points lying on the hull
  std::vector<double> beta_minus;  // slope of the hull left of the point (+inf at left edge)
  std::vector<double> beta_plus;   // slope right of the point (-inf at right edge)
};

// Interval of supporting slopes [beta_plus, beta_minus]; empty outside dom.
struct SlopeInterval {
  double lo = kInf;
  double hi = -kInf;
  bool empty = true;
};

struct SupportTolerances {
  double eps_c;    // |s - hull| band for supporting-line membership
  double delta_t;  // strictness gap for single-touch support
};

inline SupportTolerances default_support_tolerances(const SampledCurve& curve) {
  double range = curve.finite_range();
  double eps = std::max(1e-9, 1e-6 * range);
  return {eps, eps};
}

// out(b) = min over finite grid points of (b*u - f(u)); exact minimization
// over the sample, no interpolation.
inline SampledCurve legendre_transform(const SampledCurve& curve, const std::vector<double>& betas) {
  curve.check();
  if (betas.empty()) throw ShapeError("legendre_transform needs a non-empty multiplier grid");
  SampledCurve out;
  out.grid = betas;
  out.values.resize(betas.size());
  for (size_t b = 0; b < betas.size(); ++b) {
    double best = kInf;
    for (size_t i = 0; i < curve.size(); ++i) {
      if (!std::isfinite(curve.values[i])) continue;
      best = std::min(best, betas[b] * curve.grid[i] - curve.values[i]);
    }
    out.values[b] = best;
  }
  return out;
}

// Upper concave hull of the finite points by the monotone-chain construction.
// Non-vertex grid points take the chord value; superdifferential bounds come
// from the slopes of the adjacent hull segments.
inline HullResult concave_hull(const SampledCurve& curve) {
  curve.check();
  const size_t n = curve.size();
  std::vector<int> finite;
  for (size_t i = 0; i < n; ++i)
    if (std::isfinite(curve.values[i])) finite.push_back(int(i));

  // Chain of strict vertices, scanning left to right and dropping points
  // that would break concavity. The turn test carries a rounding allowance so
  // points within an ulp of a chord count as collinear and are dropped, which
  // makes the construction idempotent on its own output.
  std::vector<int> chain;
  for (int idx : finite) {
    double u = curve.grid[size_t(idx)], f = curve.values[size_t(idx)];
    while (chain.size() >= 2) {
      int b = chain[chain.size() - 1], a = chain[chain.size() - 2];
      double ua = curve.grid[size_t(a)], fa = curve.values[size_t(a)];
      double ub = curve.grid[size_t(b)], fb = curve.values[size_t(b)];
      double lhs = (ub - ua) * (f - fa), rhs = (fb - fa) * (u - ua);
      double cross = lhs - rhs;
      double slack = 1e-14 * (std::fabs(lhs) + std::fabs(rhs));
      if (cross >= -slack) chain.pop_back();
      else break;
    }
    chain.push_back(idx);
  }

  HullResult h;
  h.hull.assign(n, -kInf);
  h.beta_minus.assign(n, kInf);
  h.beta_plus.assign(n, -kInf);

  const int first = finite.front(), last = finite.back();
  std::vector<double> seg_slope(chain.size() > 1 ? chain.size() - 1 : 0);
  for (size_t k = 0; k + 1 < chain.size(); ++k) {
    double du = curve.grid[size_t(chain[k + 1])] - curve.grid[size_t(chain[k])];
    seg_slope[k] = (curve.values[size_t(chain[k + 1])] - curve.values[size_t(chain[k])]) / du;
  }

  size_t seg = 0;
  for (size_t i = size_t(first); i <= size_t(last); ++i) {
    while (seg + 1 < chain.size() && int(i) > chain[seg + 1]) ++seg;
    bool at_vertex = false;
    size_t vk = 0;
    if (int(i) == chain[seg]) {
      at_vertex = true;
      vk = seg;
    } else if (seg + 1 < chain.size() && int(i) == chain[seg + 1]) {
      at_vertex = true;
      vk = seg + 1;
    }
    if (at_vertex) {
      h.hull[i] = curve.values[size_t(chain[vk])];
      h.beta_minus[i] = vk == 0 ? kInf : seg_slope[vk - 1];
      h.beta_plus[i] = vk == chain.size() - 1 ? -kInf : seg_slope[vk];
    } else {
      int a = chain[seg];
      h.hull[i] = curve.values[size_t(a)] + seg_slope[seg] * (curve.grid[i] - curve.grid[size_t(a)]);
      h.beta_minus[i] = seg_slope[seg];
      h.beta_plus[i] = seg_slope[seg];
    }
  }

  double vertex_tol = 1e-12 * std::max(1.0, curve.finite_range());
  for (size_t i = 0; i < n; ++i)
    if (std::isfinite(curve.values[i]) && h.hull[i] - curve.values[i] <= vertex_tol)
      h.vertices.push_back(int(i));
  return h;
}

inline SlopeInterval superdifferential_at(const HullResult& h, size_t i) {
  if (i >= h.hull.size()) throw ShapeError("superdifferential index off the grid");
  SlopeInterval s;
  if (h.hull[i] == -kInf) return s;
  s.lo = h.beta_plus[i];
  s.hi = h.beta_minus[i];
  s.empty = false;
  return s;
}

// Finite probe inside the interval: midpoint when bounded, otherwise offset
// from the finite end by its own magnitude.
inline std::vector<double> support_probes(const SlopeInterval& s) {
  if (s.empty) return {};
  bool lo_fin = std::isfinite(s.lo), hi_fin = std::isfinite(s.hi);
  double mid;
  if (lo_fin && hi_fin) mid = 0.5 * (s.lo + s.hi);
  else if (hi_fin) mid = s.hi - std::fabs(s.hi);
  else if (lo_fin) mid = s.lo + std::fabs(s.lo);
  else mid = 0.0;
  std::vector<double> probes{mid};
  if (lo_fin && s.lo != mid) probes.push_back(s.lo);
  if (hi_fin && s.hi != mid) probes.push_back(s.hi);
  return probes;
}

struct SupportTestResult {
  bool in_C = false;
  bool in_T = false;
  double witness = 0.0;  // slope that certifies membership (when in_C)
  bool has_witness = false;
};

// in_C: the curve touches its hull at i (a supporting line exists there).
// in_T: some supporting slope touches the curve only at i (strict gap at
// every other finite grid point), probed at the interval midpoint and ends.
inline SupportTestResult support_tests(const SampledCurve& curve, const HullResult& h, size_t i,
                                       const SupportTolerances& tol) {
  if (i >= curve.size()) throw ShapeError("support test index off the grid");
  SupportTestResult r;
  double f = curve.values[i];
  if (!std::isfinite(f)) return r;
  SlopeInterval sd = superdifferential_at(h, i);
  if (sd.empty || !(std::fabs(f - h.hull[i]) <= tol.eps_c)) return r;
  r.in_C = true;
  auto probes = support_probes(sd);
  r.witness = probes.empty() ? 0.0 : probes.front();
  r.has_witness = !probes.empty();
  for (double beta : probes) {
    bool strict = true;
    for (size_t w = 0; w < curve.size(); ++w) {
      if (w == i || !std::isfinite(curve.values[w])) continue;
      if (!(curve.values[w] < f + beta * (curve.grid[w] - curve.grid[i]) - tol.delta_t)) {
        strict = false;
        break;
      }
    }
    if (strict) {
      r.in_T = true;
      r.witness = beta;
      break;
    }
  }
  return r;
}

// Largest midpoint-concavity violation over consecutive finite triples;
// nonpositive for concave samples.
inline double concavity_violation(const SampledCurve& curve) {
  double worst = -kInf;
  for (size_t i = 0; i + 2 < curve.size(); ++i) {
    double a = curve.values[i], b = curve.values[i + 1], c = curve.values[i + 2];
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) continue;
    double ua = curve.grid[i], ub = curve.grid[i + 1], uc = curve.grid[i + 2];
    double t = (ub - ua) / (uc - ua);
    double chord = (1.0 - t) * a + t * c;
    worst = std::max(worst, chord - b);
  }
  return worst;
}

}  // namespace ek
