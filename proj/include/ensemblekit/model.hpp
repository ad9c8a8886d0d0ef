#pragma once

// Model contract: a hidden space in one of three finite representations, a
// rate function I on it, conserved-quantity representation functions H, and
// an optional microstate layer that coarse-grains site configurations into
// macrostates.
//
// Representations:
//   Tabular    — finite state list with I and H given as tables.
//   MeanField  — probability vectors over an alphabet; I is relative entropy
//                against a strictly positive prior; each H component is
//                (1/2) x'Kx + a'x with a symmetric kernel K over letters.
//   Lattice    — q cells of equal weight, each holding a probability vector;
//                I averages per-cell relative entropy; component 0 couples
//                cell means through a symmetric cell kernel, later components
//                are per-letter averages.

#include <cmath>
#include <string>
#include <vector>

#include "ensemblekit/common.hpp"
#include "ensemblekit/macrostate.hpp"

namespace ek {

enum class ModelKind { Tabular, MeanField, Lattice };

// One conserved-quantity component for MeanField models.
struct ReprTerm {
  Matrix kernel;               // m x m symmetric, may be empty (pure linear)
  std::vector<double> linear;  // size m, may be empty (pure quadratic)
};

struct Model {
  ModelKind kind = ModelKind::Tabular;
  std::string builtin;  // constructor tag, e.g. "curie_weiss"
  int sigma = 1;        // number of conserved quantities
  int tau = 0;          // leading components treated canonically in mixed runs

  // Tabular representation
  std::vector<double> table_rate;               // I, size n
  std::vector<std::vector<double>> table_repr;  // sigma rows of size n

  // MeanField / Lattice representation
  std::vector<double> alphabet;  // letter values y_j
  std::vector<double> prior;     // strictly positive, sums to 1
  std::vector<ReprTerm> repr;    // MeanField: one term per component

  // Lattice-only data
  int cells = 1;                                  // q
  Matrix cell_kernel;                             // q x q coupling of cell means
  std::vector<std::vector<double>> cell_linear;   // per-letter tables, components 1..sigma-1

  // Microstate layer
  int default_sites = 0;   // a_n hint for samplers (0 = not set)
  int fourier_cutoff = 0;  // site-level interaction cutoff (Lattice kinds)

  int state_count() const { return int(table_rate.size()); }
  int alphabet_size() const { return int(alphabet.size()); }
  bool has_microstate_layer() const { return kind != ModelKind::Tabular; }
};

// ---------------------------------------------------------------------------
// Validation

inline std::vector<std::string> validate_model(const Model& m) {
  std::vector<std::string> bad;
  auto fail = [&](const std::string& where, const std::string& what) {
    bad.push_back(where + ": " + what);
  };

  if (m.sigma < 1) fail("sigma", "must be >= 1");
  if (m.tau < 0 || (m.tau > 0 && m.tau >= m.sigma)) fail("tau", "must satisfy 0 <= tau < sigma");

  if (m.kind == ModelKind::Tabular) {
    if (m.table_rate.empty()) fail("table_I", "empty state table");
    double lo = kInf;
    for (double v : m.table_rate) {
      if (!std::isfinite(v)) fail("table_I", "non-finite entry");
      if (v < 0.0) fail("table_I", "negative entry");
      lo = std::min(lo, v);
    }
    if (!m.table_rate.empty() && std::fabs(lo) > 1e-12) fail("table_I", "inf I != 0");
    if (int(m.table_repr.size()) != m.sigma) fail("table_H", "needs one row per component");
    for (const auto& row : m.table_repr) {
      if (row.size() != m.table_rate.size()) fail("table_H", "row length differs from table_I");
      for (double v : row)
        if (!std::isfinite(v)) fail("table_H", "non-finite entry");
    }
    return bad;
  }

  const int mlen = m.alphabet_size();
  if (mlen < 2) fail("alphabet", "needs at least two letters");
  if (int(m.prior.size()) != mlen) fail("prior", "length differs from alphabet");
  double sum = 0.0;
  bool positive = true;
  for (double p : m.prior) {
    if (!(p > 0.0)) positive = false;
    sum += p;
  }
  if (!positive) fail("prior", "entries must be strictly positive");
  if (std::fabs(sum - 1.0) > kSimplexTol) fail("prior", "prior does not sum to 1");
  for (double y : m.alphabet)
    if (!std::isfinite(y)) fail("alphabet", "non-finite letter value");

  if (m.kind == ModelKind::MeanField) {
    if (int(m.repr.size()) != m.sigma) fail("repr", "needs one term per component");
    for (size_t i = 0; i < m.repr.size(); ++i) {
      const ReprTerm& t = m.repr[i];
      const std::string where = "repr[" + std::to_string(i) + "]";
      if (t.kernel.empty() && t.linear.empty()) fail(where, "term has neither kernel nor linear part");
      if (!t.kernel.empty()) {
        if (t.kernel.rows != mlen || t.kernel.cols != mlen) fail(where, "kernel shape mismatch");
        else if (!t.kernel.symmetric()) fail(where, "kernel is not symmetric");
        for (double v : t.kernel.a)
          if (!std::isfinite(v)) fail(where, "non-finite kernel entry");
      }
      if (!t.linear.empty() && int(t.linear.size()) != mlen) fail(where, "linear length mismatch");
    }
  } else {  // Lattice
    if (m.cells < 1) fail("q", "cell count must be >= 1");
    if (m.cell_kernel.rows != m.cells || m.cell_kernel.cols != m.cells)
      fail("kernel", "cell kernel shape mismatch");
    else if (!m.cell_kernel.symmetric()) fail("kernel", "cell kernel is not symmetric");
    if (int(m.cell_linear.size()) != m.sigma - 1)
      fail("linear", "needs one per-letter table per component beyond the first");
    for (const auto& t : m.cell_linear)
      if (int(t.size()) != mlen) fail("linear", "per-letter table length mismatch");
    if (m.default_sites > 0 && m.default_sites % m.cells != 0)
      fail("a_n", "site count not divisible by q");
  }
  return bad;
}

// ---------------------------------------------------------------------------
// Rate function I

inline double relative_entropy(const double* x, const std::vector<double>& prior, int mlen) {
  double s = 0.0;
  for (int j = 0; j < mlen; ++j) {
    if (x[j] == 0.0) continue;
    if (!(prior[j] > 0.0)) return kInf;
    s += x[j] * std::log(x[j] / prior[j]);
  }
  return s;
}

inline void check_shape(const Model& m, const Macrostate& x) {
  if (m.kind == ModelKind::Tabular) {
    if (!x.is_tabular()) throw ShapeError("model expects a tabular macrostate");
    if (x.index >= m.state_count()) throw ShapeError("tabular index out of range");
    return;
  }
  if (x.is_tabular()) throw ShapeError("model expects a weighted macrostate");
  if (x.letters != m.alphabet_size()) throw ShapeError("macrostate alphabet size mismatch");
  const int q = (m.kind == ModelKind::Lattice) ? m.cells : 1;
  if (x.cells != q) throw ShapeError("macrostate cell count mismatch");
}

inline double rate_value(const Model& m, const Macrostate& x) {
  check_shape(m, x);
  if (m.kind == ModelKind::Tabular) return m.table_rate[size_t(x.index)];
  const int mlen = m.alphabet_size();
  double s = 0.0;
  for (int c = 0; c < x.cells; ++c)
    s += relative_entropy(&x.weights[size_t(c) * mlen], m.prior, mlen);
  return s / double(x.cells);
}

// ---------------------------------------------------------------------------
// Representation functions H

inline double repr_component(const Model& m, const Macrostate& x, int comp) {
  if (m.kind == ModelKind::Tabular) return m.table_repr[size_t(comp)][size_t(x.index)];
  const int mlen = m.alphabet_size();
  if (m.kind == ModelKind::MeanField) {
    const ReprTerm& t = m.repr[size_t(comp)];
    double v = 0.0;
    if (!t.kernel.empty()) {
      double quad = 0.0;
      for (int i = 0; i < mlen; ++i) {
        double s = 0.0;
        const double* row = &t.kernel.a[size_t(i) * mlen];
        for (int j = 0; j < mlen; ++j) s += row[j] * x.weights[size_t(j)];
        quad += x.weights[size_t(i)] * s;
      }
      v += 0.5 * quad;
    }
    if (!t.linear.empty())
      for (int j = 0; j < mlen; ++j) v += t.linear[size_t(j)] * x.weights[size_t(j)];
    return v;
  }
  // Lattice
  const int q = m.cells;
  if (comp == 0) {
    std::vector<double> means(size_t(q), 0.0);
    for (int c = 0; c < q; ++c)
      for (int j = 0; j < mlen; ++j) means[size_t(c)] += m.alphabet[size_t(j)] * x.row(c, j);
    std::vector<double> km(size_t(q), 0.0);
    m.cell_kernel.multiply(means.data(), km.data());
    double quad = 0.0;
    for (int c = 0; c < q; ++c) quad += means[size_t(c)] * km[size_t(c)];
    return 0.5 * quad / (double(q) * double(q));
  }
  const std::vector<double>& coef = m.cell_linear[size_t(comp) - 1];
  double v = 0.0;
  for (int c = 0; c < q; ++c)
    for (int j = 0; j < mlen; ++j) v += coef[size_t(j)] * x.row(c, j);
  return v / double(q);
}

inline std::vector<double> repr_value(const Model& m, const Macrostate& x) {
  check_shape(m, x);
  std::vector<double> u(size_t(m.sigma), 0.0);
  for (int i = 0; i < m.sigma; ++i) u[size_t(i)] = repr_component(m, x, i);
  return u;
}

// Gradient of component `comp` with respect to the flattened weight table.
inline std::vector<double> repr_gradient(const Model& m, const Macrostate& x, int comp) {
  check_shape(m, x);
  if (m.kind == ModelKind::Tabular) throw ShapeError("tabular models have no weight gradient");
  const int mlen = m.alphabet_size();
  if (m.kind == ModelKind::MeanField) {
    const ReprTerm& t = m.repr[size_t(comp)];
    std::vector<double> g(size_t(mlen), 0.0);
    if (!t.kernel.empty()) t.kernel.multiply(x.weights.data(), g.data());
    if (!t.linear.empty())
      for (int j = 0; j < mlen; ++j) g[size_t(j)] += t.linear[size_t(j)];
    return g;
  }
  const int q = m.cells;
  std::vector<double> g(size_t(q) * mlen, 0.0);
  if (comp == 0) {
    std::vector<double> means(size_t(q), 0.0);
    for (int c = 0; c < q; ++c)
      for (int j = 0; j < mlen; ++j) means[size_t(c)] += m.alphabet[size_t(j)] * x.row(c, j);
    std::vector<double> km(size_t(q), 0.0);
    m.cell_kernel.multiply(means.data(), km.data());
    for (int c = 0; c < q; ++c)
      for (int j = 0; j < mlen; ++j)
        g[size_t(c) * mlen + j] = km[size_t(c)] * m.alphabet[size_t(j)] / (double(q) * double(q));
  } else {
    const std::vector<double>& coef = m.cell_linear[size_t(comp) - 1];
    for (int c = 0; c < q; ++c)
      for (int j = 0; j < mlen; ++j) g[size_t(c) * mlen + j] = coef[size_t(j)] / double(q);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Microstate layer

// Sites are split into q equal contiguous blocks; row c is the empirical
// distribution of letters over block c. MeanField models use q = 1.
inline Macrostate coarse_grain(const Model& m, const std::vector<int>& sites) {
  if (!m.has_microstate_layer()) throw ConfigError("model has no microstate layer");
  const int q = (m.kind == ModelKind::Lattice) ? m.cells : 1;
  const int n = int(sites.size());
  if (n == 0 || n % q != 0)
    throw ConfigError("site count " + std::to_string(n) + " not divisible by q = " + std::to_string(q));
  const int mlen = m.alphabet_size();
  const int block = n / q;
  Macrostate x = Macrostate::cell_matrix(q, mlen, std::vector<double>(size_t(q) * mlen, 0.0));
  for (int k = 0; k < n; ++k) {
    int letter = sites[size_t(k)];
    if (letter < 0 || letter >= mlen) throw ConfigError("site value outside the alphabet");
    x.row(k / block, letter) += 1.0 / double(block);
  }
  return x;
}

// Truncated Fourier interaction on the unit circle: the cutoff-K partial sum
// of |2 pi xi|^-2 modes with the zero mode removed.
inline double circle_green(double t, int cutoff) {
  double s = 0.0;
  for (int xi = 1; xi <= cutoff; ++xi) {
    double w = 2.0 * M_PI * double(xi);
    s += 2.0 * std::cos(w * t) / (w * w);
  }
  return s;
}

// Site-level conserved quantities for a microstate. MeanField models realize
// every component exactly through the empirical measure; Lattice models pair
// sites through the site-level interaction, which the coarse-grained
// representation reproduces only in the many-sites-per-cell limit.
inline std::vector<double> microstate_hamiltonian(const Model& m, const std::vector<int>& sites) {
  if (!m.has_microstate_layer()) throw ConfigError("model has no microstate layer");
  const int n = int(sites.size());
  if (m.kind == ModelKind::MeanField) return repr_value(m, coarse_grain(m, sites));
  std::vector<double> h(size_t(m.sigma), 0.0);
  std::vector<double> vals(size_t(n), 0.0);
  for (int k = 0; k < n; ++k) vals[size_t(k)] = m.alphabet[size_t(sites[size_t(k)])];
  std::vector<double> gtab(size_t(n), 0.0);
  for (int d = 0; d < n; ++d) gtab[size_t(d)] = circle_green(double(d) / double(n), m.fourier_cutoff);
  double quad = 0.0;
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      int d = k - l;
      if (d < 0) d += n;
      quad += gtab[size_t(d)] * vals[size_t(k)] * vals[size_t(l)];
    }
  }
  h[0] = 0.5 * quad / (double(n) * double(n));
  for (int i = 1; i < m.sigma; ++i) {
    const std::vector<double>& coef = m.cell_linear[size_t(i) - 1];
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += coef[size_t(sites[size_t(k)])];
    h[size_t(i)] = s / double(n);
  }
  return h;
}

}  // namespace ek
