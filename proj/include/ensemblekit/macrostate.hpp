#pragma once

// Macrostate: a point of the hidden space in one of three finite
// representations — an index into a finite state table, a probability vector
// over an alphabet, or a cell-by-alphabet stochastic matrix whose cells carry
// equal weight 1/q.

#include <string>
#include <vector>

#include "ensemblekit/common.hpp"

namespace ek {

inline constexpr double kSimplexTol = 1e-12;

struct Macrostate {
  int index = -1;              // >= 0 for tabular states; -1 otherwise
  int cells = 0;               // q (1 for plain probability vectors)
  int letters = 0;             // alphabet size m
  std::vector<double> weights; // row-major q x m, rows are probability vectors

  bool is_tabular() const { return index >= 0; }

  double row(int c, int j) const { return weights[size_t(c) * letters + j]; }
  double& row(int c, int j) { return weights[size_t(c) * letters + j]; }

  static Macrostate tabular(int idx) {
    Macrostate x;
    x.index = idx;
    return x;
  }
  static Macrostate simplex(std::vector<double> w) {
    Macrostate x;
    x.cells = 1;
    x.letters = int(w.size());
    x.weights = std::move(w);
    return x;
  }
  static Macrostate cell_matrix(int q, int m, std::vector<double> w) {
    Macrostate x;
    x.cells = q;
    x.letters = m;
    x.weights = std::move(w);
    return x;
  }
};

inline bool is_probability_vector(const double* w, int m, double tol = kSimplexTol) {
  double sum = 0.0;
  for (int j = 0; j < m; ++j) {
    if (!(w[j] >= 0.0)) return false;
    sum += w[j];
  }
  return std::fabs(sum - 1.0) <= tol;
}

inline std::string check_macrostate(const Macrostate& x) {
  if (x.is_tabular()) return "";
  if (x.cells < 1 || x.letters < 1) return "macrostate has empty weight table";
  if (x.weights.size() != size_t(x.cells) * x.letters)
    return "macrostate weight table has wrong size";
  for (int c = 0; c < x.cells; ++c)
    if (!is_probability_vector(&x.weights[size_t(c) * x.letters], x.letters))
      return "macrostate row " + std::to_string(c) + " is not a probability vector";
  return "";
}

// Max-norm distance between macrostates of the same representation. Tabular
// states use the discrete metric; incompatible shapes are infinitely far.
inline double macrostate_distance(const Macrostate& a, const Macrostate& b) {
  if (a.is_tabular() != b.is_tabular()) return kInf;
  if (a.is_tabular()) return a.index == b.index ? 0.0 : 1.0;
  if (a.cells != b.cells || a.letters != b.letters) return kInf;
  return max_norm_diff(a.weights, b.weights);
}

// Total variation distance between two rows (used by coarse-graining checks).
inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) return kInf;
  double s = 0.0;
  for (size_t j = 0; j < p.size(); ++j) s += std::fabs(p[j] - q[j]);
  return 0.5 * s;
}

}  // namespace ek
