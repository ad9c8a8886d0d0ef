#pragma once

// Builtin model constructors and the JSON model-description schema.
//
// Kinds: tabular, curie_weiss, three_state_skew, point_vortex, miller_robert,
// tabular_mixed. Unknown JSON fields are rejected.

#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ensemblekit/common.hpp"
#include "ensemblekit/model.hpp"

namespace ek {

// Cell-pair average of the truncated Fourier interaction for q equal
// contiguous cells of the unit circle. Entry (c,c') averages circle_green
// over the two cells; modes that oscillate an integer number of times inside
// a cell average out, so row sums vanish identically.
inline Matrix cell_green_kernel(int q, int cutoff) {
  Matrix g(q, q, 0.0);
  const double h = 1.0 / double(q);
  for (int xi = 1; xi <= cutoff; ++xi) {
    double w = 2.0 * M_PI * double(xi);
    double z = M_PI * double(xi) * h;
    double sinc = std::sin(z) / z;
    double amp = 2.0 * sinc * sinc / (w * w);
    for (int c = 0; c < q; ++c)
      for (int cc = 0; cc < q; ++cc)
        g(c, cc) += amp * std::cos(w * double(c - cc) * h);
  }
  return g;
}

inline void require_valid(Model m, Model* out) {
  auto bad = validate_model(m);
  if (!bad.empty()) throw ConfigError("builtin constructor produced an invalid model: " + bad.front());
  *out = std::move(m);
}

// Two-letter mean-field ferromagnet: alphabet (-1,+1), uniform prior,
// H(x) = -coupling * mean(x)^2 / 2.
inline Model make_curie_weiss(double coupling = 1.0) {
  Model m;
  m.kind = ModelKind::MeanField;
  m.builtin = "curie_weiss";
  m.sigma = 1;
  m.alphabet = {-1.0, 1.0};
  m.prior = {0.5, 0.5};
  ReprTerm t;
  t.kernel = Matrix(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) t.kernel(i, j) = -coupling * m.alphabet[size_t(i)] * m.alphabet[size_t(j)];
  m.repr = {t};
  m.default_sites = 64;
  Model out;
  require_valid(std::move(m), &out);
  return out;
}

// Three-letter mean-field model with a skewed prior and quadratic coupling
// H(x) = quad_coeff * mean(x)^2 / 2. With an asymmetric alphabet the two
// mean branches compete, which can dent the entropy.
inline Model make_three_state_skew(std::vector<double> alphabet = {-1.0, 0.0, 2.0},
                                   std::vector<double> prior = {0.5, 0.4, 0.1},
                                   double quad_coeff = 1.0) {
  Model m;
  m.kind = ModelKind::MeanField;
  m.builtin = "three_state_skew";
  m.sigma = 1;
  m.alphabet = std::move(alphabet);
  m.prior = std::move(prior);
  const int mlen = m.alphabet_size();
  ReprTerm t;
  t.kernel = Matrix(mlen, mlen);
  for (int i = 0; i < mlen; ++i)
    for (int j = 0; j < mlen; ++j) t.kernel(i, j) = quad_coeff * m.alphabet[size_t(i)] * m.alphabet[size_t(j)];
  m.repr = {t};
  m.default_sites = 60;
  Model out;
  require_valid(std::move(m), &out);
  return out;
}

// Vortex positions discretized to `cells` arcs of the circle; the hidden
// space is the simplex of cell occupation fractions and the energy is the
// cell-averaged pair interaction.
inline Model make_point_vortex(int cells, int cutoff) {
  if (cells < 2) throw ConfigError("point_vortex needs cells >= 2");
  if (cutoff < 1) throw ConfigError("point_vortex needs cutoff >= 1");
  Model m;
  m.kind = ModelKind::MeanField;
  m.builtin = "point_vortex";
  m.sigma = 1;
  m.alphabet.resize(size_t(cells));
  for (int c = 0; c < cells; ++c) m.alphabet[size_t(c)] = (double(c) + 0.5) / double(cells);
  m.prior.assign(size_t(cells), 1.0 / double(cells));
  ReprTerm t;
  t.kernel = cell_green_kernel(cells, cutoff);
  m.repr = {t};
  m.fourier_cutoff = cutoff;
  m.default_sites = 8 * cells;
  Model out;
  require_valid(std::move(m), &out);
  return out;
}

// Lattice vorticity model: q macrocells over the circle, site values drawn
// from `alphabet` under `prior`, energy from the cell-averaged interaction,
// optional second conserved quantity sum a(y)/n (default a(y) = y^2).
inline Model make_miller_robert(int q = 4, std::vector<double> alphabet = {-1.0, 1.0},
                                std::vector<double> prior = {0.5, 0.5}, int cutoff = 3,
                                int sigma = 1, std::vector<double> enstrophy = {}) {
  if (q < 1) throw ConfigError("miller_robert needs q >= 1");
  if (cutoff < 1) throw ConfigError("miller_robert needs cutoff >= 1");
  if (sigma != 1 && sigma != 2) throw ConfigError("miller_robert supports sigma in {1,2}");
  Model m;
  m.kind = ModelKind::Lattice;
  m.builtin = "miller_robert";
  m.sigma = sigma;
  m.tau = sigma == 2 ? 1 : 0;
  m.alphabet = std::move(alphabet);
  m.prior = std::move(prior);
  m.cells = q;
  m.cell_kernel = cell_green_kernel(q, cutoff);
  m.fourier_cutoff = cutoff;
  if (sigma == 2) {
    if (enstrophy.empty()) {
      enstrophy.resize(m.alphabet.size());
      for (size_t j = 0; j < m.alphabet.size(); ++j) enstrophy[j] = m.alphabet[j] * m.alphabet[j];
    }
    m.cell_linear = {enstrophy};
  }
  m.default_sites = 16 * q;
  Model out;
  require_valid(std::move(m), &out);
  return out;
}

inline Model make_tabular(std::vector<double> table_rate,
                          std::vector<std::vector<double>> table_repr) {
  Model m;
  m.kind = ModelKind::Tabular;
  m.builtin = "tabular";
  m.sigma = int(table_repr.size());
  m.table_rate = std::move(table_rate);
  m.table_repr = std::move(table_repr);
  Model out;
  require_valid(std::move(m), &out);
  return out;
}

inline Model make_tabular_mixed(std::vector<double> table_rate, std::vector<double> h1,
                                std::vector<double> h2) {
  Model m;
  m.kind = ModelKind::Tabular;
  m.builtin = "tabular_mixed";
  m.sigma = 2;
  m.tau = 1;
  m.table_rate = std::move(table_rate);
  m.table_repr = {std::move(h1), std::move(h2)};
  Model out;
  require_valid(std::move(m), &out);
  return out;
}

// ---------------------------------------------------------------------------
// JSON schema

namespace detail {

inline void reject_unknown_fields(const nlohmann::json& j, const std::set<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (allowed.find(it.key()) == allowed.end())
      throw ConfigError("unknown model field '" + it.key() + "'");
}

inline std::vector<double> number_list(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError("field '" + field + "' must be a list of numbers");
  std::vector<double> v;
  for (const auto& e : j) {
    if (!e.is_number()) throw ConfigError("field '" + field + "' must be a list of numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

// table_H accepts either a flat list (sigma = 1) or one list per component.
inline std::vector<std::vector<double>> repr_table(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("field 'table_H' must be a non-empty list");
  if (j.front().is_array()) {
    std::vector<std::vector<double>> rows;
    for (const auto& row : j) rows.push_back(number_list(row, "table_H"));
    return rows;
  }
  return {number_list(j, "table_H")};
}

template <typename T>
T scalar_field(const nlohmann::json& j, const std::string& field, T fallback) {
  if (!j.contains(field)) return fallback;
  try {
    return j.at(field).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("field '" + field + "' has the wrong type");
  }
}

}  // namespace detail

inline Model model_from_json(const nlohmann::json& j) {
  using detail::number_list;
  using detail::reject_unknown_fields;
  using detail::scalar_field;
  if (!j.is_object()) throw ConfigError("model description must be a JSON object");
  if (!j.contains("kind") || !j.at("kind").is_string())
    throw ConfigError("model description needs a string field 'kind'");
  const std::string kind = j.at("kind").get<std::string>();

  Model m;
  if (kind == "tabular") {
    reject_unknown_fields(j, {"kind", "table_I", "table_H"});
    if (!j.contains("table_I") || !j.contains("table_H"))
      throw ConfigError("tabular model needs fields 'table_I' and 'table_H'");
    m = make_tabular(number_list(j.at("table_I"), "table_I"), detail::repr_table(j.at("table_H")));
  } else if (kind == "tabular_mixed") {
    reject_unknown_fields(j, {"kind", "table_I", "table_H"});
    if (!j.contains("table_I") || !j.contains("table_H"))
      throw ConfigError("tabular_mixed model needs fields 'table_I' and 'table_H'");
    auto rows = detail::repr_table(j.at("table_H"));
    if (rows.size() != 2) throw ConfigError("tabular_mixed needs exactly two table_H rows");
    m = make_tabular_mixed(number_list(j.at("table_I"), "table_I"), rows[0], rows[1]);
  } else if (kind == "curie_weiss") {
    reject_unknown_fields(j, {"kind", "coupling", "a_n"});
    m = make_curie_weiss(scalar_field<double>(j, "coupling", 1.0));
  } else if (kind == "three_state_skew") {
    reject_unknown_fields(j, {"kind", "alphabet", "prior", "quad_coeff", "a_n"});
    std::vector<double> alphabet = {-1.0, 0.0, 2.0};
    std::vector<double> prior = {0.5, 0.4, 0.1};
    if (j.contains("alphabet")) alphabet = number_list(j.at("alphabet"), "alphabet");
    if (j.contains("prior")) prior = number_list(j.at("prior"), "prior");
    if (alphabet.size() != 3 || prior.size() != 3)
      throw ConfigError("three_state_skew needs alphabet and prior of length 3");
    m = make_three_state_skew(alphabet, prior, scalar_field<double>(j, "quad_coeff", 1.0));
  } else if (kind == "point_vortex") {
    reject_unknown_fields(j, {"kind", "cells", "cutoff", "a_n"});
    m = make_point_vortex(scalar_field<int>(j, "cells", 8), scalar_field<int>(j, "cutoff", 3));
  } else if (kind == "miller_robert") {
    reject_unknown_fields(j, {"kind", "q", "alphabet", "prior", "cutoff", "sigma", "enstrophy", "a_n"});
    std::vector<double> alphabet = {-1.0, 1.0};
    std::vector<double> prior = {0.5, 0.5};
    if (j.contains("alphabet")) alphabet = number_list(j.at("alphabet"), "alphabet");
    if (j.contains("prior")) prior = number_list(j.at("prior"), "prior");
    std::vector<double> enstrophy;
    if (j.contains("enstrophy")) enstrophy = number_list(j.at("enstrophy"), "enstrophy");
    m = make_miller_robert(scalar_field<int>(j, "q", 4), alphabet, prior,
                           scalar_field<int>(j, "cutoff", 3), scalar_field<int>(j, "sigma", 1),
                           enstrophy);
  } else {
    throw ConfigError("unknown model kind '" + kind + "'");
  }
  if (j.contains("a_n")) {
    int a_n = detail::scalar_field<int>(j, "a_n", 0);
    if (a_n < 2) throw ConfigError("field 'a_n' must be >= 2");
    m.default_sites = a_n;
    auto bad = validate_model(m);
    if (!bad.empty()) throw ConfigError(bad.front());
  }
  return m;
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed model JSON in '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

// FNV-1a over the canonical JSON dump; identifies the model in reports.
inline std::string model_digest(const nlohmann::json& j) {
  std::string dump = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline nlohmann::json model_to_json(const Model& m) {
  nlohmann::json j;
  j["kind"] = m.builtin;
  if (m.builtin == "tabular" || m.builtin == "tabular_mixed") {
    j["table_I"] = m.table_rate;
    j["table_H"] = m.table_repr;
    return j;
  }
  if (m.builtin == "curie_weiss") {
    j["coupling"] = -m.repr.front().kernel(1, 1);
  } else if (m.builtin == "three_state_skew") {
    j["alphabet"] = m.alphabet;
    j["prior"] = m.prior;
    int idx = 0;
    for (size_t k = 1; k < m.alphabet.size(); ++k)
      if (std::fabs(m.alphabet[k]) > std::fabs(m.alphabet[size_t(idx)])) idx = int(k);
    double y = m.alphabet[size_t(idx)];
    j["quad_coeff"] = y != 0.0 ? m.repr.front().kernel(idx, idx) / (y * y) : 0.0;
  } else if (m.builtin == "point_vortex") {
    j["cells"] = m.alphabet_size();
    j["cutoff"] = m.fourier_cutoff;
  } else if (m.builtin == "miller_robert") {
    j["q"] = m.cells;
    j["alphabet"] = m.alphabet;
    j["prior"] = m.prior;
    j["cutoff"] = m.fourier_cutoff;
    j["sigma"] = m.sigma;
    if (m.sigma == 2) j["enstrophy"] = m.cell_linear.front();
  }
  if (m.default_sites > 0) j["a_n"] = m.default_sites;
  return j;
}

}  // namespace ek
