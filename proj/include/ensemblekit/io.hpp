#pragma once

// CSV and JSON serialization for curves, equilibrium sets, classification
// reports, and chain results. CSV uses '.' decimals, ',' separators, and a
// header row; every number round-trips exactly.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ensemblekit/classify.hpp"
#include "ensemblekit/equilibria.hpp"
#include "ensemblekit/sampler.hpp"

namespace ek {

inline constexpr const char* kSchemaVersion = "1";

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  int column_index(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return int(i);
    return -1;
  }
};

inline std::string csv_to_string(const CsvTable& t) {
  std::string out;
  for (size_t i = 0; i < t.header.size(); ++i) out += (i ? "," : "") + t.header[i];
  out += "\n";
  for (size_t r = 0; r < t.rows(); ++r) {
    for (size_t c = 0; c < t.columns.size(); ++c)
      out += (c ? "," : "") + format_double(t.columns[c][r]);
    out += "\n";
  }
  return out;
}

inline void write_csv(const std::string& path, const CsvTable& t) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << csv_to_string(t);
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read '" + path + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(f, line)) throw ConfigError("empty CSV file '" + path + "'");
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  t.columns.resize(t.header.size());
  size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ls(line);
    size_t c = 0;
    while (std::getline(ls, cell, ',')) {
      if (c >= t.columns.size())
        throw ConfigError("row " + std::to_string(lineno) + " has too many columns in '" + path + "'");
      t.columns[c++].push_back(parse_double(cell));
    }
    if (c != t.columns.size())
      throw ConfigError("row " + std::to_string(lineno) + " has too few columns in '" + path + "'");
  }
  return t;
}

// The standard curve schema emitted by entropy sweeps.
inline CsvTable curve_table(const SampledCurve& curve, const HullResult& hull,
                            const std::vector<PointRecord>& points) {
  CsvTable t;
  t.header = {"u", "s", "s_hull", "beta_minus", "beta_plus", "in_C", "in_T"};
  t.columns.assign(7, {});
  for (size_t i = 0; i < curve.size(); ++i) {
    t.columns[0].push_back(curve.grid[i]);
    t.columns[1].push_back(curve.values[i]);
    t.columns[2].push_back(hull.hull[i]);
    t.columns[3].push_back(hull.beta_minus[i]);
    t.columns[4].push_back(hull.beta_plus[i]);
    t.columns[5].push_back(points[i].in_C ? 1.0 : 0.0);
    t.columns[6].push_back(points[i].in_T ? 1.0 : 0.0);
  }
  return t;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json macrostate_to_json(const Macrostate& x) {
  nlohmann::json j;
  if (x.is_tabular()) {
    j["index"] = x.index;
  } else {
    j["cells"] = x.cells;
    j["letters"] = x.letters;
    j["weights"] = x.weights;
  }
  return j;
}

inline Macrostate macrostate_from_json(const nlohmann::json& j) {
  if (j.contains("index")) return Macrostate::tabular(j.at("index").get<int>());
  return Macrostate::cell_matrix(j.at("cells").get<int>(), j.at("letters").get<int>(),
                                 j.at("weights").get<std::vector<double>>());
}

inline nlohmann::json ensemble_tag_to_json(const EnsembleTag& tag) {
  nlohmann::json j;
  switch (tag.kind) {
    case EnsembleKind::Canonical: j["kind"] = "canonical"; break;
    case EnsembleKind::Microcanonical: j["kind"] = "microcanonical"; break;
    case EnsembleKind::MixedCanMicro: j["kind"] = "mixed"; break;
    case EnsembleKind::Canonical2: j["kind"] = "canonical2"; break;
    case EnsembleKind::Micro2: j["kind"] = "micro2"; break;
  }
  if (!tag.beta.empty()) j["beta"] = tag.beta;
  if (!tag.u.empty()) j["u"] = tag.u;
  return j;
}

inline nlohmann::json equilibrium_set_to_json(const EquilibriumSet& s) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["ensemble"] = ensemble_tag_to_json(s.tag);
  j["certification"] = s.exact ? "exact" : "heuristic";
  j["infeasible"] = s.infeasible;
  if (!s.infeasible) j["objective"] = s.objective;
  nlohmann::json members = nlohmann::json::array();
  for (const auto& x : s.members) members.push_back(macrostate_to_json(x));
  j["members"] = members;
  return j;
}

inline nlohmann::json solve_diag_to_json(const SolveDiag& d) {
  return {{"converged", d.converged},
          {"residual", d.residual},
          {"restarts", d.restarts},
          {"iterations", d.iterations}};
}

inline nlohmann::json curve_diagnostics_to_json(const ThermoCurve& c) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  nlohmann::json pts = nlohmann::json::array();
  for (size_t i = 0; i < c.grid.size(); ++i) {
    nlohmann::json p = solve_diag_to_json(c.diags[i]);
    p["grid"] = c.grid[i];
    p["feasible"] = bool(c.feasible[i]);
    pts.push_back(p);
  }
  j["points"] = pts;
  return j;
}

inline nlohmann::json point_record_to_json(const PointRecord& r) {
  nlohmann::json j;
  j["u"] = r.u;
  j["s"] = std::isfinite(r.s) ? nlohmann::json(r.s) : nlohmann::json("-inf");
  j["s_hull"] = std::isfinite(r.s_hull) ? nlohmann::json(r.s_hull) : nlohmann::json("-inf");
  j["in_C"] = r.in_C;
  j["in_T"] = r.in_T;
  j["label"] = label_name(r.label);
  if (r.has_witness) j["witness_beta"] = r.witness;
  j["boundary_point"] = r.boundary_point;
  j["certified"] = r.certified;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"advisory", c.advisory},
                      {"evidence", c.evidence}});
  j["checks"] = checks;
  j["verified"] = r.verified();
  return j;
}

inline nlohmann::json classification_report_to_json(const ClassificationReport& rep) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["model_digest"] = rep.model_digest;
  j["mode"] = rep.mode;
  if (rep.mode != "pure") j["fixed_parameter"] = rep.fixed_parameter;
  j["grid"] = rep.grid;
  j["tolerances"] = {{"eps_c", rep.tol.eps_c}, {"delta_t", rep.tol.delta_t}};
  j["beta_grid"] = {{"halfwidth", rep.beta_grid_halfwidth}, {"points", rep.beta_grid_points}};
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : rep.points) pts.push_back(point_record_to_json(p));
  j["points"] = pts;
  j["all_verified"] = rep.all_verified();
  return j;
}

inline nlohmann::json chain_result_to_json(const ChainResult& r) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["accepted_fraction"] = r.accepted_fraction;
  j["mean_macrostate"] = macrostate_to_json(r.mean_macrostate);
  j["mean_magnetization"] = r.mean_magnetization;
  j["stderr_magnetization"] = r.stderr_magnetization;
  j["mean_abs_magnetization"] = r.mean_abs_magnetization;
  j["stderr_abs_magnetization"] = r.stderr_abs_magnetization;
  j["mean_h"] = r.mean_h;
  j["shell_occupancy"] = r.shell_occupancy;
  j["block_abs_magnetization"] = r.block_abs_magnetization;
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& x : r.block_macrostates) blocks.push_back(macrostate_to_json(x));
  j["block_macrostates"] = blocks;
  j["irreducibility_bound"] = r.irreducibility_bound;
  j["irreducibility_certified"] = r.irreducibility_certified;
  j["sweeps"] = r.sweeps;
  j["burnin"] = r.burnin;
  j["sites"] = r.sites;
  j["seed"] = r.seed;
  return j;
}

inline nlohmann::json rate_decay_to_json(const RateDecayResult& r) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["slope"] = r.slope;
  j["slope_stderr"] = r.slope_stderr;
  j["site_counts"] = r.site_counts;
  j["log_probs"] = r.log_probs;
  j["rate_at_center"] = r.rate_at_center;
  j["rate_in_ball"] = r.rate_in_ball;
  j["approximate"] = r.approximate;
  return j;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << j.dump(2) << "\n";
}

}  // namespace ek
