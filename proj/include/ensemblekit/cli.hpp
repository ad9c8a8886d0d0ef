#pragma once

// Command-line front end. Subcommands: entropy, free-energy, classify,
// macrostates, mixed, sample, verify, plot. Exit codes: 0 success, 1 invalid
// input, 2 solver/capacity diagnostics (partial outputs are still written).

#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ensemblekit/builtin_models.hpp"
#include "ensemblekit/classify.hpp"
#include "ensemblekit/io.hpp"
#include "ensemblekit/sampler.hpp"
#include "ensemblekit/svg.hpp"

namespace ek::cli {

namespace detail {

struct DiagnosticNote {
  bool any = false;
  std::string message;
  void add(const std::string& msg) {
    any = true;
    if (!message.empty()) message += "; ";
    message += msg;
  }
};

inline std::vector<double> tabular_value_grid(const Model& m, int comp) {
  std::vector<double> g = m.table_repr[size_t(comp)];
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  if (g.size() < 2) {
    g.insert(g.begin(), g.front() - 1.0);  // degenerate single-value table
  }
  return g;
}

inline std::vector<double> resolve_grid(const Model& m, const std::string& spec, int comp) {
  if (!spec.empty()) return parse_grid(spec);
  if (m.kind == ModelKind::Tabular) return tabular_value_grid(m, comp);
  throw ConfigError("this model kind needs an explicit grid (lo:hi:count)");
}

}  // namespace detail

inline int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ensemblekit: entropy curves, equilibrium sets, and ensemble-equivalence reports"};
  app.require_subcommand(1);

  std::string model_path, out_path, diag_path, csv_path, report_path, trace_path, in_path;
  std::string u_grid_spec, beta_grid_spec, grid_spec, ensemble, mode_name, x_col, y_col, y2_col;
  double beta = 0.0, beta1 = 0.0, beta2 = 0.0, uval = 0.0, u1 = 0.0, u2 = 0.0, rval = 0.01;
  double mixed_value = 0.0;
  std::uint64_t seed = 0;
  int sites = 0;
  long sweeps = 100000, burnin = -1;
  bool do_classify = false;

  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--model", model_path, "model description JSON")->required();
  };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "random seed (default 0)"); };

  CLI::App* c_entropy = app.add_subcommand("entropy", "entropy curve over a conserved-value grid");
  add_model(c_entropy);
  c_entropy->add_option("--u-grid", u_grid_spec, "grid lo:hi:count (tabular default: attained values)");
  c_entropy->add_option("--out", out_path, "output CSV")->required();
  c_entropy->add_option("--diag", diag_path, "per-point solver diagnostics JSON");
  add_seed(c_entropy);

  CLI::App* c_phi = app.add_subcommand("free-energy", "free energy over a multiplier grid");
  add_model(c_phi);
  c_phi->add_option("--beta-grid", beta_grid_spec, "grid lo:hi:count")->required();
  c_phi->add_option("--out", out_path, "output CSV")->required();
  c_phi->add_option("--diag", diag_path, "per-point solver diagnostics JSON");
  add_seed(c_phi);

  CLI::App* c_classify = app.add_subcommand("classify", "equivalence classification sweep");
  add_model(c_classify);
  c_classify->add_option("--u-grid", u_grid_spec, "grid lo:hi:count (tabular default: attained values)");
  c_classify->add_option("--beta-grid", beta_grid_spec, "disjointness multiplier grid lo:hi:count");
  c_classify->add_option("--out", out_path, "report JSON")->required();
  c_classify->add_option("--csv", csv_path, "per-point CSV mirror");
  add_seed(c_classify);

  CLI::App* c_verify = app.add_subcommand("verify", "classification plus set-relation checks");
  add_model(c_verify);
  c_verify->add_option("--u-grid", u_grid_spec, "grid lo:hi:count (tabular default: attained values)");
  c_verify->add_option("--beta-grid", beta_grid_spec, "disjointness multiplier grid lo:hi:count");
  c_verify->add_option("--out", out_path, "report JSON");
  add_seed(c_verify);

  CLI::App* c_macro = app.add_subcommand("macrostates", "equilibrium macrostate set");
  add_model(c_macro);
  c_macro->add_option("--ensemble", ensemble, "canonical|microcanonical|mixed|canonical2|micro2")
      ->required();
  c_macro->add_option("--beta", beta, "multiplier (canonical)");
  c_macro->add_option("--beta1", beta1, "leading multiplier (mixed/canonical2)");
  c_macro->add_option("--beta2", beta2, "trailing multiplier (canonical2)");
  c_macro->add_option("--u", uval, "conserved value (microcanonical)");
  c_macro->add_option("--u1", u1, "leading conserved value (micro2)");
  c_macro->add_option("--u2", u2, "trailing conserved value (mixed/micro2)");
  c_macro->add_option("--out", out_path, "output JSON")->required();
  add_seed(c_macro);

  CLI::App* c_mixed = app.add_subcommand("mixed", "mixed-ensemble entropy curve");
  add_model(c_mixed);
  c_mixed->add_option("--mode", mode_name, "fixed-beta1|fixed-u2")->required();
  c_mixed->add_option("--value", mixed_value, "the fixed beta1 or u2")->required();
  c_mixed->add_option("--grid", grid_spec, "swept grid lo:hi:count (tabular default: attained values)");
  c_mixed->add_option("--out", out_path, "curve CSV")->required();
  c_mixed->add_option("--report", report_path, "classification report JSON");
  c_mixed->add_flag("--classify", do_classify, "also classify and verify the sweep");
  add_seed(c_mixed);

  CLI::App* c_sample = app.add_subcommand("sample", "microstate Monte Carlo chain");
  add_model(c_sample);
  c_sample->add_option("--ensemble", ensemble, "canonical|shell|mixed")->required();
  c_sample->add_option("--beta", beta, "multiplier (canonical)");
  c_sample->add_option("--beta1", beta1, "leading multiplier (mixed)");
  c_sample->add_option("--u", uval, "shell center (shell)");
  c_sample->add_option("--u2", u2, "trailing shell center (mixed)");
  c_sample->add_option("--r", rval, "shell half-width");
  c_sample->add_option("--n", sites, "site count (default: model hint)");
  c_sample->add_option("--sweeps", sweeps, "measured sweeps");
  c_sample->add_option("--burnin", burnin, "burn-in sweeps (default sweeps/10)");
  c_sample->add_option("--out", out_path, "chain result JSON")->required();
  c_sample->add_option("--trace", trace_path, "per-block trace CSV");
  add_seed(c_sample);

  CLI::App* c_plot = app.add_subcommand("plot", "render a curve CSV as an SVG line chart");
  c_plot->add_option("--in", in_path, "input CSV")->required();
  c_plot->add_option("--out", out_path, "output SVG")->required();
  c_plot->add_option("--x", x_col, "x column name (default: first column)");
  c_plot->add_option("--y", y_col, "y column name (default: second column)");
  c_plot->add_option("--y2", y2_col, "second series column name");

  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  storage.insert(storage.begin(), "ensemblekit");
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  detail::DiagnosticNote note;
  try {
    SolverOptions sopt;
    sopt.seed = seed;

    if (app.got_subcommand(c_entropy)) {
      Model m = load_model(model_path);
      auto grid = detail::resolve_grid(m, u_grid_spec, 0);
      ThermoCurve curve = entropy_curve(m, grid, sopt);
      for (size_t i = 0; i < curve.grid.size(); ++i)
        if (!curve.diags[i].converged)
          note.add("entropy solve not certified at u = " + format_double(curve.grid[i]));
      HullContext ctx = make_hull_context(curve.sampled());
      std::vector<PointRecord> pts(curve.grid.size());
      bool boundary = m.kind != ModelKind::Tabular;
      for (size_t i = 0; i < curve.grid.size(); ++i) pts[i] = classify_point(ctx, i, boundary);
      write_csv(out_path, curve_table(ctx.curve, ctx.hull, pts));
      if (!diag_path.empty()) write_json(diag_path, curve_diagnostics_to_json(curve));
    } else if (app.got_subcommand(c_phi)) {
      Model m = load_model(model_path);
      auto grid = parse_grid(beta_grid_spec);
      ThermoCurve curve = free_energy_curve(m, grid, sopt);
      for (size_t i = 0; i < curve.grid.size(); ++i)
        if (!curve.diags[i].converged)
          note.add("free-energy solve not certified at beta = " + format_double(curve.grid[i]));
      CsvTable t;
      t.header = {"beta", "phi"};
      t.columns = {curve.grid, curve.values};
      write_csv(out_path, t);
      if (!diag_path.empty()) write_json(diag_path, curve_diagnostics_to_json(curve));
    } else if (app.got_subcommand(c_classify) || app.got_subcommand(c_verify)) {
      Model m = load_model(model_path);
      auto grid = detail::resolve_grid(m, u_grid_spec, 0);
      ClassifyOptions copt;
      copt.solver = sopt;
      if (!beta_grid_spec.empty()) copt.explicit_beta_grid = parse_grid(beta_grid_spec);
      ClassificationReport rep = classify_sweep(m, grid, copt);
      rep.model_digest = model_digest(model_to_json(m));
      if (app.got_subcommand(c_classify)) {
        write_json(out_path, classification_report_to_json(rep));
        if (!csv_path.empty()) {
          ThermoCurve curve = entropy_curve(m, grid, sopt);
          HullContext ctx = make_hull_context(curve.sampled());
          write_csv(csv_path, curve_table(ctx.curve, ctx.hull, rep.points));
        }
      } else {
        out << "label          u              in_C in_T checks\n";
        for (const auto& p : rep.points) {
          std::string checks;
          for (const auto& c : p.checks)
            checks += (checks.empty() ? "" : "; ") + c.name + (c.pass ? " PASS" : " FAIL") +
                      (c.evidence.empty() ? "" : " (" + c.evidence + ")");
          char line[64];
          std::snprintf(line, sizeof(line), "%-14s %-14s %-4s %-4s ", label_name(p.label).c_str(),
                        format_double(p.u).c_str(), p.in_C ? "yes" : "no", p.in_T ? "yes" : "no");
          out << line << (checks.empty() ? "-" : checks) << "\n";
        }
        bool any_heuristic = false;
        for (const auto& p : rep.points)
          any_heuristic = any_heuristic ||
                          (!p.certified && p.label != Label::Boundary && p.label != Label::Infeasible);
        if (any_heuristic)
          out << "note: heuristic equilibrium sets; checks are advisory\n";
        out << (rep.all_verified() ? "RESULT: PASS" : "RESULT: FAIL") << "\n";
        if (!out_path.empty()) write_json(out_path, classification_report_to_json(rep));
      }
    } else if (app.got_subcommand(c_macro)) {
      Model m = load_model(model_path);
      EnsembleTag tag;
      if (ensemble == "canonical") {
        if (m.sigma != 1) throw ConfigError("--ensemble canonical needs sigma = 1; see canonical2");
        tag = {EnsembleKind::Canonical, {beta}, {}};
      } else if (ensemble == "microcanonical") {
        if (m.sigma != 1) throw ConfigError("--ensemble microcanonical needs sigma = 1; see micro2");
        tag = {EnsembleKind::Microcanonical, {}, {uval}};
      } else if (ensemble == "mixed") {
        tag = {EnsembleKind::MixedCanMicro, {beta1}, {u2}};
      } else if (ensemble == "canonical2") {
        tag = {EnsembleKind::Canonical2, {beta1, beta2}, {}};
      } else if (ensemble == "micro2") {
        tag = {EnsembleKind::Micro2, {}, {u1, u2}};
      } else {
        throw ConfigError("unknown ensemble '" + ensemble + "'");
      }
      EquilibriumSet s = equilibrium_set(m, tag, sopt);
      if (!s.diag.converged && !s.infeasible) note.add("equilibrium search not certified");
      write_json(out_path, equilibrium_set_to_json(s));
    } else if (app.got_subcommand(c_mixed)) {
      Model m = load_model(model_path);
      MixedMode mode;
      if (mode_name == "fixed-beta1") mode.kind = MixedMode::FixedBeta1;
      else if (mode_name == "fixed-u2") mode.kind = MixedMode::FixedU2;
      else throw ConfigError("unknown mixed mode '" + mode_name + "'");
      mode.value = mixed_value;
      auto grid = detail::resolve_grid(m, grid_spec, mode.kind == MixedMode::FixedBeta1 ? 1 : 0);
      ThermoCurve curve = mode.kind == MixedMode::FixedBeta1
                              ? mixed_entropy_fixed_beta1(m, mode.value, grid, sopt)
                              : mixed_entropy_fixed_u2(m, mode.value, grid, sopt);
      for (size_t i = 0; i < curve.grid.size(); ++i)
        if (!curve.diags[i].converged)
          note.add("mixed entropy not certified at " + format_double(curve.grid[i]));
      HullContext ctx = make_hull_context(curve.sampled());
      std::vector<PointRecord> pts(curve.grid.size());
      bool boundary = m.kind != ModelKind::Tabular;
      for (size_t i = 0; i < curve.grid.size(); ++i) pts[i] = classify_point(ctx, i, boundary);
      write_csv(out_path, curve_table(ctx.curve, ctx.hull, pts));
      if (do_classify || !report_path.empty()) {
        ClassifyOptions copt;
        copt.solver = sopt;
        ClassificationReport rep = classify_mixed(m, mode, grid, copt);
        rep.model_digest = model_digest(model_to_json(m));
        if (!report_path.empty()) write_json(report_path, classification_report_to_json(rep));
        out << (rep.all_verified() ? "RESULT: PASS" : "RESULT: FAIL") << "\n";
      }
    } else if (app.got_subcommand(c_sample)) {
      Model m = load_model(model_path);
      ChainConfig cfg;
      if (ensemble == "canonical") {
        cfg.kind = ChainConfig::Canonical;
        cfg.beta.assign(size_t(m.sigma), 0.0);
        cfg.beta[0] = beta;
      } else if (ensemble == "shell") {
        cfg.kind = ChainConfig::Shell;
        cfg.u.assign(size_t(m.sigma), 0.0);
        cfg.u[0] = uval;
        cfg.shell_halfwidth = rval;
      } else if (ensemble == "mixed") {
        cfg.kind = ChainConfig::MixedShell;
        cfg.beta = {beta1};
        cfg.u = {u2};
        cfg.shell_halfwidth = rval;
      } else {
        throw ConfigError("unknown ensemble '" + ensemble + "'");
      }
      cfg.sites = sites > 0 ? sites : (m.default_sites > 0 ? m.default_sites : 64);
      cfg.sweeps = sweeps;
      cfg.burnin = burnin;
      cfg.seed = seed;
      std::unique_ptr<std::ofstream> trace;
      SweepObserver observer = nullptr;
      long trace_every = std::max(1L, sweeps / 256);
      if (!trace_path.empty()) {
        trace = std::make_unique<std::ofstream>(trace_path, std::ios::binary);
        if (!*trace) throw ConfigError("cannot write '" + trace_path + "'");
        *trace << "sweep";
        for (int i = 0; i < m.sigma; ++i) *trace << ",h" << i;
        *trace << ",magnetization\n";
        observer = [&](const SweepView& v) {
          if (v.sweep % trace_every != 0) return;
          *trace << v.sweep;
          for (double h : *v.h) *trace << "," << format_double(h);
          *trace << "," << format_double(v.magnetization) << "\n";
        };
      }
      ChainResult r = run_chain(m, cfg, observer);
      if (!r.irreducibility_certified)
        note.add("shell half-width below the single-move bound " +
                 format_double(r.irreducibility_bound) + "; chain may be frozen");
      write_json(out_path, chain_result_to_json(r));
      if (note.any) {
        err << "diagnostic: " << note.message << "\n";
        return 0;  // informational for sampling; output is still exact
      }
    } else if (app.got_subcommand(c_plot)) {
      CsvTable t = read_csv(in_path);
      if (t.header.size() < 2) throw ConfigError("plot needs at least two CSV columns");
      auto pick = [&](const std::string& name, int fallback) {
        if (name.empty()) return fallback;
        int idx = t.column_index(name);
        if (idx < 0) throw ConfigError("no CSV column named '" + name + "'");
        return idx;
      };
      int xi = pick(x_col, 0);
      int yi = pick(y_col, 1);
      std::vector<PlotSeries> series;
      series.push_back({t.header[size_t(yi)], t.columns[size_t(xi)], t.columns[size_t(yi)]});
      int y2i = -1;
      if (!y2_col.empty()) y2i = pick(y2_col, -1);
      else if (y_col.empty() && t.header.size() >= 3 && t.header[2] == "s_hull") y2i = 2;
      if (y2i >= 0)
        series.push_back({t.header[size_t(y2i)], t.columns[size_t(xi)], t.columns[size_t(y2i)]});
      std::ofstream f(out_path, std::ios::binary);
      if (!f) throw ConfigError("cannot write '" + out_path + "'");
      f << render_line_chart(series, t.header[size_t(xi)], t.header[size_t(yi)]);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const CapacityError& e) {
    err << "diagnostic: " << e.what() << "\n";
    return 2;
  } catch (const FeasibilityError& e) {
    err << "diagnostic: " << e.what() << "\n";
    return 2;
  } catch (const StatError& e) {
    err << "diagnostic: " << e.what() << "\n";
    return 2;
  }

  if (note.any) {
    err << "diagnostic: " << note.message << "\n";
    return 2;
  }
  return 0;
}

}  // namespace ek::cli
