// Acceptance suite: one case per release criterion, each printing a PASS/FAIL
// line with the measured quantity next to its pinned tolerance.

#include <catch_amalgamated.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ensemblekit/builtin_models.hpp"
#include "ensemblekit/classify.hpp"
#include "ensemblekit/cli.hpp"
#include "ensemblekit/io.hpp"
#include "ensemblekit/sampler.hpp"
#include "oracles.hpp"

using namespace ek;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  REQUIRE(pass);
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("criterion 1: exact classification on random finite tables") {
  auto t0 = Clock::now();
  int points = 0;
  bool all = true;
  for (int trial = 0; trial < 100; ++trial) {
    Model m = ektest::random_tabular(0xC1000 + std::uint64_t(trial));
    auto rep = classify_sweep(m, ektest::attained_grid(m));
    for (const auto& p : rep.points) {
      if (p.label == Label::Boundary || p.label == Label::Infeasible) continue;
      ++points;
      all = all && p.certified && p.verified();
    }
  }
  double dt = seconds_since(t0);
  report(1, all && dt < 10.0,
         "100 random tables, " + std::to_string(points) + " grid points verified exactly in " +
             format_double(dt) + " s (< 10 s)");
}

TEST_CASE("criterion 2: the dented table is nonequivalent at its middle value") {
  Model t3 = ektest::dented_three_point();
  ClassifyOptions opt;
  opt.explicit_beta_grid = linspace(-5.0, 5.0, 1000);
  auto rep = classify_sweep(t3, {0.0, 1.0, 2.0}, opt);
  bool label_ok = rep.points[1].label == Label::Nonequivalent;
  bool disjoint_ok = false;
  for (const auto& c : rep.points[1].checks)
    if (c.name == "disjoint-on-multiplier-grid")
      disjoint_ok = c.pass && c.evidence.find("1000/1000") != std::string::npos;
  // closed form: the middle entry needs 0.5 + b <= 0 and 0.5 + b <= 0.2 + 2b,
  // i.e. b <= -0.5 and b >= 0.3 simultaneously
  bool closed_form_ok = !(-0.5 >= 0.3);
  report(2, label_ok && disjoint_ok && closed_form_ok && rep.points[1].verified(),
         "label Nonequivalent at u = 1, 1000/1000 multipliers disjoint, closed-form support "
         "intervals empty");
}

TEST_CASE("criterion 3: canonical states are conditioned states, uniqueness transfers") {
  std::mt19937_64 rng(0xC3);
  bool tabular_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    Model m = ektest::random_tabular(0xC3000 + std::uint64_t(trial));
    for (int rep = 0; rep < 3; ++rep) {
      double beta = -3.0 + 6.0 * ektest::uniform01(rng);
      auto eb = canonical_set(m, beta);
      for (const auto& x : eb.members) {
        double u = repr_component(m, x, 0);
        auto eu = microcanonical_set(m, std::vector<double>{u});
        bool inside = false;
        for (const auto& y : eu.members) inside = inside || x.index == y.index;
        tabular_ok = tabular_ok && inside;
        if (eb.size() == 1)
          tabular_ok = tabular_ok && eu.size() == 1 && eu.members[0].index == x.index;
      }
    }
  }
  Model cw = make_curie_weiss();
  double worst = 0.0;
  for (double beta : {0.5, 1.5, 2.0}) {
    auto eb = canonical_set(cw, beta);
    for (const auto& x : eb.members) {
      auto eu = microcanonical_set(cw, repr_component(cw, x, 0));
      double nearest = kInf;
      for (const auto& y : eu.members) nearest = std::min(nearest, macrostate_distance(x, y));
      worst = std::max(worst, nearest);
    }
  }
  report(3, tabular_ok && worst <= 1e-6,
         "containment exact on 100 random tables; mean-field member distance " +
             format_double(worst) + " (<= 1e-6)");
}

TEST_CASE("criterion 4: duality and the closed-form entropy") {
  auto t0 = Clock::now();
  Model cw = make_curie_weiss();
  auto grid = linspace(-0.5, 0.0, 101);
  auto curve = entropy_curve(cw, grid);
  double entropy_err = 0.0;
  for (size_t i = 0; i < grid.size(); ++i)
    entropy_err = std::max(entropy_err, std::fabs(curve.values[i] - ektest::cw_entropy(grid[i])));
  auto betas = linspace(-1.0, 3.0, 101);
  auto phi = free_energy_curve(cw, betas);
  auto star = legendre_transform(curve.sampled(), betas);
  double dual_err = 0.0;
  for (size_t i = 0; i < betas.size(); ++i)
    dual_err = std::max(dual_err, std::fabs(phi.values[i] - star.values[i]));
  double dt = seconds_since(t0);
  report(4, entropy_err <= 1e-6 && dual_err <= 1e-3 && dt < 30.0,
         "max |s - closed form| = " + format_double(entropy_err) + " (<= 1e-6), max |phi - s*| = " +
             format_double(dual_err) + " (<= 1e-3), " + format_double(dt) + " s (< 30 s)");
}

TEST_CASE("criterion 5: hull laws hold on every builtin sweep") {
  struct Sweep {
    std::string name;
    SampledCurve entropy;
    SampledCurve phi;
  };
  std::vector<Sweep> sweeps;
  SolverOptions sopt;
  auto betas = linspace(-2.0, 3.0, 51);

  Model cw = make_curie_weiss();
  sweeps.push_back({"curie_weiss", entropy_curve(cw, linspace(-0.5, 0.0, 51)).sampled(),
                    free_energy_curve(cw, betas).sampled()});
  Model skew = make_three_state_skew();
  sweeps.push_back({"three_state_skew", entropy_curve(skew, linspace(0.0, 1.4, 29)).sampled(),
                    free_energy_curve(skew, betas).sampled()});
  Model pv = make_point_vortex(5, 2);
  auto pv_range = repr_attained_range(pv, 0, sopt);
  sweeps.push_back({"point_vortex",
                    entropy_curve(pv, linspace(pv_range.first, pv_range.second, 15)).sampled(),
                    free_energy_curve(pv, linspace(-20.0, 20.0, 41)).sampled()});
  Model mr = make_miller_robert(4, {-1.0, 1.0}, {0.5, 0.5}, 3, 1);
  auto mr_range = repr_attained_range(mr, 0, sopt);
  sweeps.push_back({"miller_robert",
                    entropy_curve(mr, linspace(mr_range.first, mr_range.second, 15)).sampled(),
                    free_energy_curve(mr, linspace(-30.0, 30.0, 41)).sampled()});
  Model t3 = ektest::dented_three_point();
  sweeps.push_back({"tabular", entropy_curve(t3, {0.0, 1.0, 2.0}).sampled(),
                    free_energy_curve(t3, betas).sampled()});
  Model tm = ektest::worked_mixed_four_point();
  {
    auto mixed = mixed_entropy_fixed_beta1(tm, 0.4, {0.0, 1.0});
    SampledCurve mixed_phi;
    mixed_phi.grid = betas;
    for (double b2 : betas) mixed_phi.values.push_back(mixed_free_energy_canonical(tm, 0.4, b2).value);
    sweeps.push_back({"tabular_mixed", mixed.sampled(), mixed_phi});
  }

  bool all = true;
  std::string detail;
  for (const auto& sw : sweeps) {
    auto hull = concave_hull(sw.entropy);
    double majorize = 0.0;
    for (size_t i = 0; i < sw.entropy.size(); ++i)
      if (std::isfinite(sw.entropy.values[i]))
        majorize = std::max(majorize, sw.entropy.values[i] - hull.hull[i]);
    auto tgrid = linspace(-3.0, 3.0, 101);
    auto star = legendre_transform(sw.entropy, tgrid);
    auto star_of_hull = legendre_transform(SampledCurve{sw.entropy.grid, hull.hull}, tgrid);
    double idem = 0.0;
    for (size_t i = 0; i < tgrid.size(); ++i)
      idem = std::max(idem, std::fabs(star.values[i] - star_of_hull.values[i]));
    double concave = concavity_violation(sw.phi);
    bool ok = majorize <= 1e-12 && idem <= 1e-12 && concave <= 1e-9;
    all = all && ok;
    if (!ok) detail += " " + sw.name + " fails";
  }
  report(5, all, "majorization <= 1e-12, transform idempotence <= 1e-12, free-energy concavity "
                 "<= 1e-9 on 6 builtin sweeps" + detail);
}

TEST_CASE("criterion 6: both mixed constructions agree and invert exactly") {
  std::mt19937_64 rng(0xC6);
  bool equality_ok = true;
  int checks = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Model m = ektest::random_tabular_mixed(0xC6000 + std::uint64_t(trial));
    for (int rep = 0; rep < 4; ++rep) {
      double b1 = -2.0 + 4.0 * ektest::uniform01(rng);
      const auto& h2 = m.table_repr[1];
      double u2 = h2[rng() % h2.size()];
      equality_ok = equality_ok && verify_mixed_equality(m, b1, u2).pass;
      ++checks;
    }
  }
  Model tm = ektest::worked_mixed_four_point();
  equality_ok = equality_ok && verify_mixed_equality(tm, 0.0, 1.0).pass;

  double invert_err = 0.0;
  auto betas = linspace(-2.0, 2.0, 41);
  for (int trial = 0; trial < 20; ++trial) {
    Model m = ektest::random_tabular_mixed(0xC6100 + std::uint64_t(trial));
    double b1 = -1.5 + 3.0 * ektest::uniform01(rng);
    auto curve = mixed_entropy_fixed_beta1(m, b1, ektest::attained_grid(m, 1));
    auto star = legendre_transform(curve.sampled(), betas);
    for (size_t i = 0; i < betas.size(); ++i)
      invert_err = std::max(invert_err,
                            std::fabs(star.values[i] - mixed_free_energy_canonical(m, b1, betas[i]).value));
    const auto& h2 = m.table_repr[1];
    double u2 = h2[rng() % h2.size()];
    auto cond = mixed_entropy_fixed_u2(m, u2, ektest::attained_grid(m, 0));
    auto star1 = legendre_transform(cond.sampled(), betas);
    for (size_t i = 0; i < betas.size(); ++i)
      invert_err = std::max(invert_err,
                            std::fabs(star1.values[i] - mixed_free_energy_conditioned(m, u2, betas[i]).value));
  }
  report(6, equality_ok && invert_err <= 1e-12,
         std::to_string(checks) + "+1 dual-construction checks agree; transform inversion gap " +
             format_double(invert_err) + " (<= 1e-12)");
}

TEST_CASE("criterion 7: dented and flat mixed constructions classify as predicted") {
  Model dent = ektest::dented_six_point_mixed();
  ClassifyOptions opt;
  opt.explicit_beta_grid = linspace(-5.0, 5.0, 1000);
  auto rep = classify_mixed(dent, MixedMode{MixedMode::FixedBeta1, 0.0},
                            {0.0, 1.0, 2.0, 3.0, 4.0, 5.0}, opt);
  bool dent_ok = rep.points[1].label == Label::Nonequivalent && rep.points[1].verified();
  bool disjoint_ok = false;
  for (const auto& c : rep.points[1].checks)
    if (c.name == "disjoint-on-multiplier-grid")
      disjoint_ok = c.pass && c.evidence.find("1000/1000") != std::string::npos;
  bool flat_ok = true;
  for (size_t i : {size_t(2), size_t(3), size_t(4)})
    flat_ok = flat_ok && rep.points[i].label == Label::Partial && rep.points[i].verified();
  report(7, dent_ok && disjoint_ok && flat_ok && rep.all_verified(),
         "dent at u2 = 1 Nonequivalent with exhaustive disjointness; affine stretch u2 = 2..4 "
         "Partial");
}

TEST_CASE("criterion 8: chains concentrate on the predicted macrostates") {
  auto t0 = Clock::now();
  Model cw = make_curie_weiss();
  ChainConfig canon;
  canon.kind = ChainConfig::Canonical;
  canon.beta = {2.0};
  canon.sites = 64;
  canon.sweeps = 200000;
  canon.seed = 7;
  auto cr = run_canonical_chain(cw, canon);
  double canon_gap = std::fabs(cr.mean_abs_magnetization - 0.9575);

  ChainConfig shell;
  shell.kind = ChainConfig::Shell;
  shell.u = {-0.125};
  shell.shell_halfwidth = 0.01;
  shell.sites = 64;
  shell.sweeps = 200000;
  shell.seed = 7;
  auto sr = run_shell_chain(cw, shell);
  double shell_gap = std::fabs(sr.mean_abs_magnetization - 0.5);
  double dt = seconds_since(t0);
  report(8, canon_gap <= 0.05 && shell_gap <= 0.05 && dt < 60.0,
         "tilted chain | |m| - 0.9575 | = " + format_double(canon_gap) +
             ", conditioned chain | |m| - 0.5 | = " + format_double(shell_gap) + " (<= 0.05), " +
             format_double(dt) + " s (< 60 s)");
}

TEST_CASE("criterion 9: composition-class decay rate and partition of unity") {
  Model cw = make_curie_weiss();
  MacrostateBall ball{Macrostate::simplex({0.1, 0.9}), 0.025};
  auto rd = estimate_rate_decay_exact(cw, {0.0}, ball, {16, 32, 64});
  double rel = std::fabs(-rd.slope - rd.rate_at_center) / rd.rate_at_center;

  const int n = 16;
  std::vector<double> values;
  for (int k = 0; k <= n; ++k) {
    double mag = 2.0 * double(k) / double(n) - 1.0;
    values.push_back(-0.5 * mag * mag);
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> cuts{values.front() - 1.0};
  for (size_t i = 0; i + 1 < values.size(); ++i) cuts.push_back(0.5 * (values[i] + values[i + 1]));
  cuts.push_back(values.back() + 1.0);
  double total = 0.0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i)
    total += exact_shell_probability(cw, {0.5 * (cuts[i] + cuts[i + 1])},
                                     0.5 * (cuts[i + 1] - cuts[i]), n);
  double defect = std::fabs(total - 1.0);
  report(9, rel <= 0.25 && defect <= 1e-12,
         "fitted slope " + format_double(rd.slope) + " vs rate " + format_double(rd.rate_at_center) +
             " (relative gap " + format_double(rel) + " <= 0.25); partition defect " +
             format_double(defect) + " (<= 1e-12)");
}

TEST_CASE("criterion 10: seeded commands are byte-identical on rerun") {
  fs::path dir = fs::temp_directory_path() / ("ensemblekit_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto path = [&](const std::string& n) { return (dir / n).string(); };
  {
    std::ofstream f(dir / "cw.json");
    f << R"({"kind": "curie_weiss"})";
    std::ofstream g(dir / "tab3.json");
    g << R"({"kind": "tabular", "table_I": [0.0, 0.5, 0.2], "table_H": [0.0, 1.0, 2.0]})";
  }
  auto run_twice = [&](std::vector<std::string> args, const std::string& out_name) {
    std::ostringstream sink;
    args.push_back("--out");
    args.push_back(path(out_name + ".a"));
    if (ek::cli::run_command(args, sink, sink) != 0) return false;
    args.back() = path(out_name + ".b");
    if (ek::cli::run_command(args, sink, sink) != 0) return false;
    return slurp(path(out_name + ".a")) == slurp(path(out_name + ".b"));
  };
  bool ok = true;
  ok = ok && run_twice({"entropy", "--model", path("cw.json"), "--u-grid", "-0.5:0:31", "--seed", "3"},
                       "entropy");
  ok = ok && run_twice({"free-energy", "--model", path("cw.json"), "--beta-grid", "-1:3:31",
                        "--seed", "3"},
                       "phi");
  ok = ok && run_twice({"classify", "--model", path("tab3.json"), "--seed", "3"}, "classify");
  ok = ok && run_twice({"macrostates", "--model", path("cw.json"), "--ensemble", "canonical",
                        "--beta", "2", "--seed", "3"},
                       "sets");
  ok = ok && run_twice({"sample", "--model", path("cw.json"), "--ensemble", "canonical", "--beta",
                        "2", "--n", "64", "--sweeps", "20000", "--seed", "7"},
                       "chain");
  fs::remove_all(dir);
  report(10, ok, "entropy, free-energy, classify, macrostates, and sample reruns match byte for byte");
}
