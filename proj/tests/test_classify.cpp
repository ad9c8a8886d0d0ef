#include <catch_amalgamated.hpp>

#include <random>

#include "ensemblekit/builtin_models.hpp"
#include "ensemblekit/classify.hpp"
#include "oracles.hpp"

using namespace ek;

namespace {

HullContext context_for(const Model& m, const std::vector<double>& grid) {
  return make_hull_context(entropy_curve(m, grid).sampled());
}

}  // namespace

TEST_CASE("classify_point labels the canonical examples") {
  Model t3 = ektest::dented_three_point();
  HullContext ctx = context_for(t3, {0.0, 1.0, 2.0});
  SECTION("dented interior point") {
    auto r = classify_point(ctx, 1, false);
    CHECK(r.label == Label::Nonequivalent);
    CHECK_FALSE(r.in_C);
  }
  SECTION("strictly supported endpoint") {
    auto r = classify_point(ctx, 2, false);
    CHECK(r.label == Label::Full);
    CHECK(r.witness == Catch::Approx(-0.2).margin(1e-12));
  }
  SECTION("flat support touches twice") {
    Model t2 = ektest::flat_two_point();
    HullContext c2 = context_for(t2, {0.0, 1.0});
    auto r = classify_point(c2, 0, false);
    CHECK(r.label == Label::Partial);
    CHECK(r.witness == 0.0);
  }
  SECTION("boundary labelling applies to sampled windows") {
    auto r = classify_point(ctx, 2, true);
    CHECK(r.label == Label::Boundary);
    CHECK(r.boundary_point);
  }
}

TEST_CASE("verify_point confirms the predicted set relations") {
  Model t3 = ektest::dented_three_point();
  HullContext ctx = context_for(t3, {0.0, 1.0, 2.0});
  auto bridge = pure_bridge(t3);
  auto grid = linspace(-5.0, 5.0, 1000);
  SECTION("disjointness at the dent across the whole multiplier grid") {
    auto r = classify_point(ctx, 1, false);
    verify_point(bridge, ctx, grid, &r);
    REQUIRE(r.label == Label::Nonequivalent);
    CHECK(r.verified());
    bool saw_grid_check = false;
    for (const auto& c : r.checks)
      if (c.name == "disjoint-on-multiplier-grid") {
        saw_grid_check = true;
        CHECK(c.evidence.find("1000/1000") != std::string::npos);
      }
    CHECK(saw_grid_check);
  }
  SECTION("equality at the recorded witness") {
    auto r = classify_point(ctx, 2, false);
    verify_point(bridge, ctx, grid, &r);
    CHECK(r.verified());
  }
  SECTION("proper containment for the flat table") {
    Model t2 = ektest::flat_two_point();
    HullContext c2 = context_for(t2, {0.0, 1.0});
    auto b2 = pure_bridge(t2);
    auto r = classify_point(c2, 0, false);
    verify_point(b2, c2, grid, &r);
    REQUIRE(r.label == Label::Partial);
    CHECK(r.verified());
  }
}

TEST_CASE("decompose_canonical splits a canonical set by conserved value") {
  SECTION("flat table at zero multiplier") {
    Model t2 = ektest::flat_two_point();
    HullContext ctx = context_for(t2, {0.0, 1.0});
    auto d = decompose_canonical(t2, 0.0, ctx);
    REQUIRE(d.groups.size() == 2);
    CHECK(d.passed);
  }
  SECTION("hull kink slope ties the two vertices") {
    Model t3 = ektest::dented_three_point();
    HullContext ctx = context_for(t3, {0.0, 1.0, 2.0});
    auto d = decompose_canonical(t3, -0.1, ctx);
    REQUIRE(d.canonical.size() == 2);
    REQUIRE(d.groups.size() == 2);
    CHECK(d.passed);
    std::vector<double> us = {d.groups[0].u, d.groups[1].u};
    std::sort(us.begin(), us.end());
    CHECK(us[0] == 0.0);
    CHECK(us[1] == 2.0);
  }
  SECTION("spin-flip pair shares one conserved value") {
    Model cw = make_curie_weiss();
    HullContext ctx = context_for(cw, linspace(-0.5, 0.0, 101));
    auto d = decompose_canonical(cw, 2.0, ctx);
    REQUIRE(d.canonical.size() == 2);
    REQUIRE(d.groups.size() == 1);
    CHECK(d.groups[0].members.size() == 2);
    CHECK(d.passed);
  }
}

TEST_CASE("differentiability of the free energy mirrors set equality") {
  Model t3 = ektest::dented_three_point();
  HullContext ctx = context_for(t3, {0.0, 1.0, 2.0});
  SECTION("unique supporting value") {
    auto d = differentiability_check(t3, -0.2, ctx);
    CHECK(d.differentiable);
    CHECK(d.consistent);
  }
  SECTION("kink slope spreads the transform argmin") {
    auto d = differentiability_check(t3, -0.1, ctx);
    CHECK_FALSE(d.differentiable);
    CHECK(d.consistent);
  }
  SECTION("affine table is never differentiable at the shared slope") {
    Model affine = make_tabular({0.0, 0.0, 0.0}, {{0.0, 0.5, 1.0}});
    HullContext c = context_for(affine, {0.0, 0.5, 1.0});
    auto d = differentiability_check(affine, 0.0, c);
    CHECK_FALSE(d.differentiable);
    CHECK(d.consistent);
    auto r = classify_point(c, 1, false);
    CHECK(r.label == Label::Partial);
  }
}

TEST_CASE("mixed classification") {
  SECTION("two-point conditioned curve keeps both values supported") {
    Model tm = ektest::worked_mixed_four_point();
    auto rep = classify_mixed(tm, MixedMode{MixedMode::FixedBeta1, 0.0}, {0.0, 1.0});
    REQUIRE(rep.points.size() == 2);
    for (const auto& p : rep.points) {
      CHECK(p.in_C);
      CHECK(p.verified());
    }
  }
  SECTION("conditioning on u2 = 1 and sweeping the leading value") {
    Model tm = ektest::worked_mixed_four_point();
    auto rep = classify_mixed(tm, MixedMode{MixedMode::FixedU2, 1.0}, {0.0, 1.0});
    REQUIRE(rep.points.size() == 2);
    for (const auto& p : rep.points) CHECK(p.verified());
  }
  SECTION("six-point construction: dent and affine stretch") {
    Model dent = ektest::dented_six_point_mixed();
    ClassifyOptions opt;
    opt.explicit_beta_grid = linspace(-5.0, 5.0, 1000);
    auto rep = classify_mixed(dent, MixedMode{MixedMode::FixedBeta1, 0.0},
                              {0.0, 1.0, 2.0, 3.0, 4.0, 5.0}, opt);
    REQUIRE(rep.points.size() == 6);
    CHECK(rep.points[1].label == Label::Nonequivalent);
    CHECK(rep.points[2].label == Label::Partial);
    CHECK(rep.points[3].label == Label::Partial);
    CHECK(rep.points[4].label == Label::Partial);
    CHECK(rep.all_verified());
  }
}

TEST_CASE("the two mixed constructions produce the same set") {
  Model tm = ektest::worked_mixed_four_point();
  SECTION("worked example") {
    auto chk = verify_mixed_equality(tm, 0.0, 1.0);
    CHECK(chk.pass);
    REQUIRE(chk.tilt_then_condition.size() == 1);
    CHECK(chk.tilt_then_condition.members[0].index == 3);
    CHECK(chk.condition_then_tilt.members[0].index == 3);
  }
  SECTION("an extreme tilt selects the smallest leading value in the slice") {
    auto chk = verify_mixed_equality(tm, 1e3, 1.0);
    CHECK(chk.pass);
    REQUIRE(chk.tilt_then_condition.size() == 1);
    CHECK(chk.tilt_then_condition.members[0].index == 2);  // H1 = 0 within the u2 = 1 slice
  }
  SECTION("random tables never disagree") {
    std::mt19937_64 rng(91);
    for (int trial = 0; trial < 50; ++trial) {
      Model m = ektest::random_tabular_mixed(6000 + std::uint64_t(trial));
      for (int rep = 0; rep < 4; ++rep) {
        double b1 = -2.0 + 4.0 * ektest::uniform01(rng);
        const auto& h2 = m.table_repr[1];
        double u2 = h2[rng() % h2.size()];
        REQUIRE(verify_mixed_equality(m, b1, u2).pass);
      }
    }
  }
}

TEST_CASE("sweep reports stay coherent") {
  std::mt19937_64 rng(92);
  for (int trial = 0; trial < 40; ++trial) {
    Model m = ektest::random_tabular(7000 + std::uint64_t(trial));
    auto rep = classify_sweep(m, ektest::attained_grid(m));
    for (const auto& p : rep.points) {
      if (p.label == Label::Full) REQUIRE(p.in_T);
      if (p.label == Label::Partial) REQUIRE((p.in_C && !p.in_T));
      if (p.label == Label::Nonequivalent) REQUIRE_FALSE(p.in_C);
      REQUIRE(p.verified());
    }
  }
}

TEST_CASE("a concave table never produces an interior nonequivalence label") {
  for (int trial = 0; trial < 20; ++trial) {
    Model m = ektest::random_concave_tabular(8000 + std::uint64_t(trial));
    auto grid = ektest::attained_grid(m);
    auto rep = classify_sweep(m, grid);
    for (size_t i = 1; i + 1 < rep.points.size(); ++i) {
      INFO("trial " << trial << " u = " << rep.points[i].u);
      REQUIRE(rep.points[i].label != Label::Nonequivalent);
    }
  }
}

TEST_CASE("full transform argmins at every multiplier force a concave measured entropy") {
  // when each canonical set decomposes across the whole transform argmin the
  // entropy can have no interior dent, and the dented table breaks the
  // hypothesis rather than the conclusion
  auto hypothesis_and_dent = [](const Model& m) {
    auto grid = ektest::attained_grid(m);
    HullContext ctx = make_hull_context(entropy_curve(m, grid).sampled());
    bool hypothesis = true;
    for (double beta : linspace(-4.0, 4.0, 81)) {
      auto d = decompose_canonical(m, beta, ctx);
      auto arg = std::vector<double>{};
      double best = kInf;
      for (size_t i = 0; i < ctx.curve.size(); ++i)
        best = std::min(best, beta * ctx.curve.grid[i] - ctx.hull.hull[i]);
      for (size_t i = 0; i < ctx.curve.size(); ++i)
        if (beta * ctx.curve.grid[i] - ctx.hull.hull[i] <= best + 1e-12) arg.push_back(ctx.curve.grid[i]);
      for (double u : arg) {
        bool covered = false;
        for (const auto& g : d.groups) covered = covered || std::fabs(g.u - u) <= 1e-9;
        hypothesis = hypothesis && covered;
      }
    }
    double dent = 0.0;
    for (size_t i = 1; i + 1 < ctx.curve.size(); ++i)
      dent = std::max(dent, ctx.hull.hull[i] - ctx.curve.values[i]);
    return std::pair{hypothesis, dent};
  };

  auto [hyp_concave, dent_concave] = hypothesis_and_dent(ektest::random_concave_tabular(8100));
  CHECK(hyp_concave);
  CHECK(dent_concave <= 1e-12);

  auto [hyp_dented, dent_dented] = hypothesis_and_dent(ektest::dented_three_point());
  CHECK_FALSE(hyp_dented);
  CHECK(dent_dented > 0.1);
}

TEST_CASE("mean-field sweeps label window edges Boundary and verify inside") {
  Model cw = make_curie_weiss();
  auto rep = classify_sweep(cw, linspace(-0.5, 0.0, 21));
  REQUIRE(rep.points.size() == 21);
  CHECK(rep.points.front().label == Label::Boundary);
  CHECK(rep.points.back().label == Label::Boundary);
  for (size_t i = 1; i + 1 < rep.points.size(); ++i) {
    const auto& p = rep.points[i];
    INFO("u = " << p.u);
    REQUIRE(p.label == Label::Full);  // strictly concave entropy
    REQUIRE_FALSE(p.certified);       // heuristic sets, advisory checks
    for (const auto& c : p.checks) REQUIRE(c.pass);
  }
}

TEST_CASE("vortex-cell sweeps classify coherently at window resolution") {
  Model pv = make_point_vortex(5, 2);
  auto range = repr_attained_range(pv, 0);
  auto grid = linspace(range.first, range.second, 9);
  ClassifyOptions opt;
  opt.beta_grid_points = 60;
  opt.solver.multistarts = 6;
  auto rep = classify_sweep(pv, grid, opt);
  REQUIRE(rep.points.size() == 9);
  int nonequivalent = 0;
  for (const auto& p : rep.points) {
    INFO("u = " << p.u << " label " << label_name(p.label));
    REQUIRE(p.label != Label::Infeasible);  // the whole window is attainable
    if (p.label == Label::Boundary) continue;
    if (p.label == Label::Full) REQUIRE(p.in_T);
    if (p.label == Label::Partial) REQUIRE((p.in_C && !p.in_T));
    if (p.label == Label::Nonequivalent) {
      REQUIRE_FALSE(p.in_C);
      ++nonequivalent;
    }
    REQUIRE_FALSE(p.certified);  // heuristic sets, advisory checks
    for (const auto& c : p.checks) REQUIRE(c.pass);
  }
  // clustering at low energy dents the entropy: the window shows genuine
  // nonequivalence stretches
  CHECK(nonequivalent >= 3);
}

TEST_CASE("grouping collisions and off-grid indices are reported") {
  SECTION("conserved values closer than the bucket tolerance cannot be split") {
    Model near = make_tabular({0.0, 0.0}, {{0.0, 5e-8}});
    HullContext ctx = make_hull_context(entropy_curve(near, {0.0, 5e-8}).sampled());
    CHECK_THROWS_AS(decompose_canonical(near, 0.0, ctx), ConfigError);
  }
  SECTION("classification index must lie on the grid") {
    Model t3 = ektest::dented_three_point();
    HullContext ctx = make_hull_context(entropy_curve(t3, {0.0, 1.0, 2.0}).sampled());
    CHECK_THROWS_AS(classify_point(ctx, 5, false), ShapeError);
  }
}
