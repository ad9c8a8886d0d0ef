#include <catch_amalgamated.hpp>

#include <random>

#include "ensemblekit/lft.hpp"
#include "oracles.hpp"

using namespace ek;

namespace {

SampledCurve three_point() { return SampledCurve{{0.0, 1.0, 2.0}, {0.0, -0.5, -0.2}}; }

SampledCurve cw_closed_form(int n = 101) {
  SampledCurve c;
  c.grid = linspace(-0.5, 0.0, n);
  for (double u : c.grid) c.values.push_back(ektest::cw_entropy(u));
  return c;
}

}  // namespace

TEST_CASE("legendre_transform") {
  SECTION("direct evaluation on a two-point flat curve") {
    SampledCurve f{{0.0, 1.0}, {0.0, 0.0}};
    auto out = legendre_transform(f, {2.0});
    CHECK(out.values[0] == 0.0);
  }
  SECTION("three-point enumeration") {
    auto out = legendre_transform(three_point(), {-0.1});
    CHECK(out.values[0] == Catch::Approx(0.0).margin(1e-15));
  }
  SECTION("transform of the hull equals the transform of the curve") {
    auto betas = linspace(-4.0, 4.0, 201);
    for (const SampledCurve& c : {three_point(), cw_closed_form()}) {
      auto h = concave_hull(c);
      SampledCurve hull_curve{c.grid, h.hull};
      auto a = legendre_transform(c, betas);
      auto b = legendre_transform(hull_curve, betas);
      for (size_t i = 0; i < betas.size(); ++i) REQUIRE(std::fabs(a.values[i] - b.values[i]) <= 1e-12);
    }
  }
  SECTION("empty multiplier grid is rejected") {
    CHECK_THROWS_AS(legendre_transform(three_point(), {}), ShapeError);
  }
  SECTION("the transform is concave for arbitrary input curves") {
    std::mt19937_64 rng(71);
    auto betas = linspace(-3.0, 3.0, 101);
    for (int trial = 0; trial < 20; ++trial) {
      SampledCurve c;
      c.grid = linspace(0.0, 1.0, 17);
      for (size_t i = 0; i < c.grid.size(); ++i) c.values.push_back(-ektest::uniform01(rng));
      auto t = legendre_transform(c, betas);
      CHECK(concavity_violation(t) <= 1e-12);
    }
  }
}

TEST_CASE("concave_hull") {
  SECTION("a concave sample is its own hull with every point a vertex") {
    SampledCurve c = cw_closed_form();
    auto h = concave_hull(c);
    CHECK(h.vertices.size() == c.size());
    for (size_t i = 0; i < c.size(); ++i) REQUIRE(std::fabs(h.hull[i] - c.values[i]) <= 1e-14);
    CHECK(concavity_violation(SampledCurve{c.grid, h.hull}) <= 1e-12);
  }
  SECTION("the dented table takes the chord") {
    auto h = concave_hull(three_point());
    CHECK(h.hull[0] == 0.0);
    CHECK(h.hull[1] == Catch::Approx(-0.1).margin(1e-15));
    CHECK(h.hull[2] == -0.2);
    REQUIRE(h.vertices == std::vector<int>{0, 2});
  }
  SECTION("two points are always hull vertices with half-line superdifferentials") {
    SampledCurve c{{0.0, 1.0}, {0.0, 0.0}};
    auto h = concave_hull(c);
    CHECK(h.vertices == std::vector<int>{0, 1});
    auto s0 = superdifferential_at(h, 0);
    CHECK(s0.lo == 0.0);
    CHECK(s0.hi == kInf);
    auto s1 = superdifferential_at(h, 1);
    CHECK(s1.lo == -kInf);
    CHECK(s1.hi == 0.0);
  }
  SECTION("points outside the sampled domain stay outside") {
    SampledCurve c{{0.0, 1.0, 2.0, 3.0}, {-kInf, 0.0, -0.1, -kInf}};
    auto h = concave_hull(c);
    CHECK(h.hull[0] == -kInf);
    CHECK(h.hull[3] == -kInf);
    CHECK(superdifferential_at(h, 0).empty);
  }
  SECTION("interior holes take the chord value") {
    SampledCurve c{{0.0, 1.0, 2.0}, {0.0, -kInf, -0.2}};
    auto h = concave_hull(c);
    CHECK(h.hull[1] == Catch::Approx(-0.1).margin(1e-15));
  }
}

TEST_CASE("superdifferential_at") {
  SECTION("smooth strictly concave curve has slope intervals at grid resolution") {
    SampledCurve c;
    c.grid = linspace(-1.0, 1.0, 81);
    for (double u : c.grid) c.values.push_back(-u * u);
    auto h = concave_hull(c);
    double du = c.grid[1] - c.grid[0];
    for (size_t i = 1; i + 1 < c.size(); ++i) {
      auto s = superdifferential_at(h, i);
      REQUIRE(s.hi - s.lo <= 2.0 * du * 2.0 + 1e-12);  // O(grid * |f''|)
    }
  }
  SECTION("affine curve pins the slope everywhere inside") {
    SampledCurve c;
    c.grid = linspace(0.0, 1.0, 11);
    for (double u : c.grid) c.values.push_back(3.0 - 2.0 * u);
    auto h = concave_hull(c);
    for (size_t i = 1; i + 1 < c.size(); ++i) {
      auto s = superdifferential_at(h, i);
      CHECK(s.lo == Catch::Approx(-2.0).epsilon(1e-12));
      CHECK(s.hi == Catch::Approx(-2.0).epsilon(1e-12));
    }
  }
  SECTION("right endpoint of the dented table") {
    auto h = concave_hull(three_point());
    auto s = superdifferential_at(h, 2);
    CHECK(s.lo == -kInf);
    CHECK(s.hi == Catch::Approx(-0.1).margin(1e-15));
  }
  SECTION("off-grid index is rejected") {
    auto h = concave_hull(three_point());
    CHECK_THROWS_AS(superdifferential_at(h, 17), ShapeError);
  }
}

TEST_CASE("support_tests") {
  auto c = three_point();
  auto h = concave_hull(c);
  auto tol = default_support_tolerances(c);
  SECTION("dented point is in neither set") {
    auto r = support_tests(c, h, 1, tol);
    CHECK_FALSE(r.in_C);
    CHECK_FALSE(r.in_T);
  }
  SECTION("right vertex supports a strictly separating line") {
    auto r = support_tests(c, h, 2, tol);
    CHECK(r.in_C);
    CHECK(r.in_T);
    CHECK(r.witness == Catch::Approx(-0.2).margin(1e-12));
  }
  SECTION("flat two-point curve supports but never strictly") {
    SampledCurve f{{0.0, 1.0}, {0.0, 0.0}};
    auto hf = concave_hull(f);
    auto r = support_tests(f, hf, 0, default_support_tolerances(f));
    CHECK(r.in_C);
    CHECK_FALSE(r.in_T);
    CHECK(r.witness == 0.0);
  }
}

TEST_CASE("hull and transform invariants") {
  std::mt19937_64 rng(72);
  auto random_curve = [&](int n) {
    SampledCurve c;
    c.grid = linspace(0.0, 1.0, n);
    for (int i = 0; i < n; ++i) c.values.push_back(-2.0 * ektest::uniform01(rng));
    return c;
  };

  SECTION("the hull majorizes the curve") {
    for (int trial = 0; trial < 30; ++trial) {
      auto c = random_curve(13);
      auto h = concave_hull(c);
      for (size_t i = 0; i < c.size(); ++i) REQUIRE(h.hull[i] >= c.values[i] - 1e-12);
    }
  }
  SECTION("hull values are concave and supporting slopes decrease left to right") {
    for (int trial = 0; trial < 30; ++trial) {
      auto c = random_curve(15);
      auto h = concave_hull(c);
      REQUIRE(concavity_violation(SampledCurve{c.grid, h.hull}) <= 1e-12);
      for (size_t i = 0; i < c.size(); ++i) REQUIRE(h.beta_plus[i] <= h.beta_minus[i]);
      for (size_t i = 0; i + 1 < c.size(); ++i) {
        REQUIRE(h.beta_minus[i + 1] <= h.beta_minus[i] + 1e-12);
        REQUIRE(h.beta_plus[i + 1] <= h.beta_plus[i] + 1e-12);
      }
    }
  }
  SECTION("taking the hull twice changes nothing") {
    for (int trial = 0; trial < 30; ++trial) {
      auto c = random_curve(13);
      auto h = concave_hull(c);
      auto h2 = concave_hull(SampledCurve{c.grid, h.hull});
      REQUIRE(h2.hull == h.hull);
    }
  }
  SECTION("transform reverses pointwise order") {
    auto betas = linspace(-3.0, 3.0, 41);
    for (int trial = 0; trial < 30; ++trial) {
      auto f = random_curve(13);
      auto g = f;
      for (double& v : g.values) v += 0.3 * ektest::uniform01(rng);  // g >= f
      auto fs = legendre_transform(f, betas);
      auto gs = legendre_transform(g, betas);
      for (size_t i = 0; i < betas.size(); ++i) REQUIRE(fs.values[i] >= gs.values[i] - 1e-14);
    }
  }
  SECTION("refining the sample can only raise the hull and shrink the touching set") {
    // a point on the refined hull that survives refinement was already on the
    // coarse hull
    auto f = [](double u) { return std::sin(7.0 * u) - u * u; };
    SampledCurve coarse, fine;
    coarse.grid = linspace(0.0, 1.0, 21);
    fine.grid = linspace(0.0, 1.0, 41);
    for (double u : coarse.grid) coarse.values.push_back(f(u));
    for (double u : fine.grid) fine.values.push_back(f(u));
    auto hc = concave_hull(coarse);
    auto hf = concave_hull(fine);
    for (size_t i = 0; i < coarse.size(); ++i) {
      REQUIRE(hf.hull[2 * i] >= hc.hull[i] - 1e-12);
      bool fine_vertex = std::fabs(hf.hull[2 * i] - fine.values[2 * i]) <= 1e-12;
      bool coarse_vertex = std::fabs(hc.hull[i] - coarse.values[i]) <= 1e-12;
      if (fine_vertex) REQUIRE(coarse_vertex);
    }
  }
}
