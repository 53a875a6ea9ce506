#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "palm/measure.hpp"
#include "palm/rng.hpp"

using namespace palm;

TEST_CASE("grid discretizer on [0,1]") {
  auto g = Geometry::euclidean(1);
  auto m = make_grid_lebesgue(g, {{0.0, 1.0}}, {10}, 1.0);
  REQUIRE(m.size() == 10);
  for (std::size_t k = 0; k < 10; ++k) {
    CHECK(m.position(k)[0] == doctest::Approx(0.05 + 0.1 * k));
    CHECK(m.weight(k) == doctest::Approx(0.1));
  }
  CHECK(m.total_mass() == doctest::Approx(1.0));
}

TEST_CASE("lattice on a torus") {
  auto g = Geometry::torus({10.0});
  auto m = make_lattice(g, 1.0, 1.0);
  CHECK(m.size() == 10);
  CHECK(m.total_mass() == doctest::Approx(10.0));
}

TEST_CASE("lattice spacing must divide the period") {
  auto g = Geometry::torus({10.0});
  CHECK_THROWS_AS(make_lattice(g, 3.0, 1.0), SpecError);
}

TEST_CASE("poisson atom count has the right mean over 1000 seeds") {
  auto g = Geometry::torus({10.0, 10.0});
  double total = 0.0;
  const int runs = 1000;
  for (int s = 0; s < runs; ++s)
    total += static_cast<double>(make_poisson(g, 1.0, 1000 + s).size());
  const double mean = total / runs;
  // Poisson(100): 3 sigma of the sample mean is 3*10/sqrt(1000)
  CHECK(std::fabs(mean - 100.0) < 3.0 * 10.0 / std::sqrt(1000.0));
}

TEST_CASE("coincident atoms merge") {
  auto g = Geometry::euclidean(1);
  auto m = make_explicit(g, {1.0, 2.0, 1.0}, {0.5, 1.0, 0.25});
  REQUIRE(m.size() == 2);
  CHECK(m.position(0)[0] == 1.0);
  CHECK(m.weight(0) == doctest::Approx(0.75));
  CHECK(m.weight(1) == doctest::Approx(1.0));
  CHECK(m.total_mass() == doctest::Approx(1.75));
}

TEST_CASE("ball_mass open and closed") {
  auto g = Geometry::euclidean(1);
  std::vector<double> coords;
  for (int k = -5; k <= 5; ++k) coords.push_back(k);
  auto m = make_explicit(g, coords, std::vector<double>(coords.size(), 1.0));
  double c[] = {0.5};
  CHECK(ball_mass(m, c, 0.5, BallClosure::closed) == doctest::Approx(2.0));
  CHECK(ball_mass(m, c, 0.5, BallClosure::open) == doctest::Approx(0.0));

  auto grid = make_grid_lebesgue(g, {{0.0, 1.0}}, {10}, 1.0);
  double q[] = {0.5};
  CHECK(ball_mass(grid, q, 0.25, BallClosure::closed) == doctest::Approx(0.6));
}

TEST_CASE("ball_mass is monotone in the radius and saturates") {
  auto g = Geometry::torus({8.0});
  Rng rng(5);
  std::vector<double> coords, weights;
  for (int k = 0; k < 30; ++k) {
    coords.push_back(rng.uniform(0.0, 8.0));
    weights.push_back(rng.uniform(0.1, 2.0));
  }
  auto m = make_explicit(g, coords, weights);
  double c[] = {rng.uniform(0.0, 8.0)};
  double prev = 0.0;
  for (double r = 0.0; r <= 5.0; r += 0.05) {
    double v = ball_mass(m, c, r, BallClosure::closed);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(prev == doctest::Approx(m.total_mass()));
}

TEST_CASE("shell index: ties, ordering, and the closed/open identity") {
  auto g = Geometry::euclidean(1);
  {
    auto m = make_explicit(g, {-1.0, 1.0}, {1.0, 1.0});
    double q[] = {0.0};
    auto sx = build_shells(m, q);
    REQUIRE(sx.shell_count() == 1);
    CHECK(sx.radius[0] == doctest::Approx(1.0));
    CHECK(sx.shell_weight(0) == doctest::Approx(2.0));
  }
  {
    auto m = make_explicit(g, {0.3, 0.9}, {1.0, 1.0});
    double q[] = {0.0};
    auto sx = build_shells(m, q);
    REQUIRE(sx.shell_count() == 2);
    CHECK(sx.radius[0] == doctest::Approx(0.3));
    CHECK(sx.order[0] == 0);
    CHECK(sx.radius[1] == doctest::Approx(0.9));
  }
  {
    auto gt = Geometry::torus({2.0});
    auto m = make_explicit(gt, {0.5, 1.5}, {1.0, 1.0});
    double q[] = {0.0};
    auto sx = build_shells(m, q);
    REQUIRE(sx.shell_count() == 1);
    CHECK(sx.radius[0] == doctest::Approx(0.5));
  }
}

TEST_CASE("shell weights equal closed minus open ball mass at shell radii") {
  auto g = Geometry::torus({8.0, 8.0});
  Rng rng(17);
  std::vector<double> coords, weights;
  for (int k = 0; k < 40; ++k) {
    coords.push_back(rng.uniform(0.0, 8.0));
    coords.push_back(rng.uniform(0.0, 8.0));
    weights.push_back(rng.uniform(0.1, 1.5));
  }
  auto m = make_explicit(g, coords, weights);
  double q[] = {rng.uniform(0.0, 8.0), rng.uniform(0.0, 8.0)};
  auto sx = build_shells(m, q);
  double cum = 0.0;
  for (std::size_t k = 0; k < sx.shell_count(); ++k) {
    const double rho = sx.radius[k];
    const double closed = ball_mass(m, q, rho, BallClosure::closed);
    const double open = ball_mass(m, q, rho, BallClosure::open);
    CHECK(closed - open == doctest::Approx(sx.shell_weight(k)).epsilon(1e-12));
    CHECK(closed == doctest::Approx(sx.cum_weight[k]).epsilon(1e-12));
    cum += sx.shell_weight(k);
  }
  CHECK(cum == doctest::Approx(m.total_mass()));
}

TEST_CASE("grid refinement changes ball masses only near the sphere") {
  auto g = Geometry::euclidean(2);
  auto coarse = make_grid_lebesgue(g, {{0.0, 4.0}, {0.0, 4.0}}, {32}, 1.0);
  auto fine = make_grid_lebesgue(g, {{0.0, 4.0}, {0.0, 4.0}}, {64}, 1.0);
  double c[] = {2.0, 2.0};
  for (double r : {0.5, 1.0, 1.5}) {
    const double a = ball_mass(coarse, c, r, BallClosure::closed);
    const double b = ball_mass(fine, c, r, BallClosure::closed);
    // surface cells x cell mass ~ 2 pi r h at h = 1/8
    CHECK(std::fabs(a - b) < 2.0 * 2.0 * M_PI * r * (4.0 / 32.0));
  }
}

TEST_CASE("product measure") {
  auto g1 = Geometry::torus({2.0});
  auto lat = make_lattice(g1, 1.0, 1.0);
  auto grid = make_grid_lebesgue(g1, {{0.0, 2.0}}, {4}, 1.0);
  auto g2 = Geometry::torus({2.0, 2.0});
  auto prod = make_product(lat, grid, g2);
  CHECK(prod.size() == 8);
  CHECK(prod.total_mass() == doctest::Approx(lat.total_mass() * grid.total_mass()));
}

TEST_CASE("sum measure merges coincident atoms") {
  auto g = Geometry::euclidean(1);
  auto a = make_explicit(g, {0.0, 1.0}, {1.0, 1.0});
  auto b = make_explicit(g, {1.0, 2.0}, {0.5, 0.5});
  auto s = make_sum(a, b);
  CHECK(s.size() == 3);
  CHECK(s.total_mass() == doctest::Approx(3.0));
}

TEST_CASE("spec errors on bad inputs") {
  auto g = Geometry::euclidean(1);
  CHECK_THROWS_AS(make_grid_lebesgue(g, {{1.0, 1.0}}, {4}, 1.0), SpecError);
  CHECK_THROWS_AS(make_grid_lebesgue(g, {{0.0, 1.0}}, {0}, 1.0), SpecError);
  CHECK_THROWS_AS(make_grid_lebesgue(g, {{0.0, 1.0}}, {4}, 0.0), SpecError);
  CHECK_THROWS_AS(make_poisson(g, -1.0, 1, {{0.0, 1.0}}), SpecError);
  CHECK_THROWS_AS(make_explicit(g, {0.0}, {0.0}), SpecError);
}
