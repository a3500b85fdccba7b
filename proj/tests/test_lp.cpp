#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "qkdsim/lp.hpp"

using namespace qkdsim;

TEST_CASE("simplex solves a textbook problem") {
  // min -x - 2y  s.t.  x + y <= 4, x <= 2, y <= 3, x,y >= 0  -> (1, 3)
  std::vector<std::vector<double>> a = {{1, 1}, {1, 0}, {0, 1}};
  std::vector<double> b = {4, 2, 3};
  std::vector<double> c = {-1, -2};
  auto r = solve_lp(a, b, c);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.objective == Catch::Approx(-7.0));
  CHECK(r.x[0] == Catch::Approx(1.0));
  CHECK(r.x[1] == Catch::Approx(3.0));
}

TEST_CASE("simplex handles lower bounds via negated rows") {
  // min x  s.t.  x >= 2 (as -x <= -2), x <= 5
  std::vector<std::vector<double>> a = {{-1}, {1}};
  std::vector<double> b = {-2, 5};
  std::vector<double> c = {1};
  auto r = solve_lp(a, b, c);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.objective == Catch::Approx(2.0));
}

TEST_CASE("simplex detects infeasibility") {
  // x <= 1 and x >= 2
  std::vector<std::vector<double>> a = {{1}, {-1}};
  std::vector<double> b = {1, -2};
  std::vector<double> c = {1};
  CHECK(solve_lp(a, b, c).status == LpStatus::Infeasible);
}

TEST_CASE("simplex detects unboundedness") {
  // min -x  s.t.  -x <= 0
  std::vector<std::vector<double>> a = {{-1}};
  std::vector<double> b = {0};
  std::vector<double> c = {-1};
  CHECK(solve_lp(a, b, c).status == LpStatus::Unbounded);
}

TEST_CASE("simplex respects equality-like sandwiches") {
  // 2 <= x + y <= 2, x <= 1.5: min y -> x = 1.5, y = 0.5
  std::vector<std::vector<double>> a = {{1, 1}, {-1, -1}, {1, 0}};
  std::vector<double> b = {2, -2, 1.5};
  std::vector<double> c = {0, 1};
  auto r = solve_lp(a, b, c);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.objective == Catch::Approx(0.5));
}

TEST_CASE("simplex matches brute force on random boxes") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  // min c.x over 0 <= x_i <= 1: solution picks x_i = 1 where c_i < 0
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 4;
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    for (int i = 0; i < n; ++i) {
      std::vector<double> row(n, 0.0);
      row[i] = 1.0;
      a.push_back(row);
      b.push_back(1.0);
    }
    std::vector<double> c(n);
    double expect = 0.0;
    for (int i = 0; i < n; ++i) {
      c[i] = u(rng);
      if (c[i] < 0.0) expect += c[i];
    }
    auto r = solve_lp(a, b, c);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == Catch::Approx(expect).margin(1e-9));
  }
}
