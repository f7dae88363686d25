#include <doctest.h>

#include <random>

#include "korogrid/basis1d.hpp"

using namespace korogrid;

TEST_CASE("mother hat") {
  CHECK(mother_hat(0.0) == 1.0);
  CHECK(mother_hat(1.0) == 0.0);
  CHECK(mother_hat(-1.0) == 0.0);
  CHECK(mother_hat(0.5) == 0.5);
  CHECK(mother_hat(3.0) == 0.0);
  CHECK(mother_hat(-0.25f) == 0.75f);
}

TEST_CASE("hat values") {
  CHECK(hat(LevelIndex1D{2, 1}, 0.25) == 1.0);
  CHECK(hat(LevelIndex1D{2, 1}, 0.5) == 0.0);
  // x_{3,3} = 0.375, h_3 = 0.125: 1 - 0.03125/0.125
  CHECK(hat(LevelIndex1D{3, 3}, 0.40625) == 0.75);
}

TEST_CASE("grid points") {
  CHECK(grid_points(1) == std::vector<double>{0.5});
  CHECK(grid_points(2) == std::vector<double>{0.25, 0.5, 0.75});
  const auto g3 = grid_points(3);
  CHECK(g3.size() == 7);
  CHECK(g3.front() == 0.125);
  for (std::size_t k = 1; k < g3.size(); ++k) CHECK(g3[k] > g3[k - 1]);
  CHECK_THROWS_AS(grid_points(0), InvalidLevel);
}

TEST_CASE("hierarchical positions") {
  CHECK(hierarchical_positions(1) == std::vector<std::int64_t>{1});
  CHECK(hierarchical_positions(2) == std::vector<std::int64_t>{1, 3});
  CHECK(hierarchical_positions(3) == std::vector<std::int64_t>{1, 3, 5, 7});
  for (int l = 1; l <= 10; ++l) {
    CHECK(grid_points(l).size() == (std::size_t{1} << l) - 1);
    CHECK(hierarchical_positions(l).size() == std::size_t{1} << (l - 1));
  }
  CHECK_THROWS_AS(hierarchical_positions(-2), InvalidLevel);
}

TEST_CASE("level index validity") {
  CHECK(LevelIndex1D{3, 7}.valid());
  CHECK_FALSE(LevelIndex1D{3, 8}.valid());
  CHECK_FALSE(LevelIndex1D{3, 0}.valid());
  CHECK_FALSE(LevelIndex1D{0, 1}.valid());
  CHECK(LevelIndex1D{3, 5}.hierarchical());
  CHECK_FALSE(LevelIndex1D{3, 4}.hierarchical());
}

TEST_CASE("property: same-level hierarchical hats have disjoint supports") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int l = 1; l <= 7; ++l) {
    const auto positions = hierarchical_positions(l);
    for (int k = 0; k < 500; ++k) {
      const double x = unit(rng);
      int nonzero = 0;
      for (auto i : positions) {
        const double v = hat(LevelIndex1D{l, i}, x);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        if (v != 0.0) ++nonzero;
      }
      CHECK(nonzero <= 1);
      if (nonzero == 1) CHECK(hat(LevelIndex1D{l, containing_position(l, x)}, x) > 0.0);
    }
  }
}

TEST_CASE("property: hats vanish on the boundary and peak at their centre") {
  for (int l = 1; l <= 8; ++l)
    for (std::int64_t i = 1; i < (std::int64_t{1} << l); ++i) {
      const LevelIndex1D li{l, i};
      CHECK(hat(li, 0.0) == 0.0);
      CHECK(hat(li, 1.0) == 0.0);
      CHECK(hat(li, li.center()) == 1.0);
      CHECK(hat(li, li.center() + li.mesh_width()) == 0.0);
      CHECK(hat(li, li.center() - li.mesh_width()) == 0.0);
    }
}
