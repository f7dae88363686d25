#include <doctest.h>

#include <cmath>
#include <random>

#include "korogrid/constructions.hpp"

using namespace korogrid;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double x : values) v[k++] = x;
  return v;
}

double poly2(const PointRef& x) {
  double v = 1.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) v *= x[j] * (1.0 - x[j]);
  return v;
}

}  // namespace

TEST_CASE("hat network reproduces the hat exactly on dyadic points") {
  for (int l = 1; l <= 6; ++l)
    for (auto i : hierarchical_positions(l)) {
      const LevelIndex1D li{l, i};
      const auto net = build_hat_net(li);
      CHECK(stats(net).depth == 2);
      CHECK(stats(net).size == 3);
      for (int k = 0; k <= 256; ++k) {
        const double x = k / 256.0;
        CHECK(eval_scalar(net, vec({x})) == hat(li, x));
      }
    }
}

TEST_CASE("square network") {
  CHECK(eval_scalar(build_square_net(1), vec({0.5})) == 0.25);
  CHECK(eval_scalar(build_square_net(4), vec({0.0})) == 0.0);
  CHECK(eval_scalar(build_square_net(4), vec({1.0})) == 1.0);
  for (int s = 1; s <= 8; ++s) {
    const auto net = build_square_net(s);
    CHECK(stats(net).depth == s + 1);
    double worst = 0.0;
    for (int k = 0; k <= 10000; ++k) {
      const double x = k / 10000.0;
      worst = std::max(worst, std::abs(eval_scalar(net, vec({x})) - x * x));
    }
    CHECK(worst <= std::ldexp(1.0, -2 * s - 2) * (1.0 + 1e-12));
    if (s == 3) CHECK(worst <= std::ldexp(1.0, -8));
  }
}

TEST_CASE("multiplication network") {
  for (double eps : {0.25, 1e-2, 1e-3}) {
    for (double M : {1.0, 1.5, 3.0}) {
      const MultParams p{eps, M};
      for (auto out : {MultOutput::linear, MultOutput::rectified}) {
        const auto net = build_mult_net(p, out);
        const auto shape = mult_net_shape(p, out);
        CHECK(stats(net).depth == shape.depth);
        CHECK(stats(net).size == shape.size);
        CHECK(shape.depth == p.squaring_depth() + 3);
        double worst = 0.0;
        for (int a = 0; a <= 60; ++a)
          for (int b = 0; b <= 60; ++b) {
            const double x = -M + 2 * M * a / 60.0, y = -M + 2 * M * b / 60.0;
            const double got = eval_scalar(net, vec({x, y}));
            const double want = out == MultOutput::rectified ? std::max(0.0, x * y) : x * y;
            worst = std::max(worst, std::abs(got - want));
            CHECK(got == eval_scalar(net, vec({y, x})));
          }
        CHECK(worst <= eps);
        CHECK(eval_scalar(net, vec({0.0, 0.7 * M})) == 0.0);
        CHECK(eval_scalar(net, vec({-0.3 * M, 0.0})) == 0.0);
      }
    }
  }
  CHECK(MultParams{0.5, 1.0}.squaring_depth() == 1);
  CHECK(MultParams{0.375, 1.0}.squaring_depth() == 1);
  CHECK(MultParams{0.37, 1.0}.squaring_depth() == 2);
  CHECK_THROWS(build_mult_net(MultParams{0.0, 1.0}));
  CHECK_THROWS(build_mult_net(MultParams{0.1, 0.5}));
}

TEST_CASE("tree schedule") {
  const auto one = make_tree_schedule(1, 0.1);
  CHECK(one.height == 0);
  CHECK(one.multiplications.empty());
  const auto four = make_tree_schedule(4, 0.1);
  CHECK(four.height == 2);
  CHECK(four.leaf_count == 4);
  CHECK(four.budgets.size() == 2);
  CHECK(four.budgets[1] == doctest::Approx(four.budgets[0] / 4));
  const auto three = make_tree_schedule(3, 0.1);
  CHECK(three.height == 2);
  CHECK_THROWS(make_tree_schedule(0, 0.1));
}

TEST_CASE("product network") {
  const std::vector<LevelIndex1D> f1{{1, 1}};
  const auto p1 = build_product_net(f1, 0.01);
  for (int k = 0; k <= 64; ++k) CHECK(eval_scalar(p1, vec({k / 64.0})) == hat(f1[0], k / 64.0));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int d = 2; d <= 5; ++d) {
    std::vector<LevelIndex1D> factors;
    for (int j = 0; j < d; ++j) factors.push_back({1 + j % 3, 1});
    const double eps = 1e-3;
    const auto net = build_product_net(factors, eps);
    CHECK(stats(net).depth == product_net_shape(d, eps).depth);
    CHECK(stats(net).size == product_net_shape(d, eps).size);
    for (int k = 0; k < 2000; ++k) {
      Eigen::VectorXd x(d);
      for (int j = 0; j < d; ++j) x[j] = unit(rng);
      double want = 1.0;
      for (int j = 0; j < d; ++j) want *= hat(factors[static_cast<std::size_t>(j)], x[j]);
      const double got = eval_scalar(net, x);
      CHECK(std::abs(got - want) <= eps);
      CHECK(got >= 0.0);
      if (want == 0.0) CHECK(got == 0.0);
    }
  }
  // d = 2 at centre: both hats are 1
  const std::vector<LevelIndex1D> two{{1, 1}, {1, 1}};
  CHECK(std::abs(eval_scalar(build_product_net(two, 1e-3), vec({0.5, 0.5})) - 1.0) <= 1e-3);
}

TEST_CASE("compiled network approximates the interpolant") {
  const Field f = [](const PointRef& x) { return poly2(x) / 4.0; };
  const auto interp = hierarchize(f, 2, 5, Scheme::sparse);
  const double eps = std::ldexp(1.0, -5);
  const auto net = compile_sparse_grid_net(interp, eps);
  double worst = 0.0;
  for (int a = 0; a <= 128; ++a)
    for (int b = 0; b <= 128; ++b) {
      const Eigen::VectorXd x = vec({a / 128.0, b / 128.0});
      worst = std::max(worst, std::abs(eval_scalar(net, x) - interp.evaluate(x)));
    }
  CHECK(worst <= eps / 2);
  CHECK(eval_scalar(net, vec({0.0, 0.37})) == 0.0);
  CHECK(eval_scalar(net, vec({0.81, 1.0})) == 0.0);
  CHECK(net.metadata()["term_count"] == interp.term_count());
}

TEST_CASE("single term compiles to a scaled product") {
  const MultiIndex root{{1, 1}, {1, 1}};
  const auto interp = SparseGridInterpolant::from_terms(2, 1, Scheme::sparse, {{root, 0.75}});
  const auto net = compile_sparse_grid_net(interp, 1e-3);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const Eigen::VectorXd x = vec({unit(rng), unit(rng)});
    CHECK(std::abs(eval_scalar(net, x) - 0.75 * tensor_hat(root, x)) <= 1e-3);
  }
}

TEST_CASE("predicted bounds agree with built networks") {
  for (int d = 1; d <= 4; ++d)
    for (int n = 1; n <= 3; ++n)
      for (double eps : {std::ldexp(1.0, -4), 1e-3})
        for (Scheme s : {Scheme::sparse, Scheme::full}) {
          if (s == Scheme::full && d * n > 8) continue;
          const auto interp = hierarchize(poly2, d, n, s);
          const auto net = compile_sparse_grid_net(interp, eps);
          const auto predicted = predicted_bounds(d, n, eps, s);
          const auto measured = stats(net);
          CHECK(measured.depth == predicted.depth);
          CHECK(measured.size == predicted.size);
          CHECK(measured.total_units == predicted.total_units);
          CHECK(net.metadata()["predicted"]["size"] == predicted.size);
        }
}

TEST_CASE("property: predicted depth is nondecreasing as eps shrinks") {
  for (int d = 1; d <= 6; ++d) {
    int previous = 0;
    for (int k = 1; k <= 40; ++k) {
      const int depth = predicted_bounds(d, 3, std::ldexp(1.0, -k)).depth;
      CHECK(depth >= previous);
      previous = depth;
    }
  }
}
