#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "korogrid/grid_io.hpp"
#include "korogrid/sparse_grid.hpp"

using namespace korogrid;

namespace {

// Brute force: every (l, i) with 1 <= l_j <= n + d - 1, odd i, filtered by the scheme.
std::vector<MultiIndex> brute_force_indices(int d, int n, Scheme scheme) {
  const int lmax = n + d - 1;
  std::vector<MultiIndex> out;
  std::vector<int> l(static_cast<std::size_t>(d), 1);
  while (true) {
    int sum = 0, mx = 0;
    for (int v : l) sum += v, mx = std::max(mx, v);
    const bool keep = scheme == Scheme::sparse ? sum <= n + d - 1 : mx <= n;
    if (keep) {
      std::vector<std::int64_t> i(static_cast<std::size_t>(d), 1);
      while (true) {
        out.push_back({l, i});
        std::size_t j = 0;
        for (; j < i.size(); ++j) {
          i[j] += 2;
          if (i[j] < (std::int64_t{1} << l[j])) break;
          i[j] = 1;
        }
        if (j == i.size()) break;
      }
    }
    std::size_t j = 0;
    for (; j < l.size(); ++j) {
      if (++l[j] <= lmax) break;
      l[j] = 1;
    }
    if (j == l.size()) break;
  }
  return out;
}

// Nodal oracle: solve sum_k v_k phi_k(x_p) = f(x_p) over all grid points.
Eigen::VectorXd nodal_solve(const std::vector<MultiIndex>& indices, const Field& f) {
  const auto m = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXd A(m, m);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index p = 0; p < m; ++p) {
    const Point x = indices[static_cast<std::size_t>(p)].grid_point();
    rhs[p] = f(x);
    for (Eigen::Index k = 0; k < m; ++k) A(p, k) = tensor_hat(indices[static_cast<std::size_t>(k)], x);
  }
  return A.partialPivLu().solve(rhs);
}

double parabola(const PointRef& x) {
  double v = 1.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) v *= x[j] * (1.0 - x[j]);
  return v;
}

Point pt(std::initializer_list<double> values) {
  Point x(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double v : values) x[k++] = v;
  return x;
}

}  // namespace

TEST_CASE("tensor hat") {
  CHECK(tensor_hat({{1, 1}, {1, 1}}, pt({0.5, 0.5})) == 1.0);
  CHECK(tensor_hat({{1, 1}, {1, 1}}, pt({0.5, 0.0})) == 0.0);
  CHECK(tensor_hat({{2, 1}, {1, 1}}, pt({0.375, 0.25})) == 0.25);
  CHECK_THROWS_AS(tensor_hat({{2, 1}, {1, 1}}, pt({0.375})), DimensionMismatch);
}

TEST_CASE("index enumeration matches brute force") {
  CHECK(enumerate_indices(2, 3, Scheme::sparse).size() == 17);
  CHECK(enumerate_indices(2, 3, Scheme::full).size() == 49);
  CHECK(enumerate_indices(1, 3, Scheme::sparse).size() == 7);
  for (int d = 1; d <= 3; ++d)
    for (int n = 1; n <= 4; ++n)
      for (Scheme s : {Scheme::sparse, Scheme::full}) {
        auto expected = brute_force_indices(d, n, s);
        std::sort(expected.begin(), expected.end(), canonical_less);
        CHECK(enumerate_indices(d, n, s) == expected);
      }
  CHECK_THROWS(enumerate_indices(0, 3, Scheme::sparse));
  CHECK_THROWS(enumerate_indices(2, 0, Scheme::sparse));
}

TEST_CASE("enumeration order is canonical") {
  const auto idx = enumerate_indices(3, 4, Scheme::sparse);
  CHECK(std::is_sorted(idx.begin(), idx.end(), canonical_less));
  for (const auto& mi : idx) CHECK(mi.valid());
}

TEST_CASE("count points") {
  CHECK(count_points(2, 3, Scheme::sparse) == 17);  // 1 + 2*2 + 4*3
  CHECK(count_points(2, 3, Scheme::full) == 49);
  CHECK(count_points(3, 1, Scheme::sparse) == 1);
  for (int d = 1; d <= 5; ++d)
    for (int n = 1; n <= 8; ++n) CHECK(count_points(d, n, Scheme::sparse) == enumerate_indices(d, n, Scheme::sparse).size());
  CHECK_THROWS_AS(count_points(40, 60, Scheme::full), std::overflow_error);
  CHECK_THROWS_AS(count_points(200, 100, Scheme::sparse), std::overflow_error);
}

TEST_CASE("hierarchize small cases") {
  const auto i1 = hierarchize(parabola, 1, 1, Scheme::sparse);
  CHECK(i1.coefficient({{1}, {1}}) == 0.25);
  const auto i2 = hierarchize(parabola, 1, 2, Scheme::sparse);
  CHECK(i2.coefficient({{2}, {1}}) == 0.0625);
  CHECK(i2.evaluate(pt({0.25})) == 0.1875);

  const MultiIndex root{{1, 1}, {1, 1}};
  const auto basis = hierarchize([&](const PointRef& x) { return tensor_hat(root, x); }, 2, 4, Scheme::sparse);
  for (const auto& t : basis.terms()) CHECK(t.coefficient == (t.index == root ? 1.0 : 0.0));
  CHECK(basis.evaluate(pt({0.5, 0.5})) == 1.0);
}

TEST_CASE("hierarchize agrees with the nodal linear solve") {
  const Field wiggly = [](const PointRef& x) {
    double v = 1.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) v *= std::sin(3.0 * x[j]) * x[j] * (1.0 - x[j]) + x[j] * x[j] * (1.0 - x[j]);
    return v;
  };
  for (auto [d, n, s] : {std::tuple{1, 4, Scheme::sparse}, {2, 4, Scheme::sparse}, {2, 3, Scheme::full}, {3, 3, Scheme::sparse}}) {
    const auto interp = hierarchize(wiggly, d, n, s);
    const auto indices = enumerate_indices(d, n, s);
    const Eigen::VectorXd v = nodal_solve(indices, wiggly);
    const auto terms = interp.terms();
    REQUIRE(terms.size() == indices.size());
    for (std::size_t k = 0; k < terms.size(); ++k) CHECK(terms[k].coefficient == doctest::Approx(v[static_cast<Eigen::Index>(k)]).epsilon(1e-10));
  }
}

TEST_CASE("property: interpolation at every included grid point") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  for (int trial = 0; trial < 6; ++trial) {
    const double a = coef(rng), b = coef(rng);
    const Field f = [a, b](const PointRef& x) {
      double v = 1.0;
      for (Eigen::Index j = 0; j < x.size(); ++j) v *= x[j] * (1.0 - x[j]) * (1.0 + a * x[j] + b * std::cos(5.0 * x[j]));
      return v;
    };
    const int d = 1 + trial % 3;
    const auto interp = hierarchize(f, d, 4, trial % 2 ? Scheme::full : Scheme::sparse);
    for (const auto& t : interp.terms()) {
      const Point x = t.index.grid_point();
      CHECK(std::abs(interp.evaluate(x) - f(x)) <= 1e-12);
    }
  }
}

TEST_CASE("property: nestedness is bitwise") {
  const Field f = [](const PointRef& x) { return std::sin(M_PI * x[0]) * x[1] * (1.0 - x[1]) * std::exp(x[0] * x[1]); };
  const auto coarse = hierarchize(f, 2, 4, Scheme::sparse);
  const auto fine = hierarchize(f, 2, 6, Scheme::sparse);
  for (const auto& t : coarse.terms()) CHECK(fine.coefficient(t.index) == t.coefficient);
}

TEST_CASE("evaluation equals the full term sum") {
  const auto interp = hierarchize(parabola, 2, 4, Scheme::sparse);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Point x = pt({unit(rng), unit(rng)});
    double direct = 0.0;
    for (const auto& t : interp.terms()) direct += t.coefficient * tensor_hat(t.index, x);
    CHECK(interp.evaluate(x) == doctest::Approx(direct).epsilon(1e-14));
  }
  CHECK(interp.evaluate(pt({0.0, 0.3})) == 0.0);
  CHECK(interp.evaluate(pt({0.7, 1.0})) == 0.0);
  CHECK_THROWS_AS(interp.evaluate(pt({0.5})), DimensionMismatch);
}

TEST_CASE("coefficient integral oracle") {
  const Field second = [](const PointRef& x) { return std::pow(-2.0, static_cast<double>(x.size())); };
  CHECK(coefficient_integral_oracle(second, {{1}, {1}}, 2) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(coefficient_integral_oracle(second, {{2}, {1}}, 2) == doctest::Approx(0.0625).epsilon(1e-14));
  CHECK(coefficient_integral_oracle([](const PointRef&) { return 0.0; }, {{3, 2}, {5, 1}}, 3) == 0.0);
  CHECK_THROWS(coefficient_integral_oracle(second, {{1}, {1}}, 0));

  // Smooth non-polynomial mixed derivative: sin(pi x) sin(pi y).
  const Field f = [](const PointRef& x) { return std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]); };
  const Field fxxyy = [](const PointRef& x) { return std::pow(M_PI, 4) * std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]); };
  const auto interp = hierarchize(f, 2, 4, Scheme::sparse);
  for (const auto& t : interp.terms())
    CHECK(std::abs(coefficient_integral_oracle(fxxyy, t.index, 8) - t.coefficient) <= 1e-6);
}

TEST_CASE("sup error") {
  const auto interp = hierarchize(parabola, 1, 3, Scheme::sparse);
  const auto plan = default_plan(1, 3, Scheme::sparse, 1);
  CHECK(sup_error(parabola, interp, plan) == doctest::Approx(std::ldexp(1.0, -8)).epsilon(1e-12));

  const MultiIndex root{{1, 1}, {1, 1}};
  const Field phi = [&](const PointRef& x) { return tensor_hat(root, x); };
  const auto exact = hierarchize(phi, 2, 3, Scheme::sparse);
  CHECK(sup_error(phi, exact, default_plan(2, 3, Scheme::sparse, 1)) <= 1e-15);

  double previous = 1.0;
  for (int n = 1; n <= 6; ++n) {
    const auto i = hierarchize(parabola, 2, n, Scheme::sparse);
    const double e = sup_error(parabola, i, default_plan(2, n, Scheme::sparse, 1));
    CHECK(e < previous);
    previous = e;
  }
}

TEST_CASE("sampling plans") {
  const auto tensor = default_plan(2, 3, Scheme::sparse, 5);
  CHECK(tensor.points_per_axis == 33);
  CHECK(tensor.size() == 33 * 33);
  CHECK(tensor.point(0) == pt({0.0, 0.0}));
  CHECK(tensor.point(tensor.size() - 1) == pt({1.0, 1.0}));

  const auto halton = default_plan(4, 2, Scheme::sparse, 5);
  CHECK(halton.kind == SamplingPlan::Kind::low_discrepancy);
  CHECK(halton.size() == 100000 + static_cast<std::int64_t>(count_points(4, 2, Scheme::sparse)));
  const Point p = halton.point(17);
  CHECK(p.minCoeff() >= 0.0);
  CHECK(p.maxCoeff() < 1.0);
  CHECK(p == default_plan(4, 2, Scheme::sparse, 5).point(17));
  CHECK(p != default_plan(4, 2, Scheme::sparse, 6).point(17));

  // Result independent of the worker count.
  auto one = default_plan(2, 4, Scheme::sparse, 1, 1);
  auto many = default_plan(2, 4, Scheme::sparse, 1, 4);
  const auto interp = hierarchize(parabola, 2, 2, Scheme::sparse);
  CHECK(sup_error(parabola, interp, one) == sup_error(parabola, interp, many));
}

TEST_CASE("interpolant document") {
  const auto interp = hierarchize(parabola, 2, 3, Scheme::sparse);
  const auto doc = serialize(interp);
  CHECK(doc["terms"].size() == 17);
  CHECK(doc["scheme"] == "sparse");
  const auto back = deserialize_interpolant(nlohmann::json::parse(doc.dump()));
  for (const auto& t : interp.terms()) CHECK(back.coefficient(t.index) == t.coefficient);
  CHECK(serialize(back).dump() == doc.dump());

  auto broken = doc;
  broken["terms"].erase(3);
  CHECK_THROWS_AS(deserialize_interpolant(broken), GridParseError);
  broken = doc;
  broken["version"] = 7;
  CHECK_THROWS_AS(deserialize_interpolant(broken), GridParseError);
  broken = doc;
  broken["terms"][0]["i"] = {2, 1};
  CHECK_THROWS_AS(deserialize_interpolant(broken), GridParseError);
  CHECK_THROWS_AS(deserialize_interpolant(nlohmann::json::array()), GridParseError);
}
