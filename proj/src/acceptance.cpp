#include "korogrid/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "korogrid/constructions.hpp"
#include "korogrid/grid_io.hpp"
#include "korogrid/harness.hpp"

namespace korogrid::acceptance {

namespace {

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << "FAILED " << what << "; ";
    }
  }
};

using Check = std::function<void(Outcome&)>;

CriterionResult run(int id, std::string title, double time_limit, const Check& check) {
  CriterionResult result;
  result.id = id;
  result.title = std::move(title);
  result.time_limit = time_limit;
  Outcome outcome;
  const auto start = std::chrono::steady_clock::now();
  try {
    check(outcome);
  } catch (const std::exception& e) {
    outcome.require(false, std::string("exception: ") + e.what());
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (time_limit > 0.0 && result.seconds >= time_limit) {
    outcome.passed = false;
    outcome.detail << "FAILED runtime " << result.seconds << " s >= " << time_limit << " s; ";
  }
  result.passed = outcome.passed;
  result.detail = outcome.detail.str();
  return result;
}

Point point2(double a, double b) {
  Point p(2);
  p << a, b;
  return p;
}

std::vector<Point> random_points(int d, int count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point> out;
  for (int k = 0; k < count; ++k) {
    Point x(d);
    for (int j = 0; j < d; ++j) x[j] = unit(rng);
    out.push_back(x);
  }
  return out;
}

bool bitwise_equal(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

// Round trip through text and compare evaluations bit for bit.
bool network_round_trips(const ReluNetwork& net, std::mt19937_64& rng) {
  const std::string text = serialize(net).dump();
  const ReluNetwork back = deserialize(nlohmann::json::parse(text));
  std::uniform_real_distribution<double> unit(-0.25, 1.25);
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd x(net.input_dim());
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = unit(rng);
    const Eigen::VectorXd a = eval_network(net, x), b = eval_network(back, x);
    for (Eigen::Index r = 0; r < a.size(); ++r)
      if (!bitwise_equal(a[r], b[r])) return false;
  }
  return true;
}

bool interpolant_round_trips(const SparseGridInterpolant& interp, std::mt19937_64& rng) {
  const SparseGridInterpolant back = deserialize_interpolant(nlohmann::json::parse(serialize(interp).dump()));
  for (const auto& x : random_points(interp.dimension(), 100, rng))
    if (!bitwise_equal(interp.evaluate(x), back.evaluate(x))) return false;
  return true;
}

}  // namespace

std::vector<CriterionResult> run_all(const Options& options) {
  std::vector<CriterionResult> results;
  std::mt19937_64 rng(options.seed);
  StudyConfig study;
  study.seed = options.seed;
  study.threads = options.threads;
  // Compiled artifacts collected for the serialization criterion.
  std::vector<ReluNetwork> compiled;
  std::vector<SparseGridInterpolant> interpolants;

  results.push_back(run(1, "hat-net exactness", 1.0, [&](Outcome& o) {
    std::uniform_int_distribution<int> level(1, 6);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const int l = level(rng);
      std::uniform_int_distribution<std::int64_t> pos(1, (std::int64_t{1} << l) - 1);
      const LevelIndex1D li{l, pos(rng)};
      const ReluNetwork net = build_hat_net(li);
      if (k < 3) compiled.push_back(net);
      for (int q = 0; q < 1000; ++q) {
        Eigen::VectorXd x(1);
        x[0] = q / 999.0;
        worst = std::max(worst, std::abs(eval_scalar(net, x) - hat(li, x[0])));
      }
    }
    o.detail << "max |net - hat| = " << worst << "; ";
    o.require(worst <= 1e-14, "max deviation <= 1e-14");
  }));

  results.push_back(run(2, "multiplication contract", 5.0, [&](Outcome& o) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (double eps : {std::ldexp(1.0, -4), std::ldexp(1.0, -6), std::ldexp(1.0, -8)}) {
      for (double M : {1.0, 1.25}) {
        const ReluNetwork net = build_mult_net({eps, M});
        compiled.push_back(net);
        double worst = 0.0;
        for (int a = 0; a <= 200; ++a)
          for (int b = 0; b <= 200; ++b) {
            const double x = -M + 2.0 * M * a / 200.0, y = -M + 2.0 * M * b / 200.0;
            worst = std::max(worst, std::abs(eval_scalar(net, point2(x, y)) - x * y));
          }
        double zero = 0.0;
        for (int k = 0; k < 100; ++k) {
          const double v = M * unit(rng);
          zero = std::max({zero, std::abs(eval_scalar(net, point2(0.0, v))), std::abs(eval_scalar(net, point2(v, 0.0)))});
        }
        o.detail << "eps=" << eps << " M=" << M << ": err " << worst << ", zero " << zero << "; ";
        o.require(worst <= eps, "grid error <= eps");
        o.require(zero <= 1e-12, "0-in-0-out");
      }
    }
  }));

  results.push_back(run(3, "product-net contract", 30.0, [&](Outcome& o) {
    const double eps = std::ldexp(1.0, -6);
    std::uniform_int_distribution<int> level(1, 4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int d : {2, 3, 4}) {
      std::vector<LevelIndex1D> factors;
      for (int j = 0; j < d; ++j) {
        const int l = level(rng);
        std::uniform_int_distribution<std::int64_t> cell(0, (std::int64_t{1} << (l - 1)) - 1);
        factors.push_back({l, 2 * cell(rng) + 1});
      }
      const ReluNetwork net = build_product_net(factors, eps);
      compiled.push_back(net);
      auto exact = [&](const Point& x) {
        double p = 1.0;
        for (int j = 0; j < d; ++j) p *= hat(factors[static_cast<std::size_t>(j)], x[j]);
        return p;
      };
      // Samples concentrated on the product's support box, where it is nonzero.
      double worst = 0.0;
      for (int k = 0; k < 10000; ++k) {
        Point x(d);
        for (int j = 0; j < d; ++j) {
          const auto& f = factors[static_cast<std::size_t>(j)];
          x[j] = f.center() + f.mesh_width() * (2.0 * unit(rng) - 1.0);
        }
        worst = std::max(worst, std::abs(eval_scalar(net, x) - exact(x)));
      }
      int nonzero_outside = 0;
      std::uniform_int_distribution<int> axis(0, d - 1);
      for (int k = 0; k < 1000; ++k) {
        Point x = random_points(d, 1, rng).front();
        const int j = axis(rng);
        const auto& f = factors[static_cast<std::size_t>(j)];
        // Place x_j outside (c - h, c + h); endpoints included.
        const double lo = f.center() - f.mesh_width(), hi = f.center() + f.mesh_width();
        x[j] = (unit(rng) < 0.5) ? lo * unit(rng) : hi + (1.0 - hi) * unit(rng);
        if (k % 10 == 0) x[j] = (k % 20 == 0) ? lo : hi;
        if (eval_scalar(net, x) != 0.0) ++nonzero_outside;
      }
      o.detail << "d=" << d << ": err " << worst << ", nonzero outside support " << nonzero_outside << "; ";
      o.require(worst <= eps, "sampled error <= eps");
      o.require(nonzero_outside == 0, "exact zero outside the support");
    }
  }));

  results.push_back(run(4, "coefficient decay", 0.0, [&](Outcome& o) {
    for (const std::string name : {"poly2", "sinprod"}) {
      for (int d = 1; d <= 3; ++d) {
        const TestFunction tf = make_test_function(name, d);
        const auto interp = hierarchize(tf.eval, d, 6, Scheme::sparse);
        const DecayAudit audit = audit_decay(interp, *tf.seminorm);
        o.detail << name << " d=" << d << ": " << audit.violations << "/" << audit.checked << " violations, ratio in ["
                 << audit.min_ratio << ", " << audit.max_ratio << "]; ";
        o.require(audit.violations == 0, name + " decay bound");
        if (name == "poly2" && d == 1)
          o.require(std::abs(audit.min_ratio - 1.0) <= 1e-12 && std::abs(audit.max_ratio - 1.0) <= 1e-12,
                    "poly2 d=1 attains the bound at every level");
      }
    }
  }));

  results.push_back(run(5, "point counts", 1.0, [&](Outcome& o) {
    int mismatches = 0;
    for (int d = 1; d <= 5; ++d)
      for (int n = 1; n <= 8; ++n) {
        if (enumerate_indices(d, n, Scheme::sparse).size() != count_points(d, n, Scheme::sparse)) ++mismatches;
        // Full grids reach 255^5 points; count them by enumerating level vectors.
        std::uint64_t full = 0;
        for (const auto& levels : enumerate_levels(d, n, Scheme::full)) {
          int sum = 0;
          for (int l : levels) sum += l;
          full += std::uint64_t{1} << (sum - d);
        }
        if (full != count_points(d, n, Scheme::full)) ++mismatches;
        if (count_points(d, n, Scheme::full) <= 20000 &&
            enumerate_indices(d, n, Scheme::full).size() != count_points(d, n, Scheme::full))
          ++mismatches;
      }
    const auto sparse = count_points(2, 3, Scheme::sparse), full = count_points(2, 3, Scheme::full);
    o.detail << "mismatches " << mismatches << ", (2,3) sparse " << sparse << " full " << full << "; ";
    o.require(mismatches == 0, "enumeration equals closed form");
    o.require(sparse == 17 && full == 49, "(d=2, n=3) counts 17 / 49");
  }));

  results.push_back(run(6, "grid convergence rate", 60.0, [&](Outcome& o) {
    const TestFunction f1 = make_test_function("poly2", 1);
    const StudyTable t1 = grid_convergence_study(f1, {1, 2, 3, 4, 5, 6, 7, 8}, study);
    double worst_rel = 0.0;
    for (const auto& row : t1.rows) {
      const double exact = std::ldexp(1.0, -2 * row.n - 2);
      worst_rel = std::max(worst_rel, std::abs(row.sup_error - exact) / exact);
    }
    const double e1 = fit_exponent(t1, Column::inv_h, Column::sup_error);
    const TestFunction f2 = make_test_function("poly2", 2);
    const StudyTable t2 = grid_convergence_study(f2, {3, 4, 5, 6, 7, 8, 9}, study);
    const double e2 = fit_exponent(t2, Column::inv_h, Column::sup_error);
    o.detail << "d=1 exponent " << e1 << " (max rel. deviation from 2^{-2n-2}: " << worst_rel << "), d=2 exponent " << e2
             << "; ";
    o.require(std::abs(e1 + 2.0) <= 0.05, "d=1 exponent -2 +- 0.05");
    o.require(worst_rel <= 1e-12, "d=1 error equals 2^{-2n-2}");
    o.require(e2 >= -2.6 && e2 <= -1.7, "d=2 exponent in [-2.6, -1.7]");
  }));

  results.push_back(run(7, "end-to-end network accuracy", 300.0, [&](Outcome& o) {
    const TestFunction f = normalized(make_test_function("poly2", 2));
    for (int k = 4; k <= 6; ++k) {
      const double eps = std::ldexp(1.0, -k);
      const AutoCompiled c = compile_auto(f, eps, study);
      o.require(c.network.has_value(), "auto-selection found a resolution");
      if (!c.network) continue;
      o.detail << "eps=2^-" << k << ": n=" << c.n << " grid " << c.grid_error << " total " << c.total_error << "; ";
      o.require(c.total_error <= eps, "total error <= eps");
      compiled.push_back(*c.network);
      interpolants.push_back(*c.interpolant);
    }
  }));

  results.push_back(run(8, "depth/size scaling", 0.0, [&](Outcome& o) {
    const TestFunction f = normalized(make_test_function("poly2", 2));
    std::vector<double> eps_list;
    for (int k = 4; k <= 9; ++k) eps_list.push_back(std::ldexp(1.0, -k));
    const StudyTable table = network_scaling_study(f, eps_list, study);
    std::vector<double> x, depth;
    for (const auto& row : table.rows) {
      o.require(row.ok, "row eps=" + std::to_string(row.control) + " ok");
      x.push_back(-std::log2(row.control));
      depth.push_back(row.depth);
      o.detail << "eps=2^-" << x.back() << ": n=" << row.n << " depth " << row.depth << " size " << row.size << "; ";
    }
    const LinearFit fit = fit_line(x, depth);
    std::vector<double> lx, ly;
    for (const auto& row : table.rows) {
      lx.push_back(std::log2(1.0 / row.control));
      ly.push_back(std::log2(static_cast<double>(row.size)));
    }
    const double size_slope = fit_line(lx, ly).slope;
    o.detail << "depth ~ " << fit.slope << "*|log2 eps| + " << fit.intercept << " (R^2 " << fit.r_squared
             << "), size slope " << size_slope << "; ";
    o.require(fit.r_squared >= 0.95, "depth affine in |log2 eps| with R^2 >= 0.95");
    o.require(size_slope <= 1.0, "log2(size) slope <= 1.0");
  }));

  results.push_back(run(9, "coefficient oracle equivalence", 30.0, [&](Outcome& o) {
    double worst = 0.0;
    for (int d = 1; d <= 2; ++d) {
      const TestFunction tf = make_test_function("poly2", d);
      const int n = 5 - d + 1;  // |l|_1 <= n + d - 1 = 5
      const auto interp = hierarchize(tf.eval, d, n, Scheme::sparse);
      interpolants.push_back(interp);
      for (const auto& term : interp.terms()) {
        const double oracle = coefficient_integral_oracle(tf.mixed_derivative, term.index, 4);
        worst = std::max(worst, std::abs(oracle - term.coefficient));
      }
    }
    o.detail << "max |hierarchize - oracle| = " << worst << "; ";
    o.require(worst <= 1e-6, "agreement within 1e-6");
  }));

  results.push_back(run(10, "serialization round trip", 0.0, [&](Outcome& o) {
    int failed = 0;
    for (const auto& net : compiled)
      if (!network_round_trips(net, rng)) ++failed;
    for (const auto& interp : interpolants)
      if (!interpolant_round_trips(interp, rng)) ++failed;
    o.detail << compiled.size() << " networks, " << interpolants.size() << " interpolants, " << failed
             << " mismatches; ";
    o.require(!compiled.empty(), "artifacts available");
    o.require(failed == 0, "bitwise identical evaluations");
  }));

  return results;
}

std::string format(const CriterionResult& r) {
  std::ostringstream out;
  out << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << ". " << r.title << " (" << r.seconds << " s";
  if (r.time_limit > 0.0) out << " / limit " << r.time_limit << " s";
  out << ") : " << r.detail;
  return out.str();
}

}  // namespace korogrid::acceptance
