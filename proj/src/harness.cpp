#include "korogrid/harness.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace korogrid {

namespace {

constexpr double kPi = std::numbers::pi;

TestFunction make_poly2(int d) {
  TestFunction tf;
  tf.name = "poly2";
  tf.dimension = d;
  tf.eval = [](const PointRef& x) {
    double v = 1.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) v *= x[j] * (1.0 - x[j]);
    return v;
  };
  tf.mixed_derivative = [](const PointRef& x) { return std::pow(-2.0, static_cast<double>(x.size())); };
  tf.seminorm = std::ldexp(1.0, d);
  return tf;
}

TestFunction make_sinprod(int d) {
  TestFunction tf;
  tf.name = "sinprod";
  tf.dimension = d;
  tf.eval = [](const PointRef& x) {
    double v = 1.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) v *= std::sin(kPi * x[j]);
    return v;
  };
  tf.mixed_derivative = [](const PointRef& x) {
    double v = 1.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) v *= -kPi * kPi * std::sin(kPi * x[j]);
    return v;
  };
  tf.seminorm = std::pow(kPi, 2.0 * d);
  return tf;
}

// phi_{(1..1),(1..1)}: reproduced exactly for every n >= 1.
TestFunction make_basis(int d) {
  TestFunction tf;
  tf.name = "basis";
  tf.dimension = d;
  MultiIndex mi{std::vector<int>(static_cast<std::size_t>(d), 1), std::vector<std::int64_t>(static_cast<std::size_t>(d), 1)};
  tf.eval = [mi](const PointRef& x) { return tensor_hat(mi, x); };
  return tf;
}

Field scaled(Field f, double factor) {
  return [f = std::move(f), factor](const PointRef& x) { return factor * f(x); };
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::vector<std::string> registry_names() { return {"poly2", "sinprod", "basis"}; }

std::vector<TestFunction> registry(int d) {
  std::vector<TestFunction> out;
  for (const auto& name : registry_names()) out.push_back(make_test_function(name, d));
  return out;
}

TestFunction make_test_function(const std::string& name, int d) {
  if (d < 1) throw std::invalid_argument("test function dimension must be >= 1");
  if (name == "poly2" || name == "poly2d") return make_poly2(d);
  if (name == "sinprod") return make_sinprod(d);
  if (name == "basis") return make_basis(d);
  throw std::invalid_argument("unknown test function '" + name + "'");
}

TestFunction normalized(const TestFunction& tf) {
  if (!tf.seminorm || !(*tf.seminorm > 0.0))
    throw std::invalid_argument("cannot normalize '" + tf.name + "': no analytic seminorm");
  const double factor = 1.0 / *tf.seminorm;
  TestFunction out = tf;
  out.eval = scaled(tf.eval, factor);
  if (tf.mixed_derivative) out.mixed_derivative = scaled(tf.mixed_derivative, factor);
  out.seminorm = 1.0;
  out.scale = tf.scale * factor;
  return out;
}

double boundary_deviation(const TestFunction& tf, int samples, std::uint64_t seed) {
  const int d = tf.dimension;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> face(0, 2 * d - 1);
  double worst = 0.0;
  Point x(d);
  for (int k = 0; k < samples; ++k) {
    for (int j = 0; j < d; ++j) x[j] = unit(rng);
    const int f = face(rng);
    x[f / 2] = (f % 2 == 0) ? 0.0 : 1.0;
    worst = std::max(worst, std::abs(tf(x)));
  }
  if (d < 20) {
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
      for (int j = 0; j < d; ++j) x[j] = ((mask >> j) & 1U) ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(tf(x)));
    }
  }
  return worst;
}

void require_boundary_zero(const TestFunction& tf, std::uint64_t seed) {
  const double dev = boundary_deviation(tf, 1000, seed);
  if (!(dev <= 1e-12))
    throw std::domain_error("test function '" + tf.name + "' is not zero on the boundary (max |f| = " +
                            std::to_string(dev) + ")");
}

DecayAudit audit_decay(const SparseGridInterpolant& interp, double seminorm, double tol) {
  DecayAudit audit;
  audit.min_ratio = std::numeric_limits<double>::infinity();
  const int d = interp.dimension();
  for (const auto& s : interp.subspaces()) {
    int sum = 0;
    for (int l : s.levels) sum += l;
    const double bound = std::ldexp(seminorm, -d - 2 * sum);
    for (double v : s.coefficients) {
      ++audit.checked;
      if (!(std::abs(v) <= bound + tol)) ++audit.violations;
      const double ratio = std::abs(v) / bound;
      audit.max_ratio = std::max(audit.max_ratio, ratio);
      audit.min_ratio = std::min(audit.min_ratio, ratio);
    }
  }
  if (audit.checked == 0) audit.min_ratio = 0.0;
  return audit;
}

nlohmann::json StudyConfig::to_json() const {
  return {{"scheme", to_string(scheme)}, {"seed", seed},     {"threads", threads},
          {"max_n", max_n},              {"max_d", max_d},   {"record_timing", record_timing}};
}

namespace {

void check_study_dimension(const TestFunction& tf, const StudyConfig& config) {
  if (tf.dimension > config.max_d)
    throw std::invalid_argument("dimension " + std::to_string(tf.dimension) + " exceeds the study cap max_d = " +
                                std::to_string(config.max_d));
}

nlohmann::json base_config(const TestFunction& tf, const StudyConfig& config) {
  nlohmann::json j = config.to_json();
  j["function"] = tf.name;
  j["d"] = tf.dimension;
  j["scale"] = tf.scale;
  if (tf.seminorm) j["seminorm"] = *tf.seminorm;
  return j;
}

}  // namespace

StudyTable grid_convergence_study(const TestFunction& tf, const std::vector<int>& n_range, const StudyConfig& config) {
  if (n_range.empty()) throw std::invalid_argument("grid_convergence_study: empty n range");
  if (!std::is_sorted(n_range.begin(), n_range.end()) ||
      std::adjacent_find(n_range.begin(), n_range.end()) != n_range.end())
    throw std::invalid_argument("grid_convergence_study: n range must be strictly ascending");
  if (n_range.back() > config.max_n)
    throw std::invalid_argument("grid_convergence_study: n exceeds the cap max_n = " + std::to_string(config.max_n));
  check_study_dimension(tf, config);
  require_boundary_zero(tf, config.seed);

  StudyTable table;
  table.kind = "convergence";
  table.control = "n";
  table.config = base_config(tf, config);
  table.config["n_range"] = n_range;
  for (int n : n_range) {
    const auto start = std::chrono::steady_clock::now();
    const auto interp = hierarchize(tf.eval, tf.dimension, n, config.scheme);
    const auto plan = default_plan(tf.dimension, n, config.scheme, config.seed, config.threads);
    StudyRow row;
    row.control = n;
    row.n = n;
    row.N = interp.term_count();
    row.sup_error = sup_error(tf.eval, interp, plan);
    row.grid_error = row.sup_error;
    row.wall_ms = config.record_timing ? elapsed_ms(start) : 0.0;
    table.rows.push_back(row);
  }
  return table;
}

AutoCompiled compile_auto(const TestFunction& tf, double eps, const StudyConfig& config) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("compile_auto: eps must lie in (0, 1)");
  check_study_dimension(tf, config);
  require_boundary_zero(tf, config.seed);
  AutoCompiled result;
  for (int n = 1; n <= config.max_n; ++n) {
    auto interp = hierarchize(tf.eval, tf.dimension, n, config.scheme);
    const auto plan = default_plan(tf.dimension, n, config.scheme, config.seed, config.threads);
    const double grid_error = sup_error(tf.eval, interp, plan);
    if (grid_error > eps / 2.0) continue;
    ReluNetwork net = compile_sparse_grid_net(interp, eps);
    result.total_error = max_abs_over(plan, [&](const PointRef& x) { return tf(x) - eval_scalar(net, x); });
    result.n = n;
    result.grid_error = grid_error;
    net.metadata()["function"] = tf.name;
    net.metadata()["scale"] = tf.scale;
    net.metadata()["grid_error"] = grid_error;
    net.metadata()["total_error"] = result.total_error;
    net.metadata()["seed"] = config.seed;
    result.interpolant = std::move(interp);
    result.network = std::move(net);
    return result;
  }
  result.n = config.max_n + 1;
  return result;
}

StudyTable network_scaling_study(const TestFunction& tf, const std::vector<double>& eps_list,
                                 const StudyConfig& config) {
  if (eps_list.empty()) throw std::invalid_argument("network_scaling_study: empty eps list");
  StudyTable table;
  table.kind = "network";
  table.control = "eps";
  table.config = base_config(tf, config);
  table.config["eps"] = eps_list;
  for (double eps : eps_list) {
    const auto start = std::chrono::steady_clock::now();
    const AutoCompiled compiled = compile_auto(tf, eps, config);
    StudyRow row;
    row.control = eps;
    if (!compiled.network) {
      row.ok = false;
      row.n = compiled.n;
      row.note = "auto-selection cap reached (n > " + std::to_string(config.max_n) + ")";
    } else {
      const NetworkStats s = stats(*compiled.network);
      row.n = compiled.n;
      row.N = compiled.interpolant->term_count();
      row.sup_error = compiled.total_error;
      row.grid_error = compiled.grid_error;
      row.depth = s.depth;
      row.size = s.size;
      if (compiled.total_error > eps) {
        row.ok = false;
        row.note = "total error exceeds eps";
      }
    }
    row.wall_ms = config.record_timing ? elapsed_ms(start) : 0.0;
    table.rows.push_back(row);
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const StudyRow& a, const StudyRow& b) { return a.control < b.control; });
  return table;
}

Column column_from_string(const std::string& name) {
  if (name == "control") return Column::control;
  if (name == "inv_h") return Column::inv_h;
  if (name == "N") return Column::N;
  if (name == "sup_error") return Column::sup_error;
  if (name == "depth") return Column::depth;
  if (name == "size") return Column::size;
  throw std::invalid_argument("unknown study column '" + name + "'");
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::domain_error("fit_line: need >= 2 paired values");
  Eigen::MatrixXd design(static_cast<Eigen::Index>(x.size()), 2);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(y.size()));
  for (std::size_t k = 0; k < x.size(); ++k) {
    design(static_cast<Eigen::Index>(k), 0) = x[k];
    design(static_cast<Eigen::Index>(k), 1) = 1.0;
    rhs[static_cast<Eigen::Index>(k)] = y[k];
  }
  const Eigen::VectorXd centered = design.col(0).array() - design.col(0).mean();
  if (centered.squaredNorm() == 0.0) throw std::domain_error("fit_line: x values have zero variance");
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(rhs);
  LinearFit fit{coef[0], coef[1], 1.0};
  const double ss_tot = (rhs.array() - rhs.mean()).matrix().squaredNorm();
  const double ss_res = (design * coef - rhs).squaredNorm();
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

namespace {

double column_value(const StudyRow& row, Column c) {
  switch (c) {
    case Column::control: return row.control;
    case Column::inv_h: return std::ldexp(1.0, row.n);
    case Column::N: return static_cast<double>(row.N);
    case Column::sup_error: return row.sup_error;
    case Column::depth: return row.depth;
    case Column::size: return static_cast<double>(row.size);
  }
  return 0.0;
}

}  // namespace

double fit_exponent(const StudyTable& table, Column x_field, Column y_field) {
  std::vector<double> x, y;
  for (const auto& row : table.rows) {
    if (!row.ok) continue;
    const double xv = column_value(row, x_field), yv = column_value(row, y_field);
    if (!(xv > 0.0) || !(yv > 0.0)) throw std::domain_error("fit_exponent: values must be positive");
    x.push_back(std::log2(xv));
    y.push_back(std::log2(yv));
  }
  if (x.size() < 3) throw std::domain_error("fit_exponent: need at least 3 rows");
  return fit_line(x, y).slope;
}

void write_csv(const StudyTable& table, std::ostream& out) {
  out << "control,N,sup_error,depth,size,wall_ms\n";
  std::ostringstream line;
  for (const auto& row : table.rows) {
    line.str("");
    line << std::setprecision(17) << row.control << ',' << row.N << ',';
    if (row.ok || row.N > 0)
      line << row.sup_error;
    else
      line << "nan";
    line << ',' << row.depth << ',' << row.size << ',' << std::setprecision(6) << std::fixed << row.wall_ms;
    out << line.str() << '\n';
    line.unsetf(std::ios::fixed);
  }
}

nlohmann::json study_sidecar(const StudyTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows)
    rows.push_back({{"control", row.control},
                    {"n", row.n},
                    {"N", row.N},
                    {"sup_error", row.sup_error},
                    {"grid_error", row.grid_error},
                    {"depth", row.depth},
                    {"size", row.size},
                    {"ok", row.ok},
                    {"note", row.note}});
  return {{"tool", {{"name", kToolName}, {"version", kToolVersion}}},
          {"kind", table.kind},
          {"control", table.control},
          {"config", table.config},
          {"rows", rows}};
}

}  // namespace korogrid
