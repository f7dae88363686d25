#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "korogrid/constructions.hpp"
#include "korogrid/relu_ir.hpp"
#include "korogrid/sparse_grid.hpp"

namespace korogrid {

inline constexpr const char* kToolName = "korogrid";
inline constexpr const char* kToolVersion = "1.0.0";

/// A registered target with analytic smoothness data.
struct TestFunction {
  std::string name;
  int dimension = 1;
  Field eval;
  /// d^{2d} f / dx_1^2 ... dx_d^2 in closed form; empty when not available.
  Field mixed_derivative;
  /// |f|_{2,inf}; empty for functions outside the Korobov space (e.g. a bare hat).
  std::optional<double> seminorm;
  /// Factor applied to the raw family member (1 unless normalized).
  double scale = 1.0;
  bool boundary_zero = true;

  double operator()(const PointRef& x) const { return eval(x); }
};

/// Family names: poly2, sinprod, basis.
std::vector<std::string> registry_names();
/// Every family instantiated at dimension d.
std::vector<TestFunction> registry(int d);
/// Throws std::invalid_argument on an unknown name or bad dimension.
TestFunction make_test_function(const std::string& name, int d);
/// Copy scaled to unit seminorm. Throws if the seminorm is unknown.
TestFunction normalized(const TestFunction& tf);

/// max |f| over `samples` random boundary points (and the cube's corners).
double boundary_deviation(const TestFunction& tf, int samples, std::uint64_t seed);

/// Rejects functions whose boundary values exceed 1e-12.
void require_boundary_zero(const TestFunction& tf, std::uint64_t seed);

struct DecayAudit {
  std::size_t checked = 0;
  std::size_t violations = 0;
  /// max |v| / (2^-d 2^{-2|l|_1} |f|) over all terms.
  double max_ratio = 0.0;
  /// min of the same ratio; 1 means the bound is attained everywhere.
  double min_ratio = 0.0;
};

/// |v_{l,i}| <= 2^-d 2^{-2|l|_1} seminorm + tol for every term.
DecayAudit audit_decay(const SparseGridInterpolant& interp, double seminorm, double tol = 1e-12);

struct StudyConfig {
  Scheme scheme = Scheme::sparse;
  std::uint64_t seed = 20240601;
  unsigned threads = 0;
  int max_n = 14;
  int max_d = 6;
  /// When false, wall_ms is written as 0 so reruns are byte-identical.
  bool record_timing = true;

  nlohmann::json to_json() const;
};

struct StudyRow {
  double control = 0.0;
  int n = 0;
  std::uint64_t N = 0;
  double sup_error = 0.0;
  double grid_error = 0.0;
  int depth = 0;
  std::int64_t size = 0;
  double wall_ms = 0.0;
  bool ok = true;
  std::string note;
};

struct StudyTable {
  std::string kind;     ///< "convergence" or "network"
  std::string control;  ///< "n" or "eps"
  std::vector<StudyRow> rows;
  nlohmann::json config;
};

/// Per n: hierarchize, sampled sup error, N. Rows sorted by n.
StudyTable grid_convergence_study(const TestFunction& tf, const std::vector<int>& n_range, const StudyConfig& config);

struct AutoCompiled {
  int n = 0;
  double grid_error = 0.0;
  double total_error = 0.0;
  std::optional<SparseGridInterpolant> interpolant;
  std::optional<ReluNetwork> network;
};

/// Smallest n whose measured grid error is <= eps/2, then compile at eps and
/// measure sup |f - net| on the same plan. Empty network when n exceeds max_n.
AutoCompiled compile_auto(const TestFunction& tf, double eps, const StudyConfig& config);

/// One compile_auto row per eps; rows sorted by eps ascending.
StudyTable network_scaling_study(const TestFunction& tf, const std::vector<double>& eps_list,
                                 const StudyConfig& config);

enum class Column { control, inv_h, N, sup_error, depth, size };
Column column_from_string(const std::string& name);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = slope * x + intercept. Throws on < 2 points or
/// zero variance in x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Least-squares slope in log2-log2 coordinates over the table's ok rows.
/// Needs >= 3 rows with positive values; throws std::domain_error otherwise.
double fit_exponent(const StudyTable& table, Column x_field, Column y_field);

void write_csv(const StudyTable& table, std::ostream& out);
nlohmann::json study_sidecar(const StudyTable& table);

}  // namespace korogrid
