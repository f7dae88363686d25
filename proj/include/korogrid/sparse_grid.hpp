#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "korogrid/basis1d.hpp"

namespace korogrid {

using Point = Eigen::VectorXd;
using PointRef = Eigen::Ref<const Eigen::VectorXd>;
/// Scalar field on [0,1]^d.
using Field = std::function<double(const PointRef&)>;

enum class Scheme { sparse, full };

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& text);

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Level vector l and odd position vector i of one tensor hat phi_{l,i}.
struct MultiIndex {
  std::vector<int> levels;
  std::vector<std::int64_t> positions;

  std::size_t dimension() const { return levels.size(); }
  int level_sum() const;
  int max_level() const;
  /// Every component is a hierarchical (odd-position) LevelIndex1D.
  bool valid() const;
  LevelIndex1D component(std::size_t j) const { return {levels[j], positions[j]}; }
  Point grid_point() const;

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

/// Ordering by (|l|_1, l, i), all lexicographic.
bool canonical_less(const MultiIndex& a, const MultiIndex& b);

/// prod_j hat(l_j, i_j, x_j).
double tensor_hat(const MultiIndex& mi, const PointRef& x);

/// Level vectors of the scheme, ordered by (|l|_1, l).
std::vector<std::vector<int>> enumerate_levels(int d, int n, Scheme scheme);

/// Every hierarchical index of the scheme in canonical order.
std::vector<MultiIndex> enumerate_indices(int d, int n, Scheme scheme);

/// Closed-form number of hierarchical indices. Throws std::overflow_error
/// when the count does not fit in 64 bits.
std::uint64_t count_points(int d, int n, Scheme scheme);

/// Truncated hierarchical expansion sum v_{l,i} phi_{l,i}.
///
/// Terms are stored per level vector (a "subspace" W_l); each subspace holds
/// the coefficients of all its odd positions in lexicographic order, so at
/// most one term per subspace is nonzero at any x. Immutable once built.
class SparseGridInterpolant;
SparseGridInterpolant hierarchize(const Field& f, int d, int n, Scheme scheme);

class SparseGridInterpolant {
 public:
  struct Subspace {
    std::vector<int> levels;
    std::vector<double> coefficients;
  };

  struct Term {
    MultiIndex index;
    double coefficient;
  };

  SparseGridInterpolant(int d, int n, Scheme scheme, std::vector<Subspace> subspaces);

  /// Builds from an arbitrary-order term list; the index set must be exactly
  /// enumerate_indices(d, n, scheme).
  static SparseGridInterpolant from_terms(int d, int n, Scheme scheme, std::vector<Term> terms);

  int dimension() const { return d_; }
  int resolution() const { return n_; }
  Scheme scheme() const { return scheme_; }
  std::size_t term_count() const { return term_count_; }
  const std::vector<Subspace>& subspaces() const { return subspaces_; }

  /// Terms in canonical order.
  std::vector<Term> terms() const;
  double coefficient(const MultiIndex& mi) const;

  double evaluate(const PointRef& x) const;
  /// Contribution of the first `count` subspaces only.
  double evaluate_prefix(const PointRef& x, std::size_t count) const;

 private:
  friend SparseGridInterpolant hierarchize(const Field& f, int d, int n, Scheme scheme);

  int d_;
  int n_;
  Scheme scheme_;
  std::vector<Subspace> subspaces_;
  std::size_t term_count_ = 0;
};

/// Hierarchical surpluses of `f`, processed in ascending |l|_1.
/// Throws std::domain_error if f returns a non-finite value.
SparseGridInterpolant hierarchize(const Field& f, int d, int n, Scheme scheme);

/// Integral formula for v_{l,i} given the mixed derivative d^{2d} f / dx_1^2..dx_d^2,
/// by composite 4-point Gauss-Legendre over the support of phi_{l,i}. Each
/// half of every 1-D support is split into `cells` panels.
double coefficient_integral_oracle(const Field& mixed_derivative, const MultiIndex& mi, int cells);

/// Point set for empirical sup-norm estimates.
struct SamplingPlan {
  enum class Kind { tensor, low_discrepancy };
  Kind kind = Kind::tensor;
  int dimension = 1;
  /// Tensor plan: points per axis, uniform including both endpoints.
  std::int64_t points_per_axis = 0;
  /// Low-discrepancy plan: number of shifted Halton samples.
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
  /// Extra points always included (e.g. the interpolant's grid points).
  std::vector<Point> extra_points;
  /// Worker threads; 0 selects the hardware concurrency.
  unsigned threads = 0;

  std::int64_t size() const;
  Point point(std::int64_t k) const;
  bool valid() const;
};

/// Dense tensor grid with 2^{n+2}+1 points per axis for d <= 3; otherwise
/// 10^5 shifted Halton samples plus the grid points of (d, n, scheme).
SamplingPlan default_plan(int d, int n, Scheme scheme, std::uint64_t seed, unsigned threads = 0);

/// max over the plan of |g(x)|. Evaluated in parallel; the result does not
/// depend on the thread count.
double max_abs_over(const SamplingPlan& plan, const Field& g);

/// Sampled sup |f - interp|. This is a lower bound on the true sup norm.
double sup_error(const Field& f, const SparseGridInterpolant& interp, const SamplingPlan& plan);

}  // namespace korogrid
