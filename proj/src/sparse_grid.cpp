#include "korogrid/sparse_grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace korogrid {

std::string to_string(Scheme scheme) { return scheme == Scheme::sparse ? "sparse" : "full"; }

Scheme scheme_from_string(const std::string& text) {
  if (text == "sparse") return Scheme::sparse;
  if (text == "full") return Scheme::full;
  throw std::invalid_argument("unknown scheme '" + text + "' (expected sparse|full)");
}

int MultiIndex::level_sum() const { return std::accumulate(levels.begin(), levels.end(), 0); }

int MultiIndex::max_level() const {
  return levels.empty() ? 0 : *std::max_element(levels.begin(), levels.end());
}

bool MultiIndex::valid() const {
  if (levels.empty() || levels.size() != positions.size()) return false;
  for (std::size_t j = 0; j < levels.size(); ++j)
    if (!component(j).hierarchical()) return false;
  return true;
}

Point MultiIndex::grid_point() const {
  Point x(static_cast<Eigen::Index>(dimension()));
  for (std::size_t j = 0; j < dimension(); ++j) x[static_cast<Eigen::Index>(j)] = component(j).center();
  return x;
}

bool canonical_less(const MultiIndex& a, const MultiIndex& b) {
  const int sa = a.level_sum(), sb = b.level_sum();
  if (sa != sb) return sa < sb;
  if (a.levels != b.levels) return a.levels < b.levels;
  return a.positions < b.positions;
}

double tensor_hat(const MultiIndex& mi, const PointRef& x) {
  if (static_cast<std::size_t>(x.size()) != mi.dimension())
    throw DimensionMismatch("tensor_hat: point has dimension " + std::to_string(x.size()) +
                            ", index has " + std::to_string(mi.dimension()));
  double value = 1.0;
  for (std::size_t j = 0; j < mi.dimension(); ++j)
    value *= hat(mi.component(j), x[static_cast<Eigen::Index>(j)]);
  return value;
}

namespace {

void check_dn(int d, int n) {
  if (d < 1) throw std::invalid_argument("dimension d must be >= 1, got " + std::to_string(d));
  if (n < 1) throw std::invalid_argument("resolution n must be >= 1, got " + std::to_string(n));
}

void collect_levels(std::vector<int>& current, std::size_t j, int d, int n, Scheme scheme,
                    std::vector<std::vector<int>>& out) {
  if (j == current.size()) {
    out.push_back(current);
    return;
  }
  const int used = std::accumulate(current.begin(), current.begin() + static_cast<long>(j), 0);
  const int remaining = static_cast<int>(current.size() - j - 1);
  const int cap = scheme == Scheme::sparse ? n + d - 1 - used - remaining : n;
  for (int l = 1; l <= cap; ++l) {
    current[j] = l;
    collect_levels(current, j + 1, d, n, scheme, out);
  }
}

std::size_t subspace_size(const std::vector<int>& levels) {
  std::size_t size = 1;
  for (int l : levels) size <<= (l - 1);
  return size;
}

// Lexicographic offset of odd positions within a subspace; last axis fastest.
std::size_t subspace_offset(const std::vector<int>& levels, const std::vector<std::int64_t>& positions) {
  std::size_t offset = 0;
  for (std::size_t j = 0; j < levels.size(); ++j)
    offset = (offset << (levels[j] - 1)) + static_cast<std::size_t>((positions[j] - 1) / 2);
  return offset;
}

std::vector<std::int64_t> positions_at(const std::vector<int>& levels, std::size_t offset) {
  std::vector<std::int64_t> positions(levels.size());
  for (std::size_t jj = levels.size(); jj-- > 0;) {
    const std::size_t width = std::size_t{1} << (levels[jj] - 1);
    positions[jj] = 2 * static_cast<std::int64_t>(offset % width) + 1;
    offset /= width;
  }
  return positions;
}

using u128 = unsigned __int128;

u128 checked_mul(u128 a, u128 b) {
  if (a != 0 && b > ~u128{0} / a) throw std::overflow_error("count_points: overflow");
  return a * b;
}

}  // namespace

std::vector<std::vector<int>> enumerate_levels(int d, int n, Scheme scheme) {
  check_dn(d, n);
  std::vector<std::vector<int>> out;
  std::vector<int> current(static_cast<std::size_t>(d), 1);
  collect_levels(current, 0, d, n, scheme, out);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    const int sa = std::accumulate(a.begin(), a.end(), 0);
    const int sb = std::accumulate(b.begin(), b.end(), 0);
    return sa != sb ? sa < sb : a < b;
  });
  return out;
}

std::vector<MultiIndex> enumerate_indices(int d, int n, Scheme scheme) {
  std::vector<MultiIndex> out;
  for (const auto& levels : enumerate_levels(d, n, scheme)) {
    const std::size_t size = subspace_size(levels);
    for (std::size_t k = 0; k < size; ++k) out.push_back({levels, positions_at(levels, k)});
  }
  return out;
}

std::uint64_t count_points(int d, int n, Scheme scheme) {
  check_dn(d, n);
  u128 total = 0;
  if (scheme == Scheme::full) {
    if (n >= 64) throw std::overflow_error("count_points: overflow");
    const u128 per_axis = (u128{1} << n) - 1;
    total = 1;
    for (int j = 0; j < d; ++j) total = checked_mul(total, per_axis);
  } else {
    // sum_{k=0}^{n-1} 2^k C(d-1+k, d-1); C is updated incrementally.
    u128 binom = 1;  // C(d-1, d-1)
    for (int k = 0; k < n; ++k) {
      if (k > 0) binom = checked_mul(binom, static_cast<u128>(d - 1 + k)) / static_cast<u128>(k);
      if (k >= 127) throw std::overflow_error("count_points: overflow");
      const u128 term = checked_mul(binom, u128{1} << k);
      total += term;
      if (total < term) throw std::overflow_error("count_points: overflow");
    }
  }
  if (total > std::numeric_limits<std::uint64_t>::max()) throw std::overflow_error("count_points: overflow");
  return static_cast<std::uint64_t>(total);
}

SparseGridInterpolant::SparseGridInterpolant(int d, int n, Scheme scheme, std::vector<Subspace> subspaces)
    : d_(d), n_(n), scheme_(scheme), subspaces_(std::move(subspaces)) {
  check_dn(d, n);
  const auto expected = enumerate_levels(d, n, scheme);
  if (expected.size() != subspaces_.size())
    throw std::invalid_argument("interpolant: subspace count does not match the scheme");
  for (std::size_t k = 0; k < expected.size(); ++k) {
    if (subspaces_[k].levels != expected[k])
      throw std::invalid_argument("interpolant: subspaces out of canonical order");
    if (subspaces_[k].coefficients.size() != subspace_size(expected[k]))
      throw std::invalid_argument("interpolant: subspace coefficient count mismatch");
    term_count_ += subspaces_[k].coefficients.size();
  }
}

SparseGridInterpolant SparseGridInterpolant::from_terms(int d, int n, Scheme scheme, std::vector<Term> terms) {
  check_dn(d, n);
  std::vector<Subspace> subspaces;
  for (auto& levels : enumerate_levels(d, n, scheme)) {
    const std::size_t size = subspace_size(levels);
    subspaces.push_back({std::move(levels), std::vector<double>(size, 0.0)});
  }
  std::vector<std::vector<bool>> seen(subspaces.size());
  for (std::size_t k = 0; k < subspaces.size(); ++k) seen[k].assign(subspaces[k].coefficients.size(), false);
  for (const auto& term : terms) {
    const MultiIndex& mi = term.index;
    if (mi.dimension() != static_cast<std::size_t>(d) || !mi.valid())
      throw std::invalid_argument("interpolant: invalid multi-index in term list");
    auto it = std::lower_bound(subspaces.begin(), subspaces.end(), mi.levels, [](const Subspace& s, const auto& l) {
      const int ss = std::accumulate(s.levels.begin(), s.levels.end(), 0);
      const int sl = std::accumulate(l.begin(), l.end(), 0);
      return ss != sl ? ss < sl : s.levels < l;
    });
    if (it == subspaces.end() || it->levels != mi.levels)
      throw std::invalid_argument("interpolant: term level vector not part of the scheme");
    const auto k = static_cast<std::size_t>(it - subspaces.begin());
    const std::size_t offset = subspace_offset(mi.levels, mi.positions);
    if (seen[k][offset]) throw std::invalid_argument("interpolant: duplicate term");
    seen[k][offset] = true;
    it->coefficients[offset] = term.coefficient;
  }
  for (const auto& flags : seen)
    if (std::find(flags.begin(), flags.end(), false) != flags.end())
      throw std::invalid_argument("interpolant: missing terms for the scheme");
  return SparseGridInterpolant(d, n, scheme, std::move(subspaces));
}

std::vector<SparseGridInterpolant::Term> SparseGridInterpolant::terms() const {
  std::vector<Term> out;
  out.reserve(term_count_);
  for (const auto& s : subspaces_)
    for (std::size_t k = 0; k < s.coefficients.size(); ++k)
      out.push_back({{s.levels, positions_at(s.levels, k)}, s.coefficients[k]});
  return out;
}

double SparseGridInterpolant::coefficient(const MultiIndex& mi) const {
  for (const auto& s : subspaces_)
    if (s.levels == mi.levels) {
      if (!mi.valid()) break;
      return s.coefficients[subspace_offset(s.levels, mi.positions)];
    }
  throw std::out_of_range("interpolant: index not in the term set");
}

double SparseGridInterpolant::evaluate(const PointRef& x) const { return evaluate_prefix(x, subspaces_.size()); }

double SparseGridInterpolant::evaluate_prefix(const PointRef& x, std::size_t count) const {
  if (x.size() != d_)
    throw DimensionMismatch("evaluate: point has dimension " + std::to_string(x.size()) + ", interpolant has " +
                            std::to_string(d_));
  double sum = 0.0;
  for (std::size_t k = 0; k < count && k < subspaces_.size(); ++k) {
    const Subspace& s = subspaces_[k];
    double basis = 1.0;
    std::size_t offset = 0;
    for (std::size_t j = 0; j < s.levels.size() && basis != 0.0; ++j) {
      const int l = s.levels[j];
      const double xj = x[static_cast<Eigen::Index>(j)];
      const std::int64_t i = containing_position(l, xj);
      basis *= hat(LevelIndex1D{l, i}, xj);
      offset = (offset << (l - 1)) + static_cast<std::size_t>((i - 1) / 2);
    }
    if (basis != 0.0) sum += s.coefficients[offset] * basis;
  }
  return sum;
}

SparseGridInterpolant hierarchize(const Field& f, int d, int n, Scheme scheme) {
  check_dn(d, n);
  std::vector<SparseGridInterpolant::Subspace> subspaces;
  for (auto& levels : enumerate_levels(d, n, scheme)) {
    const std::size_t size = subspace_size(levels);
    subspaces.push_back({std::move(levels), std::vector<double>(size, 0.0)});
  }
  // Subspaces of equal |l|_1 vanish at each other's grid points, so the
  // prefix up to (not including) subspace k is the coarser interpolant.
  SparseGridInterpolant partial(d, n, scheme, std::move(subspaces));
  auto& filled = partial.subspaces_;
  for (std::size_t k = 0; k < filled.size(); ++k) {
    auto& s = filled[k];
    for (std::size_t offset = 0; offset < s.coefficients.size(); ++offset) {
      const MultiIndex mi{s.levels, positions_at(s.levels, offset)};
      const Point x = mi.grid_point();
      const double value = f(x);
      if (!std::isfinite(value)) throw std::domain_error("hierarchize: function returned a non-finite value");
      s.coefficients[offset] = value - partial.evaluate_prefix(x, k);
    }
  }
  return partial;
}

namespace {

constexpr std::array<double, 4> kGaussNodes = {-0.86113631159405257522, -0.33998104358485626480,
                                               0.33998104358485626480, 0.86113631159405257522};
constexpr std::array<double, 4> kGaussWeights = {0.34785484513745385737, 0.65214515486254614263,
                                                 0.65214515486254614263, 0.34785484513745385737};

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Rule on [c - h, c + h] with 2*cells panels; weights include the hat factor
// -2^{-(l+1)} phi_{l,i}, which is linear on every panel.
QuadratureRule weighted_rule(const LevelIndex1D& li, int cells) {
  QuadratureRule rule;
  const double h = li.mesh_width();
  const double a = li.center() - h;
  const double panel = h / cells;
  const double scale = -std::ldexp(1.0, -(li.level + 1));
  for (int p = 0; p < 2 * cells; ++p) {
    const double lo = a + p * panel;
    for (std::size_t q = 0; q < kGaussNodes.size(); ++q) {
      const double x = lo + 0.5 * panel * (kGaussNodes[q] + 1.0);
      rule.nodes.push_back(x);
      rule.weights.push_back(0.5 * panel * kGaussWeights[q] * scale * hat(li, x));
    }
  }
  return rule;
}

}  // namespace

double coefficient_integral_oracle(const Field& mixed_derivative, const MultiIndex& mi, int cells) {
  if (cells < 1) throw std::invalid_argument("coefficient_integral_oracle: cells must be >= 1");
  if (!mi.valid()) throw std::invalid_argument("coefficient_integral_oracle: invalid multi-index");
  const std::size_t d = mi.dimension();
  std::vector<QuadratureRule> rules;
  for (std::size_t j = 0; j < d; ++j) rules.push_back(weighted_rule(mi.component(j), cells));

  const std::size_t per_axis = rules.front().nodes.size();
  std::vector<std::size_t> counter(d, 0);
  Point x(static_cast<Eigen::Index>(d));
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      x[static_cast<Eigen::Index>(j)] = rules[j].nodes[counter[j]];
      w *= rules[j].weights[counter[j]];
    }
    total += w * mixed_derivative(x);
    std::size_t j = d;
    while (j-- > 0) {
      if (++counter[j] < per_axis) break;
      counter[j] = 0;
    }
    if (j == static_cast<std::size_t>(-1)) break;
  }
  return total;
}

namespace {

constexpr std::array<int, 16> kPrimes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::uint64_t k, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (k > 0) {
    r += f * static_cast<double>(k % static_cast<std::uint64_t>(base));
    k /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double unit_from_bits(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace

std::int64_t SamplingPlan::size() const {
  std::int64_t base = 0;
  if (kind == Kind::tensor) {
    base = 1;
    for (int j = 0; j < dimension; ++j) base *= points_per_axis;
  } else {
    base = samples;
  }
  return base + static_cast<std::int64_t>(extra_points.size());
}

bool SamplingPlan::valid() const {
  if (dimension < 1) return false;
  if (kind == Kind::tensor) return points_per_axis >= 2;
  return samples >= 1 && dimension <= static_cast<int>(kPrimes.size());
}

Point SamplingPlan::point(std::int64_t k) const {
  Point x(dimension);
  const std::int64_t base = size() - static_cast<std::int64_t>(extra_points.size());
  if (k >= base) return extra_points[static_cast<std::size_t>(k - base)];
  if (kind == Kind::tensor) {
    const double step = 1.0 / static_cast<double>(points_per_axis - 1);
    for (int j = dimension; j-- > 0;) {
      const std::int64_t c = k % points_per_axis;
      k /= points_per_axis;
      x[j] = c == points_per_axis - 1 ? 1.0 : static_cast<double>(c) * step;
    }
  } else {
    // Cranley-Patterson shifted Halton sequence; the shift is seeded.
    for (int j = 0; j < dimension; ++j) {
      const double shift = unit_from_bits(splitmix64(seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(j + 1)));
      const double shifted =
          radical_inverse(static_cast<std::uint64_t>(k + 1), kPrimes[static_cast<std::size_t>(j)]) + shift;
      x[j] = shifted - std::floor(shifted);
    }
  }
  return x;
}

SamplingPlan default_plan(int d, int n, Scheme scheme, std::uint64_t seed, unsigned threads) {
  check_dn(d, n);
  SamplingPlan plan;
  plan.dimension = d;
  plan.seed = seed;
  plan.threads = threads;
  if (d <= 3) {
    plan.kind = SamplingPlan::Kind::tensor;
    plan.points_per_axis = (std::int64_t{1} << (n + 2)) + 1;
  } else {
    plan.kind = SamplingPlan::Kind::low_discrepancy;
    plan.samples = 100000;
    for (const auto& mi : enumerate_indices(d, n, scheme)) plan.extra_points.push_back(mi.grid_point());
  }
  return plan;
}

double max_abs_over(const SamplingPlan& plan, const Field& g) {
  if (!plan.valid()) throw std::invalid_argument("sampling plan is not valid");
  const std::int64_t total = plan.size();
  unsigned workers = plan.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : plan.threads;
  workers = static_cast<unsigned>(std::min<std::int64_t>(workers, std::max<std::int64_t>(1, total / 256)));

  std::vector<double> partial(workers, 0.0);
  auto run = [&](unsigned w) {
    double m = 0.0;
    for (std::int64_t k = w; k < total; k += workers) {
      const double e = std::abs(g(plan.point(k)));
      if (std::isnan(e)) {
        m = e;
        break;
      }
      m = std::max(m, e);
    }
    partial[w] = m;
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  double m = 0.0;
  for (double p : partial) {
    if (std::isnan(p)) return p;
    m = std::max(m, p);
  }
  return m;
}

double sup_error(const Field& f, const SparseGridInterpolant& interp, const SamplingPlan& plan) {
  if (plan.dimension != interp.dimension()) throw DimensionMismatch("sup_error: plan dimension mismatch");
  return max_abs_over(plan, [&](const PointRef& x) { return f(x) - interp.evaluate(x); });
}

}  // namespace korogrid
