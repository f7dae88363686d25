#pragma once

#include <span>
#include <vector>

#include "korogrid/basis1d.hpp"
#include "korogrid/relu_ir.hpp"
#include "korogrid/sparse_grid.hpp"

namespace korogrid {

/// Accuracy target and input bound of an approximate multiplication.
struct MultParams {
  double accuracy = 0.0;     ///< eps in (0, 1)
  double input_bound = 1.0;  ///< M >= 1, inputs lie in [-M, M]

  /// Smallest s >= 1 with (3/2) M^2 4^-s <= eps.
  int squaring_depth() const;
  bool valid() const;
};

/// Depth, relu size and total units of a network built by the recipes below.
struct NetworkShape {
  int depth = 0;
  std::int64_t size = 0;
  std::int64_t total_units = 0;
};

/// Accuracy budgets of the binary multiplication tree for a d-fold product.
///
/// Tree depth t counts from the root (t = 0). A node at depth t owns budget
/// eps / 4^t; its multiplication runs at accuracy b/2 - b^2/16 with input
/// bound 1 + b/4, where b is that budget.
struct TreeSchedule {
  int leaf_count = 1;
  int height = 0;  ///< ceil(log2 d); leaves sit at depth `height`
  std::vector<double> budgets;
  std::vector<MultParams> multiplications;

  std::vector<int> squaring_depths() const;
};

TreeSchedule make_tree_schedule(int d, double eps);

/// sigma(1 - sigma((x - c)/h) - sigma((c - x)/h)); depth 2, three relu units, exact.
ReluNetwork build_hat_net(const LevelIndex1D& li);

/// f_s(x) = x - sum_{k=1..s} g_k(x) / 4^k on [0, 1], with g the tent map.
/// Within 2^{-2s-2} of x^2; exact at level-s dyadic points.
ReluNetwork build_square_net(int s);

enum class MultOutput { linear, rectified };

/// Approximate product 2M^2 (f_s(|x+y|/2M) - f_s(|x|/2M) - f_s(|y|/2M)).
///
/// Unit order is chosen so that the output is exactly 0 when either input is
/// 0 and is bitwise symmetric in (x, y). `rectified` puts a relu on the
/// output, which is only used where the exact product is nonnegative.
ReluNetwork build_mult_net(const MultParams& params, MultOutput output = MultOutput::linear);
NetworkShape mult_net_shape(const MultParams& params, MultOutput output = MultOutput::linear);

/// prod_j phi_{l_j,i_j}(x_j) to accuracy eps via a balanced multiplication tree.
/// Missing leaves (d not a power of two) are constant-1 channels.
ReluNetwork build_product_net(std::span<const LevelIndex1D> factors, double eps);
NetworkShape product_net_shape(int d, double eps);

/// One product network per term at accuracy eps/2, stacked, with a linear
/// readout weighted by the hierarchical coefficients.
ReluNetwork compile_sparse_grid_net(const SparseGridInterpolant& interp, double eps);

/// Exact shape that compile_sparse_grid_net produces for these parameters.
NetworkShape predicted_bounds(int d, int n, double eps, Scheme scheme = Scheme::sparse);

}  // namespace korogrid
