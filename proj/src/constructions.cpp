#include "korogrid/constructions.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace korogrid {

namespace {

void check_eps(double eps, const char* who) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument(std::string(who) + ": eps must lie in (0, 1)");
}

int ceil_log2(int d) {
  int p = 0;
  while ((1 << p) < d) ++p;
  return p;
}

}  // namespace

bool MultParams::valid() const { return accuracy > 0.0 && accuracy < 1.0 && input_bound >= 1.0; }

int MultParams::squaring_depth() const {
  if (!valid()) throw std::invalid_argument("MultParams: need 0 < eps < 1 and M >= 1");
  const double m2 = input_bound * input_bound;
  int s = std::max(1, static_cast<int>(std::ceil(std::log2(3.0 * m2 / (2.0 * accuracy)) / 2.0)));
  // Guard the ceil against rounding on exact powers of two.
  while (s > 1 && 1.5 * m2 * std::ldexp(1.0, -2 * (s - 1)) <= accuracy) --s;
  while (1.5 * m2 * std::ldexp(1.0, -2 * s) > accuracy) ++s;
  return s;
}

std::vector<int> TreeSchedule::squaring_depths() const {
  std::vector<int> out;
  for (const auto& m : multiplications) out.push_back(m.squaring_depth());
  return out;
}

TreeSchedule make_tree_schedule(int d, double eps) {
  if (d < 1) throw std::invalid_argument("make_tree_schedule: d must be >= 1");
  check_eps(eps, "make_tree_schedule");
  TreeSchedule schedule;
  schedule.leaf_count = d;
  schedule.height = ceil_log2(d);
  double budget = eps;
  for (int t = 0; t < schedule.height; ++t) {
    schedule.budgets.push_back(budget);
    schedule.multiplications.push_back({budget / 2.0 - budget * budget / 16.0, 1.0 + budget / 4.0});
    budget /= 4.0;
  }
  return schedule;
}

ReluNetwork build_hat_net(const LevelIndex1D& li) {
  if (!li.valid()) throw std::invalid_argument("build_hat_net: invalid level/position");
  const double inv_h = 1.0 / li.mesh_width();
  const double shift = li.center() * inv_h;  // == position, exact
  LayerBuilder first(1);
  first.add_unit(Activation::relu, -shift, {{0, inv_h}});
  first.add_unit(Activation::relu, shift, {{0, -inv_h}});
  LayerBuilder second(2);
  second.add_unit(Activation::relu, 1.0, {{0, -1.0}, {1, -1.0}});
  return ReluNetwork(1, {first.build(), second.build()},
                     {{"construction", "hat"}, {"level", li.level}, {"position", li.position}});
}

namespace {

// Appends the sawtooth recurrence for one branch. Layer k (k >= 2) reads the
// branch's (a, b, c) triple at column `col` of layer k-1:
//   a_k = relu(g), b_k = relu(g - 1/2), c_k = relu(c - g / 4^{k-1}),
// with g = 2a - 4b the previous tent value.
void add_sawtooth_step(LayerBuilder& b, Eigen::Index col, int k) {
  const double scale = std::ldexp(1.0, -2 * (k - 1));
  b.add_unit(Activation::relu, 0.0, {{col, 2.0}, {col + 1, -4.0}});
  b.add_unit(Activation::relu, -0.5, {{col, 2.0}, {col + 1, -4.0}});
  b.add_unit(Activation::relu, 0.0, {{col, -2.0 * scale}, {col + 1, 4.0 * scale}, {col + 2, 1.0}});
}

// Coefficients of f_s = c_s - (2 a_s - 4 b_s) / 4^s on the (a, b, c) triple.
std::vector<std::pair<Eigen::Index, double>> square_readout(Eigen::Index col, int s) {
  const double scale = std::ldexp(1.0, -2 * s);
  return {{col, -2.0 * scale}, {col + 1, 4.0 * scale}, {col + 2, 1.0}};
}

}  // namespace

ReluNetwork build_square_net(int s) {
  if (s < 1) throw std::invalid_argument("build_square_net: s must be >= 1");
  std::vector<Layer> layers;
  LayerBuilder first(1);
  first.add_unit(Activation::relu, 0.0, {{0, 1.0}});
  first.add_unit(Activation::relu, -0.5, {{0, 1.0}});
  first.add_unit(Activation::relu, 0.0, {{0, 1.0}});
  layers.push_back(first.build());
  for (int k = 2; k <= s; ++k) {
    LayerBuilder b(3);
    add_sawtooth_step(b, 0, k);
    layers.push_back(b.build());
  }
  LayerBuilder out(3);
  out.add_unit(Activation::identity, 0.0, square_readout(0, s));
  layers.push_back(out.build());
  return ReluNetwork(1, std::move(layers), {{"construction", "square"}, {"s", s}});
}

NetworkShape mult_net_shape(const MultParams& params, MultOutput output) {
  const int s = params.squaring_depth();
  NetworkShape shape;
  shape.depth = s + 3;
  shape.total_units = 6 + 9 * s + 3 + 1;
  shape.size = shape.total_units - (output == MultOutput::linear ? 1 : 0);
  return shape;
}

ReluNetwork build_mult_net(const MultParams& params, MultOutput output) {
  const int s = params.squaring_depth();
  const double M = params.input_bound;
  const double k = 1.0 / (2.0 * M);
  std::vector<Layer> layers;

  // Branch order is (x, y, x+y) throughout; each branch owns a contiguous
  // block of units in every layer.
  LayerBuilder abs_layer(2);
  abs_layer.add_unit(Activation::relu, 0.0, {{0, 1.0}});
  abs_layer.add_unit(Activation::relu, 0.0, {{0, -1.0}});
  abs_layer.add_unit(Activation::relu, 0.0, {{1, 1.0}});
  abs_layer.add_unit(Activation::relu, 0.0, {{1, -1.0}});
  abs_layer.add_unit(Activation::relu, 0.0, {{0, 1.0}, {1, 1.0}});
  abs_layer.add_unit(Activation::relu, 0.0, {{0, -1.0}, {1, -1.0}});
  layers.push_back(abs_layer.build());

  // First sawtooth layer on z = |.| / 2M, fused with the rescaling.
  LayerBuilder first(6);
  for (Eigen::Index branch = 0; branch < 3; ++branch) {
    const Eigen::Index p = 2 * branch, q = 2 * branch + 1;
    first.add_unit(Activation::relu, 0.0, {{p, k}, {q, k}});
    first.add_unit(Activation::relu, -0.5, {{p, k}, {q, k}});
    first.add_unit(Activation::relu, 0.0, {{p, k}, {q, k}});
  }
  layers.push_back(first.build());

  for (int step = 2; step <= s; ++step) {
    LayerBuilder b(9);
    for (Eigen::Index branch = 0; branch < 3; ++branch) add_sawtooth_step(b, 3 * branch, step);
    layers.push_back(b.build());
  }

  // f_s per branch; values are >= 0 so the relu is inert.
  LayerBuilder squares(9);
  for (Eigen::Index branch = 0; branch < 3; ++branch)
    squares.add_unit(Activation::relu, 0.0, square_readout(3 * branch, s));
  layers.push_back(squares.build());

  // Accumulates -C f(x), -C f(y), then +C f(x+y): swapping x and y only
  // swaps the first two (commutative) additions, and a zero input makes one
  // of them 0 while the other cancels the last term exactly.
  const double C = 2.0 * M * M;
  LayerBuilder readout(3);
  readout.add_unit(output == MultOutput::rectified ? Activation::relu : Activation::identity, 0.0,
                   {{0, -C}, {1, -C}, {2, C}});
  layers.push_back(readout.build());

  return ReluNetwork(2, std::move(layers),
                     {{"construction", "mult"}, {"eps", params.accuracy}, {"M", M}, {"s", s}});
}

namespace {

// Constant-1 leaf: no inputs, one bias unit in the second layer.
ReluNetwork constant_leaf() {
  LayerBuilder empty(0);
  LayerBuilder one(0);
  one.add_unit(Activation::relu, 1.0, {});
  return ReluNetwork(0, {empty.build(), one.build()});
}

// Leaf slots of a balanced tree: left subtrees take ceil(d/2) factors.
void assign_leaves(int factors, int slots, std::vector<bool>& is_factor) {
  if (slots == 1) {
    is_factor.push_back(factors == 1);
    return;
  }
  const int left = (factors + 1) / 2;
  assign_leaves(left, slots / 2, is_factor);
  assign_leaves(factors - left, slots / 2, is_factor);
}

}  // namespace

ReluNetwork build_product_net(std::span<const LevelIndex1D> factors, double eps) {
  check_eps(eps, "build_product_net");
  const int d = static_cast<int>(factors.size());
  if (d < 1) throw std::invalid_argument("build_product_net: need at least one factor");
  const TreeSchedule schedule = make_tree_schedule(d, eps);

  nlohmann::json schedule_doc = nlohmann::json::array();
  for (int t = 0; t < schedule.height; ++t)
    schedule_doc.push_back({{"depth", t},
                            {"budget", schedule.budgets[static_cast<std::size_t>(t)]},
                            {"eps", schedule.multiplications[static_cast<std::size_t>(t)].accuracy},
                            {"M", schedule.multiplications[static_cast<std::size_t>(t)].input_bound},
                            {"s", schedule.multiplications[static_cast<std::size_t>(t)].squaring_depth()}});

  std::vector<bool> is_factor;
  assign_leaves(d, 1 << schedule.height, is_factor);
  std::vector<ReluNetwork> leaves;
  std::size_t next = 0;
  for (bool f : is_factor) leaves.push_back(f ? build_hat_net(factors[next++]) : constant_leaf());
  ReluNetwork net = leaves.size() == 1 ? leaves.front() : direct_sum(leaves);

  for (int t = schedule.height - 1; t >= 0; --t) {
    const ReluNetwork node = build_mult_net(schedule.multiplications[static_cast<std::size_t>(t)], MultOutput::rectified);
    const std::vector<ReluNetwork> level(std::size_t{1} << t, node);
    net = compose(net, level.size() == 1 ? level.front() : direct_sum(level));
  }
  net.metadata() = {{"construction", "product"}, {"d", d}, {"eps", eps}, {"schedule", schedule_doc}};
  return net;
}

NetworkShape product_net_shape(int d, double eps) {
  const TreeSchedule schedule = make_tree_schedule(d, eps);
  NetworkShape shape;
  shape.depth = 2;
  shape.size = 3 * d + ((1 << schedule.height) - d);
  for (int t = 0; t < schedule.height; ++t) {
    const NetworkShape node = mult_net_shape(schedule.multiplications[static_cast<std::size_t>(t)], MultOutput::rectified);
    shape.depth += node.depth;
    shape.size += (std::int64_t{1} << t) * node.size;
  }
  shape.total_units = shape.size;
  return shape;
}

ReluNetwork compile_sparse_grid_net(const SparseGridInterpolant& interp, double eps) {
  check_eps(eps, "compile_sparse_grid_net");
  const double delta = eps / 2.0;
  const int d = interp.dimension();
  const auto terms = interp.terms();

  std::vector<ReluNetwork> subnets;
  subnets.reserve(terms.size());
  std::vector<LevelIndex1D> factors(static_cast<std::size_t>(d));
  int depth = 0;
  for (const auto& term : terms) {
    for (int j = 0; j < d; ++j) factors[static_cast<std::size_t>(j)] = term.index.component(static_cast<std::size_t>(j));
    subnets.push_back(build_product_net(factors, delta));
    depth = std::max(depth, subnets.back().depth());
  }
  for (auto& net : subnets) net = pad_depth(net, depth, Carry::nonnegative);
  ReluNetwork stacked = stack_parallel(subnets);

  LayerBuilder readout(stacked.output_dim());
  std::vector<std::pair<Eigen::Index, double>> weights;
  weights.reserve(terms.size());
  for (std::size_t k = 0; k < terms.size(); ++k) weights.emplace_back(static_cast<Eigen::Index>(k), terms[k].coefficient);
  readout.add_unit(Activation::identity, 0.0, weights);
  ReluNetwork net = compose(stacked, ReluNetwork(stacked.output_dim(), {readout.build()}));

  const NetworkShape predicted = predicted_bounds(d, interp.resolution(), eps, interp.scheme());
  const TreeSchedule schedule = make_tree_schedule(d, delta);
  net.metadata() = {{"construction", "sparse_grid"},
                    {"eps", eps},
                    {"delta", delta},
                    {"d", d},
                    {"n", interp.resolution()},
                    {"scheme", to_string(interp.scheme())},
                    {"term_count", terms.size()},
                    {"schedule", {{"budgets", schedule.budgets}, {"squaring_depths", schedule.squaring_depths()}}},
                    {"predicted", {{"depth", predicted.depth}, {"size", predicted.size}, {"total_units", predicted.total_units}}}};
  return net;
}

NetworkShape predicted_bounds(int d, int n, double eps, Scheme scheme) {
  check_eps(eps, "predicted_bounds");
  const auto terms = static_cast<std::int64_t>(count_points(d, n, scheme));
  const NetworkShape product = product_net_shape(d, eps / 2.0);
  NetworkShape shape;
  shape.depth = product.depth + 1;
  shape.size = terms * product.size;
  shape.total_units = terms * product.total_units + 1;
  return shape;
}

}  // namespace korogrid
