#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <json.hpp>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace korogrid {

enum class Activation : std::uint8_t { relu, identity };

using WeightMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Affine map followed by a per-unit activation.
///
/// Weights are stored sparse (row-major); only nonzeros are kept. A row's
/// pre-activation is accumulated as bias, then nonzero terms in ascending
/// column order, so identical rows always produce bitwise identical values.
struct Layer {
  WeightMatrix weights;
  Eigen::VectorXd bias;
  std::vector<Activation> activation;

  Eigen::Index out_units() const { return weights.rows(); }
  Eigen::Index in_units() const { return weights.cols(); }
  bool consistent() const;
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& in) const;
};

/// Incremental construction of a Layer one unit at a time.
class LayerBuilder {
 public:
  explicit LayerBuilder(Eigen::Index in_units) : in_units_(in_units) {}

  /// Appends a unit; returns its row index. Zero weights are dropped.
  Eigen::Index add_unit(Activation act, double bias, std::initializer_list<std::pair<Eigen::Index, double>> terms);
  Eigen::Index add_unit(Activation act, double bias, std::span<const std::pair<Eigen::Index, double>> terms);
  Eigen::Index units() const { return static_cast<Eigen::Index>(bias_.size()); }

  Layer build() const;

 private:
  Eigen::Index in_units_;
  std::vector<Eigen::Triplet<double>> triplets_;
  std::vector<double> bias_;
  std::vector<Activation> activation_;
};

class NetworkError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed network document.
class NetworkParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ReluNetwork {
 public:
  ReluNetwork(Eigen::Index input_dim, std::vector<Layer> layers, nlohmann::json metadata = nlohmann::json::object());

  Eigen::Index input_dim() const { return input_dim_; }
  Eigen::Index output_dim() const { return layers_.back().out_units(); }
  int depth() const { return static_cast<int>(layers_.size()); }
  const std::vector<Layer>& layers() const { return layers_; }
  const nlohmann::json& metadata() const { return metadata_; }
  nlohmann::json& metadata() { return metadata_; }

 private:
  Eigen::Index input_dim_;
  std::vector<Layer> layers_;
  nlohmann::json metadata_;
};

struct NetworkStats {
  int depth = 0;
  /// Relu-activated units.
  std::int64_t size = 0;
  /// All units including identity-activated ones.
  std::int64_t total_units = 0;
  /// Stored nonzero weights.
  std::int64_t weight_count = 0;
};

Eigen::VectorXd eval_network(const ReluNetwork& net, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Convenience for scalar-output networks.
double eval_scalar(const ReluNetwork& net, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Networks sharing one input, run side by side; outputs are concatenated.
ReluNetwork stack_parallel(std::span<const ReluNetwork> nets);

/// Networks on disjoint input slices (inputs and outputs concatenated).
ReluNetwork direct_sum(std::span<const ReluNetwork> nets);

/// second(first(x)).
ReluNetwork compose(const ReluNetwork& first, const ReluNetwork& second);

enum class Carry {
  /// One relu unit with weight 1 per output; exact for nonnegative signals.
  nonnegative,
  /// (relu(z), relu(-z)) pairs recombined by an identity unit; exact for any sign.
  signed_pair,
};

/// Appends carry layers until depth == target. Evaluation is unchanged.
ReluNetwork pad_depth(const ReluNetwork& net, int target, Carry carry = Carry::nonnegative);

NetworkStats stats(const ReluNetwork& net);

inline constexpr int kNetworkFormatVersion = 1;

nlohmann::json serialize(const ReluNetwork& net);
/// Throws NetworkParseError on version, shape or content errors.
ReluNetwork deserialize(const nlohmann::json& doc);

}  // namespace korogrid
