#include "korogrid/relu_ir.hpp"

#include <algorithm>
#include <cmath>

namespace korogrid {

bool Layer::consistent() const {
  return bias.size() == weights.rows() && static_cast<Eigen::Index>(activation.size()) == weights.rows();
}

Eigen::VectorXd Layer::apply(const Eigen::Ref<const Eigen::VectorXd>& in) const {
  Eigen::VectorXd out(weights.rows());
  for (Eigen::Index r = 0; r < weights.outerSize(); ++r) {
    double acc = bias[r];
    for (WeightMatrix::InnerIterator it(weights, r); it; ++it) acc += it.value() * in[it.col()];
    if (activation[static_cast<std::size_t>(r)] == Activation::relu) acc = acc > 0.0 ? acc : 0.0;
    out[r] = acc;
  }
  return out;
}

Eigen::Index LayerBuilder::add_unit(Activation act, double bias,
                                    std::initializer_list<std::pair<Eigen::Index, double>> terms) {
  return add_unit(act, bias, std::span<const std::pair<Eigen::Index, double>>(terms.begin(), terms.size()));
}

Eigen::Index LayerBuilder::add_unit(Activation act, double bias,
                                    std::span<const std::pair<Eigen::Index, double>> terms) {
  const Eigen::Index row = units();
  for (const auto& [col, w] : terms) {
    if (col < 0 || col >= in_units_) throw NetworkError("LayerBuilder: column out of range");
    if (w != 0.0) triplets_.emplace_back(row, col, w);
  }
  bias_.push_back(bias);
  activation_.push_back(act);
  return row;
}

Layer LayerBuilder::build() const {
  Layer layer;
  layer.weights.resize(units(), in_units_);
  // Duplicate entries are summed; builders never emit duplicates.
  layer.weights.setFromTriplets(triplets_.begin(), triplets_.end());
  layer.weights.makeCompressed();
  layer.bias = Eigen::Map<const Eigen::VectorXd>(bias_.data(), units());
  layer.activation = activation_;
  return layer;
}

ReluNetwork::ReluNetwork(Eigen::Index input_dim, std::vector<Layer> layers, nlohmann::json metadata)
    : input_dim_(input_dim), layers_(std::move(layers)), metadata_(std::move(metadata)) {
  if (input_dim_ < 0) throw NetworkError("network: negative input dimension");
  if (layers_.empty()) throw NetworkError("network: at least one layer is required");
  Eigen::Index width = input_dim_;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const Layer& layer = layers_[k];
    if (!layer.consistent()) throw NetworkError("network: layer " + std::to_string(k) + " has inconsistent shapes");
    if (layer.in_units() != width)
      throw NetworkError("network: layer " + std::to_string(k) + " expects " + std::to_string(layer.in_units()) +
                         " inputs but receives " + std::to_string(width));
    width = layer.out_units();
  }
  if (!metadata_.is_object()) throw NetworkError("network: metadata must be an object");
}

Eigen::VectorXd eval_network(const ReluNetwork& net, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != net.input_dim())
    throw NetworkError("eval_network: input has dimension " + std::to_string(x.size()) + ", network expects " +
                       std::to_string(net.input_dim()));
  Eigen::VectorXd signal = x;
  for (const Layer& layer : net.layers()) signal = layer.apply(signal);
  return signal;
}

double eval_scalar(const ReluNetwork& net, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (net.output_dim() != 1) throw NetworkError("eval_scalar: network output is not scalar");
  return eval_network(net, x)[0];
}

namespace {

void require_same_depth(std::span<const ReluNetwork> nets, const char* who) {
  if (nets.empty()) throw NetworkError(std::string(who) + ": no networks given");
  for (const auto& net : nets)
    if (net.depth() != nets.front().depth())
      throw NetworkError(std::string(who) + ": depth mismatch (pad_depth first)");
}

// Block-diagonal assembly of layer k across nets; when shared_input is set the
// first layer's blocks all read the same columns.
Layer assemble(std::span<const ReluNetwork> nets, std::size_t k, bool shared_input) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& net : nets) {
    rows += net.layers()[k].out_units();
    cols += net.layers()[k].in_units();
  }
  if (shared_input) cols = nets.front().layers()[k].in_units();

  std::vector<Eigen::Triplet<double>> triplets;
  Layer out;
  out.bias.resize(rows);
  out.activation.reserve(static_cast<std::size_t>(rows));
  Eigen::Index r0 = 0, c0 = 0;
  for (const auto& net : nets) {
    const Layer& layer = net.layers()[k];
    for (Eigen::Index r = 0; r < layer.weights.outerSize(); ++r)
      for (WeightMatrix::InnerIterator it(layer.weights, r); it; ++it)
        triplets.emplace_back(r0 + r, c0 + it.col(), it.value());
    out.bias.segment(r0, layer.out_units()) = layer.bias;
    out.activation.insert(out.activation.end(), layer.activation.begin(), layer.activation.end());
    r0 += layer.out_units();
    if (!shared_input) c0 += layer.in_units();
  }
  out.weights.resize(rows, cols);
  out.weights.setFromTriplets(triplets.begin(), triplets.end());
  out.weights.makeCompressed();
  return out;
}

}  // namespace

ReluNetwork stack_parallel(std::span<const ReluNetwork> nets) {
  require_same_depth(nets, "stack_parallel");
  for (const auto& net : nets)
    if (net.input_dim() != nets.front().input_dim()) throw NetworkError("stack_parallel: input dimension mismatch");
  std::vector<Layer> layers;
  for (std::size_t k = 0; k < static_cast<std::size_t>(nets.front().depth()); ++k)
    layers.push_back(assemble(nets, k, k == 0));
  return ReluNetwork(nets.front().input_dim(), std::move(layers));
}

ReluNetwork direct_sum(std::span<const ReluNetwork> nets) {
  require_same_depth(nets, "direct_sum");
  Eigen::Index input_dim = 0;
  for (const auto& net : nets) input_dim += net.input_dim();
  std::vector<Layer> layers;
  for (std::size_t k = 0; k < static_cast<std::size_t>(nets.front().depth()); ++k)
    layers.push_back(assemble(nets, k, false));
  return ReluNetwork(input_dim, std::move(layers));
}

ReluNetwork compose(const ReluNetwork& first, const ReluNetwork& second) {
  if (first.output_dim() != second.input_dim())
    throw NetworkError("compose: first network outputs " + std::to_string(first.output_dim()) +
                       " values but second expects " + std::to_string(second.input_dim()));
  std::vector<Layer> layers = first.layers();
  layers.insert(layers.end(), second.layers().begin(), second.layers().end());
  return ReluNetwork(first.input_dim(), std::move(layers));
}

ReluNetwork pad_depth(const ReluNetwork& net, int target, Carry carry) {
  if (target < net.depth())
    throw NetworkError("pad_depth: target " + std::to_string(target) + " is below current depth " +
                       std::to_string(net.depth()));
  const int extra = target - net.depth();
  std::vector<Layer> layers = net.layers();
  nlohmann::json metadata = net.metadata();
  const Eigen::Index width = net.output_dim();

  if (carry == Carry::nonnegative) {
    for (int k = 0; k < extra; ++k) {
      LayerBuilder b(width);
      for (Eigen::Index u = 0; u < width; ++u) b.add_unit(Activation::relu, 0.0, {{u, 1.0}});
      layers.push_back(b.build());
    }
  } else if (extra > 0) {
    metadata["signed_carry"] = true;
    // relu pairs for all but the last padded layer, then z = relu(z) - relu(-z).
    Eigen::Index in_width = width;
    bool paired = false;
    for (int k = 0; k < extra - 1; ++k) {
      LayerBuilder b(in_width);
      for (Eigen::Index u = 0; u < width; ++u) {
        if (!paired) {
          b.add_unit(Activation::relu, 0.0, {{u, 1.0}});
          b.add_unit(Activation::relu, 0.0, {{u, -1.0}});
        } else {
          b.add_unit(Activation::relu, 0.0, {{2 * u, 1.0}});
          b.add_unit(Activation::relu, 0.0, {{2 * u + 1, 1.0}});
        }
      }
      paired = true;
      in_width = 2 * width;
      layers.push_back(b.build());
    }
    LayerBuilder b(in_width);
    for (Eigen::Index u = 0; u < width; ++u) {
      if (paired)
        b.add_unit(Activation::identity, 0.0, {{2 * u, 1.0}, {2 * u + 1, -1.0}});
      else
        b.add_unit(Activation::identity, 0.0, {{u, 1.0}});
    }
    layers.push_back(b.build());
  }
  return ReluNetwork(net.input_dim(), std::move(layers), std::move(metadata));
}

NetworkStats stats(const ReluNetwork& net) {
  NetworkStats s;
  s.depth = net.depth();
  for (const Layer& layer : net.layers()) {
    s.total_units += layer.out_units();
    s.size += std::count(layer.activation.begin(), layer.activation.end(), Activation::relu);
    s.weight_count += layer.weights.nonZeros();
  }
  return s;
}

namespace {

const char* activation_name(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

}  // namespace

nlohmann::json serialize(const ReluNetwork& net) {
  nlohmann::json doc;
  doc["version"] = kNetworkFormatVersion;
  doc["input_dim"] = net.input_dim();
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& layer : net.layers()) {
    nlohmann::json j;
    const Eigen::Index rows = layer.out_units(), cols = layer.in_units();
    j["rows"] = rows;
    j["cols"] = cols;
    // Dense row-major when at least a quarter of the entries are nonzero.
    if (4 * layer.weights.nonZeros() >= rows * cols) {
      std::vector<double> dense(static_cast<std::size_t>(rows * cols), 0.0);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (WeightMatrix::InnerIterator it(layer.weights, r); it; ++it)
          dense[static_cast<std::size_t>(r * cols + it.col())] = it.value();
      j["weights"] = dense;
    } else {
      nlohmann::json entries = nlohmann::json::array();
      for (Eigen::Index r = 0; r < rows; ++r)
        for (WeightMatrix::InnerIterator it(layer.weights, r); it; ++it)
          entries.push_back(nlohmann::json::array({r, it.col(), it.value()}));
      j["entries"] = std::move(entries);
    }
    j["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
    nlohmann::json act = nlohmann::json::array();
    for (Activation a : layer.activation) act.push_back(activation_name(a));
    j["activation"] = std::move(act);
    layers.push_back(std::move(j));
  }
  doc["layers"] = std::move(layers);
  doc["metadata"] = net.metadata();
  return doc;
}

namespace {

template <typename T>
T field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw NetworkParseError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw NetworkParseError(where + ": bad field '" + key + "': " + e.what());
  }
}

}  // namespace

ReluNetwork deserialize(const nlohmann::json& doc) {
  if (!doc.is_object()) throw NetworkParseError("network document must be an object");
  const int version = field<int>(doc, "version", "network");
  if (version != kNetworkFormatVersion)
    throw NetworkParseError("unsupported network format version " + std::to_string(version));
  const auto input_dim = field<Eigen::Index>(doc, "input_dim", "network");
  if (input_dim < 0) throw NetworkParseError("network: negative input_dim");
  if (!doc.contains("layers") || !doc["layers"].is_array() || doc["layers"].empty())
    throw NetworkParseError("network: 'layers' must be a nonempty array");

  std::vector<Layer> layers;
  Eigen::Index width = input_dim;
  for (std::size_t k = 0; k < doc["layers"].size(); ++k) {
    const auto& j = doc["layers"][k];
    const std::string where = "layer " + std::to_string(k);
    const auto rows = field<Eigen::Index>(j, "rows", where);
    const auto cols = field<Eigen::Index>(j, "cols", where);
    if (rows < 1) throw NetworkParseError(where + ": layer has no units");
    if (cols != width)
      throw NetworkParseError(where + ": expects " + std::to_string(cols) + " inputs but receives " +
                              std::to_string(width));
    const auto bias = field<std::vector<double>>(j, "bias", where);
    const auto act = field<std::vector<std::string>>(j, "activation", where);
    if (static_cast<Eigen::Index>(bias.size()) != rows || static_cast<Eigen::Index>(act.size()) != rows)
      throw NetworkParseError(where + ": bias/activation length does not match rows");

    LayerBuilder b(cols);
    const bool dense = j.contains("weights"), sparse = j.contains("entries");
    if (dense == sparse) throw NetworkParseError(where + ": exactly one of 'weights' or 'entries' is required");
    std::vector<std::vector<std::pair<Eigen::Index, double>>> row_terms(static_cast<std::size_t>(rows));
    if (dense) {
      const auto w = field<std::vector<double>>(j, "weights", where);
      if (static_cast<Eigen::Index>(w.size()) != rows * cols)
        throw NetworkParseError(where + ": weights length does not match rows*cols");
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
          row_terms[static_cast<std::size_t>(r)].emplace_back(c, w[static_cast<std::size_t>(r * cols + c)]);
    } else {
      const auto entries = field<std::vector<std::tuple<Eigen::Index, Eigen::Index, double>>>(j, "entries", where);
      for (const auto& [r, c, v] : entries) {
        if (r < 0 || r >= rows || c < 0 || c >= cols) throw NetworkParseError(where + ": entry index out of range");
        auto& terms = row_terms[static_cast<std::size_t>(r)];
        if (!terms.empty() && terms.back().first >= c)
          throw NetworkParseError(where + ": entries must be sorted and unique");
        terms.emplace_back(c, v);
      }
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      Activation a;
      const std::string& name = act[static_cast<std::size_t>(r)];
      if (name == "relu")
        a = Activation::relu;
      else if (name == "identity")
        a = Activation::identity;
      else
        throw NetworkParseError(where + ": unknown activation '" + name + "'");
      b.add_unit(a, bias[static_cast<std::size_t>(r)], row_terms[static_cast<std::size_t>(r)]);
    }
    layers.push_back(b.build());
    width = rows;
  }
  nlohmann::json metadata = doc.contains("metadata") ? doc["metadata"] : nlohmann::json::object();
  if (!metadata.is_object()) throw NetworkParseError("network: metadata must be an object");
  return ReluNetwork(input_dim, std::move(layers), std::move(metadata));
}

}  // namespace korogrid
