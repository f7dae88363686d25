#pragma once

#include <json.hpp>

#include <stdexcept>

#include "korogrid/sparse_grid.hpp"

namespace korogrid {

inline constexpr int kInterpolantFormatVersion = 1;

class GridParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {version, d, n, scheme, terms: [{l, i, v}]} with terms in canonical order.
nlohmann::json serialize(const SparseGridInterpolant& interp);

/// Throws GridParseError on malformed documents or index sets that do not
/// match (d, n, scheme).
SparseGridInterpolant deserialize_interpolant(const nlohmann::json& doc);

}  // namespace korogrid
