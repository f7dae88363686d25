#include "korogrid/grid_io.hpp"

#include <string>

namespace korogrid {

nlohmann::json serialize(const SparseGridInterpolant& interp) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : interp.terms())
    terms.push_back({{"l", t.index.levels}, {"i", t.index.positions}, {"v", t.coefficient}});
  return {{"version", kInterpolantFormatVersion},
          {"d", interp.dimension()},
          {"n", interp.resolution()},
          {"scheme", to_string(interp.scheme())},
          {"terms", std::move(terms)}};
}

SparseGridInterpolant deserialize_interpolant(const nlohmann::json& doc) {
  try {
    if (!doc.is_object()) throw GridParseError("interpolant document must be an object");
    const int version = doc.at("version").get<int>();
    if (version != kInterpolantFormatVersion)
      throw GridParseError("unsupported interpolant format version " + std::to_string(version));
    const int d = doc.at("d").get<int>();
    const int n = doc.at("n").get<int>();
    const Scheme scheme = scheme_from_string(doc.at("scheme").get<std::string>());
    std::vector<SparseGridInterpolant::Term> terms;
    for (const auto& t : doc.at("terms")) {
      MultiIndex mi{t.at("l").get<std::vector<int>>(), t.at("i").get<std::vector<std::int64_t>>()};
      terms.push_back({std::move(mi), t.at("v").get<double>()});
    }
    return SparseGridInterpolant::from_terms(d, n, scheme, std::move(terms));
  } catch (const GridParseError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw GridParseError(std::string("malformed interpolant document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw GridParseError(std::string("invalid interpolant: ") + e.what());
  }
}

}  // namespace korogrid
