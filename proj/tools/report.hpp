#pragma once

// Report documents for the command-line front end. Each command builds one
// ordered JSON document; the table on standard output is rendered from it,
// so the two never disagree.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qfm/arctic_io.hpp"
#include "qfm/equilibrium.hpp"
#include "qfm/feasibility.hpp"
#include "qfm/format.hpp"
#include "qfm/monopoly.hpp"
#include "qfm/oracle.hpp"
#include "qfm/property_suite.hpp"

namespace qfm::cli {

using Json = nlohmann::ordered_json;

// Lowercase hex SHA-256 of the raw input bytes.
std::string sha256_hex(std::string_view bytes);

// Floats become JSON numbers rounded to 12 significant digits (null when not
// finite); rationals become "p/q" strings.
Json number_json(double value);
Json number_json(const Rational& value);

template <class T>
Json vector_json(const std::vector<T>& values) {
  Json out = Json::array();
  for (const auto& v : values) out.push_back(number_json(v));
  return out;
}

struct InputInfo {
  std::string path;
  std::string sha256;
  std::string kind;  // "market" or "arctic"
  std::string mode;  // "exact" or "float"
};

template <class T>
Json solve_report(const InputInfo& input, const FlatMarket<T>& flat, const EquilibriumResult<T>& result,
                  double tol);

template <class T>
Json check_price_report(const InputInfo& input, const FlatMarket<T>& flat, const PriceVector<T>& prices,
                        const FeasibilityCertificate<T>& feasible, const FeasibilityCertificate<T>& clearing);

template <class T>
Json region_report(const InputInfo& input, const FlatMarket<T>& flat, const RegionGrid<T>& grid,
                   std::size_t boundary_polylines);

struct MonopolyRun {
  std::string valuation;
  MonopolyInstance instance;
  double tol = 0.0;
  std::vector<double> probe_prices;  // extra prices to evaluate revenue at
};

Json monopoly_report(const MonopolyRun& run);

Json proptest_report(const PropertyOptions& options, const PropertySuiteResult& result);

// Human-readable rendering of any report above.
std::string render_table(const Json& report);

}  // namespace qfm::cli
