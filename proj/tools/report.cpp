#include "report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "qfm/metrics.hpp"

namespace qfm::cli {

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::string hex;
  char pair[3];
  for (unsigned int k = 0; k < length; ++k) {
    std::snprintf(pair, sizeof pair, "%02x", digest[k]);
    hex += pair;
  }
  return hex;
}

Json number_json(double value) {
  if (!std::isfinite(value)) return nullptr;
  // Round-tripping through the 12-digit text keeps JSON and tables in step.
  return std::strtod(format_number(value).c_str(), nullptr);
}

Json number_json(const Rational& value) { return to_string(value); }

namespace {

Json input_json(const InputInfo& input) {
  return Json{{"path", input.path}, {"sha256", input.sha256}, {"kind", input.kind}};
}

template <class T>
Json goods_json(const BasicMarket<T>& market) {
  Json names = Json::array();
  for (const auto& g : market.goods) names.push_back(g.name);
  return names;
}

template <class T>
Json owner_table(const FlatMarket<T>& flat, const PriceVector<T>& prices, const Allocation<T>& allocation) {
  const auto owners = reaggregate(flat, prices, allocation);
  Json rows = Json::array();
  for (std::size_t o = 0; o < owners.owners.size(); ++o) {
    rows.push_back(Json{{"owner", owners.owners[o]},
                        {"bundle", vector_json(owners.bundles[o])},
                        {"spend", number_json(owners.spend[o])}});
  }
  return rows;
}

const char* witness_name(WitnessKind kind) {
  switch (kind) {
    case WitnessKind::over_demand: return "over_demand";
    case WitnessKind::under_sold: return "under_sold";
    case WitnessKind::none: break;
  }
  return "none";
}

template <class T>
Json witness_json(const BasicMarket<T>& market, const FeasibilityCertificate<T>& cert) {
  Json goods = Json::array();
  for (std::size_t j : cert.witness) goods.push_back(market.goods[j].name);
  return Json{{"kind", witness_name(cert.witness_kind)},
              {"goods", goods},
              {"excess", number_json(cert.witness_excess)}};
}

// Grid coordinates are exact; float reports still print them as numbers.
template <class T>
Json in_mode(const Rational& value) {
  if constexpr (is_exact_v<T>) return number_json(value);
  else return number_json(to_double(value));
}

Json revenue_point_json(const RevenuePoint& point) {
  return Json{{"price", number_json(point.price)},
              {"quantity", number_json(point.quantity)},
              {"revenue", number_json(point.revenue)}};
}

// Table helpers. Cells are already formatted JSON scalars.
std::string cell(const Json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_null()) return "-";
  if (value.is_boolean()) return value.get<bool>() ? "yes" : "no";
  if (value.is_number()) return format_number(value.get<double>());
  if (value.is_array()) {
    std::string out = "(";
    for (std::size_t k = 0; k < value.size(); ++k) out += (k ? ", " : "") + cell(value[k]);
    return out + ")";
  }
  return value.dump();
}

void line(std::ostringstream& out, std::string_view label, const Json& value) {
  out << "  " << label;
  for (std::size_t k = label.size(); k < 24; ++k) out << ' ';
  out << cell(value) << '\n';
}

void grid_table(std::ostringstream& out, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  auto emit = [&](const std::vector<std::string>& row) {
    out << "  ";
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << row[c];
      if (c + 1 < row.size()) out << std::string(width[c] - row[c].size() + 2, ' ');
    }
    out << '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
}

void allocation_table(std::ostringstream& out, const Json& goods, const Json& rows) {
  std::vector<std::string> header{"owner"};
  for (const auto& g : goods) header.push_back(g.get<std::string>());
  header.push_back("spend");
  std::vector<std::vector<std::string>> body;
  for (const auto& row : rows) {
    std::vector<std::string> r{row["owner"].get<std::string>()};
    for (const auto& x : row["bundle"]) r.push_back(cell(x));
    r.push_back(cell(row["spend"]));
    body.push_back(std::move(r));
  }
  grid_table(out, header, body);
}

void render_solve(std::ostringstream& out, const Json& r) {
  out << "equilibrium (" << r["mode"].get<std::string>() << " mode)\n";
  line(out, "goods", r["goods"]);
  line(out, "p*", r["p_star"]);
  line(out, "revenue", r["revenue"]);
  line(out, "welfare", r["welfare"]);
  line(out, "exactly clearing", r["certificates"]["exact_clearing"]);
  line(out, "clearing", r["certificates"]["clearing"]);
  line(out, "competitive eq.", r["certificates"]["competitive_equilibrium"]);
  line(out, "method agreement", r["diagnostics"]["method_agreement"]);
  line(out, "duality gap", r["diagnostics"]["convex"]["duality_gap"]);
  out << "allocation\n";
  allocation_table(out, r["goods"], r["allocation"]);
  for (const auto& w : r["warnings"]) out << "warning: " << w.get<std::string>() << '\n';
}

void render_check_price(std::ostringstream& out, const Json& r) {
  out << "price check (" << r["mode"].get<std::string>() << " mode)\n";
  line(out, "goods", r["goods"]);
  line(out, "prices", r["prices"]);
  line(out, "verdict", r["verdict"]);
  line(out, "feasible", r["feasible"]);
  line(out, "clearing", r["clearing"]);
  line(out, "max-extension revenue", r["max_extension_revenue"]);
  if (!r["witness"].is_null()) {
    line(out, "witness", r["witness"]["kind"]);
    line(out, "witness goods", r["witness"]["goods"]);
    line(out, "witness excess", r["witness"]["excess"]);
  }
  if (!r["allocation"].is_null()) {
    out << "allocation\n";
    allocation_table(out, r["goods"], r["allocation"]);
  }
}

void render_region(std::ostringstream& out, const Json& r) {
  out << "feasible region scan\n";
  line(out, "goods", r["goods"]);
  line(out, "resolution", r["resolution"]);
  line(out, "points", r["points"]);
  line(out, "feasible points", r["feasible_points"]);
  line(out, "step", r["step"]);
  line(out, "grid minimum", r["grid_min_price"]);
  line(out, "max revenue", r["max_revenue"]);
  line(out, "at price", r["max_revenue_price"]);
  if (r.contains("boundary_polylines")) line(out, "boundary polylines", r["boundary_polylines"]);
}

void render_monopoly(std::ostringstream& out, const Json& r) {
  out << "monopoly (" << r["valuation"].get<std::string>() << ")\n";
  line(out, "supply", r["supply"]);
  line(out, "budget", r["budget"].is_null() ? Json("unbounded") : r["budget"]);
  std::vector<std::vector<std::string>> rows;
  auto add = [&](const std::string& name, const Json& p) {
    rows.push_back({name, cell(p["price"]), cell(p["quantity"]), cell(p["revenue"])});
  };
  add("clearing", r["clearing"]);
  add("optimal", r["optimal"]);
  if (!r["unbudgeted_optimal"].is_null()) add("optimal, no budget", r["unbudgeted_optimal"]);
  for (const auto& p : r["probes"]) add("probe", p);
  grid_table(out, {"", "price", "quantity", "revenue"}, rows);
  const Json& w = r["divergence_witness"];
  if (w.is_null()) {
    out << "no divergence witness\n";
  } else {
    out << "divergence witness\n";
    line(out, "supply", w["supply"]);
    line(out, "epsilon", w["epsilon"]);
    line(out, "revenue at s", w["revenue_at_supply"]);
    line(out, "revenue at s - eps", w["revenue_at_reduced"]);
  }
}

void render_proptest(std::ostringstream& out, const Json& r) {
  out << "property suite (seed " << r["seed"].get<std::uint64_t>() << ")\n";
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : r["properties"]) {
    rows.push_back({p["name"].get<std::string>(), cell(p["cases"]), cell(p["failures"]), cell(p["worst"]),
                    p["passed"].get<bool>() ? "pass" : "FAIL"});
  }
  grid_table(out, {"property", "cases", "failures", "worst", "result"}, rows);
  for (const auto& p : r["properties"])
    for (const auto& e : p["examples"]) out << "  " << p["name"].get<std::string>() << ": " << e.get<std::string>() << '\n';
  line(out, "upward-closure checks", r["upward_closure"]["checks"]);
  line(out, "upward-closure findings", r["upward_closure"]["findings"]);
  line(out, "snap failures", r["snap_failures"]);
}

}  // namespace

template <class T>
Json solve_report(const InputInfo& input, const FlatMarket<T>& flat, const EquilibriumResult<T>& result,
                  double tol) {
  const auto& market = flat.market;
  Json report;
  report["command"] = "solve";
  report["input"] = input_json(input);
  report["mode"] = input.mode;
  report["tol"] = number_json(tol);
  report["goods"] = goods_json(market);
  report["p_star"] = vector_json(result.p_star);
  report["revenue"] = number_json(result.revenue);
  report["welfare"] = number_json(result.welfare);
  report["allocation"] = owner_table(flat, result.p_star, result.allocation);
  report["sold"] = vector_json(aggregate(result.allocation, market.num_goods()));
  report["certificates"] = Json{
      {"exact_clearing", result.snapped},
      {"clearing", result.clearing.feasible},
      {"competitive_equilibrium", result.efficiency.verdict == EfficiencyVerdict::certified},
  };
  Json convex{{"duality_gap", number_json(result.eg.duality_gap)},
              {"primal_objective", number_json(result.eg.primal_objective)},
              {"dual_objective", number_json(result.eg.dual_objective)},
              {"newton_iterations", result.eg.iterations},
              {"prices", vector_json(result.eg.prices)}};
  Json descent{{"accepted_moves", result.descent.steps.size()},
               {"rejected_moves", result.descent.rejected_moves},
               {"feasibility_checks", result.descent.feasibility_checks},
               {"terminal_step", number_json(result.descent.terminal_step)},
               {"prices", vector_json(result.descent.final_price)}};
  report["diagnostics"] = Json{{"method_agreement", number_json(result.method_agreement)},
                               {"agreement_by_snap", result.agreement_by_snap},
                               {"snapped", result.snapped},
                               {"convex", std::move(convex)},
                               {"descent", std::move(descent)}};
  report["warnings"] = flat.warnings;
  return report;
}

template <class T>
Json check_price_report(const InputInfo& input, const FlatMarket<T>& flat, const PriceVector<T>& prices,
                        const FeasibilityCertificate<T>& feasible, const FeasibilityCertificate<T>& clearing) {
  const auto& market = flat.market;
  Json report;
  report["command"] = "check-price";
  report["input"] = input_json(input);
  report["mode"] = input.mode;
  report["goods"] = goods_json(market);
  report["prices"] = vector_json(prices);
  report["verdict"] = clearing.feasible ? "clearing" : feasible.feasible ? "feasible" : "infeasible";
  report["feasible"] = feasible.feasible;
  report["clearing"] = clearing.feasible;
  report["max_extension_revenue"] = feasible.feasible ? number_json(feasible.revenue) : Json(nullptr);
  if (!feasible.feasible) {
    report["witness"] = witness_json(market, feasible);
  } else if (!clearing.feasible) {
    report["witness"] = witness_json(market, clearing);
  } else {
    report["witness"] = nullptr;
  }
  const auto& shown = clearing.feasible ? clearing.allocation : feasible.allocation;
  report["allocation"] = shown ? owner_table(flat, prices, *shown) : Json(nullptr);
  return report;
}

template <class T>
Json region_report(const InputInfo& input, const FlatMarket<T>& flat, const RegionGrid<T>& grid,
                   std::size_t boundary_polylines) {
  Json report;
  report["command"] = "region";
  report["input"] = input_json(input);
  report["mode"] = input.mode;
  report["goods"] = goods_json(flat.market);
  Json bounds = Json::array();
  Json step = Json::array();
  for (std::size_t j = 0; j < grid.num_goods(); ++j) {
    bounds.push_back(Json::array({in_mode<T>(grid.bounds[j].lo), in_mode<T>(grid.bounds[j].hi)}));
    step.push_back(in_mode<T>(grid.step(j)));
  }
  report["bounds"] = std::move(bounds);
  report["resolution"] = grid.resolution;
  report["points"] = grid.size();
  report["feasible_points"] = static_cast<std::size_t>(std::count(grid.feasible.begin(), grid.feasible.end(), 1));
  report["step"] = std::move(step);
  if (report["feasible_points"].get<std::size_t>() > 0) {
    report["grid_min_price"] = vector_json(oracle_min_price(grid));
    auto [price, revenue] = oracle_max_revenue(grid);
    report["max_revenue"] = number_json(revenue);
    report["max_revenue_price"] = vector_json(price);
  } else {
    report["grid_min_price"] = nullptr;
    report["max_revenue"] = nullptr;
    report["max_revenue_price"] = nullptr;
  }
  if (grid.num_goods() == 2) report["boundary_polylines"] = boundary_polylines;
  return report;
}

Json monopoly_report(const MonopolyRun& run) {
  const auto& inst = run.instance;
  Json report;
  report["command"] = "monopoly";
  report["valuation"] = run.valuation;
  report["supply"] = number_json(inst.supply);
  report["budget"] = number_json(inst.budget);
  const double clearing = clearing_price(inst);
  report["clearing"] = revenue_point_json(revenue_at(inst, clearing));
  report["optimal"] = revenue_point_json(max_revenue_price(inst, run.tol));
  if (std::isfinite(inst.budget)) {
    MonopolyInstance unbudgeted = inst;
    unbudgeted.budget = kInfiniteBudget;
    report["unbudgeted_optimal"] = revenue_point_json(max_revenue_price(unbudgeted, run.tol));
  } else {
    report["unbudgeted_optimal"] = nullptr;
  }
  Json probes = Json::array();
  for (double p : run.probe_prices) probes.push_back(revenue_point_json(revenue_at(inst, p)));
  report["probes"] = std::move(probes);
  const auto witness = divergence_witness(inst.valuation, inst.budget, inst.supply);
  if (witness) {
    report["divergence_witness"] = Json{
        {"supply", number_json(witness->supply)},
        {"epsilon", number_json(witness->epsilon)},
        {"revenue_at_supply", number_json(witness->revenue_at_supply)},
        {"revenue_at_reduced", number_json(witness->revenue_at_reduced)},
        {"supply_condition", witness->supply_condition},
        {"budget_condition", witness->budget_condition},
        {"exhaustion_quantity",
         witness->exhaustion_quantity ? number_json(*witness->exhaustion_quantity) : Json(nullptr)},
    };
  } else {
    report["divergence_witness"] = nullptr;
  }
  return report;
}

Json proptest_report(const PropertyOptions& options, const PropertySuiteResult& result) {
  Json report;
  report["command"] = "proptest";
  report["seed"] = options.seed;
  report["markets"] = options.markets;
  report["pairs_per_market"] = options.pairs_per_market;
  report["grid_points"] = options.grid_points;
  Json properties = Json::array();
  bool passed = true;
  for (const auto& p : result.reports) {
    passed = passed && p.passed();
    properties.push_back(Json{{"name", p.name},
                              {"cases", p.cases},
                              {"failures", p.failures},
                              {"worst", number_json(p.worst)},
                              {"passed", p.passed()},
                              {"examples", p.examples}});
  }
  report["properties"] = std::move(properties);
  report["upward_closure"] = Json{{"checks", result.upward_closure_checks},
                                  {"findings", result.upward_closure_findings}};
  report["snap_failures"] = result.snap_failures;
  report["passed"] = passed;
  return report;
}

std::string render_table(const Json& report) {
  std::ostringstream out;
  const auto command = report.value("command", std::string());
  if (command == "solve") render_solve(out, report);
  else if (command == "check-price") render_check_price(out, report);
  else if (command == "region") render_region(out, report);
  else if (command == "monopoly") render_monopoly(out, report);
  else if (command == "proptest") render_proptest(out, report);
  else out << report.dump(2) << '\n';
  if (report.contains("timing")) line(out, "elapsed ms", report["timing"]["elapsed_ms"]);
  return out.str();
}

template Json solve_report<double>(const InputInfo&, const FlatMarket<double>&,
                                   const EquilibriumResult<double>&, double);
template Json solve_report<Rational>(const InputInfo&, const FlatMarket<Rational>&,
                                     const EquilibriumResult<Rational>&, double);
template Json check_price_report<double>(const InputInfo&, const FlatMarket<double>&, const PriceVector<double>&,
                                         const FeasibilityCertificate<double>&,
                                         const FeasibilityCertificate<double>&);
template Json check_price_report<Rational>(const InputInfo&, const FlatMarket<Rational>&,
                                           const PriceVector<Rational>&, const FeasibilityCertificate<Rational>&,
                                           const FeasibilityCertificate<Rational>&);
template Json region_report<double>(const InputInfo&, const FlatMarket<double>&, const RegionGrid<double>&,
                                    std::size_t);
template Json region_report<Rational>(const InputInfo&, const FlatMarket<Rational>&, const RegionGrid<Rational>&,
                                      std::size_t);

}  // namespace qfm::cli
