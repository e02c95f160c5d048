#include "qfm/arctic_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace qfm {

using Json = nlohmann::ordered_json;

namespace {

std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }
std::string child(const std::string& path, std::size_t index) { return path + "/" + std::to_string(index); }

const Json& member(const Json& object, const std::string& key, const std::string& path) {
  auto it = object.find(key);
  if (it == object.end()) throw ParseError(path, "missing field \"" + key + "\"");
  return *it;
}

Quantity read_quantity(const Json& node, const std::string& path) {
  Quantity q;
  if (node.is_string()) {
    try {
      q.value = parse_rational(node.get<std::string>());
    } catch (const std::exception&) {
      throw ParseError(path, "expected a number or a \"p/q\" string, got \"" + node.get<std::string>() + "\"");
    }
    q.written_as_string = true;
  } else if (node.is_number_integer()) {
    q.value = node.is_number_unsigned() ? Rational(node.get<std::uint64_t>()) : Rational(node.get<std::int64_t>());
  } else if (node.is_number_float()) {
    const double d = node.get<double>();
    if (!std::isfinite(d)) throw ParseError(path, "number is not finite");
    q.value = rational_from_double(d);
  } else {
    throw ParseError(path, "expected a number or a \"p/q\" string");
  }
  return q;
}

std::string read_string(const Json& node, const std::string& path) {
  if (!node.is_string()) throw ParseError(path, "expected a string");
  return node.get<std::string>();
}

const Json& read_array(const Json& node, const std::string& path) {
  if (!node.is_array()) throw ParseError(path, "expected an array");
  return node;
}

void reject_costs(const Json& root) {
  auto it = root.find("costs");
  if (it == root.end()) return;
  auto nonzero = [](const Json& node, const std::string& path) {
    return read_quantity(node, path).value != 0;
  };
  bool any = false;
  if (it->is_array()) {
    for (std::size_t k = 0; k < it->size(); ++k) any = any || nonzero((*it)[k], child("/costs", k));
  } else if (!it->is_null()) {
    any = nonzero(*it, "/costs");
  }
  if (any) throw ParseError("/costs", "nonzero seller costs are out of scope; only zero-cost markets are supported");
}

Json write_quantity(const Quantity& q) {
  if (q.written_as_string) return to_string(q.value);
  if (denominator(q.value) == 1) {
    const auto top = numerator(q.value);
    if (top >= std::numeric_limits<std::int64_t>::min() && top <= std::numeric_limits<std::int64_t>::max())
      return top.convert_to<std::int64_t>();
  }
  return to_double(q.value);
}

template <class T>
T as(const Quantity& q) {
  return from_rational<T>(q.value);
}

}  // namespace

bool MarketDocument::has_rational_strings() const {
  for (const auto& g : goods)
    if (g.supply.written_as_string) return true;
  for (const auto& e : entries) {
    if (e.budget.written_as_string) return true;
    for (const auto& v : e.values)
      if (v.written_as_string) return true;
  }
  return false;
}

MarketDocument parse_document(std::string_view json_text) {
  Json root;
  try {
    root = Json::parse(json_text.begin(), json_text.end());
  } catch (const Json::parse_error& e) {
    throw ParseError("", std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ParseError("", "top level must be an object");
  MarketDocument doc;
  const std::string kind = read_string(member(root, "kind", ""), "/kind");
  if (kind == "market") {
    doc.kind = DocumentKind::market;
  } else if (kind == "arctic") {
    doc.kind = DocumentKind::arctic;
  } else {
    throw ParseError("/kind", "expected \"market\" or \"arctic\", got \"" + kind + "\"");
  }
  reject_costs(root);

  const auto& goods = read_array(member(root, "goods", ""), "/goods");
  for (std::size_t j = 0; j < goods.size(); ++j) {
    const std::string path = child("/goods", j);
    if (!goods[j].is_object()) throw ParseError(path, "expected an object");
    doc.goods.push_back({read_string(member(goods[j], "name", path), child(path, "name")),
                         read_quantity(member(goods[j], "supply", path), child(path, "supply"))});
  }

  const bool arctic = doc.kind == DocumentKind::arctic;
  const std::string list = arctic ? "bids" : "buyers";
  const std::string label = arctic ? "owner" : "name";
  const std::string values = arctic ? "vector" : "values";
  const auto& entries = read_array(member(root, list, ""), "/" + list);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string path = child("/" + list, i);
    if (!entries[i].is_object()) throw ParseError(path, "expected an object");
    DocumentEntry e;
    e.name = read_string(member(entries[i], label, path), child(path, label));
    const auto& vec = read_array(member(entries[i], values, path), child(path, values));
    for (std::size_t j = 0; j < vec.size(); ++j) e.values.push_back(read_quantity(vec[j], child(child(path, values), j)));
    e.budget = read_quantity(member(entries[i], "budget", path), child(path, "budget"));
    doc.entries.push_back(std::move(e));
  }
  return doc;
}

std::string serialize_document(const MarketDocument& document, int indent) {
  const bool arctic = document.kind == DocumentKind::arctic;
  Json root = Json::object();
  root["kind"] = arctic ? "arctic" : "market";
  Json goods = Json::array();
  for (const auto& g : document.goods) {
    Json node = Json::object();
    node["name"] = g.name;
    node["supply"] = write_quantity(g.supply);
    goods.push_back(std::move(node));
  }
  root["goods"] = std::move(goods);
  Json entries = Json::array();
  for (const auto& e : document.entries) {
    Json node = Json::object();
    node[arctic ? "owner" : "name"] = e.name;
    Json values = Json::array();
    for (const auto& v : e.values) values.push_back(write_quantity(v));
    node[arctic ? "vector" : "values"] = std::move(values);
    node["budget"] = write_quantity(e.budget);
    entries.push_back(std::move(node));
  }
  root[arctic ? "bids" : "buyers"] = std::move(entries);
  return root.dump(indent) + "\n";
}

MarketDocument load_document(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, "cannot open file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_document(text.str());
}

std::vector<DocumentEntry> parse_entries_csv(std::string_view csv_text) {
  std::vector<DocumentEntry> out;
  std::istringstream in{std::string(csv_text)};
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  auto split = [](const std::string& text) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream row(text);
    while (std::getline(row, cell, ',')) {
      cell.erase(0, cell.find_first_not_of(" \t\r"));
      cell.erase(cell.find_last_not_of(" \t\r") + 1);
      cells.push_back(cell);
    }
    if (!text.empty() && text.back() == ',') cells.emplace_back();
    return cells;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto cells = split(line);
    const std::string where = "line " + std::to_string(line_no);
    if (columns == 0) {
      if (cells.size() < 3 || cells[0] != "name" || cells[1] != "budget")
        throw ParseError(where, "header must be name,budget,v_1,...,v_n");
      for (std::size_t k = 2; k < cells.size(); ++k) {
        if (cells[k] != "v_" + std::to_string(k - 1)) throw ParseError(where, "expected column v_" + std::to_string(k - 1));
      }
      columns = cells.size();
      continue;
    }
    if (cells.size() != columns)
      throw ParseError(where, "expected " + std::to_string(columns) + " fields, got " + std::to_string(cells.size()));
    DocumentEntry e;
    e.name = cells[0];
    auto quantity = [&](const std::string& text) {
      Quantity q;
      try {
        q.value = parse_rational(text);
      } catch (const std::exception&) {
        throw ParseError(where, "bad number \"" + text + "\"");
      }
      q.written_as_string = text.find('/') != std::string::npos;
      return q;
    };
    e.budget = quantity(cells[1]);
    for (std::size_t k = 2; k < cells.size(); ++k) e.values.push_back(quantity(cells[k]));
    out.push_back(std::move(e));
  }
  if (columns == 0) throw ParseError("line 1", "missing header");
  return out;
}

template <class T>
std::vector<Violation> validate_bids(const BidCollection<T>& collection) {
  std::vector<Violation> out;
  for (std::size_t k = 0; k < collection.bids.size(); ++k) {
    const auto& bid = collection.bids[k];
    const std::string entity = "bid[" + std::to_string(k) + "]";
    if (bid.owner.empty()) out.push_back({entity, "owner label must be nonempty"});
    if (bid.budget < T(0)) out.push_back({entity, "budget must be nonnegative"});
    if (bid.vector.size() != collection.goods.size())
      out.push_back({entity, "vector has " + std::to_string(bid.vector.size()) + " entries, expected " +
                                 std::to_string(collection.goods.size())});
    bool positive = false;
    for (const auto& b : bid.vector) {
      if (b < T(0)) out.push_back({entity, "limit values must be nonnegative"});
      if (b > T(0)) positive = true;
    }
    if (!positive && bid.budget != T(0))
      out.push_back({entity, "a bid with budget needs at least one positive limit value"});
  }
  return out;
}

template <class T>
FlatMarket<T> flatten_bids(const BidCollection<T>& collection) {
  auto violations = validate_bids(collection);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  FlatMarket<T> flat;
  flat.market.goods = collection.goods;
  std::map<std::string, std::size_t> owner_index;
  for (std::size_t k = 0; k < collection.bids.size(); ++k) {
    const auto& bid = collection.bids[k];
    auto [it, inserted] = owner_index.try_emplace(bid.owner, flat.owners.size());
    if (inserted) flat.owners.push_back(bid.owner);
    if (bid.budget == T(0)) {
      flat.warnings.push_back("bid " + std::to_string(k) + " of owner \"" + bid.owner +
                              "\" has zero budget and was dropped");
      continue;
    }
    flat.market.buyers.push_back({bid.owner + "#" + std::to_string(k), bid.vector, bid.budget});
    flat.owner_of_buyer.push_back(it->second);
    flat.bid_of_buyer.push_back(k);
  }
  require_valid(flat.market);
  return flat;
}

template <class T>
OwnerAllocation<T> reaggregate(const FlatMarket<T>& flat, const PriceVector<T>& prices,
                               const Allocation<T>& allocation) {
  if (allocation.size() != flat.owner_of_buyer.size())
    throw PreconditionError("allocation is not indexed by the flattened buyers");
  OwnerAllocation<T> out;
  out.owners = flat.owners;
  out.bundles.assign(flat.owners.size(), Bundle<T>(prices.size(), T(0)));
  out.spend.assign(flat.owners.size(), T(0));
  for (std::size_t i = 0; i < allocation.size(); ++i) {
    const std::size_t owner = flat.owner_of_buyer[i];
    for (std::size_t j = 0; j < prices.size(); ++j) out.bundles[owner][j] += allocation[i][j];
    out.spend[owner] += dot(prices, allocation[i]);
  }
  return out;
}

template <class T>
BidCollection<T> to_bid_collection(const MarketDocument& document) {
  BidCollection<T> c;
  for (const auto& g : document.goods) c.goods.push_back({g.name, as<T>(g.supply)});
  for (const auto& e : document.entries) {
    ArcticBid<T> bid{e.name, {}, as<T>(e.budget)};
    for (const auto& v : e.values) bid.vector.push_back(as<T>(v));
    c.bids.push_back(std::move(bid));
  }
  return c;
}

template <class T>
FlatMarket<T> to_flat_market(const MarketDocument& document) {
  if (document.kind == DocumentKind::arctic) return flatten_bids(to_bid_collection<T>(document));
  FlatMarket<T> flat;
  for (const auto& g : document.goods) flat.market.goods.push_back({g.name, as<T>(g.supply)});
  for (std::size_t i = 0; i < document.entries.size(); ++i) {
    const auto& e = document.entries[i];
    Buyer<T> b{e.name, {}, as<T>(e.budget)};
    for (const auto& v : e.values) b.values.push_back(as<T>(v));
    flat.market.buyers.push_back(std::move(b));
    flat.owners.push_back(e.name);
    flat.owner_of_buyer.push_back(i);
    flat.bid_of_buyer.push_back(i);
  }
  require_valid(flat.market);
  return flat;
}

#define QFM_INSTANTIATE(T)                                                                              \
  template std::vector<Violation> validate_bids<T>(const BidCollection<T>&);                            \
  template FlatMarket<T> flatten_bids<T>(const BidCollection<T>&);                                      \
  template OwnerAllocation<T> reaggregate<T>(const FlatMarket<T>&, const PriceVector<T>&,               \
                                             const Allocation<T>&);                                     \
  template BidCollection<T> to_bid_collection<T>(const MarketDocument&);                                \
  template FlatMarket<T> to_flat_market<T>(const MarketDocument&);

QFM_INSTANTIATE(double)
QFM_INSTANTIATE(Rational)

#undef QFM_INSTANTIATE

}  // namespace qfm
