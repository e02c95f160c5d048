#pragma once

// Input documents and arctic bids. One JSON loader serves plain markets
// ("kind": "market") and arctic bid collections ("kind": "arctic"); a bid is a
// limit-value vector with a budget, and a collection reduces to a market with
// one pseudo-buyer per bid.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "qfm/market.hpp"

namespace qfm {

enum class DocumentKind { market, arctic };

// A number as written: "p/q" strings stay strings on output.
struct Quantity {
  Rational value;
  bool written_as_string = false;
};

struct DocumentGood {
  std::string name;
  Quantity supply;
};

// A buyer (kind market) or a bid (kind arctic, `name` is the owner).
struct DocumentEntry {
  std::string name;
  std::vector<Quantity> values;
  Quantity budget;
};

struct MarketDocument {
  DocumentKind kind = DocumentKind::market;
  std::vector<DocumentGood> goods;
  std::vector<DocumentEntry> entries;

  bool has_rational_strings() const;
};

// Throws ParseError carrying a JSON pointer to the offending value. A
// nonzero "costs" field is rejected as out of scope.
MarketDocument parse_document(std::string_view json_text);

// Canonical form: keys in schema order, integers as integers, other plain
// numbers in shortest round-trip form, "p/q" strings preserved.
std::string serialize_document(const MarketDocument& document, int indent = 2);

// Reads `path` and parses it.
MarketDocument load_document(const std::string& path);

// Rows "name,budget,v_1,...,v_n" under that header. Throws ParseError with
// "line N" paths.
std::vector<DocumentEntry> parse_entries_csv(std::string_view csv_text);

template <class T>
struct ArcticBid {
  std::string owner;
  std::vector<T> vector;  // per-unit limit values
  T budget{};
};

template <class T>
struct BidCollection {
  std::vector<Good<T>> goods;
  std::vector<ArcticBid<T>> bids;
};

// A market together with the owner of every buyer in it.
template <class T>
struct FlatMarket {
  BasicMarket<T> market;
  std::vector<std::string> owners;          // distinct, first-appearance order
  std::vector<std::size_t> owner_of_buyer;  // index into owners
  std::vector<std::size_t> bid_of_buyer;    // index into the source entries
  std::vector<std::string> warnings;
};

template <class T>
std::vector<Violation> validate_bids(const BidCollection<T>& collection);

// One pseudo-buyer per bid with positive budget; zero-budget bids never
// demand anything and are dropped with a warning. Owners keep their place
// in the owner list even when all their bids are dropped. Throws
// ValidationError for invalid bids.
template <class T>
FlatMarket<T> flatten_bids(const BidCollection<T>& collection);

template <class T>
struct OwnerAllocation {
  std::vector<std::string> owners;
  Allocation<T> bundles;  // Minkowski sum of the owner's bid bundles
  std::vector<T> spend;
};

template <class T>
OwnerAllocation<T> reaggregate(const FlatMarket<T>& flat, const PriceVector<T>& prices,
                               const Allocation<T>& allocation);

template <class T>
BidCollection<T> to_bid_collection(const MarketDocument& document);

// Plain markets map each buyer to itself; arctic documents are flattened.
// Throws ValidationError when the result violates market invariants.
template <class T>
FlatMarket<T> to_flat_market(const MarketDocument& document);

}  // namespace qfm
