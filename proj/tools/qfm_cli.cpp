// qfm: equilibrium prices, price checks, region scans, monopoly comparisons
// and the property suite from the command line.
//
// Exit codes: 0 success, 1 input error, 2 solver failure (the two routes
// disagree, the convex route does not converge, or a property fails),
// 3 internal invariant violation.

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "report.hpp"

namespace {

using namespace qfm;
using cli::Json;

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kSolverFailure = 2;
constexpr int kInternalError = 3;

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OutputOptions {
  std::string out;  // JSON report path
  bool json = false;
  bool no_timestamp = false;
};

struct LoadedInput {
  MarketDocument document;
  cli::InputInfo info;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

LoadedInput load_input(const std::string& path, const std::string& mode) {
  const std::string bytes = read_file(path);
  LoadedInput input;
  try {
    input.document = parse_document(bytes);
  } catch (const ParseError& e) {
    // what() is "<pointer>: <message>"; the pointer is empty at the root.
    const std::string message = std::string(e.what()).substr(e.path().size() + 2);
    throw InputError(path + (e.path().empty() ? "" : " at " + e.path()) + ": " + message);
  }
  input.info.path = path;
  input.info.sha256 = cli::sha256_hex(bytes);
  input.info.kind = input.document.kind == DocumentKind::arctic ? "arctic" : "market";
  if (!mode.empty()) input.info.mode = mode;
  else input.info.mode = input.document.has_rational_strings() ? "exact" : "float";
  return input;
}

bool exact_mode(const LoadedInput& input) { return input.info.mode == "exact"; }

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) parts.push_back(part);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

Rational parse_number(const std::string& text, const std::string& what) {
  try {
    return parse_rational(text);
  } catch (const std::invalid_argument& e) {
    throw InputError(what + ": " + e.what());
  }
}

template <class T>
T convert(const Rational& value) {
  if constexpr (is_exact_v<T>) return value;
  else return to_double(value);
}

template <class T>
T tolerance(double tol) {
  // Exact mode decides ties exactly.
  if constexpr (is_exact_v<T>) return T(0);
  else return tol;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm parts{};
  gmtime_r(&now, &parts);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &parts);
  return buffer;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
}

template <class Clock>
void emit(Json report, const OutputOptions& output, typename Clock::time_point started) {
  if (!output.no_timestamp) {
    const std::chrono::duration<double, std::milli> elapsed = Clock::now() - started;
    report["timing"] = Json{{"timestamp", utc_timestamp()}, {"elapsed_ms", cli::number_json(elapsed.count())}};
  }
  const std::string json = report.dump(2) + "\n";
  if (!output.out.empty()) write_text(output.out, json);
  std::cout << (output.json ? json : cli::render_table(report));
}

using Clock = std::chrono::steady_clock;

// --- solve ---------------------------------------------------------------

template <class T>
Json solve_with(const LoadedInput& input, double tol) {
  const auto flat = to_flat_market<T>(input.document);
  SolveOptions options;
  options.tol = tol;
  if constexpr (is_exact_v<T>) return cli::solve_report(input.info, flat, solve_exact(flat.market, options), tol);
  else return cli::solve_report(input.info, flat, solve(flat.market, options), tol);
}

struct SolveArgs {
  std::string path;
  std::string mode;
  double tol = kDefaultTolerance;
  OutputOptions output;
};

int run_solve(const SolveArgs& args) {
  const auto started = Clock::now();
  const auto input = load_input(args.path, args.mode);
  Json report = exact_mode(input) ? solve_with<Rational>(input, args.tol) : solve_with<double>(input, args.tol);
  emit<Clock>(std::move(report), args.output, started);
  return kOk;
}

// --- check-price ---------------------------------------------------------

struct CheckPriceArgs {
  std::string path;
  std::string mode;
  std::string price;
  double tol = kDefaultTolerance;
  OutputOptions output;
};

template <class T>
Json check_price_with(const LoadedInput& input, const CheckPriceArgs& args) {
  const auto flat = to_flat_market<T>(input.document);
  const auto parts = split(args.price, ',');
  if (parts.size() != flat.market.num_goods()) {
    throw InputError("--price has " + std::to_string(parts.size()) + " entries; the market has " +
                     std::to_string(flat.market.num_goods()) + " goods");
  }
  PriceVector<T> prices;
  for (const auto& part : parts) prices.push_back(convert<T>(parse_number(part, "--price")));
  const T tol = tolerance<T>(args.tol);
  const auto feasible = check_feasible(flat.market, prices, tol);
  const auto clearing = check_clearing(flat.market, prices, tol);
  return cli::check_price_report(input.info, flat, prices, feasible, clearing);
}

int run_check_price(const CheckPriceArgs& args) {
  const auto started = Clock::now();
  const auto input = load_input(args.path, args.mode);
  Json report = exact_mode(input) ? check_price_with<Rational>(input, args) : check_price_with<double>(input, args);
  emit<Clock>(std::move(report), args.output, started);
  return kOk;
}

// --- region --------------------------------------------------------------

struct RegionArgs {
  std::string path;
  std::string mode;
  std::string bounds;
  std::size_t resolution = 101;
  std::string grid_csv;
  std::string boundary_csv;
  double tol = kDefaultTolerance;
  unsigned threads = 0;
  OutputOptions output;
};

std::vector<PriceWindow> parse_bounds(const std::string& text, std::size_t goods) {
  std::vector<PriceWindow> windows;
  for (const auto& part : split(text, ',')) {
    const auto ends = split(part, ':');
    if (ends.size() != 2) throw InputError("--bounds expects lo:hi or one lo:hi per good, got '" + part + "'");
    windows.push_back({parse_number(ends[0], "--bounds"), parse_number(ends[1], "--bounds")});
  }
  if (windows.size() == 1) windows.resize(goods, windows.front());
  if (windows.size() != goods) {
    throw InputError("--bounds has " + std::to_string(windows.size()) + " windows; the market has " +
                     std::to_string(goods) + " goods");
  }
  return windows;
}

void require_point_cap(std::size_t resolution, std::size_t goods) {
  double points = 1.0;
  for (std::size_t j = 0; j < goods; ++j) points *= static_cast<double>(resolution);
  if (points > static_cast<double>(kMaxGridPoints)) {
    std::ostringstream what;
    what << "grid of " << resolution << "^" << goods << " points exceeds the cap of " << kMaxGridPoints
         << "; lower --resolution to at most "
         << static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(kMaxGridPoints), 1.0 / goods) + 1e-9));
    throw InputError(what.str());
  }
}

template <class T>
Json region_with(const LoadedInput& input, const RegionArgs& args) {
  const auto flat = to_flat_market<T>(input.document);
  const std::size_t n = flat.market.num_goods();
  if (!args.boundary_csv.empty() && n != 2)
    throw InputError("boundary output is unsupported for " + std::to_string(n) + " goods; it needs exactly 2");
  if (args.resolution < 2) throw InputError("--resolution must be at least 2");
  require_point_cap(args.resolution, n);
  const auto bounds = parse_bounds(args.bounds, n);
  const auto grid = grid_scan(flat.market, bounds, args.resolution, tolerance<T>(args.tol), args.threads);
  if (!args.grid_csv.empty()) {
    std::ostringstream csv;
    write_grid_csv(csv, grid);
    write_text(args.grid_csv, csv.str());
  }
  std::size_t segments = 0;
  if (n == 2) {
    const auto boundary = region_boundary_2d(grid);
    segments = boundary.size();
    if (!args.boundary_csv.empty()) {
      std::ostringstream csv;
      write_boundary_csv(csv, boundary);
      write_text(args.boundary_csv, csv.str());
    }
  }
  return cli::region_report(input.info, flat, grid, segments);
}

int run_region(const RegionArgs& args) {
  const auto started = Clock::now();
  const auto input = load_input(args.path, args.mode);
  Json report = exact_mode(input) ? region_with<Rational>(input, args) : region_with<double>(input, args);
  emit<Clock>(std::move(report), args.output, started);
  return kOk;
}

// --- monopoly ------------------------------------------------------------

struct MonopolyArgs {
  std::string valuation;
  std::string budget = "inf";
  double supply = 0.0;
  double tol = 1e-10;
  std::vector<double> probes;
  OutputOptions output;
};

int run_monopoly(const MonopolyArgs& args) {
  const auto started = Clock::now();
  cli::MonopolyRun run;
  run.valuation = args.valuation;
  try {
    run.instance.valuation = parse_valuation(args.valuation);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("--valuation: ") + e.what());
  }
  run.instance.supply = args.supply;
  run.instance.budget = args.budget == "inf" ? kInfiniteBudget : to_double(parse_number(args.budget, "--budget"));
  if (!(run.instance.supply > 0.0) || !std::isfinite(run.instance.supply))
    throw InputError("--supply must be positive and finite");
  if (!(run.instance.budget > 0.0)) throw InputError("--budget must be positive");
  for (double p : args.probes)
    if (!(p > 0.0) || !std::isfinite(p)) throw InputError("--price must be positive and finite");
  run.tol = args.tol;
  run.probe_prices = args.probes;
  emit<Clock>(cli::monopoly_report(run), args.output, started);
  return kOk;
}

// --- proptest ------------------------------------------------------------

struct ProptestArgs {
  PropertyOptions options;
  OutputOptions output;
};

int run_proptest(const ProptestArgs& args) {
  const auto started = Clock::now();
  const auto result = run_property_suite(args.options);
  Json report = cli::proptest_report(args.options, result);
  const bool passed = report["passed"].get<bool>();
  emit<Clock>(std::move(report), args.output, started);
  return passed ? kOk : kSolverFailure;
}

void add_output_flags(CLI::App& command, OutputOptions& output, bool out_is_report = true) {
  if (out_is_report) command.add_option("--out", output.out, "write the JSON report to this file");
  command.add_flag("--json", output.json, "print the JSON report instead of a table");
  command.add_flag("--no-timestamp", output.no_timestamp, "omit timing so reports are byte-identical");
}

void add_mode_flags(CLI::App& command, std::string& mode, double& tol) {
  command.add_option("--mode", mode, "exact or float; default exact when the input has \"p/q\" numbers")
      ->check(CLI::IsMember({"exact", "float"}));
  command.add_option("--tol", tol, "relative tie tolerance for float mode")->capture_default_str();
}

template <class Run>
int guarded(Run&& run) {
  try {
    return run();
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const MethodDisagreement& e) {
    std::cerr << "solver disagreement: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const ConvergenceError& e) {
    std::cerr << "solver failure: " << e.what() << " (duality gap " << e.last_iterate().duality_gap << ")\n";
    return kSolverFailure;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  } catch (const std::invalid_argument& e) {
    // ValidationError and PreconditionError land here.
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Competitive equilibria of budget-constrained markets with linear valuations"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "compute the equilibrium prices and write a report");
  solve_cmd->add_option("path", solve_args.path, "market or arctic JSON document")->required();
  add_mode_flags(*solve_cmd, solve_args.mode, solve_args.tol);
  add_output_flags(*solve_cmd, solve_args.output);

  CheckPriceArgs check_args;
  auto* check_cmd = app.add_subcommand("check-price", "decide feasibility and clearing of a price vector");
  check_cmd->add_option("path", check_args.path, "market or arctic JSON document")->required();
  check_cmd->add_option("--price", check_args.price, "comma-separated prices p1,...,pn (decimals or p/q)")
      ->required();
  add_mode_flags(*check_cmd, check_args.mode, check_args.tol);
  add_output_flags(*check_cmd, check_args.output);

  RegionArgs region_args;
  auto* region_cmd = app.add_subcommand("region", "scan the feasible region on a price grid");
  region_cmd->add_option("path", region_args.path, "market or arctic JSON document")->required();
  region_cmd->add_option("--bounds", region_args.bounds, "lo:hi for every good, or one lo:hi per good")
      ->required();
  region_cmd->add_option("--resolution", region_args.resolution, "grid points per axis")->capture_default_str();
  region_cmd->add_option("--out", region_args.grid_csv, "grid CSV path");
  region_cmd->add_option("--boundary", region_args.boundary_csv, "boundary polyline CSV path (two goods only)");
  region_cmd->add_option("--report", region_args.output.out, "write the JSON report to this file");
  region_cmd->add_option("--threads", region_args.threads, "worker threads, 0 for all cores")
      ->capture_default_str();
  add_mode_flags(*region_cmd, region_args.mode, region_args.tol);
  add_output_flags(*region_cmd, region_args.output, false);

  MonopolyArgs monopoly_args;
  auto* monopoly_cmd = app.add_subcommand("monopoly", "compare clearing and revenue-optimal prices, one good");
  monopoly_cmd->add_option("--valuation", monopoly_args.valuation, "example-a1 or linear:<v>")->required();
  monopoly_cmd->add_option("--budget", monopoly_args.budget, "buyer budget, or inf")->capture_default_str();
  monopoly_cmd->add_option("--supply", monopoly_args.supply, "supply of the good")->required();
  monopoly_cmd->add_option("--tol", monopoly_args.tol, "search tolerance")->capture_default_str();
  monopoly_cmd->add_option("--price", monopoly_args.probes, "also report revenue at these prices");
  add_output_flags(*monopoly_cmd, monopoly_args.output);

  ProptestArgs prop_args;
  auto* prop_cmd = app.add_subcommand("proptest", "run the randomised structural property suite");
  prop_cmd->add_option("--seed", prop_args.options.seed, "random seed")->capture_default_str();
  prop_cmd->add_option("--markets", prop_args.options.markets, "random markets")->capture_default_str();
  prop_cmd->add_option("--pairs", prop_args.options.pairs_per_market, "price pairs per market")
      ->capture_default_str();
  prop_cmd->add_option("--grid-points", prop_args.options.grid_points, "oracle grid points per market")
      ->capture_default_str();
  prop_cmd->add_option("--tol", prop_args.options.tol, "tolerance of the floating routes")->capture_default_str();
  add_output_flags(*prop_cmd, prop_args.output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  if (solve_cmd->parsed()) return guarded([&] { return run_solve(solve_args); });
  if (check_cmd->parsed()) return guarded([&] { return run_check_price(check_args); });
  if (region_cmd->parsed()) return guarded([&] { return run_region(region_args); });
  if (monopoly_cmd->parsed()) return guarded([&] { return run_monopoly(monopoly_args); });
  return guarded([&] { return run_proptest(prop_args); });
}
