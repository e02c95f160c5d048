#pragma once

// End-to-end computation of the unique competitive-equilibrium prices. Two
// independent routes, the convex program and the lattice descent, must agree;
// the agreed prices are then snapped to the exact rational point determined
// by their tie structure and verified by an exact clearing check.

#include <optional>
#include <stdexcept>

#include "qfm/eg_solver.hpp"
#include "qfm/feasibility.hpp"
#include "qfm/lattice_descent.hpp"
#include "qfm/market.hpp"
#include "qfm/metrics.hpp"

namespace qfm {

// Agreement accepted between the routes when neither exact confirmation nor
// 10 * tol is available.
inline constexpr double kDegenerateAgreement = 1e-5;

struct SolveOptions {
  double tol = kDefaultTolerance;
  std::size_t max_iterations = kDefaultIterationBudget;
  bool snap = true;  // attempt exact recovery of p*
};

template <class T>
struct EquilibriumResult {
  PriceVector<T> p_star;
  Allocation<T> allocation;
  T revenue{};
  T welfare{};
  // max_j |p_eg_j - p_descent_j| / max(1, p_descent_j)
  double method_agreement = 0.0;
  // Set when method_agreement exceeds 10 * tol but both routes snap to the
  // same exactly clearing price.
  bool agreement_by_snap = false;
  bool snapped = false;  // p_star verified exactly clearing in rationals
  FeasibilityCertificate<T> clearing;
  EfficiencyCertificate<T> efficiency;
  EGSolution eg;
  DescentTrace<double> descent;
};

class MethodDisagreement : public std::runtime_error {
 public:
  MethodDisagreement(const std::string& what, double discrepancy, EGSolution eg,
                     DescentTrace<double> descent)
      : std::runtime_error(what), discrepancy_(discrepancy), eg_(std::move(eg)),
        descent_(std::move(descent)) {}
  double discrepancy() const { return discrepancy_; }
  const EGSolution& eg() const { return eg_; }
  const DescentTrace<double>& descent() const { return descent_; }

 private:
  double discrepancy_;
  EGSolution eg_;
  DescentTrace<double> descent_;
};

// Floating-point pipeline. Routes agreeing within 10 * tol pass; beyond that
// they pass when both snap to the same exact price, or, failing that, when
// they agree within kDegenerateAgreement. Otherwise throws MethodDisagreement.
EquilibriumResult<double> solve(const Market& market, const SolveOptions& options = {});

// Same routes on the rounded market, then exact snapping against `market`.
// When snapping fails the descent price is used and `snapped` stays false.
EquilibriumResult<Rational> solve_exact(const ExactMarket& market, const SolveOptions& options = {});

// Candidate enumeration: for a range of tie tolerances, read the
// bang-per-buck tie structure at `approx`, solve it exactly (ties fix price
// ratios inside a component; a buyer tied with money or the component's
// budget balance fixes the scale) and return the first candidate that
// passes an exact clearing check.
std::optional<PriceVector<Rational>> snap_to_equilibrium(const ExactMarket& market,
                                                         const PriceVector<double>& approx);

}  // namespace qfm
