#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "qfm/market.hpp"

namespace qfm {

// Solution of the quasi-linear Eisenberg-Gale program
//
//   max  sum_i (beta_i log u_i - delta_i)
//   s.t. u_i <= v_i . x_i + delta_i,  sum_i x_ij <= s_j,  x, delta >= 0,
//
// whose supply-constraint duals are the equilibrium prices.
struct EGSolution {
  Allocation<double> allocation;
  std::vector<double> leftover;   // delta_i, unspent money
  std::vector<double> utilities;  // u_i = v_i . x_i + delta_i
  PriceVector<double> prices;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double duality_gap = 0.0;
  std::size_t iterations = 0;  // Newton steps
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, EGSolution last)
      : std::runtime_error(what), last_(std::move(last)) {}
  const EGSolution& last_iterate() const { return last_; }

 private:
  EGSolution last_;
};

inline constexpr std::size_t kDefaultIterationBudget = 1'000'000;

// Interior-point (log-barrier Newton) method on the dual program over
// log-prices q_j and per-buyer slack t_i = log(max bang-per-buck, 1):
//
//   min  sum_j s_j e^{q_j} + sum_i beta_i t_i
//   s.t. t_i >= 0,  t_i + q_j >= log v_ij  (v_ij > 0),
//
// Multipliers of the second family are the money flows beta_i -> good j and
// of the first the leftover money, so the primal EG solution is read off the
// central path. Goods with zero supply are priced afterwards at the least
// price no buyer strictly prefers.
EGSolution solve_eg(const Market& market, double tol,
                    std::size_t max_iterations = kDefaultIterationBudget);

// EG objective and the dual bound at the given point; used to audit any
// candidate solution independently of how it was produced.
double eg_primal_objective(const Market& market, const Allocation<double>& allocation,
                           const std::vector<double>& leftover);
double eg_dual_objective(const Market& market, const PriceVector<double>& prices);

}  // namespace qfm
