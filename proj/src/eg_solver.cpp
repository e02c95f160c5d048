#include "qfm/eg_solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace qfm {

namespace {

struct Arc {
  std::size_t buyer;  // index into active buyers
  std::size_t good;   // index into active goods
  double log_value;
};

// Dual program restricted to buyers with money and goods with supply.
// Variable layout: q (one per active good), then t (one per active buyer).
class BarrierProblem {
 public:
  BarrierProblem(const Market& market, std::vector<std::size_t> buyers, std::vector<std::size_t> goods)
      : buyers_(std::move(buyers)), goods_(std::move(goods)) {
    for (std::size_t a = 0; a < buyers_.size(); ++a) {
      const auto& b = market.buyers[buyers_[a]];
      budget_.push_back(b.budget);
      for (std::size_t k = 0; k < goods_.size(); ++k) {
        const double v = b.values[goods_[k]];
        if (v > 0.0) arcs_.push_back({a, k, std::log(v)});
      }
    }
    for (std::size_t g : goods_) supply_.push_back(market.goods[g].supply);
  }

  std::size_t num_goods() const { return goods_.size(); }
  std::size_t num_buyers() const { return buyers_.size(); }
  std::size_t size() const { return goods_.size() + buyers_.size(); }
  std::size_t num_constraints() const { return buyers_.size() + arcs_.size(); }
  const std::vector<Arc>& arcs() const { return arcs_; }
  const std::vector<std::size_t>& buyers() const { return buyers_; }
  const std::vector<std::size_t>& goods() const { return goods_; }

  double slack(const Eigen::VectorXd& z, const Arc& arc) const {
    return z[num_goods() + arc.buyer] + z[arc.good] - arc.log_value;
  }

  bool strictly_feasible(const Eigen::VectorXd& z) const {
    for (std::size_t a = 0; a < num_buyers(); ++a)
      if (!(z[num_goods() + a] > 0.0)) return false;
    for (const auto& arc : arcs_)
      if (!(slack(z, arc) > 0.0)) return false;
    return true;
  }

  double objective(const Eigen::VectorXd& z) const {
    double f = 0.0;
    for (std::size_t k = 0; k < num_goods(); ++k) f += supply_[k] * std::exp(z[k]);
    for (std::size_t a = 0; a < num_buyers(); ++a) f += budget_[a] * z[num_goods() + a];
    return f;
  }

  double barrier_value(const Eigen::VectorXd& z, double tau) const {
    double phi = tau * objective(z);
    for (std::size_t a = 0; a < num_buyers(); ++a) phi -= std::log(z[num_goods() + a]);
    for (const auto& arc : arcs_) phi -= std::log(slack(z, arc));
    return phi;
  }

  void derivatives(const Eigen::VectorXd& z, double tau, Eigen::VectorXd& grad,
                   Eigen::MatrixXd& hess) const {
    const std::size_t n = num_goods();
    grad.setZero(size());
    hess.setZero(size(), size());
    for (std::size_t k = 0; k < n; ++k) {
      const double e = tau * supply_[k] * std::exp(z[k]);
      grad[k] += e;
      hess(k, k) += e;
    }
    for (std::size_t a = 0; a < num_buyers(); ++a) {
      const double t = z[n + a];
      grad[n + a] += tau * budget_[a] - 1.0 / t;
      hess(n + a, n + a) += 1.0 / (t * t);
    }
    for (const auto& arc : arcs_) {
      const double g = slack(z, arc);
      const double inv = 1.0 / g;
      const double inv2 = inv * inv;
      const std::size_t qi = arc.good;
      const std::size_t ti = n + arc.buyer;
      grad[qi] -= inv;
      grad[ti] -= inv;
      hess(qi, qi) += inv2;
      hess(ti, ti) += inv2;
      hess(qi, ti) += inv2;
      hess(ti, qi) += inv2;
    }
  }

 private:
  std::vector<std::size_t> buyers_;
  std::vector<std::size_t> goods_;
  std::vector<double> budget_;
  std::vector<double> supply_;
  std::vector<Arc> arcs_;
};

constexpr double kFlexibleSlack = 1e-6;

// Money flows read off the multipliers at a central point. Late in the
// schedule the slack of an active arc is a difference of O(1) numbers far
// larger than itself, so the raw flows carry relative error ~ 1e-16 tau.
// Budgets net of leftover (t is a variable, so leftover is accurate) and
// supply values p_j s_j are both known precisely; alternating proportional
// scaling restores them. A final pass keeps supply and budgets feasible.
void recover_primal(const Market& market, const BarrierProblem& problem, const Eigen::VectorXd& z,
                    double tau, EGSolution& out) {
  const std::size_t n = problem.num_goods();
  const std::size_t m = market.num_buyers();
  const std::size_t active_buyers = problem.num_buyers();
  std::vector<double> leftover(active_buyers);
  for (std::size_t a = 0; a < active_buyers; ++a) {
    const double budget = market.buyers[problem.buyers()[a]].budget;
    leftover[a] = std::min(budget, 1.0 / (tau * z[n + a]));
  }
  Eigen::MatrixXd money = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(active_buyers), static_cast<Eigen::Index>(n));
  for (const auto& arc : problem.arcs()) money(arc.buyer, arc.good) = 1.0 / (tau * problem.slack(z, arc));
  std::vector<double> value(n);
  for (std::size_t k = 0; k < n; ++k) value[k] = std::exp(z[k]) * market.goods[problem.goods()[k]].supply;

  std::vector<double> row_target(active_buyers);
  std::vector<bool> flexible(active_buyers);
  for (std::size_t a = 0; a < active_buyers; ++a) {
    const double budget = market.buyers[problem.buyers()[a]].budget;
    // Money sits in the bang-per-buck set; both slacks of the split between
    // goods and leftover vanish and 1 / (tau t) is unreliable, so the row is
    // left free below its budget.
    flexible[a] = z[n + a] < kFlexibleSlack;
    row_target[a] = flexible[a] ? budget : budget - leftover[a];
  }

  // Newton's method on the scaling equations: money_ak *= exp(alpha_a +
  // gamma_k), linearised. Proportional fitting converges too slowly when a
  // good is split between buyers in very unequal shares.
  std::vector<Eigen::Index> row_slot(active_buyers, -1);
  Eigen::Index strict_rows = 0;
  for (std::size_t a = 0; a < active_buyers; ++a)
    if (!flexible[a]) row_slot[a] = strict_rows++;
  const auto cols = static_cast<Eigen::Index>(n);
  for (int round = 0; round < 50; ++round) {
    Eigen::VectorXd residual(strict_rows + cols);
    double worst = 0.0;
    for (std::size_t a = 0; a < active_buyers; ++a) {
      if (flexible[a]) continue;
      const double r = row_target[a] - money.row(static_cast<Eigen::Index>(a)).sum();
      residual[row_slot[a]] = r;
      worst = std::max(worst, std::abs(r));
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      residual[strict_rows + k] = value[static_cast<std::size_t>(k)] - money.col(k).sum();
      worst = std::max(worst, std::abs(residual[strict_rows + k]));
    }
    if (worst <= 1e-15) break;
    Eigen::MatrixXd jacobian = Eigen::MatrixXd::Zero(strict_rows + cols, strict_rows + cols);
    for (std::size_t a = 0; a < active_buyers; ++a) {
      const Eigen::Index r = row_slot[a];
      for (Eigen::Index k = 0; k < cols; ++k) {
        const double f = money(static_cast<Eigen::Index>(a), k);
        jacobian(strict_rows + k, strict_rows + k) += f;
        if (r < 0) continue;
        jacobian(r, r) += f;
        jacobian(r, strict_rows + k) += f;
        jacobian(strict_rows + k, r) += f;
      }
    }
    const Eigen::VectorXd shift = jacobian.completeOrthogonalDecomposition().solve(residual);
    if (!shift.allFinite()) break;
    for (std::size_t a = 0; a < active_buyers; ++a) {
      const double alpha = row_slot[a] < 0 ? 0.0 : shift[row_slot[a]];
      for (Eigen::Index k = 0; k < cols; ++k)
        money(static_cast<Eigen::Index>(a), k) *= std::exp(std::clamp(alpha + shift[strict_rows + k], -1.0, 1.0));
    }
  }

  auto scale_rows = [&] {
    for (std::size_t a = 0; a < active_buyers; ++a) {
      const double row = money.row(a).sum();
      if (row > row_target[a]) money.row(a) *= row_target[a] / row;
    }
  };
  auto scale_columns = [&] {
    for (std::size_t k = 0; k < n; ++k) {
      const double column = money.col(k).sum();
      if (column > value[k]) money.col(k) *= value[k] / column;
    }
  };
  scale_rows();
  scale_columns();

  out.allocation.assign(m, Bundle<double>(market.num_goods(), 0.0));
  out.leftover.assign(m, 0.0);
  for (std::size_t a = 0; a < active_buyers; ++a) {
    const std::size_t buyer = problem.buyers()[a];
    double paid = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t good = problem.goods()[k];
      out.allocation[buyer][good] = money(a, k) / out.prices[good];
      paid += money(a, k);
    }
    out.leftover[buyer] = std::max(0.0, market.buyers[buyer].budget - paid);
  }
  out.utilities.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    out.utilities[i] = dot(market.buyers[i].values, out.allocation[i]) + out.leftover[i];
}

// Least price of a zero-supply good at which no buyer strictly prefers it.
void price_unsupplied_goods(const Market& market, const BarrierProblem& problem,
                            PriceVector<double>& prices) {
  std::vector<bool> active(market.num_goods(), false);
  for (std::size_t g : problem.goods()) active[g] = true;
  std::vector<double> best_ratio(market.num_buyers(), 1.0);
  for (std::size_t i = 0; i < market.num_buyers(); ++i) {
    for (std::size_t j = 0; j < market.num_goods(); ++j) {
      if (active[j]) best_ratio[i] = std::max(best_ratio[i], market.buyers[i].values[j] / prices[j]);
    }
  }
  for (std::size_t j = 0; j < market.num_goods(); ++j) {
    if (active[j]) continue;
    double price = 0.0;
    for (std::size_t i = 0; i < market.num_buyers(); ++i) {
      if (market.buyers[i].budget > 0.0)
        price = std::max(price, market.buyers[i].values[j] / best_ratio[i]);
    }
    prices[j] = price;
  }
}

}  // namespace

double eg_primal_objective(const Market& market, const Allocation<double>& allocation,
                           const std::vector<double>& leftover) {
  double total = 0.0;
  for (std::size_t i = 0; i < market.num_buyers(); ++i) {
    const double budget = market.buyers[i].budget;
    if (budget > 0.0) {
      const double utility = dot(market.buyers[i].values, allocation[i]) + leftover[i];
      if (!(utility > 0.0)) return -std::numeric_limits<double>::infinity();
      total += budget * std::log(utility);
    }
    total -= leftover[i];
  }
  return total;
}

double eg_dual_objective(const Market& market, const PriceVector<double>& prices) {
  double total = 0.0;
  for (std::size_t j = 0; j < market.num_goods(); ++j) total += prices[j] * market.goods[j].supply;
  for (const auto& b : market.buyers) {
    if (!(b.budget > 0.0)) continue;
    double best = 1.0;
    for (std::size_t j = 0; j < prices.size(); ++j) {
      if (prices[j] > 0.0) {
        best = std::max(best, b.values[j] / prices[j]);
      } else if (b.values[j] > 0.0) {
        return std::numeric_limits<double>::infinity();
      }
    }
    total += b.budget * (std::log(b.budget) - 1.0 + std::log(best));
  }
  return total;
}

EGSolution solve_eg(const Market& market, double tol, std::size_t max_iterations) {
  require_valid(market);
  if (!(tol > 0.0)) throw PreconditionError("solve_eg needs a positive tolerance");

  std::vector<std::size_t> buyers;
  std::vector<std::size_t> goods;
  for (std::size_t i = 0; i < market.num_buyers(); ++i)
    if (market.buyers[i].budget > 0.0) buyers.push_back(i);
  for (std::size_t j = 0; j < market.num_goods(); ++j)
    if (market.goods[j].supply > 0.0) goods.push_back(j);
  const BarrierProblem problem(market, buyers, goods);
  const std::size_t n = problem.num_goods();

  // Start strictly inside: t = 1, e^q above every value.
  Eigen::VectorXd z(problem.size());
  for (std::size_t k = 0; k < n; ++k) {
    double top = 0.0;
    for (const auto& b : market.buyers) top = std::max(top, b.values[goods[k]]);
    z[k] = std::log(top + 1.0);
  }
  for (std::size_t a = 0; a < problem.num_buyers(); ++a) z[n + a] = 1.0;

  const double constraints = static_cast<double>(std::max<std::size_t>(problem.num_constraints(), 1));
  double tau = constraints / (1.0 + std::abs(problem.objective(z)));
  constexpr double kGrowth = 8.0;
  constexpr double kCentered = 1e-9;
  constexpr double kRoundoffFloor = 1e-6;
  constexpr double kPolishTarget = 1e-13;

  EGSolution out;
  std::optional<EGSolution> best;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  auto snapshot = [&] {
    out.prices.assign(market.num_goods(), 0.0);
    for (std::size_t k = 0; k < n; ++k) out.prices[goods[k]] = std::exp(z[k]);
    price_unsupplied_goods(market, problem, out.prices);
    recover_primal(market, problem, z, tau, out);
    out.primal_objective = eg_primal_objective(market, out.allocation, out.leftover);
    out.dual_objective = eg_dual_objective(market, out.prices);
    out.duality_gap = std::max(0.0, out.dual_objective - out.primal_objective);
  };

  while (true) {
    // Centering by damped Newton.
    double previous_decrement = std::numeric_limits<double>::infinity();
    bool centered = false;
    for (int inner = 0; inner < 200; ++inner) {
      if (out.iterations >= max_iterations) {
        snapshot();
        throw ConvergenceError("solve_eg: iteration budget exhausted", out);
      }
      problem.derivatives(z, tau, grad, hess);
      // Jacobi scaling: curvatures of active and inactive constraints differ
      // by many orders of magnitude late in the barrier schedule.
      const Eigen::VectorXd scale = hess.diagonal().cwiseSqrt().cwiseInverse();
      const Eigen::MatrixXd scaled = scale.asDiagonal() * hess * scale.asDiagonal();
      Eigen::VectorXd step = scale.cwiseProduct(scaled.ldlt().solve(-scale.cwiseProduct(grad)));
      if (!step.allFinite()) break;
      const double decrement = -grad.dot(step);
      // Newton decrements square near the center; once they stop shrinking
      // the iterate sits at the roundoff floor.
      if (decrement / 2.0 <= kCentered || (decrement < kRoundoffFloor && decrement > 0.5 * previous_decrement)) {
        centered = true;
        break;
      }
      previous_decrement = decrement;
      Eigen::VectorXd trial = z + step;
      // Inside the quadratic region of a self-concordant barrier the full
      // step is safe; comparing barrier values there only measures roundoff.
      if (decrement < 0.25 && problem.strictly_feasible(trial)) {
        ++out.iterations;
        z = trial;
        continue;
      }
      const double phi = problem.barrier_value(z, tau);
      double length = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls, length *= 0.5) {
        trial = z + length * step;
        if (!problem.strictly_feasible(trial)) continue;
        if (problem.barrier_value(trial, tau) <= phi - 0.25 * length * decrement) {
          accepted = true;
          break;
        }
      }
      ++out.iterations;
      if (!accepted) break;
      z = trial;
    }
    // Past the gap target, prices on degenerate instances (a buyer tied at
    // price = value but allocated nothing) still move like sqrt(1 / tau),
    // so tau keeps growing while centering stays healthy.
    if (constraints / tau <= tol) {
      snapshot();
      if (centered && out.duality_gap <= tol) best = out;
      if (best && (!centered || out.duality_gap > tol || constraints / tau <= kPolishTarget)) return *best;
    }
    if (!(tau < 1e300)) {
      snapshot();
      throw ConvergenceError("solve_eg: barrier parameter overflow", out);
    }
    tau *= kGrowth;
  }
}

}  // namespace qfm
