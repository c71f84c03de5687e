#pragma once
// Closed-form core of the two-stage auction: day-ahead allocation from the
// critical fractiles, real-time shortfall assignment, the expected recourse
// cost V and its gradient, expected shortfalls, Myerson payments, welfare,
// and single-draw settlement.

#include <optional>
#include <vector>

#include "windauction/bids.hpp"
#include "windauction/dist.hpp"

namespace windauction::mechanism {

using bids::BidProfile;
using dist::GenerationDistribution;

struct Allocation {
  // 1-based, slot 0 unused. phi has N + 2 slots: phi[i] = x[i] + .. + x[N]
  // and phi[N+1] = 0. phi is built once with the allocation; hot loops read
  // it instead of re-summing.
  std::vector<double> x;
  std::vector<double> phi;

  int size() const { return static_cast<int>(x.size()) - 1; }
  double total() const { return phi[1]; }
  // q is a plain 0-based quantity vector, q[i] >= 0.
  static Allocation from_quantities(const std::vector<double>& q);
};

struct Shortfall {
  std::vector<double> y;  // 1-based
  double w = 0.0;
  // Pivot: y_i = x_i below it, y_k = phi_k - w at it, 0 above it. Empty when
  // generation covers the contract (no shortfall).
  std::optional<int> k;
};

struct PaymentSchedule {
  // 1-based. per_unit and discount_pct hold NaN where x_i (resp. c_i x_i)
  // is zero; emitters render those as empty fields.
  std::vector<double> p;             // $
  std::vector<double> per_unit;      // p_i / x_i, $/kWh
  std::vector<double> discount_pct;  // 100 (c_i x_i - p_i) / (c_i x_i)
  double total() const;
};

struct SettlementOutcome {
  double w = 0.0;
  Shortfall shortfall;
  std::vector<double> delivered;     // x_i - y_i, kW
  std::vector<double> compensation;  // pi_i y_i, $
  std::vector<double> net_payment;   // p_i - pi_i y_i, $
  double generator_payoff = 0.0;     // sum p - sum pi y, $
};

// x_i = F^{-1}(rho2_i) - F^{-1}(rho1_i); built so the suffix sums satisfy
// phi_i = F^{-1}(rho2_i) exactly. Components are strictly positive for any
// valid profile over a strictly increasing CDF.
Allocation optimal_allocation(const BidProfile&, const GenerationDistribution&);

// The index k with phi_{k+1} <= w < phi_k; N when w <= x_N (the boundary
// w = x_N resolves to N); empty when w >= total.
std::optional<int> shortfall_index(const Allocation&, double w);

// Cheapest-penalty-first recourse: y = (x_1, .., x_{k-1}, phi_k - w, 0, ..).
Shortfall optimal_shortfall(const Allocation&, double w);

// sum pi_i y_i for the optimal recourse at w.
double stage2_cost(const BidProfile&, const Allocation&, double w);

// V(x) = E[stage-2 cost], evaluated from F and G. Terms are grouped per LSE
// as pi_i E[y_i] to keep roundoff additive rather than cancelling.
double expected_value_v(const BidProfile&, const Allocation&,
                        const GenerationDistribution&);

// Gradient of h(x) = -c.x + V(x):
// dh/dx_i = -c_i + sum_{j<=i} (pi_j - pi_{j-1}) F(phi_j). 1-based.
std::vector<double> stage1_gradient(const BidProfile&, const Allocation&,
                                    const GenerationDistribution&);

// E[y_i] = x_i F(phi_{i+1}) + phi_i (F(phi_i) - F(phi_{i+1}))
//          - (G(phi_i) - G(phi_{i+1})). 1-based.
std::vector<double> expected_shortfall(const Allocation&,
                                       const GenerationDistribution&);

// Truth-inducing payments. Writing Gq = G(F^{-1}(.)):
//   i < N: p_i = c_i x_i + (pi_{i+1} - pi_{i-1}) Gq(rho_cvx_i)
//                - (pi_{i+1} - pi_i) Gq(rho1_i) - (pi_i - pi_{i-1}) Gq(rho2_i)
//   i = N: p_N = c_N x_N - (pi_N - pi_{N-1}) Gq(rho2_N)
PaymentSchedule myerson_payments(const BidProfile&,
                                 const GenerationDistribution&);

// sum c_i x_i - V(x); maximal at the optimal allocation.
double welfare(const BidProfile&, const Allocation&,
               const GenerationDistribution&);

SettlementOutcome settle(const BidProfile&, const Allocation&,
                         const PaymentSchedule&, double w);

}  // namespace windauction::mechanism
