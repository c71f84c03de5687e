#pragma once

// Profit accounting, the closed-form profit floor, and the truthfulness
// audit. Everything here consumes a validated BidProfile; per-LSE vectors
// are 1-based like the rest of the library.

#include <cstdint>
#include <limits>
#include <vector>

#include "windauction/bids.hpp"
#include "windauction/dist.hpp"
#include "windauction/mechanism.hpp"

namespace windauction::analysis {

using bids::BidProfile;
using dist::GenerationDistribution;

struct ProfitEstimate {
  double estimate = 0.0;    // payments total minus mean recourse cost
  double stderr_ = 0.0;     // standard error of the recourse-cost mean
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  double payments_total = 0.0;
  double mean_compensation = 0.0;
};

// Monte Carlo profit at the optimal allocation under truthful payments.
// Payments are deterministic; only the compensation term is sampled.
ProfitEstimate expected_profit_mc(const BidProfile& profile,
                                  const GenerationDistribution& d,
                                  std::int64_t n, std::uint64_t seed,
                                  int shards = 1);

struct ConvexityStatus {
  bool ok = true;
  // Smallest grid point where the density decreases; NaN when ok.
  double first_violation = std::numeric_limits<double>::quiet_NaN();
  int grid_points = 0;
};

// The profit floor needs a convex CDF (nondecreasing density) on (0, z).
// Checked on a uniform grid; a strict decrease beyond roundoff fails it.
ConvexityStatus check_cdf_convexity(const GenerationDistribution& d, double z,
                                    int grid_points = 1000);

struct BoundReport {
  std::vector<double> per_lse;  // 1-based contributions, slot 0 unused
  double total = 0.0;
  ConvexityStatus hypothesis;   // convexity of F on (0, x_N*)
};

// Closed-form lower bound on expected profit at the optimal allocation.
// Valid when the hypothesis holds; reported either way so callers can see
// how far outside the guarantee they are. N = 1 gives exactly zero.
BoundReport profit_lower_bound(const BidProfile& profile,
                               const GenerationDistribution& d);

// Sufficient condition for positive expected profit: c_i / pi_i strictly
// decreasing along the penalty ordering.
bool budget_balance_condition(const BidProfile& profile);

struct DsicRow {
  int lse = 0;              // sorted slot, 1-based
  double true_c = 0.0;
  double truthful_utility = 0.0;
  double best_s = 0.0;      // grid argmax of the deviation utility
  double best_utility = 0.0;
  double regret = 0.0;      // truthful_utility - best_utility
  int skipped = 0;          // grid points whose deviated profile failed validation
  std::vector<double> s_grid;
  std::vector<double> utility;  // same length as s_grid
};

// Sweeps each LSE's reported willingness to pay over a grid spanning its
// valid deviation window (true report injected exactly), holding the other
// bids fixed, and records the utility curve. Deviated profiles that fail
// validation are skipped and counted rather than evaluated.
std::vector<DsicRow> dsic_audit(const BidProfile& profile,
                                const GenerationDistribution& d,
                                int grid_points = 201);

}  // namespace windauction::analysis
