#include "windauction/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "windauction/numerics.hpp"
#include "windauction/oracle.hpp"

namespace windauction::analysis {

ProfitEstimate expected_profit_mc(const BidProfile& profile,
                                  const GenerationDistribution& d,
                                  std::int64_t n, std::uint64_t seed,
                                  int shards) {
  const auto alloc = mechanism::optimal_allocation(profile, d);
  const auto ps = mechanism::myerson_payments(profile, d);
  const auto mc = oracle::mc_expectation(
      [&](double w) { return mechanism::stage2_cost(profile, alloc, w); }, d,
      n, seed, shards);
  ProfitEstimate out;
  out.n = n;
  out.seed = seed;
  out.payments_total = ps.total();
  out.mean_compensation = mc.mean;
  out.estimate = out.payments_total - mc.mean;
  out.stderr_ = mc.stderr_;
  return out;
}

ConvexityStatus check_cdf_convexity(const GenerationDistribution& d, double z,
                                    int grid_points) {
  if (!(z > 0.0))
    throw std::invalid_argument("check_cdf_convexity: need z > 0");
  if (grid_points < 2)
    throw std::invalid_argument("check_cdf_convexity: need >= 2 grid points");
  ConvexityStatus st;
  st.grid_points = grid_points;
  double prev = d.pdf(z / grid_points);
  for (int j = 2; j <= grid_points; ++j) {
    const double w = z * j / grid_points;
    const double f = d.pdf(w);
    // Strict decrease beyond a relative roundoff allowance fails the check.
    if (f < prev - 1e-12 * std::max(std::abs(prev), std::abs(f))) {
      st.ok = false;
      st.first_violation = w;
      return st;
    }
    prev = f;
  }
  return st;
}

BoundReport profit_lower_bound(const BidProfile& profile,
                               const GenerationDistribution& d) {
  const int n = profile.size();
  const auto r = bids::derived_ratios(profile);
  const auto alloc = mechanism::optimal_allocation(profile, d);
  BoundReport rep;
  rep.per_lse.assign(n + 1, 0.0);
  for (int i = 1; i < n; ++i) {
    const double dpi = profile.pi(i) - profile.pi(i - 1);
    const double base =
        (profile.c(i) - profile.pi(i) * d.cdf(alloc.phi[i])) * alloc.x[i];
    const double wedge = profile.pi(i - 1) * (profile.c(i) - r.alpha[i]) /
                         dpi *
                         (d.inv_cdf(r.rho_cvx[i]) - d.inv_cdf(r.rho1[i]));
    rep.per_lse[i] = base + wedge;
  }
  {
    // Last slot: bracketed form; the pi_0 = c_0 = 0 sentinel makes N = 1
    // collapse to exactly zero.
    const double dpi = profile.pi(n) - profile.pi(n - 1);
    rep.per_lse[n] = (profile.c(n - 1) * profile.pi(n) -
                      0.5 * (profile.c(n) + profile.c(n - 1)) *
                          profile.pi(n - 1)) /
                     dpi * alloc.x[n];
  }
  for (int i = 1; i <= n; ++i) rep.total += rep.per_lse[i];
  rep.hypothesis = check_cdf_convexity(d, alloc.x[n]);
  return rep;
}

bool budget_balance_condition(const BidProfile& profile) {
  for (int i = 2; i <= profile.size(); ++i) {
    if (!(profile.c(i) / profile.pi(i) <
          profile.c(i - 1) / profile.pi(i - 1)))
      return false;
  }
  return true;
}

namespace {

// Utility of the (1-based) sorted slot when it reports s and the rest of the
// profile stays put. nullopt when the deviated profile fails validation.
std::optional<double> deviation_utility(const BidProfile& profile,
                                        const GenerationDistribution& d,
                                        int slot, double s) {
  auto raw = profile.sorted_bids();
  raw[slot - 1].c = s;
  auto vr = bids::validate_profile(std::move(raw));
  if (!vr.ok()) return std::nullopt;
  const auto ps = mechanism::myerson_payments(*vr.profile, d);
  const auto alloc = mechanism::optimal_allocation(*vr.profile, d);
  // Penalties are untouched, so the stable sort keeps the slot in place.
  return profile.c(slot) * alloc.x[slot] - ps.p[slot];
}

}  // namespace

std::vector<DsicRow> dsic_audit(const BidProfile& profile,
                                const GenerationDistribution& d,
                                int grid_points) {
  if (grid_points < 2)
    throw std::invalid_argument("dsic_audit: need >= 2 grid points");
  const int n = profile.size();
  const auto r = bids::derived_ratios(profile);
  std::vector<DsicRow> rows;
  rows.reserve(n);
  for (int i = 1; i <= n; ++i) {
    DsicRow row;
    row.lse = i;
    row.true_c = profile.c(i);
    // Sweep window: reports below alpha_i win nothing, reports at or above
    // the upper edge break the fractile ordering. Midpoint sampling keeps
    // the grid strictly inside the open interval; the true report is
    // injected exactly so zero regret is attainable on the grid.
    const double lo = r.alpha[i];
    double hi;
    if (i < n) {
      hi = profile.c(i + 1);
    } else {
      const double cap = n >= 2 ? r.rho2[n - 1] : 1.0;
      hi = profile.c(n - 1) + (profile.pi(n) - profile.pi(n - 1)) * cap;
    }
    std::vector<double> grid;
    grid.reserve(grid_points + 1);
    for (int j = 0; j < grid_points; ++j)
      grid.push_back(lo + (j + 0.5) * (hi - lo) / grid_points);
    grid.push_back(profile.c(i));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    bool first = true;
    for (double s : grid) {
      const auto u = deviation_utility(profile, d, i, s);
      if (!u) {
        ++row.skipped;
        continue;
      }
      row.s_grid.push_back(s);
      row.utility.push_back(*u);
      if (s == profile.c(i)) row.truthful_utility = *u;
      if (first || *u > row.best_utility) {
        row.best_utility = *u;
        row.best_s = s;
        first = false;
      }
    }
    if (first)
      throw std::runtime_error("dsic_audit: every deviation point failed "
                               "validation for slot " + std::to_string(i));
    row.regret = row.truthful_utility - row.best_utility;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace windauction::analysis
