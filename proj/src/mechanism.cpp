#include "windauction/mechanism.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace windauction::mechanism {

namespace {

// Per-LSE grouped recourse terms; term[i] = E[y_i]. Shared by V and
// expected_shortfall so the two always agree term by term.
std::vector<double> recourse_terms(const Allocation& a,
                                   const GenerationDistribution& d) {
  const int n = a.size();
  std::vector<double> cdf_phi(n + 2, 0.0), g_phi(n + 2, 0.0);
  for (int i = 1; i <= n; ++i) {
    cdf_phi[i] = d.cdf(a.phi[i]);
    g_phi[i] = d.partial_mean(a.phi[i]);
  }
  std::vector<double> term(n + 1, 0.0);
  for (int i = 1; i <= n; ++i) {
    term[i] = a.x[i] * cdf_phi[i + 1] +
              a.phi[i] * (cdf_phi[i] - cdf_phi[i + 1]) -
              (g_phi[i] - g_phi[i + 1]);
  }
  return term;
}

}  // namespace

Allocation Allocation::from_quantities(const std::vector<double>& q) {
  const int n = static_cast<int>(q.size());
  if (n == 0) throw std::invalid_argument("allocation: empty quantity vector");
  Allocation a;
  a.x.assign(n + 1, 0.0);
  a.phi.assign(n + 2, 0.0);
  for (int i = 1; i <= n; ++i) {
    if (!(q[i - 1] >= 0.0) || !std::isfinite(q[i - 1]))
      throw std::invalid_argument("allocation: quantities must be >= 0");
    a.x[i] = q[i - 1];
  }
  for (int i = n; i >= 1; --i) a.phi[i] = a.phi[i + 1] + a.x[i];
  return a;
}

double PaymentSchedule::total() const {
  double t = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) t += p[i];
  return t;
}

Allocation optimal_allocation(const BidProfile& profile,
                              const GenerationDistribution& d) {
  const int n = profile.size();
  const auto r = bids::derived_ratios(profile);
  Allocation a;
  a.x.assign(n + 1, 0.0);
  a.phi.assign(n + 2, 0.0);
  // phi_i = F^{-1}(rho2_i) is the primitive; x falls out by differencing so
  // the suffix-sum identity holds to the last bit.
  for (int i = 1; i <= n; ++i) a.phi[i] = d.inv_cdf(r.rho2[i]);
  for (int i = 1; i <= n; ++i) a.x[i] = a.phi[i] - a.phi[i + 1];
  return a;
}

std::optional<int> shortfall_index(const Allocation& a, double w) {
  if (!(w >= 0.0)) throw std::invalid_argument("shortfall_index: w < 0");
  const int n = a.size();
  if (w >= a.total()) return std::nullopt;
  if (w <= a.phi[n]) return n;  // boundary w = x_N lands here by convention
  for (int i = n - 1; i >= 1; --i)
    if (w < a.phi[i]) return i;
  return 1;  // unreachable: w < phi[1] guarantees the loop hits
}

Shortfall optimal_shortfall(const Allocation& a, double w) {
  const int n = a.size();
  Shortfall s;
  s.w = w;
  s.y.assign(n + 1, 0.0);
  s.k = shortfall_index(a, w);
  if (!s.k) return s;
  const int k = *s.k;
  for (int i = 1; i < k; ++i) s.y[i] = a.x[i];
  s.y[k] = a.phi[k] - w;
  return s;
}

double stage2_cost(const BidProfile& profile, const Allocation& a, double w) {
  const auto k = shortfall_index(a, w);
  if (!k) return 0.0;
  double cost = 0.0;
  for (int i = 1; i < *k; ++i) cost += profile.pi(i) * a.x[i];
  cost += profile.pi(*k) * (a.phi[*k] - w);
  return cost;
}

double expected_value_v(const BidProfile& profile, const Allocation& a,
                        const GenerationDistribution& d) {
  const auto term = recourse_terms(a, d);
  double v = 0.0;
  for (int i = 1; i <= a.size(); ++i) v += profile.pi(i) * term[i];
  return v;
}

std::vector<double> stage1_gradient(const BidProfile& profile,
                                    const Allocation& a,
                                    const GenerationDistribution& d) {
  const int n = a.size();
  std::vector<double> g(n + 1, 0.0);
  double acc = 0.0;
  for (int i = 1; i <= n; ++i) {
    acc += (profile.pi(i) - profile.pi(i - 1)) * d.cdf(a.phi[i]);
    g[i] = -profile.c(i) + acc;
  }
  return g;
}

std::vector<double> expected_shortfall(const Allocation& a,
                                       const GenerationDistribution& d) {
  return recourse_terms(a, d);
}

PaymentSchedule myerson_payments(const BidProfile& profile,
                                 const GenerationDistribution& d) {
  const int n = profile.size();
  const auto r = bids::derived_ratios(profile);
  const Allocation a = optimal_allocation(profile, d);
  PaymentSchedule ps;
  ps.p.assign(n + 1, 0.0);
  ps.per_unit.assign(n + 1, std::numeric_limits<double>::quiet_NaN());
  ps.discount_pct.assign(n + 1, std::numeric_limits<double>::quiet_NaN());
  for (int i = 1; i <= n; ++i) {
    double p;
    if (i < n) {
      p = profile.c(i) * a.x[i] +
          (profile.pi(i + 1) - profile.pi(i - 1)) * d.g_of_inv_cdf(r.rho_cvx[i]) -
          (profile.pi(i + 1) - profile.pi(i)) * d.g_of_inv_cdf(r.rho1[i]) -
          (profile.pi(i) - profile.pi(i - 1)) * d.g_of_inv_cdf(r.rho2[i]);
    } else {
      p = profile.c(n) * a.x[n] -
          (profile.pi(n) - profile.pi(n - 1)) * d.g_of_inv_cdf(r.rho2[n]);
    }
    ps.p[i] = p;
    if (a.x[i] > 0.0) ps.per_unit[i] = p / a.x[i];
    const double value = profile.c(i) * a.x[i];
    if (value > 0.0) ps.discount_pct[i] = 100.0 * (value - p) / value;
  }
  return ps;
}

double welfare(const BidProfile& profile, const Allocation& a,
               const GenerationDistribution& d) {
  double cx = 0.0;
  for (int i = 1; i <= a.size(); ++i) cx += profile.c(i) * a.x[i];
  return cx - expected_value_v(profile, a, d);
}

SettlementOutcome settle(const BidProfile& profile, const Allocation& a,
                         const PaymentSchedule& ps, double w) {
  const int n = a.size();
  SettlementOutcome out;
  out.w = w;
  out.shortfall = optimal_shortfall(a, w);
  out.delivered.assign(n + 1, 0.0);
  out.compensation.assign(n + 1, 0.0);
  out.net_payment.assign(n + 1, 0.0);
  double comp_total = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double y = out.shortfall.y[i];
    out.delivered[i] = a.x[i] - y;
    out.compensation[i] = profile.pi(i) * y;
    out.net_payment[i] = ps.p[i] - out.compensation[i];
    comp_total += out.compensation[i];
  }
  out.generator_payoff = ps.total() - comp_total;
  return out;
}

}  // namespace windauction::mechanism
