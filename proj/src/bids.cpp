#include "windauction/bids.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace windauction::bids {

struct ProfileFactory {
  static BidProfile make(std::vector<Bid> sorted, std::vector<int> perm) {
    BidProfile p;
    p.bids_ = std::move(sorted);
    p.perm_ = std::move(perm);
    return p;
  }
};

ValidationResult validate_profile(std::vector<Bid> raw) {
  ValidationResult res;
  auto& issues = res.issues;
  const int n = static_cast<int>(raw.size());
  if (n == 0) {
    issues.push_back({"", 0, "no bids submitted"});
    return res;
  }
  for (const auto& b : raw) {
    if (!std::isfinite(b.c) || !std::isfinite(b.pi))
      issues.push_back({b.lse_id, 0, "non-finite bid"});
    else if (b.c < 0.0)
      issues.push_back({b.lse_id, 0, "willingness to pay must be >= 0"});
    else if (!(b.pi > 0.0))
      issues.push_back({b.lse_id, 0, "penalty must be > 0"});
  }
  if (!issues.empty()) return res;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return raw[a].pi < raw[b].pi; });
  std::vector<Bid> sorted;
  sorted.reserve(n);
  for (int idx : order) sorted.push_back(raw[idx]);

  for (int i = 1; i < n; ++i) {
    if (sorted[i].pi == sorted[i - 1].pi)
      issues.push_back({sorted[i].lse_id, i + 1,
                        "tie in penalties with " + sorted[i - 1].lse_id});
  }
  if (!issues.empty()) return res;  // fractiles below need distinct penalties

  // rho2_i with the c_0 = pi_0 = 0 sentinel.
  std::vector<double> rho2(n + 1, 0.0);
  double prev_c = 0.0, prev_pi = 0.0;
  for (int i = 1; i <= n; ++i) {
    const Bid& b = sorted[i - 1];
    rho2[i] = (b.c - prev_c) / (b.pi - prev_pi);
    if (b.c <= prev_c)
      issues.push_back({b.lse_id, i,
                        "willingness to pay not strictly increasing; the "
                        "closed-form allocation would be zero or negative"});
    else if (rho2[i] >= 1.0)
      issues.push_back({b.lse_id, i,
                        "shortfall fractile (c_i - c_{i-1}) / (pi_i - "
                        "pi_{i-1}) >= 1; allocation would be infinite"});
    prev_c = b.c;
    prev_pi = b.pi;
  }
  for (int i = 1; i < n; ++i) {
    if (rho2[i + 1] >= rho2[i])
      issues.push_back({sorted[i - 1].lse_id, i,
                        "shortfall fractiles not strictly decreasing; this "
                        "LSE would receive zero"});
  }
  if (!issues.empty()) return res;

  res.profile = ProfileFactory::make(std::move(sorted), std::move(order));
  return res;
}

DerivedRatios derived_ratios(const BidProfile& p) {
  const int n = p.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  DerivedRatios r;
  r.rho1.assign(n + 1, nan);
  r.rho2.assign(n + 1, nan);
  r.rho_cvx.assign(n + 1, nan);
  r.mu.assign(n + 1, nan);
  r.alpha.assign(n + 1, nan);
  r.beta.assign(n + 1, nan);
  for (int i = 1; i <= n; ++i)
    r.rho2[i] = (p.c(i) - p.c(i - 1)) / (p.pi(i) - p.pi(i - 1));
  for (int i = 1; i < n; ++i) {
    r.rho1[i] = r.rho2[i + 1];
    const double dpi = p.pi(i + 1) - p.pi(i - 1);
    r.rho_cvx[i] = (p.c(i + 1) - p.c(i - 1)) / dpi;
    r.mu[i] = (p.pi(i) - p.pi(i - 1)) / dpi;
    r.alpha[i] = (p.c(i + 1) * (p.pi(i) - p.pi(i - 1)) +
                  p.c(i - 1) * (p.pi(i + 1) - p.pi(i))) /
                 dpi;
    r.beta[i] = p.c(i + 1) - (p.pi(i + 1) - p.pi(i));
  }
  r.rho1[n] = 0.0;
  r.alpha[n] = p.c(n - 1);
  r.beta[n] = p.c(n - 1) + (p.pi(n) - p.pi(n - 1));
  return r;
}

BidProfile geometric_bids(int n, double eta, double c1, double pi1) {
  if (n < 1) throw std::invalid_argument("geometric bids: need N >= 1");
  if (!(eta > 0.0) || !(eta < 1.0) || !std::isfinite(eta))
    throw std::invalid_argument("geometric bids: need 0 < eta < 1");
  if (!(c1 > 0.0) || !(pi1 > 0.0) || !std::isfinite(c1) || !std::isfinite(pi1))
    throw std::invalid_argument("geometric bids: need c1 > 0 and pi1 > 0");
  if (c1 / pi1 >= 1.0)
    throw std::invalid_argument(
        "geometric bids: c1/pi1 >= 1 makes the first fractile >= 1 "
        "(allocation would be infinite)");
  std::vector<Bid> raw;
  raw.reserve(n);
  double eta_pow = 1.0;  // eta^0
  double c = 0.0;
  for (int i = 1; i <= n; ++i) {
    c += eta_pow * c1;  // c_i = c_{i-1} + eta^{i-1} c1 = (1 - eta^i)/(1 - eta) c1
    eta_pow *= eta;
    raw.push_back({"lse_" + std::to_string(i), c, i * pi1});
  }
  auto res = validate_profile(std::move(raw));
  if (!res.ok())
    throw std::invalid_argument("geometric bids: parameters produce an "
                                "invalid profile: " +
                                res.issues.front().condition);
  return *std::move(res.profile);
}

std::vector<Bid> load_bids_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bid file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty bid file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "lse_id,c_dollars_per_kwh,pi_dollars_per_kwh")
    throw std::runtime_error(
        path + ": expected header \"lse_id,c_dollars_per_kwh,pi_dollars_per_kwh\"");
  std::vector<Bid> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, cs, ps;
    if (!std::getline(ss, id, ',') || !std::getline(ss, cs, ',') ||
        !std::getline(ss, ps))
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected three comma-separated columns");
    try {
      std::size_t used = 0;
      const double c = std::stod(cs, &used);
      if (used != cs.size()) throw std::invalid_argument(cs);
      const double pi = std::stod(ps, &used);
      if (used != ps.size()) throw std::invalid_argument(ps);
      out.push_back({id, c, pi});
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed number");
    }
  }
  return out;
}

BidProfile parse_geometric(const std::string& spec) {
  int n = 0;
  double eta = 0.0, c1 = 0.0, pi1 = 0.0;
  bool have_n = false, have_eta = false, have_c1 = false, have_pi1 = false;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("geometric spec: expected key=value, got: " +
                                  item);
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    if (key != "N" && key != "eta" && key != "c1" && key != "pi1")
      throw std::invalid_argument("geometric spec: unknown key " + key);
    std::size_t used = 0;
    double parsed = 0.0;
    try {
      parsed = std::stod(val, &used);
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (used != val.size())
      throw std::invalid_argument("geometric spec: malformed value for " + key);
    if (key == "N") {
      if (parsed != static_cast<int>(parsed))
        throw std::invalid_argument("geometric spec: N must be an integer");
      n = static_cast<int>(parsed);
      have_n = true;
    } else if (key == "eta") {
      eta = parsed;
      have_eta = true;
    } else if (key == "c1") {
      c1 = parsed;
      have_c1 = true;
    } else {
      pi1 = parsed;
      have_pi1 = true;
    }
  }
  if (!have_n || !have_eta || !have_c1 || !have_pi1)
    throw std::invalid_argument(
        "geometric spec: need all of N, eta, c1, pi1 (got \"" + spec + "\")");
  return geometric_bids(n, eta, c1, pi1);
}

}  // namespace windauction::bids
