#pragma once
// Bid data model and validation. A bid is (c, pi): willingness to pay for
// contracted energy and the self-declared shortfall penalty, both $/kWh.
// Profiles keep bids sorted by pi with the c_0 = pi_0 = 0 sentinel.
//
// Convention used across the library: per-LSE arrays are 1-based with slot 0
// unused, so code indexes match the sorted-order subscripts of the math.

#include <optional>
#include <string>
#include <vector>

namespace windauction::bids {

struct Bid {
  std::string lse_id;
  double c = 0.0;   // $/kWh
  double pi = 0.0;  // $/kWh
};

class BidProfile {
 public:
  int size() const { return static_cast<int>(bids_.size()); }
  // i in [0, N]; c(0) = pi(0) = 0.
  double c(int i) const { return i == 0 ? 0.0 : bids_[i - 1].c; }
  double pi(int i) const { return i == 0 ? 0.0 : bids_[i - 1].pi; }
  // i in [1, N].
  const std::string& lse_id(int i) const { return bids_[i - 1].lse_id; }
  // 0-based position of sorted slot i in the submitted sequence.
  int submitted_index(int i) const { return perm_[i - 1]; }
  const std::vector<Bid>& sorted_bids() const { return bids_; }

 private:
  friend struct ProfileFactory;
  std::vector<Bid> bids_;  // ascending pi
  std::vector<int> perm_;
};

struct ValidationIssue {
  std::string lse_id;      // empty when the issue is about the whole profile
  int sorted_index = 0;    // 1-based slot after sorting; 0 = whole profile
  std::string condition;
};

struct ValidationResult {
  std::optional<BidProfile> profile;
  std::vector<ValidationIssue> issues;
  bool ok() const { return profile.has_value(); }
};

// Sorts by pi and checks the profile invariants: strictly increasing pi,
// strictly increasing c, and shortfall fractiles
// rho2_i = (c_i - c_{i-1}) / (pi_i - pi_{i-1}) in (0, 1) strictly decreasing.
// Violations are reported with the offending slot, never repaired.
ValidationResult validate_profile(std::vector<Bid> raw);

struct DerivedRatios {
  // 1-based, slot 0 unused. rho1[N] = 0 by convention; rho_cvx and mu exist
  // for i < N only and hold NaN at i = N.
  std::vector<double> rho1, rho2, rho_cvx, mu, alpha, beta;
};

// All the bid-derived quantities the allocation, payments and bounds use.
DerivedRatios derived_ratios(const BidProfile& profile);

// Geometric family: c_i = (1 - eta^i) / (1 - eta) * c1, pi_i = i * pi1.
// Requires 0 < eta < 1 and c1/pi1 < 1; the result always validates because
// the fractile sequence is eta^{i-1} * (c1/pi1), strictly decreasing.
BidProfile geometric_bids(int n, double eta, double c1, double pi1);

// CSV with header "lse_id,c_dollars_per_kwh,pi_dollars_per_kwh".
std::vector<Bid> load_bids_csv(const std::string& path);

// "N=5,eta=0.5,c1=10,pi1=12"
BidProfile parse_geometric(const std::string& spec);

}  // namespace windauction::bids
