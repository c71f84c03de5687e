#pragma once

// Shared fixtures for the test binaries: reference values evaluated with
// 40-digit arithmetic, the default wind model, a small worked two-buyer
// profile, and tabulated-distribution builders.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include "windauction/bids.hpp"
#include "windauction/dist.hpp"
#include "windauction/mechanism.hpp"

namespace testfx {

// Weibull(k=2, lambda=1509) reference values, 40-digit evaluation.
namespace ref {
inline constexpr double lambda = 1509.0;
inline constexpr double mean = 1337.316430508211843;        // lambda sqrt(pi)/2
inline constexpr double inv_5_6 = 2019.896394360188146;     // F^-1(5/6)
inline constexpr double inv_5_12 = 1107.853190131656234;    // F^-1(5/12)
inline constexpr double x1_two_buyer = 912.0432042285319114;
inline constexpr double cdf_at_lambda = 0.63212055882855768;  // 1 - 1/e
inline constexpr double gamma32_at_1 = 0.37894469164098470;   // g(3/2, 1)
inline constexpr double gamma32_at_ln2 = 0.25811312162945079;
inline constexpr double g_at_lambda = 571.82753968624592;     // G(1509)
inline constexpr double g_inv_half = 389.49270053884124;      // G(F^-1(1/2))
inline constexpr double g_inv_5_6 = 922.62737897662505;       // G(F^-1(5/6))
inline constexpr double p1_single = 9127.4353958823808;       // c=10, pi=12
inline constexpr double lambda_over_sqrt2 = 1067.0241328105002;
}  // namespace ref

inline windauction::dist::WeibullDistribution wind() {
  return windauction::dist::WeibullDistribution(2.0, ref::lambda);
}

// c = (10, 15), pi = (12, 24): fractiles (5/6, 5/12).
inline windauction::bids::BidProfile worked_two_buyer() {
  auto res = windauction::bids::validate_profile(
      {{"lse_1", 10.0, 12.0}, {"lse_2", 15.0, 24.0}});
  return *std::move(res.profile);
}

inline windauction::mechanism::Allocation alloc_of(std::vector<double> q) {
  return windauction::mechanism::Allocation::from_quantities(q);
}

inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Piecewise-linear table sampled from any distribution's CDF on a uniform
// w grid up to the given quantile. First point is (0, 0).
inline windauction::dist::TabulatedDistribution tabulate(
    const windauction::dist::GenerationDistribution& d, int points,
    double top_quantile) {
  const double w_top = d.inv_cdf(top_quantile);
  std::vector<std::pair<double, double>> pts;
  pts.reserve(points + 1);
  pts.emplace_back(0.0, 0.0);
  for (int j = 1; j <= points; ++j) {
    const double w = w_top * j / points;
    pts.emplace_back(w, d.cdf(w));
  }
  return windauction::dist::TabulatedDistribution(pts);
}

// Fresh scratch directory under the system temp root, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("windauction_" + tag + "_" + std::to_string(++counter));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  std::string write(const std::string& name, const std::string& content) const {
    const auto p = file(name);
    std::ofstream f(p, std::ios::binary);
    f << content;
    return p;
  }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f),
                     std::istreambuf_iterator<char>());
}

}  // namespace testfx
