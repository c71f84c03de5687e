#pragma once
// Generation-side randomness: the law of available power w in kW. Everything
// the mechanism needs from the generation model goes through this interface:
// the CDF F, the quantile F^{-1}, the partial mean G(z) = integral_0^z w dF,
// and inverse-transform sampling.

#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace windauction::dist {

class GenerationDistribution {
 public:
  virtual ~GenerationDistribution() = default;

  virtual double pdf(double w) const = 0;
  // Nondecreasing, 0 for w <= 0.
  virtual double cdf(double w) const = 0;
  // Quantile. Throws std::domain_error outside [0, num::rho_max): the
  // mechanism requires finite quantiles.
  virtual double inv_cdf(double rho) const = 0;
  // G(z): mean generation at or below z. G(0) = 0, G -> mean() as z grows.
  virtual double partial_mean(double z) const = 0;
  virtual double mean() const = 0;
  // G(F^{-1}(rho)); overridden where a closed form exists.
  virtual double g_of_inv_cdf(double rho) const;
  virtual std::string describe() const = 0;

  // Inverse-transform draw. The uniform is clamped just below 1 so the
  // quantile stays finite; deterministic given the engine state.
  double sample(std::mt19937_64& rng) const;
};

class WeibullDistribution final : public GenerationDistribution {
 public:
  // shape k > 0, scale lambda in kW.
  WeibullDistribution(double k, double lambda);

  double pdf(double w) const override;
  double cdf(double w) const override;
  double inv_cdf(double rho) const override;
  // Closed form via the lower incomplete gamma for k = 2; adaptive
  // quadrature of w f(w) otherwise.
  double partial_mean(double z) const override;
  double mean() const override { return mean_; }
  double g_of_inv_cdf(double rho) const override;
  std::string describe() const override;

  double shape() const { return k_; }
  double scale() const { return lambda_; }

 private:
  double k_;
  double lambda_;
  double mean_;
};

// Piecewise-linear CDF through (w_j, F_j): starts at (0, 0), both coordinates
// strictly increasing, every F_j < 1. The residual mass 1 - F_max sits as an
// atom at w_max, so cdf(w) = 1 for w >= w_max and quantiles at or above F_max
// return w_max. Tabulate far enough into the tail that the mechanism's
// fractiles land below F_max.
class TabulatedDistribution final : public GenerationDistribution {
 public:
  explicit TabulatedDistribution(std::vector<std::pair<double, double>> points);

  double pdf(double w) const override;
  double cdf(double w) const override;
  double inv_cdf(double rho) const override;
  double partial_mean(double z) const override;
  double mean() const override { return mean_; }
  std::string describe() const override;

  double w_max() const { return w_.back(); }
  double cdf_max() const { return f_.back(); }

 private:
  int segment_of_w(double w) const;

  std::vector<double> w_;
  std::vector<double> f_;
  std::vector<double> gw_;  // partial mean at the grid nodes
  double mean_;
};

// "weibull:k=<float>,lambda=<float>" or "table:<csv path>".
std::unique_ptr<GenerationDistribution> parse_spec(const std::string& spec);

// Two-column CSV with header "w_kw,cdf".
std::unique_ptr<GenerationDistribution> load_table_csv(const std::string& path);

}  // namespace windauction::dist
