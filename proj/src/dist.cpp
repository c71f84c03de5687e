#include "windauction/dist.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "windauction/numerics.hpp"

namespace windauction::dist {

namespace {

// Draws clamp here, strictly below the inverse-CDF rejection threshold.
constexpr double sample_cap = 1.0 - 2e-12;

void check_rho(double rho, const char* who) {
  if (!(rho >= 0.0) || rho >= num::rho_max) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s: rho=%.17g outside [0, 1 - 1e-12)",
                  who, rho);
    throw std::domain_error(buf);
  }
}

}  // namespace

double GenerationDistribution::g_of_inv_cdf(double rho) const {
  check_rho(rho, "g_of_inv_cdf");
  if (rho == 0.0) return 0.0;
  return partial_mean(inv_cdf(rho));
}

double GenerationDistribution::sample(std::mt19937_64& rng) const {
  double u = num::uniform01(rng);
  if (u > sample_cap) u = sample_cap;
  return inv_cdf(u);
}

WeibullDistribution::WeibullDistribution(double k, double lambda)
    : k_(k), lambda_(lambda) {
  if (!(k > 0.0) || !std::isfinite(k) || !(lambda > 0.0) ||
      !std::isfinite(lambda))
    throw std::invalid_argument("weibull: need k > 0 and lambda > 0");
  mean_ = lambda_ * std::tgamma(1.0 + 1.0 / k_);
}

double WeibullDistribution::pdf(double w) const {
  if (w <= 0.0) return 0.0;
  const double t = w / lambda_;
  return k_ / lambda_ * std::pow(t, k_ - 1.0) * std::exp(-std::pow(t, k_));
}

double WeibullDistribution::cdf(double w) const {
  if (w <= 0.0) return 0.0;
  return -std::expm1(-std::pow(w / lambda_, k_));
}

double WeibullDistribution::inv_cdf(double rho) const {
  check_rho(rho, "weibull inv_cdf");
  if (rho == 0.0) return 0.0;
  return lambda_ * std::pow(-std::log1p(-rho), 1.0 / k_);
}

double WeibullDistribution::partial_mean(double z) const {
  if (z < 0.0) throw std::domain_error("weibull partial_mean: z < 0");
  if (z == 0.0) return 0.0;
  if (k_ == 2.0) {
    const double t = z / lambda_;
    return lambda_ * num::lower_gamma_three_halves(t * t);
  }
  // exp(-(w/lambda)^k) < 3e-20 beyond the cap; the remainder is negligible
  // against the mean.
  const double z_eff = std::min(z, lambda_ * std::pow(45.0, 1.0 / k_));
  const auto q = num::integrate([this](double w) { return w * pdf(w); }, 0.0,
                                z_eff, 1e-10, 1e-13 * mean_);
  return q.value;
}

double WeibullDistribution::g_of_inv_cdf(double rho) const {
  check_rho(rho, "g_of_inv_cdf");
  if (rho == 0.0) return 0.0;
  if (k_ == 2.0)
    return lambda_ * num::lower_gamma_three_halves(-std::log1p(-rho));
  return partial_mean(inv_cdf(rho));
}

std::string WeibullDistribution::describe() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "weibull:k=%g,lambda=%g", k_, lambda_);
  return buf;
}

TabulatedDistribution::TabulatedDistribution(
    std::vector<std::pair<double, double>> points) {
  if (points.size() < 2)
    throw std::invalid_argument("table: need at least 2 points");
  if (points.front().first != 0.0 || points.front().second != 0.0)
    throw std::invalid_argument("table: grid must start at (w=0, cdf=0)");
  w_.reserve(points.size());
  f_.reserve(points.size());
  for (const auto& [w, f] : points) {
    if (!std::isfinite(w) || !std::isfinite(f))
      throw std::invalid_argument("table: non-finite entry");
    if (!w_.empty()) {
      if (w <= w_.back())
        throw std::invalid_argument("table: w values must strictly increase");
      if (f <= f_.back())
        throw std::invalid_argument("table: cdf values must strictly increase");
    }
    if (f < 0.0 || f >= 1.0)
      throw std::invalid_argument("table: cdf values must lie in [0, 1)");
    w_.push_back(w);
    f_.push_back(f);
  }
  gw_.assign(w_.size(), 0.0);
  for (std::size_t j = 0; j + 1 < w_.size(); ++j) {
    const double d = (f_[j + 1] - f_[j]) / (w_[j + 1] - w_[j]);
    gw_[j + 1] = gw_[j] + 0.5 * d * (w_[j + 1] * w_[j + 1] - w_[j] * w_[j]);
  }
  mean_ = gw_.back() + w_.back() * (1.0 - f_.back());
}

int TabulatedDistribution::segment_of_w(double w) const {
  // Largest j with w_[j] <= w; caller guarantees w in [0, w_max).
  const auto it = std::upper_bound(w_.begin(), w_.end(), w);
  return static_cast<int>(it - w_.begin()) - 1;
}

double TabulatedDistribution::pdf(double w) const {
  if (w <= 0.0 || w >= w_.back()) return 0.0;
  const int j = segment_of_w(w);
  return (f_[j + 1] - f_[j]) / (w_[j + 1] - w_[j]);
}

double TabulatedDistribution::cdf(double w) const {
  if (w <= 0.0) return 0.0;
  if (w >= w_.back()) return 1.0;  // atom at w_max closes the distribution
  const int j = segment_of_w(w);
  const double t = (w - w_[j]) / (w_[j + 1] - w_[j]);
  return f_[j] + t * (f_[j + 1] - f_[j]);
}

double TabulatedDistribution::inv_cdf(double rho) const {
  check_rho(rho, "table inv_cdf");
  if (rho == 0.0) return 0.0;
  if (rho >= f_.back()) return w_.back();
  // Bisection on the monotone interpolant; the iteration cap takes the
  // bracket to machine resolution, well inside the 1e-10 * scale contract.
  return num::bisect([this, rho](double w) { return cdf(w) - rho; }, 0.0,
                     w_.back(), 1e-13 * w_.back(), 100);
}

double TabulatedDistribution::partial_mean(double z) const {
  if (z < 0.0) throw std::domain_error("table partial_mean: z < 0");
  if (z >= w_.back()) return mean_;  // includes the atom at w_max
  if (z == 0.0) return 0.0;
  const int j = segment_of_w(z);
  const double d = (f_[j + 1] - f_[j]) / (w_[j + 1] - w_[j]);
  return gw_[j] + 0.5 * d * (z * z - w_[j] * w_[j]);
}

std::string TabulatedDistribution::describe() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "table:%zu points, w_max=%g", w_.size(),
                w_.back());
  return buf;
}

std::unique_ptr<GenerationDistribution> load_table_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open table file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty table file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "w_kw,cdf")
    throw std::runtime_error(path + ": expected header \"w_kw,cdf\", got \"" +
                             line + "\"");
  std::vector<std::pair<double, double>> pts;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected two comma-separated columns");
    try {
      std::size_t used = 0;
      const std::string ws = line.substr(0, comma);
      const std::string fs = line.substr(comma + 1);
      const double w = std::stod(ws, &used);
      if (used != ws.size()) throw std::invalid_argument(ws);
      const double f = std::stod(fs, &used);
      if (used != fs.size()) throw std::invalid_argument(fs);
      pts.emplace_back(w, f);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed number");
    }
  }
  return std::make_unique<TabulatedDistribution>(std::move(pts));
}

std::unique_ptr<GenerationDistribution> parse_spec(const std::string& spec) {
  if (spec.rfind("table:", 0) == 0) return load_table_csv(spec.substr(6));
  if (spec.rfind("weibull:", 0) != 0)
    throw std::invalid_argument(
        "distribution spec must be weibull:k=<f>,lambda=<f> or table:<path>, "
        "got: " +
        spec);
  double k = 0.0, lambda = 0.0;
  bool have_k = false, have_lambda = false;
  std::stringstream ss(spec.substr(8));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("weibull spec: expected key=value, got: " +
                                  item);
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    std::size_t used = 0;
    double parsed = 0.0;
    try {
      parsed = std::stod(val, &used);
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (used != val.size())
      throw std::invalid_argument("weibull spec: malformed value for " + key);
    if (key == "k") {
      k = parsed;
      have_k = true;
    } else if (key == "lambda") {
      lambda = parsed;
      have_lambda = true;
    } else {
      throw std::invalid_argument("weibull spec: unknown key " + key);
    }
  }
  if (!have_k || !have_lambda)
    throw std::invalid_argument("weibull spec: need both k and lambda");
  return std::make_unique<WeibullDistribution>(k, lambda);
}

}  // namespace windauction::dist
