#pragma once
// Small numerical toolbox shared across the library: adaptive quadrature,
// bisection, deterministic RNG stream derivation, and the lower incomplete
// gamma at a = 3/2 needed by the Weibull partial mean.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace windauction::num {

// Probabilities at or above this are rejected by inverse-CDF style
// operations: the mechanism needs finite quantiles.
inline constexpr double rho_max = 1.0 - 1e-12;

struct QuadratureResult {
  double value = 0.0;
  bool converged = true;
  long evals = 0;
};

namespace detail {

template <class F>
void adaptive_simpson(const F& f, double a, double m, double b, double fa,
                      double fm, double fb, double whole, double tol,
                      int depth, QuadratureResult& out) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  out.evals += 2;
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol || depth <= 0) {
    if (depth <= 0 && std::abs(delta) > 15.0 * tol) out.converged = false;
    out.value += left + right + delta / 15.0;
    return;
  }
  adaptive_simpson(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1, out);
  adaptive_simpson(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1, out);
}

}  // namespace detail

// Adaptive Simpson on [a, b]. The working absolute tolerance is
// max(abs_tol, rel_tol * |coarse estimate|); endpoint square-root behaviour
// is handled by depth, not by substitution.
template <class F>
QuadratureResult integrate(const F& f, double a, double b,
                           double rel_tol = 1e-10, double abs_tol = 1e-14,
                           int max_depth = 52) {
  QuadratureResult out;
  if (!(b > a)) return out;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  out.evals = 3;
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double tol = std::max(abs_tol, rel_tol * std::abs(whole));
  detail::adaptive_simpson(f, a, m, b, fa, fm, fb, whole, tol, max_depth, out);
  return out;
}

// Root of f on [lo, hi]; endpoints must bracket (f monotone in our uses).
template <class F>
double bisect(const F& f, double lo, double hi, double x_tol,
              int max_iter = 200) {
  double flo = f(lo);
  if (flo == 0.0) return lo;
  const double fhi = f(hi);
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw std::invalid_argument("bisect: endpoints do not bracket a root");
  for (int it = 0; it < max_iter && hi - lo > x_tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if (fmid == 0.0) return mid;
    if ((fmid > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// SplitMix64 step; used only to derive seeds for mt19937_64 streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Stream `stream` of master seed `master`: SplitMix64 over a state mixing
// both yields the seed words. Streams are reproducible and decorrelated, so
// Monte-Carlo shards and sweep rows can draw independently.
inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master ^ (0x9e3779b97f4a7c15ull * (stream + 1));
  const std::uint64_t w0 = splitmix64(s), w1 = splitmix64(s);
  const std::uint64_t w2 = splitmix64(s), w3 = splitmix64(s);
  std::seed_seq seq{
      static_cast<std::uint32_t>(w0), static_cast<std::uint32_t>(w0 >> 32),
      static_cast<std::uint32_t>(w1), static_cast<std::uint32_t>(w1 >> 32),
      static_cast<std::uint32_t>(w2), static_cast<std::uint32_t>(w2 >> 32),
      static_cast<std::uint32_t>(w3), static_cast<std::uint32_t>(w3 >> 32)};
  return std::mt19937_64(seq);
}

// 53-bit uniform on [0, 1); spelled out so streams stay portable across
// standard-library implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Lower incomplete gamma at a = 3/2. The series branch near zero avoids the
// cancellation in the erf form; the branches agree to ~1e-15 at the seam.
inline double lower_gamma_three_halves(double x) {
  if (x < 0.0) throw std::domain_error("lower_gamma_three_halves: x < 0");
  if (x == 0.0) return 0.0;
  if (x < 0.75) {
    const double a = 1.5;
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 80; ++n) {
      term *= x / (a + n);
      sum += term;
      if (term < sum * 1e-17) break;
    }
    return std::pow(x, a) * std::exp(-x) * sum;
  }
  const double r = std::sqrt(x);
  // sqrt(pi)/2
  return 0.88622692545275801365 * std::erf(r) - r * std::exp(-x);
}

}  // namespace windauction::num
