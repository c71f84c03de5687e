#pragma once
// Independent numerical re-derivations of the closed forms: a projected
// gradient solver for the day-ahead program, exhaustive enumeration for the
// real-time LP, adaptive quadrature for the Myerson payment integral, a
// shared Monte-Carlo engine, and finite-difference gradients. Nothing here
// reuses the formula under test.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "windauction/mechanism.hpp"

namespace windauction::oracle {

using bids::BidProfile;
using dist::GenerationDistribution;

struct SolverConfig {
  double grad_tol = 1e-7;  // $/kWh, sup-norm of the projected gradient
  long max_iters = 2000000;
  double init_step = 1.0;  // backtracking restarts here every iteration
  double backtrack = 0.5;
  double sufficient_decrease = 1e-4;
  double fd_step = 1e-3;  // kW, finite-difference probes
};

struct Stage1Result {
  mechanism::Allocation alloc;
  bool converged = false;
  long iterations = 0;
  double grad_norm = 0.0;  // final projected-gradient sup-norm
  double objective = 0.0;  // final h(x) = -c.x + V(x)
  // Max of f_next - f_current over accepted steps; <= 0 when the line search
  // behaves (h is convex).
  double max_objective_increase = 0.0;
};

// Minimizes h(x) = -c.x + V(x) over x >= 0 with projected gradient descent
// and an Armijo backtracking line search, using the exact gradient. x0 is a
// 1-based warm start; the origin is used when absent.
Stage1Result solve_stage1_numeric(const BidProfile&,
                                  const GenerationDistribution&,
                                  const SolverConfig& = {},
                                  const std::vector<double>* x0 = nullptr);

struct Stage2Result {
  mechanism::Shortfall shortfall;  // k is not populated: vertex search only
  double cost = 0.0;
};

// Minimizes pi.y over the recourse polytope by greedy fill in every index
// permutation, keeping the cheapest vertex. x and pi are 1-based; pi need
// not be sorted. Exact on rational inputs. Refuses N > 8.
Stage2Result solve_stage2_exhaustive(const std::vector<double>& x, double w,
                                     const std::vector<double>& pi);

// Payment via the integral form p_i = c_i x_i(c_i) - int_{alpha_i}^{c_i}
// x_i(s) ds, with x_i(s) rebuilt from the deviated fractiles. Throws on
// quadrature nonconvergence.
double myerson_payment_quadrature(const BidProfile&,
                                  const GenerationDistribution&, int i,
                                  double rel_tol = 1e-9);

struct McResult {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::int64_t n = 0;
};

// Sample mean and standard error of fn(w) over n inverse-transform draws.
// Shards draw from independent substreams of the master seed and reduce in
// shard order, so results are reproducible for a fixed (seed, shards).
McResult mc_expectation(const std::function<double(double)>& fn,
                        const GenerationDistribution&, std::int64_t n,
                        std::uint64_t seed, int shards = 1);

struct McVecResult {
  std::vector<double> mean, stderr_;  // 0-based, size dim
  std::int64_t n = 0;
};

// Vector-valued variant: fn(w, out) fills a 0-based vector of size dim.
McVecResult mc_expectation_vec(
    const std::function<void(double, std::vector<double>&)>& fn, int dim,
    const GenerationDistribution&, std::int64_t n, std::uint64_t seed,
    int shards = 1);

// Central differences per component, one-sided where x_i < step keeps the
// probe inside the positive orthant. x and the result are 1-based.
std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& field,
    const std::vector<double>& x, double step);

// Random profiles satisfying every bid invariant, for randomized batteries.
// Fractiles are drawn strictly decreasing inside [rho_lo, rho_hi] with gaps
// of at least min_gap so allocations stay well-scaled.
struct ProfileParams {
  int n_min = 1, n_max = 6;
  double rho_lo = 0.05, rho_hi = 0.92, min_gap = 0.03;
  double pi1_min = 2.0, pi1_max = 20.0;
  double dpi_min = 1.0, dpi_max = 15.0;
};

BidProfile random_valid_profile(std::mt19937_64& rng,
                                const ProfileParams& = {});
BidProfile random_valid_profile(std::mt19937_64& rng, int n,
                                double rho_hi = 0.92);

struct OracleReport {
  std::string name;
  double oracle_value = 0.0;      // worst-deviating case
  double closed_form_value = 0.0;
  double abs_dev = 0.0;
  double rel_dev = 0.0;
  double tolerance = 0.0;  // on rel_dev unless the name says otherwise
  bool pass = false;
  int cases = 0;
};

struct SuiteConfig {
  bool quick = false;
  std::uint64_t seed = 97531;
};

// The full agreement battery: stage 2 vs enumeration, stage 1 vs the solver,
// payments vs quadrature, V and E[y] vs Monte Carlo, gradient vs finite
// differences. One report per family, worst case attached.
std::vector<OracleReport> run_agreement_suite(const SuiteConfig& = {});

bool all_pass(const std::vector<OracleReport>&);

}  // namespace windauction::oracle
