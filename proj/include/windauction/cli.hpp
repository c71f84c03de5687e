#pragma once

// Command-line surface: subcommand dispatch plus the eta-sweep experiment
// runner that produces one plot-ready CSV per figure.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace windauction::cli {

struct SweepConfig {
  int n = 5;
  double c_hat = 10.0 / 12.0;  // c1 / pi1
  std::vector<double> etas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  double pi1 = 12.0;
  std::string dist = "weibull:k=2,lambda=1509";
  std::int64_t samples = 100000;
  std::uint64_t seed = 12022;
  int shards = 1;
  std::string out_dir = ".";
};

// JSON object with keys matching SweepConfig field names; absent keys keep
// their defaults, unknown keys are rejected.
SweepConfig load_sweep_config(const std::string& path);

struct SweepRow {
  double eta = 0.0;
  bool valid = false;
  std::string diagnostic;         // why the row is invalid, empty otherwise
  std::vector<double> x;          // 1-based, like everything per-LSE
  std::vector<double> p;
  std::vector<double> per_unit;   // NaN where the allocation is zero
  std::vector<double> discount;   // percent
  std::vector<double> utility;    // c_i x_i - p_i
  double welfare = 0.0;
  double profit = 0.0;            // MC estimate
  double stderr_ = 0.0;
  double bound = 0.0;
  bool hypothesis_ok = false;
  bool budget_balance = false;
};

// One row per eta, in grid order. Rows run in parallel with per-row seeds
// derived from the master seed, so the table is deterministic for a fixed
// config. An eta whose geometric bids fail validation yields an invalid row
// with the diagnostic; the run continues.
std::vector<SweepRow> run_sweep(const SweepConfig& cfg);

// Writes allocation.csv, payments.csv, per_unit_prices.csv, discounts.csv,
// utilities.csv (columns eta,lse_1..lse_N) and profit_bound.csv (columns
// eta,profit,stderr,bound) under out_dir, valid rows only, and returns the
// paths. NaN cells are left empty.
std::vector<std::string> emit_plot_data(const std::vector<SweepRow>& rows,
                                        const std::string& out_dir);

// Full dispatch. args excludes the program name. Exit codes: 0 success,
// 1 validation or input failure, 2 oracle disagreement, 64 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace windauction::cli
