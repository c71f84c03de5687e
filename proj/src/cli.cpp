#include "windauction/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>
#include <stdexcept>
#include <utility>

#include <CLI11.hpp>
#include <json.hpp>

#include "windauction/analysis.hpp"
#include "windauction/bids.hpp"
#include "windauction/dist.hpp"
#include "windauction/mechanism.hpp"
#include "windauction/numerics.hpp"
#include "windauction/oracle.hpp"

namespace windauction::cli {

namespace {

using nlohmann::json;

SweepRow sweep_point(const SweepConfig& cfg,
                     const dist::GenerationDistribution& d, int idx) {
  SweepRow row;
  row.eta = cfg.etas[idx];
  std::uint64_t st =
      cfg.seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(idx + 1));
  const std::uint64_t row_seed = num::splitmix64(st);
  try {
    const auto profile =
        bids::geometric_bids(cfg.n, row.eta, cfg.c_hat * cfg.pi1, cfg.pi1);
    const auto alloc = mechanism::optimal_allocation(profile, d);
    const auto ps = mechanism::myerson_payments(profile, d);
    row.x = alloc.x;
    row.p = ps.p;
    row.per_unit = ps.per_unit;
    row.discount = ps.discount_pct;
    row.utility.assign(cfg.n + 1, 0.0);
    for (int i = 1; i <= cfg.n; ++i)
      row.utility[i] = profile.c(i) * alloc.x[i] - ps.p[i];
    row.welfare = mechanism::welfare(profile, alloc, d);
    const auto pe = analysis::expected_profit_mc(profile, d, cfg.samples,
                                                 row_seed, cfg.shards);
    row.profit = pe.estimate;
    row.stderr_ = pe.stderr_;
    const auto br = analysis::profit_lower_bound(profile, d);
    row.bound = br.total;
    row.hypothesis_ok = br.hypothesis.ok;
    row.budget_balance = analysis::budget_balance_condition(profile);
    row.valid = true;
  } catch (const std::invalid_argument& e) {
    row.diagnostic = e.what();
  } catch (const std::domain_error& e) {
    row.diagnostic = e.what();
  }
  return row;
}

std::string csv_cell(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_per_lse_csv(const std::string& path,
                       const std::vector<SweepRow>& rows, int n,
                       const std::vector<double> SweepRow::* field) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "eta";
  for (int i = 1; i <= n; ++i) f << ",lse_" << i;
  f << "\n";
  for (const auto& r : rows) {
    if (!r.valid) continue;
    f << csv_cell(r.eta);
    for (int i = 1; i <= n; ++i) f << "," << csv_cell((r.*field)[i]);
    f << "\n";
  }
  if (!f) throw std::runtime_error("write failed on " + path);
}

}  // namespace

SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sweep config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("sweep config " + path + ": " + e.what());
  }
  if (!j.is_object())
    throw std::invalid_argument("sweep config " + path +
                                ": expected a JSON object");
  SweepConfig cfg;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "n")
        cfg.n = value.get<int>();
      else if (key == "c_hat")
        cfg.c_hat = value.get<double>();
      else if (key == "etas")
        cfg.etas = value.get<std::vector<double>>();
      else if (key == "pi1")
        cfg.pi1 = value.get<double>();
      else if (key == "dist")
        cfg.dist = value.get<std::string>();
      else if (key == "samples")
        cfg.samples = value.get<std::int64_t>();
      else if (key == "seed")
        cfg.seed = value.get<std::uint64_t>();
      else if (key == "shards")
        cfg.shards = value.get<int>();
      else if (key == "out_dir")
        cfg.out_dir = value.get<std::string>();
      else
        throw std::invalid_argument("unknown key in sweep config: " + key);
    } catch (const json::exception& e) {
      throw std::invalid_argument("sweep config key \"" + key +
                                  "\": " + e.what());
    }
  }
  return cfg;
}

std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  if (cfg.etas.empty())
    throw std::invalid_argument("sweep: eta grid is empty");
  if (cfg.n < 1) throw std::invalid_argument("sweep: need n >= 1");
  if (cfg.samples < 1) throw std::invalid_argument("sweep: need samples >= 1");
  if (cfg.shards < 1) throw std::invalid_argument("sweep: need shards >= 1");
  const auto d = dist::parse_spec(cfg.dist);
  const int m = static_cast<int>(cfg.etas.size());
  std::vector<std::future<SweepRow>> futs;
  futs.reserve(m);
  for (int idx = 0; idx < m; ++idx)
    futs.push_back(std::async(std::launch::async, sweep_point, std::cref(cfg),
                              std::cref(*d), idx));
  std::vector<SweepRow> rows;
  rows.reserve(m);
  for (auto& fu : futs) rows.push_back(fu.get());  // grid order, not finish order
  return rows;
}

std::vector<std::string> emit_plot_data(const std::vector<SweepRow>& rows,
                                        const std::string& out_dir) {
  if (rows.empty()) throw std::invalid_argument("emit_plot_data: no rows");
  int n = 0;
  for (const auto& r : rows)
    if (r.valid) {
      n = static_cast<int>(r.x.size()) - 1;
      break;
    }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);  // open reports failures
  const auto at = [&](const char* name) { return out_dir + "/" + name; };
  std::vector<std::string> files;
  const std::pair<const char*, const std::vector<double> SweepRow::*>
      per_lse[] = {{"allocation.csv", &SweepRow::x},
                   {"payments.csv", &SweepRow::p},
                   {"per_unit_prices.csv", &SweepRow::per_unit},
                   {"discounts.csv", &SweepRow::discount},
                   {"utilities.csv", &SweepRow::utility}};
  for (const auto& [name, field] : per_lse) {
    const auto path = at(name);
    write_per_lse_csv(path, rows, n, field);
    files.push_back(path);
  }
  {
    const auto path = at("profit_bound.csv");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "eta,profit,stderr,bound\n";
    for (const auto& r : rows) {
      if (!r.valid) continue;
      f << csv_cell(r.eta) << "," << csv_cell(r.profit) << ","
        << csv_cell(r.stderr_) << "," << csv_cell(r.bound) << "\n";
    }
    if (!f) throw std::runtime_error("write failed on " + path);
    files.push_back(path);
  }
  return files;
}

namespace {

json issues_json(const bids::ValidationResult& res) {
  json arr = json::array();
  for (const auto& is : res.issues)
    arr.push_back({{"lse_id", is.lse_id},
                   {"sorted_index", is.sorted_index},
                   {"condition", is.condition}});
  return arr;
}

// Bid source shared by validate/allocate/settle/simulate: a CSV path or a
// geometric family spec, exactly one of which is set.
bids::ValidationResult resolve_bids(const std::string& bids_path,
                                    const std::string& geometric) {
  if (!bids_path.empty())
    return bids::validate_profile(bids::load_bids_csv(bids_path));
  try {
    bids::ValidationResult res;
    res.profile = bids::parse_geometric(geometric);
    return res;
  } catch (const std::invalid_argument& e) {
    bids::ValidationResult res;
    res.issues.push_back({"", 0, e.what()});
    return res;
  }
}

// Drops the unused slot 0 so emitted arrays read 0-based as lse_1..lse_N.
json tail(const std::vector<double>& v) {
  return json(std::vector<double>(v.begin() + 1, v.end()));
}

void add_bid_options(CLI::App* sub, std::string& bids_path,
                     std::string& geometric) {
  auto* grp = sub->add_option_group("bids", "where the bid profile comes from");
  grp->add_option("--bids", bids_path,
                  "CSV with header lse_id,c_dollars_per_kwh,pi_dollars_per_kwh");
  grp->add_option("--geometric", geometric,
                  "geometric family, e.g. N=5,eta=0.5,c1=10,pi1=12");
  grp->require_option(1);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"two-stage auction for random generation", "windauction"};
  app.require_subcommand(1);

  std::string bids_path, geometric;
  std::string dist_spec = "weibull:k=2,lambda=1509";

  auto* sub_validate =
      app.add_subcommand("validate", "check a bid profile and report issues");
  std::string v_bids, v_geometric;
  add_bid_options(sub_validate, v_bids, v_geometric);

  auto* sub_allocate = app.add_subcommand(
      "allocate", "closed-form allocation, payments and welfare");
  add_bid_options(sub_allocate, bids_path, geometric);
  sub_allocate->add_option("--dist", dist_spec,
                           "weibull:k=<f>,lambda=<f> or table:<path>");

  auto* sub_settle = app.add_subcommand(
      "settle", "settle one realized generation draw against the contract");
  double settle_w = 0.0;
  add_bid_options(sub_settle, bids_path, geometric);
  sub_settle->add_option("--dist", dist_spec,
                         "weibull:k=<f>,lambda=<f> or table:<path>");
  sub_settle->add_option("--w", settle_w, "realized generation, kW")
      ->required()
      ->check(CLI::NonNegativeNumber);

  auto* sub_simulate = app.add_subcommand(
      "simulate", "Monte-Carlo expected profit with the closed-form bound");
  std::int64_t sim_samples = 100000;
  std::uint64_t sim_seed = 12022;
  int sim_shards = 1;
  add_bid_options(sub_simulate, bids_path, geometric);
  sub_simulate->add_option("--dist", dist_spec,
                           "weibull:k=<f>,lambda=<f> or table:<path>");
  sub_simulate->add_option("--samples", sim_samples, "Monte-Carlo draws")
      ->check(CLI::PositiveNumber);
  sub_simulate->add_option("--seed", sim_seed, "master RNG seed");
  sub_simulate->add_option("--shards", sim_shards, "parallel sample shards")
      ->check(CLI::PositiveNumber);

  auto* sub_sweep = app.add_subcommand(
      "sweep", "eta sweep over the geometric family; one CSV per figure");
  std::string sweep_config_path;
  SweepConfig sweep_defaults;
  int sw_n = sweep_defaults.n;
  double sw_c_hat = sweep_defaults.c_hat, sw_pi1 = sweep_defaults.pi1;
  std::vector<double> sw_etas;
  std::string sw_dist = sweep_defaults.dist, sw_out = sweep_defaults.out_dir;
  std::int64_t sw_samples = sweep_defaults.samples;
  std::uint64_t sw_seed = sweep_defaults.seed;
  int sw_shards = sweep_defaults.shards;
  auto* o_cfg = sub_sweep->add_option("--config", sweep_config_path,
                                      "JSON config; flags override its keys");
  auto* o_n = sub_sweep->add_option("--n", sw_n, "number of LSEs");
  auto* o_chat = sub_sweep->add_option("--c-hat", sw_c_hat, "c1/pi1 ratio");
  auto* o_etas = sub_sweep->add_option("--etas", sw_etas, "eta grid")
                     ->delimiter(',');
  auto* o_pi1 = sub_sweep->add_option("--pi1", sw_pi1, "base penalty, $/kWh");
  auto* o_dist = sub_sweep->add_option("--dist", sw_dist, "distribution spec");
  auto* o_samples =
      sub_sweep->add_option("--samples", sw_samples, "Monte-Carlo draws");
  auto* o_seed = sub_sweep->add_option("--seed", sw_seed, "master RNG seed");
  auto* o_shards =
      sub_sweep->add_option("--shards", sw_shards, "parallel sample shards");
  auto* o_out = sub_sweep->add_option("--out-dir", sw_out, "CSV directory");

  auto* sub_oracle = app.add_subcommand(
      "oracle", "run the closed-form vs numeric agreement suite");
  bool oracle_quick = false;
  std::uint64_t oracle_seed = 97531;
  sub_oracle->add_flag("--quick", oracle_quick, "reduced case counts");
  sub_oracle->add_option("--seed", oracle_seed, "suite RNG seed");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return 64;
  }

  try {
    if (sub_validate->parsed()) {
      const auto res = resolve_bids(v_bids, v_geometric);
      json j;
      j["ok"] = res.ok();
      j["issues"] = issues_json(res);
      if (res.ok()) {
        json order = json::array();
        for (int i = 1; i <= res.profile->size(); ++i)
          order.push_back({{"lse_id", res.profile->lse_id(i)},
                           {"submitted_index", res.profile->submitted_index(i)},
                           {"c", res.profile->c(i)},
                           {"pi", res.profile->pi(i)}});
        j["sorted"] = order;
      }
      out << j.dump(2) << "\n";
      return res.ok() ? 0 : 1;
    }

    if (sub_allocate->parsed() || sub_settle->parsed() ||
        sub_simulate->parsed()) {
      const auto res = resolve_bids(bids_path, geometric);
      if (!res.ok()) {
        json j;
        j["ok"] = false;
        j["issues"] = issues_json(res);
        err << j.dump(2) << "\n";
        return 1;
      }
      const auto& profile = *res.profile;
      const auto d = dist::parse_spec(dist_spec);
      const auto alloc = mechanism::optimal_allocation(profile, *d);
      const auto ps = mechanism::myerson_payments(profile, *d);

      if (sub_allocate->parsed()) {
        json j;
        j["x_star"] = tail(alloc.x);
        j["phi"] = json(std::vector<double>(alloc.phi.begin() + 1,
                                            alloc.phi.begin() + 1 +
                                                profile.size()));
        j["payments"] = tail(ps.p);
        j["per_unit_prices"] = tail(ps.per_unit);
        j["discounts"] = tail(ps.discount_pct);
        j["welfare"] = mechanism::welfare(profile, alloc, *d);
        out << j.dump(2) << "\n";
        return 0;
      }

      if (sub_settle->parsed()) {
        const auto so = mechanism::settle(profile, alloc, ps, settle_w);
        json j;
        j["w"] = so.w;
        j["shortfall"] = tail(so.shortfall.y);
        j["delivered"] = tail(so.delivered);
        j["payments"] = tail(ps.p);
        j["compensation"] = tail(so.compensation);
        j["net_payment"] = tail(so.net_payment);
        j["generator_payoff"] = so.generator_payoff;
        out << j.dump(2) << "\n";
        return 0;
      }

      const auto pe = analysis::expected_profit_mc(profile, *d, sim_samples,
                                                   sim_seed, sim_shards);
      const auto br = analysis::profit_lower_bound(profile, *d);
      json j;
      j["profit_estimate"] = pe.estimate;
      j["stderr"] = pe.stderr_;
      j["bound"] = br.total;
      j["bound_hypothesis_ok"] = br.hypothesis.ok;
      j["budget_balance_condition"] =
          analysis::budget_balance_condition(profile);
      out << j.dump(2) << "\n";
      return 0;
    }

    if (sub_sweep->parsed()) {
      SweepConfig cfg;
      if (o_cfg->count() > 0) cfg = load_sweep_config(sweep_config_path);
      if (o_n->count() > 0) cfg.n = sw_n;
      if (o_chat->count() > 0) cfg.c_hat = sw_c_hat;
      if (o_etas->count() > 0) cfg.etas = sw_etas;
      if (o_pi1->count() > 0) cfg.pi1 = sw_pi1;
      if (o_dist->count() > 0) cfg.dist = sw_dist;
      if (o_samples->count() > 0) cfg.samples = sw_samples;
      if (o_seed->count() > 0) cfg.seed = sw_seed;
      if (o_shards->count() > 0) cfg.shards = sw_shards;
      if (o_out->count() > 0) cfg.out_dir = sw_out;
      const auto rows = run_sweep(cfg);
      const auto files = emit_plot_data(rows, cfg.out_dir);
      json j;
      j["files"] = files;
      json jr = json::array();
      for (const auto& r : rows)
        jr.push_back({{"eta", r.eta},
                      {"valid", r.valid},
                      {"diagnostic", r.diagnostic}});
      j["rows"] = jr;
      out << j.dump(2) << "\n";
      return 0;
    }

    // oracle
    oracle::SuiteConfig scfg;
    scfg.quick = oracle_quick;
    scfg.seed = oracle_seed;
    const auto reports = oracle::run_agreement_suite(scfg);
    json arr = json::array();
    for (const auto& r : reports)
      arr.push_back({{"name", r.name},
                     {"oracle_value", r.oracle_value},
                     {"closed_form_value", r.closed_form_value},
                     {"abs_dev", r.abs_dev},
                     {"rel_dev", r.rel_dev},
                     {"tolerance", r.tolerance},
                     {"pass", r.pass},
                     {"cases", r.cases}});
    out << arr.dump(2) << "\n";
    return oracle::all_pass(reports) ? 0 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace windauction::cli
