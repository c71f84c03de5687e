#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "helpers.hpp"
#include "windauction/dist.hpp"
#include "windauction/numerics.hpp"

using namespace windauction;
using testfx::rel_close;
namespace ref = testfx::ref;

TEST_CASE("weibull inverse cdf matches the closed form") {
  const auto d = testfx::wind();
  CHECK(d.inv_cdf(0.0) == 0.0);
  CHECK(rel_close(d.inv_cdf(5.0 / 6.0), ref::inv_5_6, 1e-14));
  CHECK(rel_close(d.inv_cdf(5.0 / 12.0), ref::inv_5_12, 1e-14));
  CHECK_THROWS_AS(d.inv_cdf(-0.01), std::domain_error);
  CHECK_THROWS_AS(d.inv_cdf(1.0), std::domain_error);
  CHECK_THROWS_AS(d.inv_cdf(1.0 - 1e-13), std::domain_error);
  CHECK(d.inv_cdf(1.0 - 2e-12) > 0.0);  // just inside the allowed region
}

TEST_CASE("weibull density and cdf vanish at and below zero") {
  const auto d = testfx::wind();
  CHECK(d.pdf(-3.0) == 0.0);
  CHECK(d.pdf(0.0) == 0.0);
  CHECK(d.cdf(-3.0) == 0.0);
  CHECK(d.cdf(0.0) == 0.0);
  CHECK(d.pdf(500.0) > 0.0);
  CHECK(rel_close(d.cdf(ref::lambda), ref::cdf_at_lambda, 1e-14));
}

TEST_CASE("weibull mean and partial mean") {
  const auto d = testfx::wind();
  CHECK(rel_close(d.mean(), ref::mean, 1e-13));
  CHECK(std::abs(d.mean() - 1337.0) < 1.0);
  CHECK(d.partial_mean(0.0) == 0.0);
  CHECK(rel_close(d.partial_mean(ref::lambda), ref::g_at_lambda, 1e-13));
  CHECK(rel_close(d.partial_mean(ref::lambda),
                  ref::lambda * ref::gamma32_at_1, 1e-13));
  CHECK(rel_close(d.partial_mean(30.0 * ref::lambda), d.mean(), 1e-12));
  CHECK_THROWS_AS(d.partial_mean(-1.0), std::domain_error);

  // Quadrature cross-check of the incomplete-gamma closed form.
  const auto q = num::integrate([&](double w) { return w * d.pdf(w); }, 0.0,
                                ref::lambda, 1e-10, 1e-8);
  REQUIRE(q.converged);
  CHECK(rel_close(q.value, d.partial_mean(ref::lambda), 1e-8));
}

TEST_CASE("partial mean for general shape agrees with an independent form") {
  // G(z) = z F(z) - int_0^z F(w) dw gives a second route to the same value.
  for (double k : {0.8, 1.0, 3.4}) {
    const dist::WeibullDistribution d(k, 100.0);
    for (double z : {15.0, 60.0, 140.0, 320.0}) {
      const auto q = num::integrate([&](double w) { return d.cdf(w); }, 0.0,
                                    z, 1e-11, 1e-12);
      REQUIRE(q.converged);
      CHECK(rel_close(d.partial_mean(z), z * d.cdf(z) - q.value, 1e-8));
    }
    CHECK(rel_close(d.partial_mean(25000.0), d.mean(), 1e-8));
    // Nondecreasing in z, up to quadrature noise in the general-k branch.
    double prev = 0.0;
    for (int j = 1; j <= 40; ++j) {
      const double cur = d.partial_mean(j * 10.0);
      CHECK(cur >= prev - 1e-8 * std::max(1.0, prev));
      prev = cur;
    }
  }
}

TEST_CASE("lower incomplete gamma at 3/2 crosses its series seam smoothly") {
  CHECK(num::lower_gamma_three_halves(0.0) == 0.0);
  CHECK(rel_close(num::lower_gamma_three_halves(1.0), ref::gamma32_at_1,
                  1e-14));
  CHECK(rel_close(num::lower_gamma_three_halves(std::log(2.0)),
                  ref::gamma32_at_ln2, 1e-14));
  CHECK_THROWS_AS(num::lower_gamma_three_halves(-0.1), std::domain_error);
  // Series branch below 0.75 and erf branch above must agree across the
  // seam. Substituting t = u^2 removes the sqrt kink, so the quadrature
  // oracle is smooth: int sqrt(t) e^-t dt = 2 int u^2 e^-(u^2) du.
  for (double x : {0.7499, 0.74999999, 0.75, 0.7500001, 0.7501}) {
    const auto q = num::integrate(
        [](double u) { return 2.0 * u * u * std::exp(-u * u); }, 0.0,
        std::sqrt(x), 1e-13, 1e-15);
    REQUIRE(q.converged);
    CHECK(rel_close(num::lower_gamma_three_halves(x), q.value, 1e-12));
  }
}

TEST_CASE("g of inverse cdf: pins, quadrature identity, derivative") {
  const auto d = testfx::wind();
  CHECK(d.g_of_inv_cdf(0.0) == 0.0);
  CHECK(rel_close(d.g_of_inv_cdf(0.5), ref::g_inv_half, 1e-13));
  CHECK(rel_close(d.g_of_inv_cdf(5.0 / 6.0), ref::g_inv_5_6, 1e-13));
  CHECK_THROWS_AS(d.g_of_inv_cdf(1.0), std::domain_error);

  // G(F^-1(rho)) = int_0^rho F^-1(z) dz.
  for (double rho : {0.2, 0.5, 0.85}) {
    const auto q = num::integrate([&](double z) { return d.inv_cdf(z); }, 0.0,
                                  rho, 1e-10, 1e-8);
    REQUIRE(q.converged);
    CHECK(rel_close(d.g_of_inv_cdf(rho), q.value, 1e-8));
  }

  // d/drho G(F^-1(rho)) = F^-1(rho) on interior points.
  const double h = 1e-6;
  for (double rho = 0.1; rho < 0.95; rho += 0.1) {
    const double fd =
        (d.g_of_inv_cdf(rho + h) - d.g_of_inv_cdf(rho - h)) / (2.0 * h);
    CHECK(rel_close(fd, d.inv_cdf(rho), 1e-4));
  }
}

TEST_CASE("g of inverse cdf is nondecreasing and midpoint-convex") {
  const auto weib = testfx::wind();
  const auto table = testfx::tabulate(weib, 4000, 1.0 - 1e-9);
  const dist::GenerationDistribution* dists[] = {&weib, &table};
  for (const auto* d : dists) {
    std::vector<double> grid, vals;
    for (int j = 0; j <= 200; ++j) grid.push_back(0.999 * j / 200.0);
    for (double r : grid) vals.push_back(d->g_of_inv_cdf(r));
    for (std::size_t j = 1; j < vals.size(); ++j)
      CHECK(vals[j] >= vals[j - 1] - 1e-9);
    for (std::size_t a = 0; a + 2 < grid.size(); a += 7) {
      for (std::size_t b = a + 2; b < grid.size(); b += 13) {
        const double mid = d->g_of_inv_cdf(0.5 * (grid[a] + grid[b]));
        CHECK(mid <= 0.5 * (vals[a] + vals[b]) + 1e-9);
      }
    }
  }
  // The probe pair called out in the contract.
  CHECK(weib.g_of_inv_cdf(0.4) <=
        0.5 * (weib.g_of_inv_cdf(0.2) + weib.g_of_inv_cdf(0.6)) + 1e-12);
}

TEST_CASE("cdf and inverse cdf round-trip on a dense grid") {
  const auto weib = testfx::wind();
  const dist::WeibullDistribution heavy(0.9, 42.0);
  for (int j = 0; j <= 2000; ++j) {
    const double rho = j * (1.0 - 1e-6) / 2000.0;
    CHECK(std::abs(weib.cdf(weib.inv_cdf(rho)) - rho) < 1e-10);
    CHECK(std::abs(heavy.cdf(heavy.inv_cdf(rho)) - rho) < 1e-10);
  }
  // w-side round trip.
  for (double w : {1.0, 250.0, 1509.0, 3300.0}) {
    CHECK(rel_close(weib.inv_cdf(weib.cdf(w)), w, 1e-10));
  }
}

TEST_CASE("sampling is deterministic and calibrated") {
  const auto d = testfx::wind();
  auto rng1 = num::make_stream(4242, 0);
  auto rng2 = num::make_stream(4242, 0);
  for (int j = 0; j < 1000; ++j) CHECK(d.sample(rng1) == d.sample(rng2));

  auto rng = num::make_stream(90125, 0);
  const int n = 1000000;
  double sum = 0.0, sumsq = 0.0;
  int below_lambda = 0;
  for (int j = 0; j < n; ++j) {
    const double w = d.sample(rng);
    sum += w;
    sumsq += w * w;
    if (w <= ref::lambda) ++below_lambda;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sumsq - sum * sum / n) / (n - 1) / n);
  CHECK(std::abs(mean - 1337.0) < 3.0 * se + 1.0);  // stated mean is rounded
  const double p = static_cast<double>(below_lambda) / n;
  const double se_p = std::sqrt(ref::cdf_at_lambda *
                                (1.0 - ref::cdf_at_lambda) / n);
  CHECK(std::abs(p - ref::cdf_at_lambda) < 3.0 * se_p);
}

TEST_CASE("tabulated distribution reproduces its source") {
  const auto weib = testfx::wind();
  const auto table = testfx::tabulate(weib, 10000, 1.0 - 1e-6);
  for (double rho = 0.01; rho < 0.99; rho += 0.013) {
    CHECK(std::abs(table.inv_cdf(rho) - weib.inv_cdf(rho)) < 0.01);
  }
  for (double w = 50.0; w < 4000.0; w += 97.0) {
    CHECK(std::abs(table.cdf(w) - weib.cdf(w)) < 1e-6);
    CHECK(std::abs(table.partial_mean(w) - weib.partial_mean(w)) < 0.01);
  }
  CHECK(std::abs(table.mean() - weib.mean()) < 0.01);
  // Round trip below the tabulated ceiling.
  for (double rho = 0.0; rho < table.cdf_max(); rho += 0.02) {
    CHECK(std::abs(table.cdf(table.inv_cdf(rho)) - rho) < 1e-10);
  }
  // At and above the ceiling the tail mass sits at w_max.
  CHECK(table.inv_cdf(table.cdf_max()) == table.w_max());
  CHECK(table.cdf(table.w_max()) == 1.0);
  CHECK(table.partial_mean(table.w_max()) == table.mean());
}

TEST_CASE("tabulated distribution rejects malformed tables") {
  using dist::TabulatedDistribution;
  using P = std::pair<double, double>;
  CHECK_THROWS_AS(TabulatedDistribution(std::vector<P>{{0.0, 0.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      TabulatedDistribution(std::vector<P>{{1.0, 0.0}, {2.0, 0.5}}),
      std::invalid_argument);  // must start at (0, 0)
  CHECK_THROWS_AS(
      TabulatedDistribution(std::vector<P>{{0.0, 0.0}, {2.0, 0.5}, {2.0, 0.6}}),
      std::invalid_argument);  // w not strictly increasing
  CHECK_THROWS_AS(
      TabulatedDistribution(std::vector<P>{{0.0, 0.0}, {2.0, 0.5}, {3.0, 0.5}}),
      std::invalid_argument);  // cdf not strictly increasing
  CHECK_THROWS_AS(
      TabulatedDistribution(std::vector<P>{{0.0, 0.0}, {2.0, 1.0}}),
      std::invalid_argument);  // cdf must stay below 1
  CHECK_NOTHROW(
      TabulatedDistribution(std::vector<P>{{0.0, 0.0}, {2.0, 0.999}}));
}

TEST_CASE("table csv loading") {
  testfx::TempDir tmp("table");
  const auto good = tmp.write(
      "good.csv", "w_kw,cdf\n0,0\n500,0.1\n1500,0.6\n3000,0.99\n");
  const auto d = dist::load_table_csv(good);
  CHECK(d->cdf(1500.0) == 0.6);        // exact at a grid node
  CHECK(d->inv_cdf(0.99) == 3000.0);   // quantile at the tabulated ceiling
  CHECK(d->cdf(3000.0) == 1.0);

  const auto bad_header = tmp.write("bad_header.csv", "w,cdf\n0,0\n1,0.5\n");
  CHECK_THROWS_AS(dist::load_table_csv(bad_header), std::runtime_error);

  const auto bad_row = tmp.write("bad_row.csv", "w_kw,cdf\n0,0\n1,oops\n");
  try {
    dist::load_table_csv(bad_row);
    FAIL("expected a parse failure");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("bad_row.csv") != std::string::npos);
    CHECK(msg.find(":3") != std::string::npos);  // line number of the bad row
  }
  CHECK_THROWS_AS(dist::load_table_csv(tmp.file("missing.csv")),
                  std::runtime_error);
}

TEST_CASE("distribution spec strings") {
  const auto w = dist::parse_spec("weibull:k=2,lambda=1509");
  CHECK(rel_close(w->mean(), ref::mean, 1e-13));
  CHECK(w->describe().find("weibull") != std::string::npos);

  testfx::TempDir tmp("spec");
  const auto path =
      tmp.write("t.csv", "w_kw,cdf\n0,0\n1000,0.4\n2500,0.95\n");
  const auto t = dist::parse_spec("table:" + path);
  CHECK(t->describe().find("table") != std::string::npos);

  CHECK_THROWS_AS(dist::parse_spec("weibull:k=2"), std::invalid_argument);
  CHECK_THROWS_AS(dist::parse_spec("weibull:k=2,lambda=1509,x=1"),
                  std::invalid_argument);
  CHECK_THROWS_AS(dist::parse_spec("normal:mu=0"), std::invalid_argument);
  CHECK_THROWS_AS(dist::parse_spec(""), std::invalid_argument);
  CHECK_THROWS_AS(dist::parse_spec("weibull:k=zero,lambda=1"),
                  std::invalid_argument);
}

TEST_CASE("weibull rejects bad parameters") {
  CHECK_THROWS_AS(dist::WeibullDistribution(0.0, 100.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(dist::WeibullDistribution(2.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(dist::WeibullDistribution(-1.0, 100.0),
                  std::invalid_argument);
}
