#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ncg/errors.hpp"
#include "ncg/prior_analysis.hpp"
#include "ncg/special_math.hpp"
#include "support/oracles.hpp"
#include "support/stats.hpp"

using namespace ncg;
using namespace ncg::test;

namespace {

Hyperparameters make_h(int depth, double common_shape, double phi) {
  Hyperparameters h = make_hyperparameters(depth);
  h.shapes.setConstant(common_shape);
  h.phi = phi;
  return h;
}

Hyperparameters make_h(std::vector<double> shapes, double phi) {
  Hyperparameters h = make_hyperparameters(static_cast<int>(shapes.size()));
  for (size_t k = 0; k < shapes.size(); ++k) h.shapes[static_cast<Eigen::Index>(k)] = shapes[k];
  h.phi = phi;
  return h;
}

std::vector<double> chain_draws(const Hyperparameters& h, long n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(static_cast<size_t>(n));
  for (auto& x : out) x = sample_prior_scale_chain(h, rng);
  return out;
}

std::vector<double> product_draws(const Hyperparameters& h, long n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(static_cast<size_t>(n));
  for (auto& x : out) x = sample_prior_scale_product(h, rng);
  return out;
}

}  // namespace

TEST_CASE("chain sampler moments") {
  // single level: plain Gamma(a, b)
  auto draws = chain_draws(make_h({2.0}, 3.0), 1000000, 11);
  CHECK(mean(draws) == doctest::Approx(2.0 / 3.0).epsilon(0.005));

  // tower property: E[z1] = c1/(c2-1) for N=2
  draws = chain_draws(make_h({2.0, 3.0}, 1.0), 1000000, 12);
  CHECK(mean(draws) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("chain sampler median matches the quadrature CDF for the Beta-prime case") {
  // N=2, c=(1,1), phi=1 is Beta-prime(1,1); oracle CDF built by quadrature
  const GridCdf cdf(
      [&](double lam) { return std::log(product_scale_density_n2(lam, 1.0, 1.0, 1.0)); }, 1.0);
  const double oracle_median = cdf.quantile(0.5);
  // the quadrature density should match the closed form 1/(1+x)^2, median 1
  CHECK(product_scale_density_n2(0.7, 1.0, 1.0, 1.0) ==
        doctest::Approx(1.0 / (1.7 * 1.7)).epsilon(1e-8));
  CHECK(oracle_median == doctest::Approx(1.0).epsilon(1e-4));

  auto draws = chain_draws(make_h({1.0, 1.0}, 1.0), 1000000, 13);
  std::sort(draws.begin(), draws.end());
  CHECK(draws[draws.size() / 2] == doctest::Approx(oracle_median).epsilon(0.02));
}

TEST_CASE("product sampler equals chain sampler in distribution") {
  // Proposition-1 equivalence on five presets, two-sample KS < 0.01 at 1e5 draws
  const std::vector<Hyperparameters> presets = {
      make_h(2, 0.5, 1.0), make_h(10, 0.5, 1.0), make_h(4, 0.5, 1.0),
      make_h({2.0, 3.0}, 2.0), make_h({1.2, 2.5, 0.7}, 0.5)};
  std::uint64_t seed = 100;
  for (const auto& h : presets) {
    const auto a = chain_draws(h, 100000, seed++);
    const auto b = product_draws(h, 100000, seed++);
    INFO("depth=", h.depth);
    CHECK(ks_two_sample(a, b) < 0.01);
  }
}

TEST_CASE("product sampler basics") {
  // N=1 reduces to the same gamma draw as the chain sampler
  const auto a = chain_draws(make_h({1.7}, 2.5), 1000, 77);
  const auto b = product_draws(make_h({1.7}, 2.5), 1000, 77);
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  // N=2, c=(2,3), phi=1: product of means 2 * 1/2
  const auto draws = product_draws(make_h({2.0, 3.0}, 1.0), 1000000, 78);
  CHECK(mean(draws) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("horseshoe embedding: product representation vs half-Cauchy hierarchy") {
  const long n = 100000;
  const Hyperparameters h = make_h(4, 0.5, 1.0);
  Rng rng1(2024), rng2(4048);
  std::vector<double> beta_ncg(n), beta_hc(n);
  for (auto& b : beta_ncg) b = std::sqrt(sample_prior_scale_product(h, rng1)) * rng1.normal();
  for (auto& b : beta_hc) {
    const double global = sample_half_cauchy(1.0, rng2);
    const double local = sample_half_cauchy(global, rng2);
    b = local * rng2.normal();
  }
  CHECK(ks_two_sample(beta_ncg, beta_hc) < 0.01);
}

TEST_CASE("marginal_log_density is even and matches nested quadrature at N=2") {
  const Hyperparameters h = make_h({1.0, 1.0}, 1.0);

  // evenness holds exactly under common random numbers
  Rng rng(5);
  const auto curve = density_curve({-1.3, 1.3}, h, 20000, rng);
  CHECK(curve.front().log_density == curve.back().log_density);

  // nested quadrature oracle at x = 1
  const double oracle = std::log(oracle_marginal_density_n2(1.0, 1.0, 1.0, 1.0));
  Rng rng2(6);
  const auto est = marginal_log_density(1.0, h, 200000, rng2);
  CHECK(std::fabs(est.log_density - oracle) < 3.0 * est.stderr_log + 1e-6);

  CHECK_THROWS_AS(marginal_log_density(1.0, h, 100, rng2), ValidationError);
}

TEST_CASE("marginal density decreases in |x| for small common shape") {
  const Hyperparameters h = make_h(2, 0.15, 1.0);
  Rng rng(7);
  const auto curve = density_curve({0.5, 1.0, 2.0, 4.0}, h, 100000, rng);
  for (size_t i = 1; i < curve.size(); ++i)
    CHECK(curve[i].log_density < curve[i - 1].log_density);

  // quadrature oracle agrees on the shape (chain form: G(z1; c1, z2) G(z2; c2, phi))
  double prev = oracle_marginal_density_n2(0.5, 0.15, 0.15, 1.0);
  for (double x : {1.0, 2.0, 4.0}) {
    const double f = oracle_marginal_density_n2(x, 0.15, 0.15, 1.0);
    CHECK(f < prev);
    prev = f;
  }
}

TEST_CASE("density curves: pole sharpens with depth, flat head for large shapes") {
  // deeper chains out-diverge shallow ones near the pole (the N=8/N=2 gap
  // flips sign by x ~ 0.05, so probe well inside the asymptotic regime)
  Rng rng8(88), rng2(88);
  Hyperparameters h8 = make_hyperparameters(8);
  h8.shapes[0] = 0.15;
  Hyperparameters h2 = make_hyperparameters(2);
  h2.shapes[0] = 0.15;
  const auto c8 = density_curve({1e-3}, h8, 2000000, rng8);
  const auto c2 = density_curve({1e-3}, h2, 2000000, rng2);
  CHECK(c8.front().log_density >
        c2.front().log_density + 3.0 * (c8.front().stderr_log + c2.front().stderr_log));

  // common shape 1.5: the density at 0 is finite for every depth
  // (E[lambda^{-1/2}] = prod Gamma ratios, all finite); the estimate must be
  // stable in n_mc, not growing like a pole
  for (int depth : {2, 4, 8}) {
    Rng ra(99), rb(101);
    const auto small = density_curve({0.0}, make_h(depth, 1.5, 1.0), 50000, ra);
    const auto big = density_curve({0.0}, make_h(depth, 1.5, 1.0), 200000, rb);
    const double joint_se = std::sqrt(small.front().stderr_log * small.front().stderr_log +
                                      big.front().stderr_log * big.front().stderr_log);
    CHECK(std::fabs(small.front().log_density - big.front().log_density) <
          3.0 * joint_se + 0.01);
    CHECK(std::isfinite(big.front().log_density));
  }
}

TEST_CASE("density curve integrates to one") {
  const Hyperparameters h = make_h({1.5, 1.5}, 1.0);
  Rng rng(31);
  std::vector<double> grid;
  const int n_grid = 1001;
  for (int i = 0; i < n_grid; ++i) grid.push_back(-50.0 + 100.0 * i / (n_grid - 1));
  const auto curve = density_curve(grid, h, 50000, rng);
  double integral = 0.0;
  for (size_t i = 1; i < curve.size(); ++i) {
    const double f0 = std::exp(curve[i - 1].log_density);
    const double f1 = std::exp(curve[i].log_density);
    integral += 0.5 * (f0 + f1) * (curve[i].x - curve[i - 1].x);
  }
  CHECK(integral == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("prior_second_moment") {
  CHECK(prior_second_moment(make_h({2.0, 3.0}, 1.0)) == doctest::Approx(1.0));
  CHECK(std::isinf(prior_second_moment(make_h({2.0, 1.0}, 1.0))));
  CHECK(prior_second_moment(make_h({3.0}, 4.0)) == doctest::Approx(0.75));

  // empirical cross-check when all even shapes >= 2 keep beta^4 finite
  const Hyperparameters h = make_h({1.3, 2.5, 0.7, 3.0}, 2.0);
  const double expected = prior_second_moment(h);
  Rng rng(55);
  double acc = 0.0;
  const long n = 10000000;
  for (long i = 0; i < n; ++i) {
    const double b = std::sqrt(sample_prior_scale_product(h, rng)) * rng.normal();
    acc += b * b;
  }
  CHECK(acc / static_cast<double>(n) == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("check_tail_condition") {
  ConsistencyCheckInput input{100, 1000, 5, 0.5};

  // heavy prior mass escapes any small interval
  Hyperparameters heavy = make_h({10.0, 2.0}, 1.0);
  Rng rng(61);
  auto rep = check_tail_condition(heavy, input, 100000, rng);
  CHECK(!rep.satisfied);
  CHECK(rep.tail_mass_estimate > rep.bound);

  // sufficient scaling from the proof: c1 ~ k_n^2 p_n^{-(1+u)} / 100
  const double kn = std::sqrt(5.0 * std::log(1000.0) / 100.0) / 1000.0;
  const double c1 = kn * kn * std::pow(1000.0, -1.5) / 100.0;
  Hyperparameters light = make_h({c1, 2.0}, 1.0);
  Rng rng2(62);
  rep = check_tail_condition(light, input, 1000000, rng2);
  CHECK(rep.k_n == doctest::Approx(kn));
  CHECK(rep.satisfied);
  CHECK(rep.wilson_high < rep.bound);
  CHECK(rep.c1_sufficient_scale == doctest::Approx(kn * kn * std::pow(1000.0, -1.5)));

  // k_n shrinks as p_n grows at fixed n, s_n
  ConsistencyCheckInput bigger = input;
  bigger.p_n = 2000;
  Rng rng3(63);
  const auto rep2 = check_tail_condition(light, bigger, 10000, rng3);
  CHECK(rep2.k_n < rep.k_n);
}

TEST_CASE("check_density_floor") {
  // pole case: density estimate at 0 exceeds 1, ratio clamps to 0
  Rng rng(71);
  auto rep = check_density_floor(make_h(4, 0.15, 1.0), 0.0, 1000, 50000, rng);
  CHECK(rep.neg_log_over_log_pn == 0.0);

  // doubling E_n never increases the density (quadrature oracle, N=2)
  const double f1 = oracle_marginal_density_n2(1.0, 0.5, 0.5, 1.0);
  const double f2 = oracle_marginal_density_n2(2.0, 0.5, 0.5, 1.0);
  CHECK(f2 < f1);
  Rng ra(72), rb(72);
  const auto r1 = check_density_floor(make_h(2, 0.5, 1.0), 1.0, 1000, 100000, ra);
  const auto r2 = check_density_floor(make_h(2, 0.5, 1.0), 2.0, 1000, 100000, rb);
  CHECK(r2.min_log_density < r1.min_log_density);

  // deterministic given the seed
  Rng rc(73), rd(73);
  const auto ra1 = check_density_floor(make_h(2, 0.5, 1.0), 1.5, 500, 20000, rc);
  const auto ra2 = check_density_floor(make_h(2, 0.5, 1.0), 1.5, 500, 20000, rd);
  CHECK(ra1.min_log_density == ra2.min_log_density);
  CHECK(ra1.neg_log_over_log_pn == ra2.neg_log_over_log_pn);
}
