#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ncg/evaluation.hpp"

using namespace ncg;

namespace {

std::vector<MethodConfig> gibbs_methods(long iters, long burnin) {
  std::vector<MethodConfig> methods;
  for (const char* name : {"ncg2", "ncg10"}) {
    MethodConfig m;
    m.name = name;
    m.hyper = preset_hyperparameters(name);
    m.gibbs.total_iters = iters;
    m.gibbs.burn_in = burnin;
    methods.push_back(std::move(m));
  }
  return methods;
}

}  // namespace

TEST_CASE("noisier data yields larger model error for every method") {
  // Simulation 1 Case I at 25 replications, sigma2 = 9 vs 1
  const auto methods = gibbs_methods(6000, 1000);
  Scenario lo = preset_scenario("sim1", CovarianceCase::kIdentity, 1.0, 20, 200, 25);
  Scenario hi = preset_scenario("sim1", CovarianceCase::kIdentity, 9.0, 20, 200, 25);
  const RunReport r_lo = run_replications(lo, methods, 2024, 4);
  const RunReport r_hi = run_replications(hi, methods, 2024, 4);
  for (size_t m = 0; m < methods.size(); ++m) {
    INFO(methods[m].name);
    CHECK(r_hi.methods[m].mse_mean > r_lo.methods[m].mse_mean);
  }
}

TEST_CASE("within a replication every method sees identical data") {
  Scenario s = preset_scenario("sim2", CovarianceCase::kAr1, 1.0, 20, 100, 6);
  const auto methods = gibbs_methods(1200, 300);
  const RunReport report = run_replications(s, methods, 31, 3);
  // the logged hashes are of the shared train/test pair, one per replication,
  // and regenerating the data reproduces them
  CHECK(report.dataset_hashes.size() == 6);
  for (long r = 0; r < 6; ++r) {
    const auto [train, test] = generate_scenario(s, r, 31);
    CHECK(report.dataset_hashes[static_cast<size_t>(r)] == dataset_hash(train, test));
  }
}
