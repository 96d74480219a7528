#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "ncg/errors.hpp"
#include "ncg/io.hpp"

using namespace ncg;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("ncg_io_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string make_prostate_csv(const TempDir& tmp) {
  // synthetic stand-in with the real schema: 97 rows, 8 covariates + lpsa
  std::string content = "lcavol,lweight,age,lbph,svi,lcp,gleason,pgg45,lpsa\n";
  for (int i = 0; i < 97; ++i) {
    char row[256];
    std::snprintf(row, sizeof(row), "%.4f,%.4f,%d,%.4f,%d,%.4f,%d,%d,%.4f\n",
                  0.1 * i - 3.0, 3.0 + 0.01 * i, 50 + (i % 30), -1.0 + 0.05 * i, i % 2,
                  -0.5 + 0.03 * i, 6 + (i % 3), 5 * (i % 20), 1.0 + 0.03 * i);
    content += row;
  }
  const std::string path = tmp.file("prostate.csv");
  write_text_file(path, content);
  return path;
}

}  // namespace

TEST_CASE("load_csv parses a small file") {
  TempDir tmp;
  const std::string path = tmp.file("small.csv");
  write_text_file(path, "y,x1\n1,2\n3,4\n5,6\n");
  const Dataset d = load_csv(path, "y");
  CHECK(d.n() == 3);
  CHECK(d.p() == 1);
  CHECK(d.y[0] == 1.0);
  CHECK(d.y[1] == 3.0);
  CHECK(d.y[2] == 5.0);
  CHECK(d.X(0, 0) == 2.0);
}

TEST_CASE("load_csv errors carry location and name available columns") {
  TempDir tmp;
  const std::string path = tmp.file("bad.csv");
  write_text_file(path, "a,b\n1,2\n3,oops\n");
  try {
    load_csv(path, "a");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
    CHECK(e.col() == 2);
  }

  write_text_file(path, "a,b\n1,2\n");
  try {
    load_csv(path, "missing");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("a, b") != std::string::npos);
  }

  CHECK_THROWS_AS(load_csv(tmp.file("nonexistent.csv"), "y"), ParseError);

  // short row
  write_text_file(path, "a,b\n1\n");
  CHECK_THROWS_AS(load_csv(path, "a"), ParseError);
}

TEST_CASE("csv emission round-trips doubles exactly") {
  TempDir tmp;
  PosteriorDraws draws;
  draws.kept = 3;
  draws.beta_draws.resize(3, 2);
  draws.beta_draws << 0.1234567890123456789, -1e-15, M_PI, 2.0 / 3.0, 1e300, -0.0;
  draws.sigma2_draws.resize(3);
  draws.sigma2_draws << 0.9999999999999999, 1e-12, 17.0;
  GibbsConfig cfg;
  cfg.burn_in = 10;
  cfg.thin = 2;

  const nlohmann::json config = {{"kind", "unit-test"}};
  const std::string path = tmp.file("draws.csv");
  write_text_file(path, draws_csv(draws, cfg, config));

  const Dataset back = load_csv(path, "sigma2");  // comments skipped, header parsed
  CHECK(back.n() == 3);
  CHECK(back.p() == 3);  // iter, beta_1, beta_2
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(back.X(i, 1) == draws.beta_draws(i, 0));
    CHECK(back.X(i, 2) == draws.beta_draws(i, 1));
    CHECK(back.y[i] == draws.sigma2_draws[i]);
  }
  CHECK(back.X(0, 0) == 12.0);  // burn_in + thin
  CHECK(back.X(1, 0) == 14.0);
}

TEST_CASE("emitted files embed the resolved config") {
  const nlohmann::json config = {{"seed", 7}, {"engine", "gibbs"}};
  const std::string prologue = csv_comment_prologue(config);
  CHECK(prologue.find("# config: ") == 0);
  CHECK(prologue.find("\"seed\":7") != std::string::npos);
  CHECK(prologue.find("config_hash") != std::string::npos);

  std::vector<DensityCurvePoint> curve{{0.0, -1.0, 0.01}};
  const std::string csv = density_curve_csv(curve, config);
  CHECK(csv.find("# config: ") == 0);
  CHECK(csv.find("x,log_density,stderr\n") != std::string::npos);
}

TEST_CASE("run config JSON round-trip and overrides") {
  RunConfig cfg;
  cfg.engine = Engine::kVb;
  cfg.preset = "ncg10";
  cfg.hyper = preset_hyperparameters("ncg10");
  cfg.seed = 42;
  cfg.standardize = true;
  cfg.threads = 3;
  cfg.gibbs.total_iters = 500;
  cfg.cavi.tol = 1e-6;
  cfg.em = EmMode::kMfvb;

  const nlohmann::json j = run_config_to_json(cfg);
  const RunConfig back = run_config_from_json(j);
  CHECK(back.engine == Engine::kVb);
  CHECK(back.preset == "ncg10");
  CHECK(back.hyper.depth == 10);
  CHECK(back.seed == 42);
  CHECK(back.standardize);
  CHECK(back.threads == 3);
  CHECK(back.gibbs.total_iters == 500);
  CHECK(back.cavi.tol == 1e-6);
  CHECK(back.em == EmMode::kMfvb);

  // partial JSON overrides only the present keys
  const RunConfig merged = run_config_from_json({{"seed", 9}}, back);
  CHECK(merged.seed == 9);
  CHECK(merged.preset == "ncg10");

  // hash changes with content
  CHECK(config_hash_hex(j) != config_hash_hex({{"seed", 9}}));

  CHECK_THROWS_AS(run_config_from_json({{"engine", "mcmc"}}), ValidationError);
}

TEST_CASE("prostate pipeline") {
  TempDir tmp;
  const std::string path = make_prostate_csv(tmp);

  const auto [train, test] = prostate_pipeline(path, 2024);
  CHECK(train.n() == 67);
  CHECK(test.n() == 30);
  CHECK(train.p() == 20);
  CHECK(test.p() == 20);

  // standardization with train statistics: train columns have mean ~0, sd ~1
  for (Eigen::Index j = 0; j < train.p(); ++j) {
    CHECK(std::fabs(train.X.col(j).mean()) < 1e-10);
    const double var = (train.X.col(j).array() - train.X.col(j).mean()).square().sum() /
                       (train.n() - 1);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-8));
  }
  CHECK(std::fabs(train.y.mean()) < 1e-10);

  // determinism: same seed, same noise columns and split
  const auto [train2, test2] = prostate_pipeline(path, 2024);
  CHECK(train.X == train2.X);
  CHECK(train.y == train2.y);
  CHECK(test.X == test2.X);

  // different seed changes the split
  const auto [train3, test3] = prostate_pipeline(path, 2025);
  CHECK(train.y != train3.y);

  // unstandardized variant keeps raw scale
  const auto [train4, test4] = prostate_pipeline(path, 2024, false);
  CHECK(train4.X.col(2).mean() > 10.0);  // age column

  // schema violations
  write_text_file(tmp.file("short.csv"), "lcavol,lpsa\n1,2\n");
  CHECK_THROWS_AS(prostate_pipeline(tmp.file("short.csv"), 1), ParseError);
}

TEST_CASE("report serializers include inputs") {
  const nlohmann::json config = {{"seed", 5}};
  TailConditionReport tail;
  tail.k_n = 0.01;
  tail.bound = 1e-4;
  tail.satisfied = true;
  tail.n_mc = 1000;
  ConsistencyCheckInput input{100, 1000, 5, 0.5};
  Hyperparameters h = preset_hyperparameters("ncg2");
  const auto tj = nlohmann::json::parse(tail_report_json(tail, input, h, config));
  CHECK(tj.at("inputs").at("p_n") == 1000);
  CHECK(tj.at("satisfied") == true);
  CHECK(tj.at("config").at("seed") == 5);

  DensityFloorReport floor;
  floor.e_n = 2.0;
  floor.neg_log_over_log_pn = 0.3;
  const auto fj = nlohmann::json::parse(floor_report_json(floor, h, 1000, config));
  CHECK(fj.at("inputs").at("e_n") == 2.0);
  CHECK(fj.at("neg_log_over_log_pn") == 0.3);

  RunReport rep;
  rep.scenario = "sim3";
  rep.sigma2 = 1.0;
  rep.n_train = 250;
  rep.replications = 2;
  rep.methods.push_back({"ncg10", 0.016, 0.013, 0.05, 0.2, 0.0, 0.0, 0});
  rep.dataset_hashes = {1, 2};
  const std::string csv = run_report_csv(rep, config);
  CHECK(csv.find("method,mse_mean,mse_sd,fp_mean,fp_sd,fn_mean,fn_sd,faults\n") !=
        std::string::npos);
  CHECK(csv.find("ncg10,") != std::string::npos);
  const std::string table = run_report_table(rep);
  CHECK(table.find("MSE (sd)") != std::string::npos);
  const auto rj = nlohmann::json::parse(run_report_json(rep, config));
  CHECK(rj.at("methods").size() == 1);
  CHECK(rj.at("dataset_hashes").size() == 2);
}
