#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ncg/errors.hpp"
#include "ncg/model.hpp"
#include "ncg/rng.hpp"

using namespace ncg;

TEST_CASE("local_scale products") {
  GibbsState s;
  s.beta = Eigen::VectorXd::Zero(1);
  s.z = Eigen::MatrixXd::Ones(2, 1);
  CHECK(local_scale(s, 0) == 1.0);

  s.z(0, 0) = 2.0;
  s.z(1, 0) = 0.5;
  CHECK(local_scale(s, 0) == 1.0);

  s.z.resize(3, 1);
  s.z << 2.0, 3.0, 4.0;
  CHECK(local_scale(s, 0) == 24.0);
}

TEST_CASE("local_scale is level-permutation invariant") {
  Rng rng(7);
  GibbsState s;
  s.beta = Eigen::VectorXd::Zero(3);
  s.z.resize(5, 3);
  for (Eigen::Index k = 0; k < 5; ++k)
    for (Eigen::Index j = 0; j < 3; ++j) s.z(k, j) = std::exp(6.0 * rng.normal());
  const double before = local_scale(s, 1);
  std::vector<Eigen::Index> perm{4, 2, 0, 3, 1};
  GibbsState t = s;
  for (Eigen::Index k = 0; k < 5; ++k) t.z.row(k) = s.z.row(perm[static_cast<size_t>(k)]);
  CHECK(local_scale(t, 1) == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("hyperparameter presets") {
  const auto ncg2 = preset_hyperparameters("ncg2");
  CHECK(ncg2.depth == 2);
  CHECK(ncg2.shapes.size() == 2);
  CHECK(ncg2.shapes[0] == 0.5);
  CHECK(ncg2.phi == 1.0);
  CHECK(ncg2.c0 == 0.01);
  CHECK(ncg2.d0 == 0.01);

  const auto ncg10 = preset_hyperparameters("ncg10");
  CHECK(ncg10.depth == 10);

  const auto hs = preset_hyperparameters("horseshoe");
  CHECK(hs.depth == 4);
  CHECK((hs.shapes.array() == 0.5).all());
  CHECK(hs.phi == 1.0);

  CHECK_THROWS_AS(preset_hyperparameters("nope"), ValidationError);
}

TEST_CASE("validate_hyperparameters") {
  // all-0.5 shapes: valid but the prior second moment is infinite
  auto rep = validate_hyperparameters(preset_hyperparameters("ncg10"));
  CHECK(rep.ok);
  CHECK(!rep.warnings.empty());

  Hyperparameters bad = make_hyperparameters(2);
  bad.phi = 0.0;
  rep = validate_hyperparameters(bad);
  CHECK(!rep.ok);
  CHECK_THROWS_AS(require_valid(bad), ValidationError);

  Hyperparameters h4 = make_hyperparameters(4);
  h4.shapes << 0.5, 1.5, 0.5, 1.5;
  rep = validate_hyperparameters(h4);
  CHECK(rep.ok);
  CHECK(rep.warnings.empty());

  // every failed field is listed
  Hyperparameters multi = make_hyperparameters(2);
  multi.phi = -1.0;
  multi.c0 = 0.0;
  multi.shapes[1] = -2.0;
  rep = validate_hyperparameters(multi);
  CHECK(rep.errors.size() == 3);
}

TEST_CASE("dataset validation") {
  Dataset d;
  d.X = Eigen::MatrixXd::Ones(3, 2);
  d.y = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(d.validate(), ValidationError);

  d.y = Eigen::VectorXd::Ones(3);
  d.X(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(d.validate(), ValidationError);

  d.X(1, 1) = 0.0;
  CHECK_NOTHROW(d.validate());
}

TEST_CASE("GibbsState serialization round-trips bit-exactly") {
  Rng rng(1234);
  GibbsState s;
  s.beta.resize(4);
  for (Eigen::Index i = 0; i < 4; ++i)
    s.beta[i] = rng.normal() * std::pow(10.0, static_cast<double>(i * 3 - 5));
  s.z.resize(3, 4);
  for (Eigen::Index k = 0; k < 3; ++k)
    for (Eigen::Index j = 0; j < 4; ++j) s.z(k, j) = std::exp(20.0 * rng.normal());
  s.z(0, 0) = kZClampMin;
  s.z(2, 3) = kZClampMax;
  s.sigma2 = 0.1234567890123456789;

  const GibbsState back = deserialize_gibbs_state(serialize_gibbs_state(s));
  CHECK(back.beta.size() == s.beta.size());
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(back.beta[i] == s.beta[i]);
  for (Eigen::Index k = 0; k < 3; ++k)
    for (Eigen::Index j = 0; j < 4; ++j) CHECK(back.z(k, j) == s.z(k, j));
  CHECK(back.sigma2 == s.sigma2);
}
