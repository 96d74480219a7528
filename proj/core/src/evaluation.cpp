#include "ncg/evaluation.hpp"

#include <Eigen/Cholesky>

#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <thread>

#include "ncg/errors.hpp"

namespace ncg {

namespace {

// sigma2 for the simulation presets; the tables' magnitudes pin it to 1.
constexpr double kSim3Sigma2 = 1.0;

void accumulate_hash(std::uint64_t& h, const double* data, Eigen::Index count) {
  for (Eigen::Index i = 0; i < count; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &data[i], sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffULL;
      h *= 0x100000001b3ULL;
    }
  }
}

struct RepResult {
  std::vector<double> mse, fp, fn;  // one entry per method; NaN on fault
  std::uint64_t hash = 0;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

Eigen::MatrixXd Scenario::covariance_matrix() const {
  const Eigen::Index p = beta0.size();
  Eigen::MatrixXd cov(p, p);
  switch (covariance) {
    case CovarianceCase::kIdentity:
      cov = Eigen::MatrixXd::Identity(p, p);
      break;
    case CovarianceCase::kAr1:
      for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) cov(i, j) = std::pow(rho, std::abs(i - j));
      break;
    case CovarianceCase::kEqui:
      cov.setConstant(rho);
      cov.diagonal().setOnes();
      break;
    case CovarianceCase::kCustom:
      if (!custom_cov) throw ValidationError({"scenario: custom covariance not provided"});
      cov = *custom_cov;
      break;
  }
  if (cov.rows() != p || cov.cols() != p)
    throw ValidationError({"scenario: covariance dimension mismatch"});
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw ValidationError({"scenario: covariance matrix is not positive definite"});
  return cov;
}

void Scenario::validate() const {
  std::vector<std::string> issues;
  if (beta0.size() < 1) issues.push_back("beta0 must be non-empty");
  if (!(sigma2 > 0.0)) issues.push_back("sigma2 must be positive");
  if (n_train < 1) issues.push_back("n_train must be >= 1");
  if (n_test < 1) issues.push_back("n_test must be >= 1");
  if (replications < 1) issues.push_back("replications must be >= 1");
  if (!issues.empty()) throw ValidationError(issues);
  covariance_matrix();  // throws when not PD
}

Scenario preset_scenario(const std::string& name, CovarianceCase cov, double sigma2,
                         long n_train, long n_test, long replications) {
  Scenario s;
  s.covariance = cov;
  s.sigma2 = sigma2;
  s.n_train = n_train;
  s.n_test = n_test;
  s.replications = replications;
  if (name == "sim1") {
    s.name = "sim1";
    s.beta0.resize(10);
    s.beta0 << 2, 0, 0, 1, 0, 0, 2, 0, 0, 0;
  } else if (name == "sim2") {
    s.name = "sim2";
    s.beta0 = Eigen::VectorXd::Zero(10);
    s.beta0[0] = 1.0;
  } else if (name == "sim3") {
    s.name = "sim3";
    s.beta0.resize(4);
    s.beta0 << 5.6, 5.6, 5.6, 0;
    s.sigma2 = kSim3Sigma2;
    s.covariance = CovarianceCase::kCustom;
    Eigen::MatrixXd cov_mat = Eigen::MatrixXd::Identity(4, 4);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) cov_mat(i, j) = -0.39;
    for (int i = 0; i < 3; ++i) {
      cov_mat(i, 3) = 0.23;
      cov_mat(3, i) = 0.23;
    }
    s.custom_cov = cov_mat;
  } else {
    throw ValidationError({"unknown scenario preset '" + name + "'"});
  }
  s.validate();
  return s;
}

std::pair<Dataset, Dataset> generate_scenario(const Scenario& s, long rep_index,
                                              std::uint64_t base_seed) {
  s.validate();
  const Eigen::MatrixXd cov = s.covariance_matrix();
  const Eigen::MatrixXd chol_l = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
  const Eigen::Index p = s.beta0.size();
  const long n_total = s.n_train + s.n_test;

  Rng rng = Rng::stream(base_seed, {0xda7aULL, static_cast<std::uint64_t>(rep_index)});
  Eigen::MatrixXd x(n_total, p);
  for (long i = 0; i < n_total; ++i)
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = rng.normal();
  x = (x * chol_l.transpose()).eval();

  Eigen::VectorXd y = x * s.beta0;
  const double sd = std::sqrt(s.sigma2);
  for (long i = 0; i < n_total; ++i) y[i] += sd * rng.normal();

  Truth truth{s.beta0, s.sigma2};
  Dataset train{x.topRows(s.n_train), y.head(s.n_train), truth};
  Dataset test{x.bottomRows(s.n_test), y.tail(s.n_test), truth};
  return {train, test};
}

double model_error_mse(const Eigen::VectorXd& beta_hat, const Dataset& test) {
  if (!test.truth) throw ValidationError({"model_error_mse: test set carries no truth"});
  if (beta_hat.size() != test.p())
    throw ValidationError({"model_error_mse: estimate dimension mismatch"});
  const Eigen::VectorXd diff = test.X * (beta_hat - test.truth->beta0);
  return diff.squaredNorm() / static_cast<double>(test.n());
}

std::pair<long, long> selection_metrics(const std::vector<CoefficientSummary>& summary,
                                        const Eigen::VectorXd& beta0, bool select_by_median) {
  if (static_cast<Eigen::Index>(summary.size()) != beta0.size())
    throw ValidationError({"selection_metrics: dimension mismatch"});
  long fp = 0, fn = 0;
  for (Eigen::Index j = 0; j < beta0.size(); ++j) {
    const auto& s = summary[static_cast<size_t>(j)];
    // default rule: the equal-tailed credible interval excludes zero
    const bool selected = select_by_median ? std::fabs(s.mean) > 2.0 * s.sd
                                           : (s.lower > 0.0 || s.upper < 0.0);
    const bool truly_zero = beta0[j] == 0.0;
    if (selected && truly_zero) ++fp;
    if (!selected && !truly_zero) ++fn;
  }
  return {fp, fn};
}

FitOutput fit_method(const MethodConfig& method, const Dataset& train, Rng rng) {
  FitOutput out;
  if (method.engine == Engine::kGibbs) {
    GibbsConfig cfg = method.gibbs;
    if (method.em == EmMode::kMcem && !cfg.mcem) cfg.mcem = McemConfig{};
    const PosteriorDraws draws = run_gibbs(train, method.hyper, cfg, rng);
    out.summary = summarize(draws, method.interval_level);
    out.beta_hat.resize(train.p());
    for (Eigen::Index j = 0; j < train.p(); ++j)
      out.beta_hat[j] = out.summary[static_cast<size_t>(j)].mean;
  } else {
    const CaviResult fit = (method.em == EmMode::kMfvb)
                               ? run_cavi_em(train, method.hyper, method.cavi,
                                             method.em_max_rounds)
                               : run_cavi(train, method.hyper, method.cavi);
    out.beta_hat = fit.state.mu;
    const double z = 1.959963984540054;  // 97.5% normal quantile
    out.summary.resize(static_cast<size_t>(train.p()));
    for (Eigen::Index j = 0; j < train.p(); ++j) {
      auto& s = out.summary[static_cast<size_t>(j)];
      s.mean = fit.state.mu[j];
      s.sd = std::sqrt(std::max(0.0, fit.state.V(j, j)));
      s.lower = s.mean - z * s.sd;
      s.upper = s.mean + z * s.sd;
    }
  }
  return out;
}

std::uint64_t dataset_hash(const Dataset& train, const Dataset& test) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  accumulate_hash(h, train.X.data(), train.X.size());
  accumulate_hash(h, train.y.data(), train.y.size());
  accumulate_hash(h, test.X.data(), test.X.size());
  accumulate_hash(h, test.y.data(), test.y.size());
  return h;
}

RunReport run_replications(const Scenario& s, const std::vector<MethodConfig>& methods,
                           std::uint64_t base_seed, int threads) {
  s.validate();
  if (methods.empty()) throw ValidationError({"run_replications: no methods given"});
  const long reps = s.replications;
  std::vector<RepResult> results(static_cast<size_t>(reps));

  const auto run_one = [&](long r) {
    auto [train, test] = generate_scenario(s, r, base_seed);
    RepResult res;
    res.hash = dataset_hash(train, test);
    res.mse.resize(methods.size());
    res.fp.resize(methods.size());
    res.fn.resize(methods.size());
    // one stream per replication, shared by every method: identical engine
    // configs then produce identical columns
    const Rng rep_rng = Rng::stream(base_seed, {0xf17ULL, static_cast<std::uint64_t>(r)});
    for (size_t m = 0; m < methods.size(); ++m) {
      try {
        const FitOutput fit = fit_method(methods[m], train, rep_rng);
        res.mse[m] = model_error_mse(fit.beta_hat, test);
        const auto [fp, fn] =
            selection_metrics(fit.summary, s.beta0, methods[m].select_by_median);
        res.fp[m] = static_cast<double>(fp);
        res.fn[m] = static_cast<double>(fn);
      } catch (const std::exception&) {
        res.mse[m] = res.fp[m] = res.fn[m] = std::numeric_limits<double>::quiet_NaN();
      }
    }
    results[static_cast<size_t>(r)] = std::move(res);
  };

  const int workers = std::max(1, threads);
  if (workers == 1) {
    for (long r = 0; r < reps; ++r) run_one(r);
  } else {
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (;;) {
          const long r = next.fetch_add(1);
          if (r >= reps) return;
          run_one(r);
        }
      });
    for (auto& th : pool) th.join();
  }

  RunReport report;
  report.scenario = s.name;
  report.sigma2 = s.sigma2;
  report.n_train = s.n_train;
  report.replications = reps;
  report.base_seed = base_seed;
  report.dataset_hashes.reserve(static_cast<size_t>(reps));
  for (const auto& r : results) report.dataset_hashes.push_back(r.hash);

  for (size_t m = 0; m < methods.size(); ++m) {
    MethodReport mr;
    mr.name = methods[m].name;
    std::vector<double> mse, fp, fn;
    for (const auto& r : results) {
      if (std::isnan(r.mse[m])) {
        ++mr.faults;
        continue;
      }
      mse.push_back(r.mse[m]);
      fp.push_back(r.fp[m]);
      fn.push_back(r.fn[m]);
    }
    mr.mse_mean = mean_of(mse);
    mr.mse_sd = sd_of(mse, mr.mse_mean);
    mr.fp_mean = mean_of(fp);
    mr.fp_sd = sd_of(fp, mr.fp_mean);
    mr.fn_mean = mean_of(fn);
    mr.fn_sd = sd_of(fn, mr.fn_mean);
    report.methods.push_back(std::move(mr));
  }
  return report;
}

}  // namespace ncg
