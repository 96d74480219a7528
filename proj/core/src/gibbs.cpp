#include "ncg/gibbs.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

#include "ncg/errors.hpp"
#include "ncg/special_math.hpp"

namespace ncg {

namespace {

double product_excluding(const Eigen::MatrixXd& z, int level_k, Eigen::Index j) {
  double prod = 1.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    if (i != level_k - 1) prod *= z(i, j);
  return prod;
}

double clamped(double v, long& clamp_events) {
  if (v < kZClampMin) {
    ++clamp_events;
    return kZClampMin;
  }
  if (v > kZClampMax) {
    ++clamp_events;
    return kZClampMax;
  }
  return v;
}

double quantile(std::vector<double>& sorted, double prob) {
  const auto n = sorted.size();
  const double h = prob * static_cast<double>(n - 1);
  const auto lo = static_cast<size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, n - 1);
  const double w = h - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

}  // namespace

void GibbsConfig::validate() const {
  std::vector<std::string> issues;
  if (total_iters < 1) issues.push_back("total_iters must be >= 1");
  if (burn_in < 0 || burn_in >= total_iters)
    issues.push_back("burn_in must satisfy 0 <= burn_in < total_iters");
  if (thin < 1) issues.push_back("thin must be >= 1");
  if (mcem) {
    if (mcem->window < 1) issues.push_back("mcem.window must be >= 1");
    if (mcem->max_rounds < 1) issues.push_back("mcem.max_rounds must be >= 1");
  }
  if (!issues.empty()) throw ValidationError(issues);
}

GramCache GramCache::from(const Dataset& data) {
  GramCache g;
  g.xtx = data.X.transpose() * data.X;
  g.xty = data.X.transpose() * data.y;
  return g;
}

Eigen::VectorXd update_beta(const GibbsState& state, const GramCache& gram, Rng& rng,
                            long iteration) {
  const Eigen::Index p = state.beta.size();
  Eigen::MatrixXd sigma_mat = gram.xtx;
  for (Eigen::Index j = 0; j < p; ++j) sigma_mat(j, j) += 1.0 / local_scale(state, j);

  Eigen::LLT<Eigen::MatrixXd> llt(sigma_mat);
  if (llt.info() != Eigen::Success)
    throw SamplerFault("update_beta: Cholesky factorization of X'X + Z^{-1} failed", iteration);

  Eigen::VectorXd mean = llt.solve(gram.xty);
  Eigen::VectorXd eta(p);
  for (Eigen::Index j = 0; j < p; ++j) eta[j] = rng.normal();
  // L^{-T} eta has covariance Sigma^{-1}
  llt.matrixU().solveInPlace(eta);
  Eigen::VectorXd beta = mean + std::sqrt(state.sigma2) * eta;
  if (!beta.allFinite())
    throw SamplerFault("update_beta: non-finite coefficient draw", iteration);
  return beta;
}

long update_z_level(int k, GibbsState& state, const Hyperparameters& h, Rng& rng) {
  const Eigen::Index p = state.beta.size();
  const double c_k = h.shapes[k - 1];
  const double phi_k = h.level_rate(k);
  long clamp_events = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double others = product_excluding(state.z, k, j);
    double q = state.beta[j] * state.beta[j] / (state.sigma2 * others);
    double draw;
    if (k % 2 == 1) {
      const double order = c_k - 0.5;
      // a coefficient at exactly zero with a non-positive GIG order has no
      // proper gamma limit; nudge chi onto the proper region instead
      if (q < kGigZeroTol && order <= 0.0) q = kGigZeroTol;
      draw = sample_gig({order, q, 2.0 * phi_k}, rng);
    } else {
      draw = sample_inverse_gamma(c_k + 0.5, 0.5 * q + phi_k, rng);
    }
    state.z(k - 1, j) = clamped(draw, clamp_events);
  }
  return clamp_events;
}

double update_sigma2(const GibbsState& state, const Dataset& data, const Hyperparameters& h,
                     Rng& rng) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const Eigen::VectorXd resid = data.y - data.X * state.beta;
  double quad = 0.0;
  for (Eigen::Index j = 0; j < p; ++j)
    quad += state.beta[j] * state.beta[j] / local_scale(state, j);
  const double shape = 0.5 * (static_cast<double>(n + p) + 2.0 * h.c0);
  const double scale = 0.5 * (resid.squaredNorm() + quad + 2.0 * h.d0);
  return sample_inverse_gamma(shape, scale, rng);
}

PosteriorDraws run_gibbs(const Dataset& data, const Hyperparameters& h, const GibbsConfig& cfg,
                         Rng& rng) {
  data.validate();
  require_valid(h);
  cfg.validate();

  const Eigen::Index p = data.p();
  const Eigen::Index n = data.n();
  const GramCache gram = GramCache::from(data);

  Hyperparameters hyper = h;  // shapes may evolve under MCEM
  GibbsState state;
  state.beta = Eigen::VectorXd::Zero(p);
  state.z = Eigen::MatrixXd::Ones(hyper.depth, p);
  const double y_mean = data.y.mean();
  const double y_var = (n > 1) ? (data.y.array() - y_mean).square().sum() /
                                     static_cast<double>(n - 1)
                               : 1.0;
  state.sigma2 = std::max(y_var, 1e-12);

  const long kept_total = (cfg.total_iters - cfg.burn_in) / cfg.thin;
  PosteriorDraws draws;
  draws.beta_draws.resize(kept_total, p);
  draws.sigma2_draws.resize(kept_total);
  draws.z_log_sum = Eigen::MatrixXd::Zero(hyper.depth, p);

  const bool em_on = cfg.mcem.has_value();
  Eigen::MatrixXd window_logz;
  long window_count = 0;
  long rounds_done = 0;
  bool em_converged = false;
  if (em_on) window_logz = Eigen::MatrixXd::Zero(hyper.depth, p);

  long kept = 0;
  for (long iter = 1; iter <= cfg.total_iters; ++iter) {
    state.beta = update_beta(state, gram, rng, iter);
    for (int k = 1; k <= hyper.depth; ++k)
      draws.clamp_events += update_z_level(k, state, hyper, rng);
    state.sigma2 = update_sigma2(state, data, hyper, rng);
    if (!std::isfinite(state.sigma2) || state.sigma2 <= 0.0)
      throw SamplerFault("run_gibbs: non-finite sigma2 draw", iter);

    if (iter <= cfg.burn_in || (iter - cfg.burn_in) % cfg.thin != 0) continue;

    draws.beta_draws.row(kept) = state.beta;
    draws.sigma2_draws[kept] = state.sigma2;
    const Eigen::MatrixXd logz = state.z.array().log();
    draws.z_log_sum += logz;
    ++kept;

    if (em_on && !em_converged && rounds_done < cfg.mcem->max_rounds) {
      window_logz += logz;
      if (++window_count == cfg.mcem->window) {
        const Eigen::MatrixXd mean_logz = window_logz / static_cast<double>(window_count);
        const Eigen::VectorXd c_new = mcem_update_c(mean_logz, hyper);
        const double delta = (c_new - hyper.shapes).cwiseAbs().maxCoeff();
        hyper.shapes = c_new;
        draws.em_rounds.push_back(c_new);
        draws.em_deltas.push_back(delta);
        ++rounds_done;
        window_logz.setZero();
        window_count = 0;
        if (delta < 1e-3) em_converged = true;
      }
    }
  }
  draws.kept = kept;
  return draws;
}

PosteriorDraws run_gibbs(const Dataset& data, const Hyperparameters& h,
                         const GibbsConfig& cfg) {
  Rng rng = Rng::stream(cfg.seed, {0x67696262ULL});
  return run_gibbs(data, h, cfg, rng);
}

Eigen::VectorXd mcem_update_c(const Eigen::MatrixXd& mean_logz, const Hyperparameters& h) {
  if (mean_logz.rows() != h.depth)
    throw EmFault("mcem_update_c: level count mismatch");
  if (!mean_logz.allFinite())
    throw EmFault("mcem_update_c: non-finite window statistic");
  const auto p = static_cast<long>(mean_logz.cols());
  Eigen::VectorXd c(h.depth);
  for (int k = 1; k <= h.depth; ++k) {
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    double target = sign * mean_logz.row(k - 1).sum();
    if (k == h.depth) target += static_cast<double>(p) * std::log(h.phi);
    c[k - 1] = std::clamp(solve_digamma(target, p), kShapeClampMin, kShapeClampMax);
  }
  return c;
}

std::vector<CoefficientSummary> summarize(const PosteriorDraws& draws, double level) {
  if (draws.kept < 1) throw ValidationError({"summarize: no kept draws"});
  if (!(level > 0.0 && level < 1.0))
    throw ValidationError({"summarize: level must be in (0,1)"});
  const Eigen::Index p = draws.beta_draws.cols();
  const auto n = static_cast<size_t>(draws.kept);
  const double alpha = 0.5 * (1.0 - level);
  std::vector<CoefficientSummary> out(static_cast<size_t>(p));
  std::vector<double> col(n);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (size_t i = 0; i < n; ++i) col[i] = draws.beta_draws(static_cast<Eigen::Index>(i), j);
    auto& s = out[static_cast<size_t>(j)];
    const double mean = draws.beta_draws.col(j).head(draws.kept).mean();
    s.mean = mean;
    if (n > 1) {
      const double ss =
          (draws.beta_draws.col(j).head(draws.kept).array() - mean).square().sum();
      s.sd = std::sqrt(ss / static_cast<double>(n - 1));
    }
    std::sort(col.begin(), col.end());
    s.lower = quantile(col, alpha);
    s.upper = quantile(col, 1.0 - alpha);
  }
  return out;
}

}  // namespace ncg
