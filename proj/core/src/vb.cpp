#include "ncg/vb.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

#include "ncg/errors.hpp"
#include "ncg/gibbs.hpp"  // shape clamp bounds shared with MCEM
#include "ncg/special_math.hpp"

namespace ncg {

namespace {

double product_ezinv(const Eigen::MatrixXd& ez_inv, Eigen::Index j) {
  double prod = 1.0;
  for (Eigen::Index k = 0; k < ez_inv.rows(); ++k) prod *= ez_inv(k, j);
  return prod;
}

double product_ezinv_excluding(const Eigen::MatrixXd& ez_inv, int level_k, Eigen::Index j) {
  double prod = 1.0;
  for (Eigen::Index k = 0; k < ez_inv.rows(); ++k)
    if (k != level_k - 1) prod *= ez_inv(k, j);
  return prod;
}

GigParams odd_factor(double c_k, double phi_k, double c_star) {
  return {c_k - 0.5, c_star, 2.0 * phi_k};
}

}  // namespace

void vb_update_beta(VariationalState& state, const Dataset& data) {
  const Eigen::Index p = data.p();
  Eigen::MatrixXd a = data.X.transpose() * data.X;
  for (Eigen::Index j = 0; j < p; ++j) a(j, j) += product_ezinv(state.ez_inv, j);
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw InferenceFault("vb_update_beta: singular X'X + Z*^{-1} system");
  state.mu = llt.solve(data.X.transpose() * data.y);
  // E_q(sigma^2) enters as the reciprocal of the cached E[1/sigma2]; that is
  // the exact coordinate optimum for a Gaussian factor.
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(p, p);
  state.V = llt.solve(identity) / state.e_inv_sigma2;
  state.V = 0.5 * (state.V + state.V.transpose()).eval();
  state.e_beta_sq = state.mu.array().square().matrix() + state.V.diagonal();
}

void vb_update_z_level(int k, VariationalState& state, const Hyperparameters& h) {
  const Eigen::Index p = state.c_star.cols();
  const double c_k = h.shapes[k - 1];
  const double phi_k = h.level_rate(k);
  for (Eigen::Index j = 0; j < p; ++j) {
    // zero coefficient mass decouples the factor even when some E[1/z] is
    // infinite (gamma shapes <= 1); the limit of the product is 0
    const double base = (state.e_beta_sq[j] == 0.0)
                            ? 0.0
                            : state.e_beta_sq[j] * state.e_inv_sigma2 *
                                  product_ezinv_excluding(state.ez_inv, k, j);
    if (k % 2 == 1) {
      state.c_star(k - 1, j) = base;
      const GigMoments m = gig_moments(odd_factor(c_k, phi_k, base));
      state.ez(k - 1, j) = m.mean;
      state.ez_inv(k - 1, j) = m.inv_mean;
      state.elogz(k - 1, j) = m.log_mean;
    } else {
      const double c_star = 0.5 * base + phi_k;
      state.c_star(k - 1, j) = c_star;
      const double a = c_k + 0.5;
      state.ez(k - 1, j) = (a > 1.0) ? c_star / (a - 1.0)
                                     : std::numeric_limits<double>::infinity();
      state.ez_inv(k - 1, j) = a / c_star;
      state.elogz(k - 1, j) = std::log(c_star) - digamma(a);
    }
  }
}

void vb_update_sigma2(VariationalState& state, const Dataset& data, const Hyperparameters& h) {
  const Eigen::Index p = data.p();
  const Eigen::VectorXd resid = data.y - data.X * state.mu;
  const Eigen::MatrixXd xtx = data.X.transpose() * data.X;
  const double e_resid = resid.squaredNorm() + xtx.cwiseProduct(state.V).sum();
  double quad = 0.0;
  for (Eigen::Index j = 0; j < p; ++j)
    quad += state.e_beta_sq[j] * product_ezinv(state.ez_inv, j);
  state.d0_star = 0.5 * (e_resid + quad + 2.0 * h.d0);
  if (!(state.d0_star > 0.0) || !std::isfinite(state.d0_star))
    throw InferenceFault("vb_update_sigma2: nonpositive d0*; upstream moments corrupt");
  const double a = 0.5 * (static_cast<double>(data.n() + p) + 2.0 * h.c0);
  state.e_inv_sigma2 = a / state.d0_star;
}

double elbo(const VariationalState& state, const Dataset& data, const Hyperparameters& h) {
  const auto n = static_cast<double>(data.n());
  const auto p = static_cast<double>(data.p());
  const Eigen::Index pi = data.p();
  const double a_sig = 0.5 * (n + p + 2.0 * h.c0);
  const double e_inv = state.e_inv_sigma2;
  const double e_log_sig = std::log(state.d0_star) - digamma(a_sig);

  // E log p(y | beta, sigma2)
  const Eigen::VectorXd resid = data.y - data.X * state.mu;
  const Eigen::MatrixXd xtx = data.X.transpose() * data.X;
  const double e_resid = resid.squaredNorm() + xtx.cwiseProduct(state.V).sum();
  double value = -0.5 * n * std::log(2.0 * M_PI) - 0.5 * n * e_log_sig - 0.5 * e_inv * e_resid;

  // E log p(beta | z, sigma2)
  double quad = 0.0;
  for (Eigen::Index j = 0; j < pi; ++j)
    quad += state.e_beta_sq[j] * product_ezinv(state.ez_inv, j);
  value += -0.5 * p * std::log(2.0 * M_PI) - 0.5 * p * e_log_sig -
           0.5 * state.elogz.sum() - 0.5 * e_inv * quad;

  // E log p(z) and entropies of q(z)
  for (int k = 1; k <= h.depth; ++k) {
    const double c_k = h.shapes[k - 1];
    const double phi_k = h.level_rate(k);
    const double log_norm_prior = c_k * std::log(phi_k) - log_gamma_fn(c_k);
    for (Eigen::Index j = 0; j < pi; ++j) {
      const double elz = state.elogz(k - 1, j);
      const double ezi = state.ez_inv(k - 1, j);
      if (k % 2 == 1) {
        value += log_norm_prior + (c_k - 1.0) * elz - phi_k * state.ez(k - 1, j);
        const GigParams q = odd_factor(c_k, phi_k, state.c_star(k - 1, j));
        double e_log_q = -gig_log_normalizer(q) + (q.lambda - 1.0) * elz -
                         0.5 * q.psi * state.ez(k - 1, j);
        if (q.chi >= kGigZeroTol) e_log_q -= 0.5 * q.chi * ezi;
        value -= e_log_q;
      } else {
        value += log_norm_prior - (c_k + 1.0) * elz - phi_k * ezi;
        const double aq = c_k + 0.5;
        const double bq = state.c_star(k - 1, j);
        value -= aq * std::log(bq) - log_gamma_fn(aq) - (aq + 1.0) * elz - bq * ezi;
      }
    }
  }

  // E log p(sigma2) and entropy of q(sigma2)
  value += h.c0 * std::log(h.d0) - log_gamma_fn(h.c0) - (h.c0 + 1.0) * e_log_sig -
           h.d0 * e_inv;
  value -= a_sig * std::log(state.d0_star) - log_gamma_fn(a_sig) -
           (a_sig + 1.0) * e_log_sig - a_sig;  // d0* E[1/sigma2] = a_sig exactly

  // entropy of q(beta)
  Eigen::LLT<Eigen::MatrixXd> llt(state.V);
  if (llt.info() != Eigen::Success)
    throw InferenceFault("elbo: V* not positive definite");
  double half_logdet = 0.0;
  for (Eigen::Index j = 0; j < pi; ++j) half_logdet += std::log(llt.matrixL()(j, j));
  value += 0.5 * p * (1.0 + std::log(2.0 * M_PI)) + half_logdet;

  return value;
}

namespace {

VariationalState initial_state(const Dataset& data, const Hyperparameters& h) {
  VariationalState s;
  const Eigen::Index p = data.p();
  s.mu = Eigen::VectorXd::Zero(p);
  s.V = Eigen::MatrixXd::Zero(p, p);
  s.c_star = Eigen::MatrixXd::Ones(h.depth, p);
  s.ez = Eigen::MatrixXd::Ones(h.depth, p);
  s.ez_inv = Eigen::MatrixXd::Ones(h.depth, p);
  s.elogz = Eigen::MatrixXd::Zero(h.depth, p);
  s.e_beta_sq = Eigen::VectorXd::Zero(p);
  const double y_mean = data.y.mean();
  const double y_var =
      (data.n() > 1)
          ? (data.y.array() - y_mean).square().sum() / static_cast<double>(data.n() - 1)
          : 1.0;
  s.e_inv_sigma2 = 1.0 / std::max(y_var, 1e-12);
  s.d0_star =
      0.5 * (static_cast<double>(data.n() + data.p()) + 2.0 * h.c0) / s.e_inv_sigma2;
  return s;
}

void cavi_sweep(VariationalState& state, const Dataset& data, const Hyperparameters& h) {
  vb_update_beta(state, data);
  for (int k = 1; k <= h.depth; ++k) vb_update_z_level(k, state, h);
  vb_update_sigma2(state, data, h);
}

}  // namespace

CaviResult run_cavi(const Dataset& data, const Hyperparameters& h, const CaviOptions& opts) {
  data.validate();
  require_valid(h);
  CaviResult result;
  result.state = initial_state(data, h);
  result.final_shapes = h.shapes;
  double prev_elbo = -std::numeric_limits<double>::infinity();
  for (long sweep = 1; sweep <= opts.max_iters; ++sweep) {
    const Eigen::VectorXd mu_before = result.state.mu;
    cavi_sweep(result.state, data, h);
    const double value = elbo(result.state, data, h);
    const double change = (result.state.mu - mu_before).cwiseAbs().maxCoeff();
    result.trace.push_back({sweep, value, change});
    if (std::isfinite(prev_elbo) &&
        std::fabs(value - prev_elbo) < opts.tol * std::max(1.0, std::fabs(value))) {
      result.converged = true;
      break;
    }
    prev_elbo = value;
  }
  return result;
}

Eigen::VectorXd mfvb_update_c(const VariationalState& state, const Hyperparameters& h) {
  if (!state.elogz.allFinite())
    throw EmFault("mfvb_update_c: non-finite variational E[log z]");
  return mcem_update_c(state.elogz, h);
}

CaviResult run_cavi_em(const Dataset& data, const Hyperparameters& h, const CaviOptions& opts,
                       long max_rounds) {
  Hyperparameters hyper = h;
  std::vector<Eigen::VectorXd> rounds;
  std::vector<double> deltas;
  for (long round = 0; round < max_rounds; ++round) {
    const CaviResult fit = run_cavi(data, hyper, opts);
    const Eigen::VectorXd c_new = mfvb_update_c(fit.state, hyper);
    const double delta = (c_new - hyper.shapes).cwiseAbs().maxCoeff();
    hyper.shapes = c_new;
    rounds.push_back(c_new);
    deltas.push_back(delta);
    if (delta < 1e-3) break;
  }
  // converge once more under the final shapes so state and shapes agree
  CaviResult final_fit = run_cavi(data, hyper, opts);
  final_fit.em_rounds = std::move(rounds);
  final_fit.em_deltas = std::move(deltas);
  final_fit.final_shapes = hyper.shapes;
  return final_fit;
}

}  // namespace ncg
