#pragma once

#include <Eigen/Dense>

#include <vector>

#include "ncg/model.hpp"

namespace ncg {

/// Mean-field factors and their cached moments. q(beta) = N(mu, V);
/// odd-level q(z_kj) = GIG(c_k - 1/2, c_star(k,j), 2 phi_k); even-level
/// q(z_kj) = IG(c_k + 1/2, c_star(k,j)); q(sigma2) = IG((n+p+2c0)/2, d0_star).
struct VariationalState {
  Eigen::VectorXd mu;      // p
  Eigen::MatrixXd V;       // p x p, symmetric PSD
  Eigen::MatrixXd c_star;  // N x p
  double d0_star = 1.0;

  // Cached moments, always consistent with (c_star, level parity).
  Eigen::MatrixXd ez;        // N x p; only meaningful on odd levels
  Eigen::MatrixXd ez_inv;    // N x p
  Eigen::MatrixXd elogz;     // N x p
  double e_inv_sigma2 = 1.0;
  Eigen::VectorXd e_beta_sq;  // p, mu_j^2 + V_jj
};

struct CaviOptions {
  double tol = 1e-8;      // relative ELBO change
  long max_iters = 500;
};

struct ElboTracePoint {
  long sweep;
  double elbo;
  double max_abs_change;  // max |delta mu| of the sweep
};

struct CaviResult {
  VariationalState state;
  std::vector<ElboTracePoint> trace;
  bool converged = false;
  // per-round shape vectors when the EM outer loop ran
  std::vector<Eigen::VectorXd> em_rounds;
  std::vector<double> em_deltas;
  Eigen::VectorXd final_shapes;
};

/// q(beta) update: mu = (X'X + Z*^{-1})^{-1} X'y and V = (X'X + Z*^{-1})^{-1} / E[1/sigma2],
/// where Z*^{-1} = diag(prod_k E[1/z_kj]). Refreshes E[beta_j^2].
void vb_update_beta(VariationalState& state, const Dataset& data);

/// Level-k factor update: sets c_star row k from E[beta^2] E[1/sigma2]
/// prod_{i != k} E[1/z_i] (halved plus phi_k on even levels) and refreshes the
/// cached GIG / inverse-gamma moments.
void vb_update_z_level(int k, VariationalState& state, const Hyperparameters& h);

/// q(sigma2) update: d0_star = (E||y-X beta||^2 + E[beta' Lambda* beta] + 2 d0)/2,
/// E[1/sigma2] = (n+p+2c0)/(2 d0_star).
void vb_update_sigma2(VariationalState& state, const Dataset& data, const Hyperparameters& h);

/// Evidence lower bound with all constants included (comparable against a
/// quadrature log-evidence).
double elbo(const VariationalState& state, const Dataset& data, const Hyperparameters& h);

/// Coordinate ascent until the relative ELBO change drops below opts.tol or
/// max_iters sweeps. Fully deterministic.
CaviResult run_cavi(const Dataset& data, const Hyperparameters& h,
                    const CaviOptions& opts = {});

/// MFVB-EM M-step: same digamma stationarity as the MCMC version but with the
/// variational E[log z]; clamped to [1e-3, 1e3].
Eigen::VectorXd mfvb_update_c(const VariationalState& state, const Hyperparameters& h);

/// Outer empirical-Bayes loop: re-converge CAVI, update shapes, repeat until
/// the max-abs shape change drops below 1e-3 or max_rounds.
CaviResult run_cavi_em(const Dataset& data, const Hyperparameters& h, const CaviOptions& opts,
                       long max_rounds);

}  // namespace ncg
