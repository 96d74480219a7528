#pragma once

#include <Eigen/Dense>

#include <vector>

#include "ncg/model.hpp"
#include "ncg/rng.hpp"

namespace ncg {

/// One draw of the first-level scale z_1 by descending the gamma chain
/// z_N ~ G(c_N, phi), z_{N-1} ~ G(c_{N-1}, z_N), ..., z_1 ~ G(c_1, z_2).
double sample_prior_scale_chain(const Hyperparameters& h, Rng& rng);

/// Equivalent draw via the product-of-independent-factors form:
/// odd levels Gamma(c_k, .), even levels InverseGamma(c_k, .), the terminal
/// level carrying phi.
double sample_prior_scale_product(const Hyperparameters& h, Rng& rng);

struct LogDensityEstimate {
  double log_density = 0.0;
  double stderr_log = 0.0;  // delta-method standard error of the log estimate
};

/// Monte Carlo estimate of the marginal prior log-density of a coefficient at
/// x (noise variance fixed to 1): log-mean of Normal pdfs over n_mc scale
/// draws from the product representation, via log-sum-exp.
LogDensityEstimate marginal_log_density(double x, const Hyperparameters& h, long n_mc, Rng& rng);

struct DensityCurvePoint {
  double x;
  double log_density;
  double stderr_log;
};

/// marginal_log_density on each grid point with common random scale draws
/// across the grid (variance reduction; exact evenness in x by construction).
std::vector<DensityCurvePoint> density_curve(const std::vector<double>& grid,
                                             const Hyperparameters& h, long n_mc, Rng& rng);

/// E(beta^2) under the prior with sigma^2 = 1, computed level-wise from the
/// product representation. Infinite as soon as any even-level shape is <= 1.
double prior_second_moment(const Hyperparameters& h);

struct ConsistencyCheckInput {
  long n = 100;      // sample size
  long p_n = 1000;   // dimension
  long s_n = 5;      // true sparsity
  double u = 0.5;    // tail exponent slack
  void validate() const;
};

struct TailConditionReport {
  double k_n = 0.0;
  double tail_mass_estimate = 0.0;
  double wilson_low = 0.0;
  double wilson_high = 0.0;
  double bound = 0.0;
  double c1_sufficient_scale = 0.0;  // k_n^2 * p_n^{-(1+u)}
  bool satisfied = false;
  long n_mc = 0;
};

/// Estimates P(|beta| > k_n) by Rao-Blackwellized Monte Carlo (the exact
/// conditional normal tail averaged over scale draws) and compares the Wilson
/// 99% interval against the p_n^{-(1+u)} bound.
TailConditionReport check_tail_condition(const Hyperparameters& h,
                                         const ConsistencyCheckInput& input, long n_mc,
                                         Rng& rng);

struct DensityFloorReport {
  double e_n = 0.0;
  double min_log_density = 0.0;  // log f at the interval endpoint
  double stderr_log = 0.0;
  double neg_log_over_log_pn = 0.0;  // clamped at 0 when the density exceeds 1
  long n_mc = 0;
};

/// Evaluates the marginal log-density at the endpoint of [-E_n, E_n] (the
/// minimum, by symmetry and unimodality) and reports -log f(E_n) / log p_n.
DensityFloorReport check_density_floor(const Hyperparameters& h, double e_n, long p_n,
                                       long n_mc, Rng& rng);

}  // namespace ncg
