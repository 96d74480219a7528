#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "ncg/model.hpp"
#include "ncg/rng.hpp"

namespace ncg {

struct McemConfig {
  long window = 500;     // kept iterations per EM round
  long max_rounds = 10;  // rounds stop here or when max-abs shape change < 1e-3
};

struct GibbsConfig {
  long total_iters = 15000;
  long burn_in = 2000;
  long thin = 1;
  std::optional<McemConfig> mcem;
  std::uint64_t seed = 0;
  void validate() const;
};

/// Precomputed Gram quantities; constant across sweeps.
struct GramCache {
  Eigen::MatrixXd xtx;  // X'X
  Eigen::VectorXd xty;  // X'y
  static GramCache from(const Dataset& data);
};

/// beta | rest ~ N(Sigma^{-1} X'y, sigma2 * Sigma^{-1}) with Sigma = X'X + Z^{-1},
/// drawn through one Cholesky solve plus a triangular solve of a standard
/// normal vector. `iteration` only labels faults.
Eigen::VectorXd update_beta(const GibbsState& state, const GramCache& gram, Rng& rng,
                            long iteration = -1);

/// Level-k scale row: per coefficient, GIG for odd k and inverse-gamma for
/// even k, terminal level carrying phi. Draws are clamped to
/// [kZClampMin, kZClampMax]; returns the number of clamped entries.
long update_z_level(int k, GibbsState& state, const Hyperparameters& h, Rng& rng);

/// sigma2 | rest ~ IG((n+p+2c0)/2, (||y-X beta||^2 + beta'Z^{-1}beta + 2 d0)/2).
double update_sigma2(const GibbsState& state, const Dataset& data, const Hyperparameters& h,
                     Rng& rng);

/// Systematic-scan blocked Gibbs: beta, z levels 1..N, sigma2 per sweep.
/// Initial state beta = 0, z = 1, sigma2 = var(y). With cfg.mcem set, the
/// shape vector is re-estimated every `window` kept iterations (stochastic EM
/// on the realized log z draws) until converged or max_rounds.
PosteriorDraws run_gibbs(const Dataset& data, const Hyperparameters& h, const GibbsConfig& cfg,
                         Rng& rng);

/// Convenience overload seeding a fresh stream from cfg.seed.
PosteriorDraws run_gibbs(const Dataset& data, const Hyperparameters& h, const GibbsConfig& cfg);

/// M-step of the shape update: solves p*psi(c_k) = sum_j (-1)^{k+1} mean_logz(k,j)
/// + I(k=N) p log(phi) per level; result clamped to [1e-3, 1e3].
/// `mean_logz` holds window means of log z_{kj}, one row per level.
Eigen::VectorXd mcem_update_c(const Eigen::MatrixXd& mean_logz, const Hyperparameters& h);

inline constexpr double kShapeClampMin = 1e-3;
inline constexpr double kShapeClampMax = 1e3;

struct CoefficientSummary {
  double mean = 0.0;
  double sd = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Posterior mean, sd and equal-tailed credible interval per coefficient.
std::vector<CoefficientSummary> summarize(const PosteriorDraws& draws, double level = 0.95);

}  // namespace ncg
