#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace ncg {

/// Numerical clamp applied to every sampled scale entry z_{kj}; heavy-tailed
/// draws occasionally overflow the product of N levels otherwise.
inline constexpr double kZClampMin = 1e-12;
inline constexpr double kZClampMax = 1e12;

/// Hyperparameters of the compound-gamma hierarchy: depth N, per-level shapes
/// c_1..c_N, terminal rate phi, and the IG(c0, d0) prior on the noise variance.
struct Hyperparameters {
  int depth = 2;
  Eigen::VectorXd shapes;  // size depth
  double phi = 1.0;
  double c0 = 0.01;
  double d0 = 0.01;

  /// Rate of level k's gamma / inverse-gamma factor: phi at the terminal
  /// level, 1 elsewhere (1-based k).
  double level_rate(int k) const { return k == depth ? phi : 1.0; }
};

/// depth N with all shapes at the weakly-informative default 0.5, phi = 1,
/// c0 = d0 = 0.01.
Hyperparameters make_hyperparameters(int depth);

/// Named presets: "ncg2" (N=2), "ncg10" (N=10), "horseshoe" (N=4, c=1/2, phi=1).
Hyperparameters preset_hyperparameters(const std::string& name);

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
};

/// Checks the Hyperparameters invariants. Even-level shapes c_k <= 1 only warn
/// (the prior second moment is then infinite); hard violations land in errors.
ValidationReport validate_hyperparameters(const Hyperparameters& h);

/// Same check but throwing ValidationError when any error is present.
void require_valid(const Hyperparameters& h);

struct Truth {
  Eigen::VectorXd beta0;
  double sigma0sq = 1.0;
};

struct Dataset {
  Eigen::MatrixXd X;  // n x p
  Eigen::VectorXd y;  // n
  std::optional<Truth> truth;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
  void validate() const;  // finite entries, matching dimensions
};

/// One Gibbs iterate: coefficients, the N x p scale matrix (level k, coefficient j),
/// and the noise variance.
struct GibbsState {
  Eigen::VectorXd beta;  // p
  Eigen::MatrixXd z;     // N x p, entries in [kZClampMin, kZClampMax]
  double sigma2 = 1.0;
};

/// Product of the scale chain for coefficient j; the prior conditional
/// variance of beta_j is sigma2 * local_scale(state, j).
double local_scale(const GibbsState& state, Eigen::Index j);

/// Kept draws plus the running log-scale sums the EM shape update consumes.
struct PosteriorDraws {
  Eigen::MatrixXd beta_draws;    // kept x p
  Eigen::VectorXd sigma2_draws;  // kept
  Eigen::MatrixXd z_log_sum;     // N x p, sum of log z over kept iterations
  long kept = 0;
  long clamp_events = 0;

  // EM trajectory when shape updates ran: one row of c per round.
  std::vector<Eigen::VectorXd> em_rounds;
  std::vector<double> em_deltas;  // per-round max-abs change of c
};

/// Bit-exact JSON round-trip of a GibbsState (doubles survive via shortest
/// round-trip formatting).
std::string serialize_gibbs_state(const GibbsState& state);
GibbsState deserialize_gibbs_state(const std::string& json_text);

}  // namespace ncg
