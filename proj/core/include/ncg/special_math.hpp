#pragma once

#include "ncg/rng.hpp"

namespace ncg {

/// ln Gamma(x) for x > 0 (Lanczos approximation, relative error < 1e-12).
double log_gamma_fn(double x);

/// Digamma psi(x) for x > 0 (recurrence to x >= 8, then asymptotic series;
/// absolute error < 1e-10).
double digamma(double x);

/// Trigamma psi'(x) for x > 0; used by the digamma Newton inversion.
double trigamma(double x);

/// ln K_nu(x) for x > 0, any real nu (symmetric in nu). Computed in log scale
/// so large x (up to ~1e4) and large |nu| do not underflow.
double log_bessel_k(double nu, double x);

/// d/dnu ln K_nu(x): central difference with step 1e-6*max(1,|nu|),
/// Richardson-extrapolated once. Absolute error target < 1e-6.
double log_bessel_k_dnu(double nu, double x);

/// Solves psi(c) = target / weight for c > 0 on (1e-8, 1e8).
/// Newton iteration with a bisection safeguard; |psi(c)*weight - target| < 1e-9.
double solve_digamma(double target, long weight);

/// Parameters of GIG(lambda, chi, psi): f(x) prop. x^{lambda-1} exp(-(chi/x + psi x)/2).
///
/// Proper when chi > 0 for lambda <= 0, psi > 0 for lambda >= 0, and at least
/// one of chi, psi strictly positive. chi below 1e-300 is treated as exactly 0
/// (gamma limit); likewise psi (inverse-gamma limit).
struct GigParams {
  double lambda = 0.0;
  double chi = 0.0;
  double psi = 0.0;

  /// Throws std::domain_error if the density is improper or parameters are not finite.
  void validate() const;
};

// Threshold below which chi (or psi) is treated as exactly zero.
inline constexpr double kGigZeroTol = 1e-300;

/// Gamma(shape, rate) draw (mean shape/rate). Marsaglia-Tsang for shape >= 1,
/// boosted with u^{1/shape} for shape < 1.
double sample_gamma(double shape, double rate, Rng& rng);

/// InverseGamma(shape, scale) draw: scale / Gamma(shape, 1).
double sample_inverse_gamma(double shape, double scale, Rng& rng);

/// Exact GIG draw, valid for all real lambda including |lambda| < 1.
/// Ratio-of-uniforms (with and without mode shift) plus a three-piece hat for
/// the non-T-concave corner; degenerate chi/psi route to the gamma and
/// inverse-gamma limits.
double sample_gig(const GigParams& params, Rng& rng);

struct GigMoments {
  double mean = 0.0;      ///< E[x]
  double inv_mean = 0.0;  ///< E[1/x]
  double log_mean = 0.0;  ///< E[log x]
};

/// Bessel-ratio moments of the GIG distribution. Degenerate limits give the
/// gamma / inverse-gamma formulas; moments that do not exist come back infinite.
GigMoments gig_moments(const GigParams& params);

/// log of the normalization integral of x^{lambda-1} exp(-(chi/x + psi x)/2)
/// over (0, inf); needed for entropies.
double gig_log_normalizer(const GigParams& params);

}  // namespace ncg
