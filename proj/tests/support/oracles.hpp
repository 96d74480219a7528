#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "ncg/rng.hpp"

namespace ncg::test {

/// Digamma by brute-force recurrence to an argument >= 1e6 followed by the
/// two leading asymptotic terms; independent of the library's Bernoulli series.
double oracle_digamma(double x);

/// ln K_nu(x) by adaptive quadrature of the integral representation
/// K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt, max-shifted in log scale.
double oracle_log_bessel_k(double nu, double x);

double normal_cdf(double z);
double normal_log_pdf(double x, double mean, double var);

/// Half-Cauchy C+(0, scale) draw.
double sample_half_cauchy(double scale, ncg::Rng& rng);

/// Tabulated CDF built from an unnormalized log-density by trapezoid
/// integration on a log-spaced grid; the grid is grown outward from a seed
/// point until the integrand is negligible at both ends.
class GridCdf {
 public:
  GridCdf(const std::function<double(double)>& log_density_unnorm, double x_seed,
          int n_points = 4000);
  double operator()(double x) const;
  double quantile(double prob) const;

 private:
  std::vector<double> x_;
  std::vector<double> cdf_;
};

/// Nested adaptive quadrature of the depth-2 compound-gamma marginal prior
/// density (chain form, unit noise variance) at a point x.
double oracle_marginal_density_n2(double x, double c1, double c2, double phi);

/// Posterior oracle for the 1-coefficient depth-2 instance: the scale and the
/// noise variance are integrated on log grids (the scale-product density by an
/// inner quadrature), the coefficient analytically as a conditional Gaussian.
/// Provides the posterior CDF/mean of beta and the log evidence.
class PosteriorOracle1D {
 public:
  PosteriorOracle1D(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double c1, double c2,
                    double phi, double c0, double d0);

  double cdf(double b) const;
  double mean() const { return mean_; }
  double log_evidence() const { return log_evidence_; }

  /// Log evidence recomputed through the conjugate normal-inverse-gamma route
  /// (sigma2 and beta integrated in closed form, one quadrature over the
  /// scale); used to cross-check the grid construction.
  double log_evidence_conjugate() const { return log_evidence_conjugate_; }

 private:
  std::vector<double> grid_b_;
  std::vector<double> cdf_;
  double mean_ = 0.0;
  double log_evidence_ = 0.0;
  double log_evidence_conjugate_ = 0.0;
};

/// Density of the product scale w1 * w2, w1 ~ Gamma(c1, 1), w2 ~ InvGamma(c2, phi),
/// by quadrature; the N=2 product-representation scale prior.
double product_scale_density_n2(double lambda, double c1, double c2, double phi);

}  // namespace ncg::test
