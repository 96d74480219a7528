#include "ncg/special_math.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_bessel.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ncg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// GSL must not abort the process on UNDERFLOW etc.; status codes are checked
// at each call site instead.
const int kGslHandlerOff = [] {
  gsl_set_error_handler_off();
  return 0;
}();

void require_positive_finite(double x, const char* name) {
  if (!std::isfinite(x) || x <= 0.0)
    throw std::domain_error(std::string(name) + " must be positive and finite, got " +
                            std::to_string(x));
}

}  // namespace

double log_gamma_fn(double x) {
  require_positive_finite(x, "log_gamma_fn: x");
  // Lanczos, g = 7, 9 terms.
  static const double kCoef[9] = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    // reflection keeps the series argument >= 0.5
    return std::log(M_PI / std::sin(M_PI * x)) - log_gamma_fn(1.0 - x);
  }
  const double z = x - 1.0;
  double a = kCoef[0];
  for (int i = 1; i < 9; ++i) a += kCoef[i] / (z + i);
  const double t = z + 7.5;
  return 0.5 * std::log(2.0 * M_PI) + (z + 0.5) * std::log(t) - t + std::log(a);
}

double digamma(double x) {
  require_positive_finite(x, "digamma: x");
  double result = 0.0;
  while (x < 8.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  // asymptotic series in 1/x^2
  const double r = 1.0 / (x * x);
  result += std::log(x) - 0.5 / x -
            r * (1.0 / 12.0 -
                 r * (1.0 / 120.0 -
                      r * (1.0 / 252.0 - r * (1.0 / 240.0 - r * (1.0 / 132.0)))));
  return result;
}

double trigamma(double x) {
  require_positive_finite(x, "trigamma: x");
  double result = 0.0;
  while (x < 8.0) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  const double r = 1.0 / (x * x);
  result += (1.0 + 0.5 / x +
             r * (1.0 / 6.0 - r * (1.0 / 30.0 - r * (1.0 / 42.0 - r / 30.0)))) /
            x;
  return result;
}

double log_bessel_k(double nu, double x) {
  if (!std::isfinite(nu)) throw std::domain_error("log_bessel_k: nu must be finite");
  if (!std::isfinite(x) || x <= 0.0)
    throw std::domain_error("log_bessel_k: x must be positive and finite, got " +
                            std::to_string(x));
  gsl_sf_result r;
  const int status = gsl_sf_bessel_lnKnu_e(std::fabs(nu), x, &r);
  if (status != GSL_SUCCESS)
    throw std::runtime_error(std::string("log_bessel_k: gsl_sf_bessel_lnKnu failed: ") +
                             gsl_strerror(status));
  return r.val;
}

double log_bessel_k_dnu(double nu, double x) {
  if (!std::isfinite(x) || x <= 0.0)
    throw std::domain_error("log_bessel_k_dnu: x must be positive and finite");
  const double h = 1e-6 * std::max(1.0, std::fabs(nu));
  const auto central = [&](double step) {
    return (log_bessel_k(nu + step, x) - log_bessel_k(nu - step, x)) / (2.0 * step);
  };
  const double d_h = central(h);
  const double d_h2 = central(0.5 * h);
  return (4.0 * d_h2 - d_h) / 3.0;
}

double solve_digamma(double target, long weight) {
  if (weight <= 0) throw std::domain_error("solve_digamma: weight must be positive");
  if (!std::isfinite(target)) throw std::domain_error("solve_digamma: target must be finite");
  const double t = target / static_cast<double>(weight);
  double lo = 1e-8, hi = 1e8;
  if (t <= digamma(lo)) return lo;
  if (t >= digamma(hi)) return hi;
  // Minka's initial guess, then safeguarded Newton.
  constexpr double kEulerGamma = 0.57721566490153286;
  double c = (t >= -2.22) ? std::exp(t) + 0.5 : -1.0 / (t + kEulerGamma);
  c = std::min(std::max(c, lo), hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = digamma(c) - t;
    if (std::fabs(f) * static_cast<double>(weight) < 1e-9) return c;
    if (f > 0.0)
      hi = c;
    else
      lo = c;
    double step = f / trigamma(c);
    double next = c - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    c = next;
  }
  return c;
}

void GigParams::validate() const {
  if (!std::isfinite(lambda) || !std::isfinite(chi) || !std::isfinite(psi) || chi < 0.0 ||
      psi < 0.0)
    throw std::domain_error("GigParams: parameters must be finite with chi, psi >= 0");
  const bool chi_zero = chi < kGigZeroTol;
  const bool psi_zero = psi < kGigZeroTol;
  if (chi_zero && psi_zero)
    throw std::domain_error("GigParams: at least one of chi, psi must be positive");
  if (lambda <= 0.0 && chi_zero)
    throw std::domain_error("GigParams: chi must be positive when lambda <= 0");
  if (lambda >= 0.0 && psi_zero)
    throw std::domain_error("GigParams: psi must be positive when lambda >= 0");
}

double sample_gamma(double shape, double rate, Rng& rng) {
  require_positive_finite(shape, "sample_gamma: shape");
  require_positive_finite(rate, "sample_gamma: rate");
  if (shape < 1.0) {
    const double u = rng.uniform();
    return sample_gamma(shape + 1.0, rate, rng) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double sample_inverse_gamma(double shape, double scale, Rng& rng) {
  require_positive_finite(shape, "sample_inverse_gamma: shape");
  require_positive_finite(scale, "sample_inverse_gamma: scale");
  return scale / sample_gamma(shape, 1.0, rng);
}

namespace {

// Standardized two-parameter quasi-density g(x) = x^{t-1} exp(-(omega/2)(x+1/x)),
// evaluated relative to its mode so that rejection tests never form differences
// of astronomically large exponents.
struct GigQuasi {
  double a_half;     // (t-1)/2, exponent of sqrt(g)
  double b_quarter;  // omega/4
  double xm;         // mode of g

  // log( sqrt(g(x)) / sqrt(g(xm)) ); dx must equal x - xm.
  double log_sqrt_rel(double x, double dx) const {
    return a_half * std::log1p(dx / xm) - b_quarter * dx * (1.0 - 1.0 / (x * xm));
  }
};

double gig_mode(double t, double omega) {
  if (t >= 1.0) return ((t - 1.0) + std::sqrt((t - 1.0) * (t - 1.0) + omega * omega)) / omega;
  return omega / (std::sqrt((1.0 - t) * (1.0 - t) + omega * omega) + (1.0 - t));
}

// Ratio-of-uniforms on the minimal rectangle, no shift. Exact for all (t, omega);
// used where the acceptance rate is acceptable.
double gig_rou_noshift(double t, double omega, Rng& rng) {
  const GigQuasi q{0.5 * (t - 1.0), 0.25 * omega, gig_mode(t, omega)};
  // maximum of x*sqrt(g(x)) sits at the positive root of (omega/2)y^2-(t+1)y-omega/2
  const double ym = ((t + 1.0) + std::sqrt((t + 1.0) * (t + 1.0) + omega * omega)) / omega;
  const double um = std::exp(std::log(ym) + q.log_sqrt_rel(ym, ym - q.xm));
  for (;;) {
    const double u = um * rng.uniform();
    const double v = rng.uniform();
    const double x = u / v;
    if (std::log(v) <= q.log_sqrt_rel(x, x - q.xm)) return x;
  }
}

// Ratio-of-uniforms with the proposal recentered at the mode; preferred for
// large t or omega where the unshifted rectangle degenerates.
double gig_rou_shift(double t, double omega, Rng& rng) {
  const GigQuasi q{0.5 * (t - 1.0), 0.25 * omega, gig_mode(t, omega)};
  const double xm = q.xm;
  // stationary points of (x-xm)*sqrt(g(x)): cubic x^3 + a x^2 + b x + c
  const double a = -(2.0 * (t + 1.0) / omega + xm);
  const double b = 2.0 * (t - 1.0) * xm / omega - 1.0;
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double qq = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  double cosarg = 0.0;
  const double disc = -p * p * p / 27.0;
  if (disc > 0.0) cosarg = std::min(1.0, std::max(-1.0, -qq / (2.0 * std::sqrt(disc))));
  const double fi = std::acos(cosarg);
  const double fak = 2.0 * std::sqrt(std::max(0.0, -p / 3.0));
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 * M_PI / 3.0) - a / 3.0;
  double uplus = (y1 - xm) * std::exp(q.log_sqrt_rel(y1, y1 - xm));
  double uminus = (y2 - xm) * std::exp(q.log_sqrt_rel(y2, y2 - xm));
  if (!(uplus >= 0.0)) uplus = 0.0;
  if (!(uminus <= 0.0)) uminus = 0.0;
  for (;;) {
    const double u = rng.uniform(uminus, uplus);
    const double v = rng.uniform();
    const double dx = u / v;
    const double x = dx + xm;
    if (x <= 0.0) continue;
    if (std::log(v) <= q.log_sqrt_rel(x, dx)) return x;
  }
}

// Three-piece hat (constant head, x^{t-1} waist, exponential tail) for the
// non-T-concave corner 0 <= t < 1 with small omega.
double gig_three_piece(double t, double omega, Rng& rng) {
  const double xm = gig_mode(t, omega);
  const double x0 = omega / (1.0 - t);
  const double log_g = [&](double x) {
    return (t - 1.0) * std::log(x) - 0.5 * omega * (x + 1.0 / x);
  }(xm);
  const double k0 = std::exp(log_g);  // sup of g
  const double area0 = k0 * x0;

  double k1 = 0.0, area1 = 0.0, k2, area2;
  const double tail_start = std::max(x0, 2.0 / omega);
  if (x0 < 2.0 / omega) {
    k1 = std::exp(-omega);
    area1 = (t == 0.0)
                ? k1 * std::log(2.0 / (omega * omega))
                : k1 * std::pow(x0, t) * std::expm1(t * std::log(2.0 / (omega * x0))) / t;
    k2 = std::pow(2.0 / omega, t - 1.0);
  } else {
    k2 = std::pow(x0, t - 1.0);
  }
  area2 = k2 * (2.0 / omega) * std::exp(-0.5 * omega * tail_start);
  const double total = area0 + area1 + area2;

  for (;;) {
    double v = total * rng.uniform();
    double x, hat;
    if (v <= area0) {
      x = x0 * v / area0;
      hat = k0;
    } else if ((v -= area0) <= area1) {
      if (t == 0.0) {
        x = omega * std::exp(v / k1);
      } else {
        // invert the x^{t-1} hat CDF; log1p keeps tiny t exact
        const double a0 = std::pow(x0, t);
        x = x0 * std::exp(std::log1p(t * v / (k1 * a0)) / t);
      }
      hat = k1 * std::pow(x, t - 1.0);
    } else {
      v -= area1;
      x = -(2.0 / omega) *
          std::log(std::exp(-0.5 * omega * tail_start) - v * omega / (2.0 * k2));
      hat = k2 * std::exp(-0.5 * omega * x);
    }
    if (!std::isfinite(x) || x <= 0.0) continue;
    const double u = rng.uniform() * hat;
    if (std::log(u) <= (t - 1.0) * std::log(x) - 0.5 * omega * (x + 1.0 / x)) return x;
  }
}

// E[x] with degenerate limits; E[1/x] of GIG(l,chi,psi) is the mean of the
// dual GIG(-l,psi,chi), so both moments share this path.
double gig_mean_impl(double lambda, double chi, double psi) {
  if (chi < kGigZeroTol) {
    // Gamma(lambda, psi/2)
    return 2.0 * lambda / psi;
  }
  if (psi < kGigZeroTol) {
    // InverseGamma(-lambda, chi/2)
    return (-lambda > 1.0) ? 0.5 * chi / (-lambda - 1.0) : kInf;
  }
  const double omega = std::sqrt(chi * psi);
  return std::sqrt(chi / psi) *
         std::exp(log_bessel_k(lambda + 1.0, omega) - log_bessel_k(lambda, omega));
}

}  // namespace

double sample_gig(const GigParams& params, Rng& rng) {
  params.validate();
  const double lambda = params.lambda;
  if (params.chi < kGigZeroTol) return sample_gamma(lambda, 0.5 * params.psi, rng);
  if (params.psi < kGigZeroTol) return sample_inverse_gamma(-lambda, 0.5 * params.chi, rng);

  const double t = std::fabs(lambda);
  const double omega = std::sqrt(params.chi * params.psi);
  double x;
  if (t > 2.0 || omega > 3.0)
    x = gig_rou_shift(t, omega, rng);
  else if (t >= 1.0 - 2.25 * omega * omega || omega > 0.2)
    x = gig_rou_noshift(t, omega, rng);
  else
    x = gig_three_piece(t, omega, rng);

  const double alpha = std::sqrt(params.chi / params.psi);
  return (lambda >= 0.0) ? alpha * x : alpha / x;
}

GigMoments gig_moments(const GigParams& params) {
  params.validate();
  GigMoments m;
  m.mean = gig_mean_impl(params.lambda, params.chi, params.psi);
  m.inv_mean = gig_mean_impl(-params.lambda, params.psi, params.chi);
  if (params.chi < kGigZeroTol) {
    m.log_mean = digamma(params.lambda) - std::log(0.5 * params.psi);
  } else if (params.psi < kGigZeroTol) {
    m.log_mean = std::log(0.5 * params.chi) - digamma(-params.lambda);
  } else {
    const double omega = std::sqrt(params.chi * params.psi);
    m.log_mean = 0.5 * (std::log(params.chi) - std::log(params.psi)) +
                 log_bessel_k_dnu(params.lambda, omega);
  }
  return m;
}

double gig_log_normalizer(const GigParams& params) {
  params.validate();
  if (params.chi < kGigZeroTol)
    return log_gamma_fn(params.lambda) - params.lambda * std::log(0.5 * params.psi);
  if (params.psi < kGigZeroTol)
    return log_gamma_fn(-params.lambda) + params.lambda * std::log(0.5 * params.chi);
  const double omega = std::sqrt(params.chi * params.psi);
  return std::log(2.0) + log_bessel_k(params.lambda, omega) +
         0.5 * params.lambda * (std::log(params.chi) - std::log(params.psi));
}

}  // namespace ncg
