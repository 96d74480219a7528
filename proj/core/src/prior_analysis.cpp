#include "ncg/prior_analysis.hpp"

#include <cmath>
#include <limits>

#include "ncg/errors.hpp"
#include "ncg/special_math.hpp"

namespace ncg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log-mean-exp of the normal log-pdfs plus a delta-method standard error of
// the log estimate; shared by marginal_log_density and density_curve.
LogDensityEstimate log_mean_exp_pdf(double x, const std::vector<double>& scales) {
  const long n = static_cast<long>(scales.size());
  std::vector<double> logp(scales.size());
  double max_lp = -kInf;
  for (size_t i = 0; i < scales.size(); ++i) {
    const double lam = scales[i];
    logp[i] = (lam > 0.0) ? -0.5 * std::log(2.0 * M_PI * lam) - x * x / (2.0 * lam) : -kInf;
    max_lp = std::max(max_lp, logp[i]);
  }
  LogDensityEstimate out;
  if (!std::isfinite(max_lp)) {
    out.log_density = -kInf;
    out.stderr_log = kInf;
    return out;
  }
  double s1 = 0.0, s2 = 0.0;
  for (double lp : logp) {
    const double w = std::exp(lp - max_lp);
    s1 += w;
    s2 += w * w;
  }
  out.log_density = max_lp + std::log(s1 / n);
  // relative MC error of the mean estimate: sd(p)/ (sqrt(n) * mean(p))
  const double ratio = s2 / (s1 * s1) * n;  // E[p^2]/E[p]^2, underflow-safe
  out.stderr_log = std::sqrt(std::max(0.0, (ratio - 1.0) / n));
  return out;
}

std::vector<double> draw_product_scales(const Hyperparameters& h, long n_mc, Rng& rng) {
  std::vector<double> scales(static_cast<size_t>(n_mc));
  for (auto& s : scales) s = sample_prior_scale_product(h, rng);
  return scales;
}

}  // namespace

double sample_prior_scale_chain(const Hyperparameters& h, Rng& rng) {
  require_valid(h);
  double rate = h.phi;
  for (int k = h.depth; k >= 1; --k) {
    const double z = sample_gamma(h.shapes[k - 1], rate, rng);
    if (k == 1) return z;
    rate = z;
  }
  return rate;  // unreachable, depth >= 1
}

double sample_prior_scale_product(const Hyperparameters& h, Rng& rng) {
  require_valid(h);
  double prod = 1.0;
  for (int k = 1; k <= h.depth; ++k) {
    const double b = h.level_rate(k);
    prod *= (k % 2 == 1) ? sample_gamma(h.shapes[k - 1], b, rng)
                         : sample_inverse_gamma(h.shapes[k - 1], b, rng);
  }
  return prod;
}

LogDensityEstimate marginal_log_density(double x, const Hyperparameters& h, long n_mc,
                                        Rng& rng) {
  if (n_mc < 10000) throw ValidationError({"marginal_log_density: n_mc must be >= 10^4"});
  const auto scales = draw_product_scales(h, n_mc, rng);
  return log_mean_exp_pdf(x, scales);
}

std::vector<DensityCurvePoint> density_curve(const std::vector<double>& grid,
                                             const Hyperparameters& h, long n_mc, Rng& rng) {
  if (n_mc < 10000) throw ValidationError({"density_curve: n_mc must be >= 10^4"});
  for (double x : grid)
    if (!std::isfinite(x)) throw ValidationError({"density_curve: grid must be finite"});
  const auto scales = draw_product_scales(h, n_mc, rng);
  std::vector<DensityCurvePoint> out;
  out.reserve(grid.size());
  for (double x : grid) {
    const auto est = log_mean_exp_pdf(x, scales);
    out.push_back({x, est.log_density, est.stderr_log});
  }
  return out;
}

double prior_second_moment(const Hyperparameters& h) {
  require_valid(h);
  double prod = 1.0;
  for (int k = 1; k <= h.depth; ++k) {
    const double c = h.shapes[k - 1];
    const double b = h.level_rate(k);
    if (k % 2 == 1) {
      prod *= c / b;  // Gamma(c, b) mean
    } else {
      if (c <= 1.0) return kInf;
      prod *= b / (c - 1.0);  // InverseGamma(c, b) mean
    }
  }
  return prod;
}

void ConsistencyCheckInput::validate() const {
  std::vector<std::string> issues;
  if (n < 1) issues.push_back("n must be >= 1");
  if (p_n < 1) issues.push_back("p_n must be >= 1");
  if (s_n < 1 || s_n > p_n) issues.push_back("s_n must satisfy 1 <= s_n <= p_n");
  if (!(u > 0.0)) issues.push_back("u must be positive");
  if (!issues.empty()) throw ValidationError(issues);
}

TailConditionReport check_tail_condition(const Hyperparameters& h,
                                         const ConsistencyCheckInput& input, long n_mc,
                                         Rng& rng) {
  input.validate();
  require_valid(h);
  TailConditionReport rep;
  rep.n_mc = n_mc;
  const double pn = static_cast<double>(input.p_n);
  rep.k_n = std::sqrt(static_cast<double>(input.s_n) * std::log(pn) /
                      static_cast<double>(input.n)) /
            pn;
  rep.bound = std::pow(pn, -(1.0 + input.u));
  rep.c1_sufficient_scale = rep.k_n * rep.k_n * rep.bound;

  // Rao-Blackwellized tail mass: E_lambda[ 2*Phibar(k_n / sqrt(lambda)) ].
  double sum = 0.0;
  for (long i = 0; i < n_mc; ++i) {
    const double lam = sample_prior_scale_product(h, rng);
    if (lam > 0.0) sum += std::erfc(rep.k_n / std::sqrt(2.0 * lam));
  }
  const double nd = static_cast<double>(n_mc);
  rep.tail_mass_estimate = sum / nd;

  // Wilson 99% interval on the averaged conditional tail probabilities.
  const double z = 2.5758293035489004;
  const double z2 = z * z;
  const double center = (sum + 0.5 * z2) / (nd + z2);
  const double half =
      z / (nd + z2) * std::sqrt(sum * (nd - sum) / nd + 0.25 * z2);
  rep.wilson_low = std::max(0.0, center - half);
  rep.wilson_high = std::min(1.0, center + half);
  rep.satisfied = rep.wilson_high < rep.bound;
  return rep;
}

DensityFloorReport check_density_floor(const Hyperparameters& h, double e_n, long p_n,
                                       long n_mc, Rng& rng) {
  if (!(e_n >= 0.0) || !std::isfinite(e_n))
    throw ValidationError({"check_density_floor: E_n must be nonnegative and finite"});
  if (p_n < 2) throw ValidationError({"check_density_floor: p_n must be >= 2"});
  DensityFloorReport rep;
  rep.e_n = e_n;
  rep.n_mc = n_mc;
  const auto est = marginal_log_density(e_n, h, n_mc, rng);
  rep.min_log_density = est.log_density;
  rep.stderr_log = est.stderr_log;
  // -log f <= 0 (density >= 1, e.g. at a pole) trivially meets the floor
  // condition; reported as 0 rather than a negative ratio.
  rep.neg_log_over_log_pn =
      std::max(0.0, -est.log_density / std::log(static_cast<double>(p_n)));
  return rep;
}

}  // namespace ncg
