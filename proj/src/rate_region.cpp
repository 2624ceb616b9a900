#include "semcast/rate_region.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "semcast/channel_sim.hpp"
#include "semcast/quadrature.hpp"

namespace semcast {

namespace {

constexpr double kLn2 = 0.6931471805599453094172321;

void require_degraded(const BroadcastChannelParams& params) {
  if (!params.degraded_order()) {
    std::ostringstream os;
    os << "rate_region: degraded order violated (|G1|=" << std::abs(params.gain1)
       << " < |G2|=" << std::abs(params.gain2)
       << "); swap the users so that user 1 is the strong one";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

std::pair<double, double> equivalent_rates(const BroadcastChannelParams& params, double alpha) {
  require_degraded(params);
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("equivalent_rates: alpha must be in [0,1]");
  const double s1 = noise_variance(params.noise1);
  const double s2 = noise_variance(params.noise2);
  const double g1sq = params.gain1 * params.gain1;
  const double g2sq = params.gain2 * params.gain2;
  const double p = params.total_power;
  const double r1 = 0.5 * std::log2(1.0 + g1sq * alpha * p / s1);
  const double r2 = 0.5 * std::log2(1.0 + g2sq * (1.0 - alpha) * p / (g2sq * alpha * p + s2));
  return {r1, r2};
}

double kl_to_equivalent_gaussian(const NoiseModel& noise) {
  if (noise.kind() == NoiseKind::Gaussian) return 0.0;
  const double mu = noise.mean();
  const double var = noise_variance(noise);
  if (!(var > 0.0) || !std::isfinite(var))
    throw std::invalid_argument("kl_to_equivalent_gaussian: noise variance must be finite");
  const double norm = 1.0 / std::sqrt(2.0 * M_PI * var);
  auto integrand = [&](double x) {
    const double p = noise.density(x);
    if (p <= 0.0) return 0.0;  // p log(p/q) -> 0 as p -> 0
    const double d = x - mu;
    const double logq = std::log(norm) - 0.5 * d * d / var;
    return p * (std::log(p) - logq);
  };
  const double sd = std::sqrt(var);
  double lo = mu - 12.0 * sd;
  double hi = mu + 12.0 * sd;
  if (noise.kind() == NoiseKind::Tabulated) {
    // trapezoid on the model's own grid, clipped to the 12-sigma window
    const auto& xs = noise.table_x();
    Eigen::ArrayXd vals(xs.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i)
      vals[i] = (xs[i] >= lo && xs[i] <= hi) ? integrand(xs[i]) : 0.0;
    return trapezoid(xs, vals);
  }
  lo = std::max(lo, noise.support_lo());
  hi = std::min(hi, noise.support_hi());
  return adaptive_simpson(integrand, lo, hi, 1e-10);
}

std::pair<double, double> kl_monte_carlo(const NoiseModel& noise, Eigen::Index n_samples,
                                         Rng rng) {
  const double mu = noise.mean();
  const double var = noise_variance(noise);
  const double norm = 1.0 / std::sqrt(2.0 * M_PI * var);
  double sum = 0.0, sumsq = 0.0;
  for (Eigen::Index i = 0; i < n_samples; ++i) {
    const double x = noise.sample(rng);
    const double p = noise.density(x);
    const double d = x - mu;
    const double logq = std::log(norm) - 0.5 * d * d / var;
    const double v = std::log(p) - logq;
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / static_cast<double>(n_samples);
  const double variance = sumsq / static_cast<double>(n_samples) - mean * mean;
  const double se = std::sqrt(std::max(variance, 0.0) / static_cast<double>(n_samples));
  return {mean, se};
}

RegionCurve region_curve(const BroadcastChannelParams& params, int n_alpha) {
  require_degraded(params);
  if (n_alpha < 2) throw std::invalid_argument("region_curve: n_alpha must be >= 2");
  RegionCurve curve;
  curve.kl1_nats = kl_to_equivalent_gaussian(params.noise1);
  curve.kl2_nats = kl_to_equivalent_gaussian(params.noise2);
  const double kl1_bits = curve.kl1_nats / kLn2;
  const double kl2_bits = curve.kl2_nats / kLn2;
  curve.points.reserve(static_cast<size_t>(n_alpha));
  for (int i = 0; i < n_alpha; ++i) {
    const double alpha = static_cast<double>(i) / static_cast<double>(n_alpha - 1);
    const auto [r1, r2] = equivalent_rates(params, alpha);
    RegionPoint pt;
    pt.alpha = alpha;
    pt.r1_inner = r1;
    pt.r2_inner = r2;
    pt.r1_outer = r1 + kl1_bits;
    pt.r2_outer = r2 + kl2_bits;
    pt.kl1_bits = kl1_bits;
    pt.kl2_bits = kl2_bits;
    curve.points.push_back(pt);
  }
  return curve;
}

void write_region_csv(std::ostream& os, const RegionCurve& curve) {
  os << "alpha,r1_inner,r1_outer,r2_inner,r2_outer,kl1_bits,kl2_bits\n";
  os.precision(12);
  for (const auto& p : curve.points) {
    os << p.alpha << ',' << p.r1_inner << ',' << p.r1_outer << ',' << p.r2_inner << ','
       << p.r2_outer << ',' << p.kl1_bits << ',' << p.kl2_bits << '\n';
  }
}

SinrReport superposition_rate_check(const BroadcastChannelParams& params, double alpha,
                                    Eigen::Index n_symbols, RngSeed seed, double tolerance) {
  require_degraded(params);
  const double s1 = noise_variance(params.noise1);
  const double s2 = noise_variance(params.noise2);

  // Gaussian noise substituted with matching variances.
  BroadcastChannelParams gparams(params.gain1, params.gain2, NoiseModel::gaussian(s1),
                                 NoiseModel::gaussian(s2), params.total_power);

  Rng rng = Rng(seed.seed).derive("sinr-check");
  Eigen::ArrayXd x1(n_symbols), x2(n_symbols);
  for (Eigen::Index i = 0; i < n_symbols; ++i) x1[i] = rng.normal();
  for (Eigen::Index i = 0; i < n_symbols; ++i) x2[i] = rng.normal();

  const auto frame = superpose(x1, x2, alpha, params.total_power);
  const auto received = transmit(frame, gparams, TransmitOptions{}, seed);

  const double p = params.total_power;
  const double g1 = received.gain1();
  const double g2 = received.gain2();

  // user 1 after genie-aided SIC: residual = G1 sqrt(aP) x1 + n1
  const Eigen::ArrayXd residual = sic_decode(received, alpha, gparams, x2);
  const Eigen::ArrayXd sig1 = g1 * std::sqrt(alpha * p) * x1;
  const Eigen::ArrayXd noise1 = residual - sig1;

  // user 2 decodes the cloud center; the satellite signal is interference
  const Eigen::ArrayXd sig2 = g2 * std::sqrt((1.0 - alpha) * p) * x2;
  const Eigen::ArrayXd intf2 = received.y2 - sig2;

  SinrReport rep;
  rep.sinr1_analytic = g1 * g1 * alpha * p / s1;
  rep.sinr2_analytic = g2 * g2 * (1.0 - alpha) * p / (g2 * g2 * alpha * p + s2);
  rep.sinr1_empirical = sig1.square().mean() / noise1.square().mean();
  rep.sinr2_empirical = sig2.square().mean() / intf2.square().mean();
  rep.rel_err1 = rep.sinr1_analytic > 0.0
                     ? std::abs(rep.sinr1_empirical - rep.sinr1_analytic) / rep.sinr1_analytic
                     : rep.sinr1_empirical;
  rep.rel_err2 = rep.sinr2_analytic > 0.0
                     ? std::abs(rep.sinr2_empirical - rep.sinr2_analytic) / rep.sinr2_analytic
                     : rep.sinr2_empirical;
  rep.post_sic_interference_power =
      (residual - sig1 - received.noise1).square().mean();
  rep.within_tolerance = rep.rel_err1 <= tolerance && rep.rel_err2 <= tolerance;
  return rep;
}

}  // namespace semcast
