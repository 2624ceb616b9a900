#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "semcast/core_types.hpp"

namespace semcast {

/// One point of the swept rate region. Rates in bits per channel use; the
/// outer bound is the equivalent-Gaussian inner bound plus the KL gap.
struct RegionPoint {
  double alpha;
  double r1_inner, r2_inner;
  double r1_outer, r2_outer;
  double kl1_bits, kl2_bits;
};

struct RegionCurve {
  std::vector<RegionPoint> points;
  double kl1_nats = 0.0;
  double kl2_nats = 0.0;
};

/// Equivalent-Gaussian rates of the two users at power split alpha:
///   r1 = 1/2 log2(1 + G1^2 a P / s1^2)
///   r2 = 1/2 log2(1 + G2^2 (1-a) P / (G2^2 a P + s2^2))
/// Requires the degraded order |G1| >= |G2|.
std::pair<double, double> equivalent_rates(const BroadcastChannelParams& params, double alpha);

/// KL divergence (nats) between the noise density and the Gaussian with the
/// same mean and variance. Zero iff the noise is Gaussian.
double kl_to_equivalent_gaussian(const NoiseModel& noise);

/// Monte Carlo estimate of the same KL: mean of log(p/q) over draws X ~ p.
/// Returns (estimate, standard error).
std::pair<double, double> kl_monte_carlo(const NoiseModel& noise, Eigen::Index n_samples,
                                         Rng rng);

/// Sweep the power split over a uniform alpha grid (endpoints included).
/// The per-user KL gap is alpha-independent and computed once.
RegionCurve region_curve(const BroadcastChannelParams& params, int n_alpha);

/// CSV columns: alpha,r1_inner,r1_outer,r2_inner,r2_outer,kl1_bits,kl2_bits.
void write_region_csv(std::ostream& os, const RegionCurve& curve);

/// Cross-check of the analytic SINR terms against an empirical simulator run.
struct SinrReport {
  double sinr1_analytic = 0.0;
  double sinr1_empirical = 0.0;
  double sinr2_analytic = 0.0;
  double sinr2_empirical = 0.0;
  double rel_err1 = 0.0;
  double rel_err2 = 0.0;
  double post_sic_interference_power = 0.0;
  bool within_tolerance = false;
};

/// Runs the signal-level simulator with Gaussian noise of matching variance
/// and compares empirical SINRs with the closed-form expressions.
SinrReport superposition_rate_check(const BroadcastChannelParams& params, double alpha,
                                    Eigen::Index n_symbols, RngSeed seed,
                                    double tolerance = 0.02);

}  // namespace semcast
