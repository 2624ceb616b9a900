#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Dense>

#include "semcast/rng.hpp"

namespace semcast {

enum class NoiseKind { Gaussian, ErfMixture, Tabulated };

/// Whether construction enforces unit mass or merely records the measured
/// mass. Enforce rejects mis-specified parameter triples instead of silently
/// rescaling them; Report keeps the density as given.
enum class MassCheck { Enforce, Report };

/// One-dimensional noise distribution: closed-form Gaussian, an erf mixture
/// p(x) = c (erf(a - b x) + erf(a + b x)), or a tabulated PDF on a uniform
/// grid. Moments come from quadrature (adaptive Simpson for closed forms,
/// trapezoid for tabulated data) and sampling goes through a precomputed
/// monotone inverse-CDF table for the non-Gaussian kinds.
class NoiseModel {
 public:
  static NoiseModel gaussian(double variance);
  static NoiseModel erf_mixture(double a, double b, double c,
                                MassCheck policy = MassCheck::Enforce);
  static NoiseModel tabulated(const Eigen::ArrayXd& x, const Eigen::ArrayXd& p,
                              MassCheck policy = MassCheck::Enforce);

  /// Two-column whitespace-separated text format, `#` comments allowed.
  static NoiseModel from_file(const std::filesystem::path& path,
                              MassCheck policy = MassCheck::Enforce);
  void to_file(const std::filesystem::path& path) const;

  double density(double x) const;
  /// Model CDF (quadrature-based table for non-Gaussian kinds).
  double cdf(double x) const;

  NoiseKind kind() const { return kind_; }
  /// Measured total mass over the support.
  double mass() const { return mass_; }
  double mean() const { return mean_; }
  /// Cached second moment about zero.
  double variance() const { return second_moment_; }
  double support_lo() const { return lo_; }
  double support_hi() const { return hi_; }

  double sample(Rng& rng) const;
  Eigen::ArrayXd sample(Eigen::Index n, Rng& rng) const;

  /// Description like "gaussian(1)" or "erf_mixture(0.7071,0.8165,0.2887)".
  std::string describe() const;

  // erf-mixture parameters (only valid for that kind)
  double erf_a() const { return a_; }
  double erf_b() const { return b_; }
  double erf_c() const { return c_; }

  const Eigen::ArrayXd& table_x() const { return tab_x_; }
  const Eigen::ArrayXd& table_p() const { return tab_p_; }

 private:
  NoiseModel() = default;
  void compute_moments();
  void build_cdf_table();

  NoiseKind kind_ = NoiseKind::Gaussian;
  double a_ = 0, b_ = 0, c_ = 0;     // erf mixture parameters
  double gauss_var_ = 1.0;           // gaussian kind
  Eigen::ArrayXd tab_x_, tab_p_;     // tabulated kind
  double lo_ = 0, hi_ = 0;           // integration support
  double mass_ = 1.0;
  double mean_ = 0.0;
  double second_moment_ = 0.0;

  Eigen::ArrayXd cdf_x_, cdf_v_;     // monotone CDF table for inverse sampling
};

/// Second moment of the noise density, by quadrature. Relative error target
/// 1e-8 for closed forms; trapezoid for tabulated grids.
double noise_variance(const NoiseModel& model);

/// n i.i.d. draws. Gaussian uses the standard transform, the other kinds use
/// inverse-CDF lookup on the precomputed table (linear interpolation).
Eigen::ArrayXd sample_noise(const NoiseModel& model, Eigen::Index n, RngSeed seed);

/// The two erf-mixture noise PDFs used for the broadcast rate-region study.
/// q1 is the unit-variance mixture with uniform-to-Gaussian spread ratio 1.
NoiseModel q1_noise();
/// q2: unit-variance mixture closer to the Gaussian (spread ratio 3/5).
NoiseModel q2_noise();
/// Narrow erf-mixture used for the additive non-Gaussian channel evaluations.
NoiseModel angc_noise();

/// Parse a noise spec string: "gaussian:VAR", "q1", "q2", "angc",
/// "erf:A,B,C" or "table:PATH".
NoiseModel parse_noise_spec(const std::string& spec);

}  // namespace semcast
