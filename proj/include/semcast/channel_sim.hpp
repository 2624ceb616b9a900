#pragma once

#include <optional>

#include <Eigen/Dense>

#include "semcast/core_types.hpp"
#include "semcast/rng.hpp"

namespace semcast {

enum class FadingMode { None, Slow, Fast };

/// Superposition of two unit-power symbol streams:
/// combined = sqrt(a P) x1 + sqrt((1-a) P) x2.
struct SuperpositionFrame {
  Eigen::ArrayXd x1, x2;
  double alpha;
  double power;
  Eigen::ArrayXd combined;
};

SuperpositionFrame superpose(Eigen::ArrayXd x1, Eigen::ArrayXd x2, double alpha, double power);

/// Per-stage seeds derived from one master seed by domain separation, so that
/// changing one stage's randomness leaves the others untouched.
struct TransmitSeeds {
  Rng gains;
  Rng noise1;
  Rng noise2;
  explicit TransmitSeeds(RngSeed master)
      : gains(Rng(master.seed).derive("gains")),
        noise1(Rng(master.seed).derive("noise1")),
        noise2(Rng(master.seed).derive("noise2")) {}
};

/// Received streams y_k = G_k * combined + n_k with realized gains and noise
/// draws recorded; bit-reproducible given the seed.
struct ReceivedFrame {
  Eigen::ArrayXd y1, y2;
  Eigen::ArrayXd gains1, gains2;  // one entry (fixed/slow) or per symbol (fast)
  Eigen::ArrayXd noise1, noise2;
  double gain1() const { return gains1[0]; }
  double gain2() const { return gains2[0]; }
};

/// Options for the gain draw: fading uses the per-user Rayleigh scale in the
/// channel params; signed_gains keeps the raw Gaussian draw instead of its
/// amplitude.
struct TransmitOptions {
  FadingMode fading = FadingMode::None;
  bool signed_gains = false;
};

ReceivedFrame transmit(const SuperpositionFrame& frame, const BroadcastChannelParams& params,
                       const TransmitOptions& options, TransmitSeeds seeds);

inline ReceivedFrame transmit(const SuperpositionFrame& frame,
                              const BroadcastChannelParams& params,
                              const TransmitOptions& options, RngSeed seed) {
  return transmit(frame, params, options, TransmitSeeds(seed));
}

/// Successive interference cancellation at the strong user: subtracts the
/// cloud-center component G1 sqrt((1-a)P) x2_ref from y1. With a genie-aided
/// reference the residual equals G1 sqrt(aP) x1 + n1 exactly.
Eigen::ArrayXd sic_decode(const ReceivedFrame& frame, double alpha,
                          const BroadcastChannelParams& params,
                          const Eigen::ArrayXd& x2_reference);

/// Hard-decision SIC: x2 estimated by nearest constellation point of
/// y1 / (G1 sqrt((1-a)P)) before cancellation; for error-propagation studies.
Eigen::ArrayXd sic_decode_hard(const ReceivedFrame& frame, double alpha,
                               const BroadcastChannelParams& params,
                               const Eigen::ArrayXd& constellation);

// ---------------------------------------------------------------------------
// Latent-vector channel used by the autoencoder training and evaluation.

struct GainPolicy {
  enum class Kind { Identity, Fixed, RayleighEnvelope, RayleighSigned };
  Kind kind = Kind::Identity;
  /// Fixed gain value, or the variance of the Gaussian gain draw.
  double value = 1.0;
  /// Smallest usable |gain|; draws below it are clamped (receiver outage floor).
  double min_gain = 1e-3;

  static GainPolicy identity() { return {}; }
  static GainPolicy fixed(double g) { return {Kind::Fixed, g, 1e-3}; }
  static GainPolicy rayleigh(double variance, double min_gain = 1e-3) {
    return {Kind::RayleighEnvelope, variance, min_gain};
  }
  static GainPolicy rayleigh_signed(double variance, double min_gain = 1e-3) {
    return {Kind::RayleighSigned, variance, min_gain};
  }
};

/// Channel configuration for latent broadcasts: one gain draw per batch
/// (slow fading), additive noise scaled to the requested SNR against the
/// batch's empirical signal power. `equalize` divides the received signal by
/// the known gain (zero-forcing at the receiver).
struct TrainChannel {
  GainPolicy gain;
  std::optional<double> snr_db;  // nullopt: noiseless
  NoiseModel noise = NoiseModel::gaussian(1.0);
  bool equalize = true;

  static TrainChannel identity() { return {GainPolicy::identity(), std::nullopt}; }
};

/// A frozen channel realization: zhat = gain_factor * z + additive. Gradients
/// treat both members as constants, so backpropagation and re-evaluation with
/// the same draw agree exactly.
struct ChannelDraw {
  double gain_factor = 1.0;
  Eigen::MatrixXd additive;  // empty means zero

  Eigen::MatrixXd apply(const Eigen::MatrixXd& z) const {
    if (additive.size() == 0) return gain_factor * z;
    return gain_factor * z + additive;
  }
};

double draw_gain(const GainPolicy& policy, Rng& rng);

/// Build a frozen draw for a batch with the given clean latent signal.
/// SNR calibration uses the batch's empirical signal power after the gain.
ChannelDraw draw_channel(const TrainChannel& channel, const Eigen::MatrixXd& z_clean, Rng& rng);

/// Single-vector convenience: zhat = G z + n at the requested SNR (capped at
/// 300 dB), or the identity policy for noiseless training.
Eigen::VectorXd channel_for_training(const Eigen::VectorXd& z, const GainPolicy& gain_policy,
                                     std::optional<double> snr_db, const NoiseModel& model,
                                     RngSeed seed, bool equalize = true);

}  // namespace semcast
