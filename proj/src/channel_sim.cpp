#include "semcast/channel_sim.hpp"

#include <cmath>
#include <stdexcept>

namespace semcast {

SuperpositionFrame superpose(Eigen::ArrayXd x1, Eigen::ArrayXd x2, double alpha, double power) {
  if (x1.size() != x2.size() || x1.size() < 1)
    throw std::invalid_argument("superpose: streams must have equal length >= 1");
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("superpose: alpha must be in [0,1]");
  if (!(power > 0.0)) throw std::invalid_argument("superpose: power must be positive");
  SuperpositionFrame f;
  f.alpha = alpha;
  f.power = power;
  f.combined = std::sqrt(alpha * power) * x1 + std::sqrt((1.0 - alpha) * power) * x2;
  f.x1 = std::move(x1);
  f.x2 = std::move(x2);
  return f;
}

namespace {

Eigen::ArrayXd draw_gains(double nominal, std::optional<double> fade_scale, FadingMode mode,
                          bool signed_gains, Eigen::Index n, Rng& rng) {
  if (mode == FadingMode::None || !fade_scale) {
    return Eigen::ArrayXd::Constant(1, nominal);
  }
  const double sd = std::sqrt(*fade_scale);
  auto one = [&]() {
    const double g = rng.normal(0.0, sd);
    return signed_gains ? g : std::abs(g);
  };
  if (mode == FadingMode::Slow) {
    return Eigen::ArrayXd::Constant(1, one());
  }
  Eigen::ArrayXd g(n);
  for (Eigen::Index i = 0; i < n; ++i) g[i] = one();
  return g;
}

Eigen::ArrayXd apply_gain(const Eigen::ArrayXd& gains, const Eigen::ArrayXd& x) {
  if (gains.size() == 1) return gains[0] * x;
  return gains * x;
}

}  // namespace

ReceivedFrame transmit(const SuperpositionFrame& frame, const BroadcastChannelParams& params,
                       const TransmitOptions& options, TransmitSeeds seeds) {
  const Eigen::Index n = frame.combined.size();
  ReceivedFrame out;
  out.gains1 = draw_gains(params.gain1, params.fading_scale1, options.fading,
                          options.signed_gains, n, seeds.gains);
  out.gains2 = draw_gains(params.gain2, params.fading_scale2, options.fading,
                          options.signed_gains, n, seeds.gains);
  out.noise1 = params.noise1.sample(n, seeds.noise1);
  out.noise2 = params.noise2.sample(n, seeds.noise2);
  out.y1 = apply_gain(out.gains1, frame.combined) + out.noise1;
  out.y2 = apply_gain(out.gains2, frame.combined) + out.noise2;
  return out;
}

Eigen::ArrayXd sic_decode(const ReceivedFrame& frame, double alpha,
                          const BroadcastChannelParams& params,
                          const Eigen::ArrayXd& x2_reference) {
  if (x2_reference.size() != frame.y1.size())
    throw std::invalid_argument("sic_decode: reference length mismatch");
  const double cloud = std::sqrt((1.0 - alpha) * params.total_power);
  if (frame.gains1.size() == 1) {
    return frame.y1 - frame.gains1[0] * cloud * x2_reference;
  }
  return frame.y1 - frame.gains1 * cloud * x2_reference;
}

Eigen::ArrayXd sic_decode_hard(const ReceivedFrame& frame, double alpha,
                               const BroadcastChannelParams& params,
                               const Eigen::ArrayXd& constellation) {
  if (constellation.size() < 1)
    throw std::invalid_argument("sic_decode_hard: empty constellation");
  const double cloud = std::sqrt((1.0 - alpha) * params.total_power);
  Eigen::ArrayXd x2_hat(frame.y1.size());
  for (Eigen::Index i = 0; i < frame.y1.size(); ++i) {
    const double g = frame.gains1.size() == 1 ? frame.gains1[0] : frame.gains1[i];
    const double proj = frame.y1[i] / (g * cloud);
    double best = constellation[0];
    double best_d = std::abs(proj - best);
    for (Eigen::Index c = 1; c < constellation.size(); ++c) {
      const double d = std::abs(proj - constellation[c]);
      if (d < best_d) {
        best_d = d;
        best = constellation[c];
      }
    }
    x2_hat[i] = best;
  }
  return sic_decode(frame, alpha, params, x2_hat);
}

double draw_gain(const GainPolicy& policy, Rng& rng) {
  switch (policy.kind) {
    case GainPolicy::Kind::Identity:
      return 1.0;
    case GainPolicy::Kind::Fixed:
      return policy.value;
    case GainPolicy::Kind::RayleighEnvelope: {
      const double g = std::abs(rng.normal(0.0, std::sqrt(policy.value)));
      return std::max(g, policy.min_gain);
    }
    case GainPolicy::Kind::RayleighSigned: {
      double g = rng.normal(0.0, std::sqrt(policy.value));
      if (std::abs(g) < policy.min_gain) g = g < 0.0 ? -policy.min_gain : policy.min_gain;
      return g;
    }
  }
  return 1.0;
}

double mean_square_gain(const GainPolicy& policy) {
  switch (policy.kind) {
    case GainPolicy::Kind::Identity:
      return 1.0;
    case GainPolicy::Kind::Fixed:
      return policy.value * policy.value;
    case GainPolicy::Kind::RayleighEnvelope:
    case GainPolicy::Kind::RayleighSigned:
      return policy.value;  // E[G^2] of the Gaussian draw
  }
  return 1.0;
}

ChannelDraw draw_channel(const TrainChannel& channel, const Eigen::MatrixXd& z_clean, Rng& rng) {
  ChannelDraw draw;
  draw.gain_factor = draw_gain(channel.gain, rng);
  if (!channel.snr_db) {
    if (channel.equalize) draw.gain_factor = 1.0;
    return draw;  // noiseless
  }
  const double snr_db = std::min(*channel.snr_db, 300.0);
  const double snr = std::pow(10.0, snr_db / 10.0);
  // SNR is calibrated against the ensemble mean-square gain, so a realized
  // deep fade lowers the instantaneous post-equalization SNR instead of the
  // noise tracking the fade away.
  const double signal_power =
      mean_square_gain(channel.gain) * z_clean.array().square().mean();
  if (!(signal_power > 0.0))
    throw std::invalid_argument("draw_channel: zero signal power with finite SNR requested");
  const double noise_unit_var = channel.noise.variance();
  const double scale = std::sqrt(signal_power / (snr * noise_unit_var));

  Eigen::MatrixXd n(z_clean.rows(), z_clean.cols());
  for (Eigen::Index j = 0; j < n.cols(); ++j)
    for (Eigen::Index i = 0; i < n.rows(); ++i) n(i, j) = scale * channel.noise.sample(rng);

  if (channel.equalize) {
    draw.additive = n / draw.gain_factor;
    draw.gain_factor = 1.0;
  } else {
    draw.additive = std::move(n);
  }
  return draw;
}

Eigen::VectorXd channel_for_training(const Eigen::VectorXd& z, const GainPolicy& gain_policy,
                                     std::optional<double> snr_db, const NoiseModel& model,
                                     RngSeed seed, bool equalize) {
  if (snr_db && !std::isfinite(*snr_db))
    throw std::invalid_argument("channel_for_training: snr_db must be finite");
  TrainChannel ch{gain_policy, snr_db, model, equalize};
  Rng rng = Rng(seed.seed).derive("train-channel");
  const ChannelDraw draw = draw_channel(ch, z, rng);
  return draw.apply(z);
}

}  // namespace semcast
