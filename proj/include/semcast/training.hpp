#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "semcast/autoencoder.hpp"
#include "semcast/dataset.hpp"

namespace semcast {

/// Training configuration for the three-step exchange schedule. The channel
/// injected during training is identity for the non-robust scheme, or
/// gain-policy fading plus noise scaled to snr_train_db for the robust ones.
struct TrainConfig {
  int steps_per_phase = 5000;       // each phase runs once per cycle
  double learning_rate = 2e-3;      // plain gradient descent on the summed loss
  int batch_size = 16;              // samples for self, pairs use batch_size/2
  std::optional<double> snr_train_db;  // nullopt: noiseless (non-robust)
  GainPolicy gain_policy = GainPolicy::identity();
  NoiseModel train_noise = NoiseModel::gaussian(1.0);
  bool equalize = true;
  double clip_norm = 50.0;          // 0 disables gradient clipping
  double momentum = 0.0;            // 0 keeps plain gradient descent
  std::uint64_t seed = 0;

  void validate() const;
  TrainChannel channel() const {
    return TrainChannel{gain_policy, snr_train_db, train_noise, equalize};
  }
};

struct TrainHistory {
  std::vector<double> self_loss;
  std::vector<double> common_loss;
  std::vector<double> different_loss;
};

struct TrainOutcome {
  AeModel model;
  TrainHistory history;
};

/// Run the three-step schedule: each cycle takes one self-reconstruction
/// step, one common-feature exchange step and one different-feature double
/// exchange step, all with unit weights. Deterministic given the seed.
/// Throws on divergence (non-finite loss), naming the step.
TrainOutcome train(const AeModel& initial, const AttributeDataset& dataset,
                   const TrainConfig& config);

/// Convenience: initialize from the config seed, then train.
TrainOutcome train(const LatentSchema& schema, int hidden_dim, const AttributeDataset& dataset,
                   const TrainConfig& config);

/// Fraction of held-out pairs (differing in `block`) whose decoded post-swap
/// reconstruction carries the swapped attribute from the donor and every
/// other attribute from the source, judged by the dataset's nearest-prototype
/// classifier. Evaluated over every user with a noiseless channel.
double swap_accuracy(const AeModel& model, const AttributeDataset& dataset, int block,
                     int n_pairs, Rng rng);

/// Mean per-element reconstruction MSE over the whole dataset, averaged over
/// `n_realizations` independent channel draws and all users.
double mean_reconstruction_error(const AeModel& model, const AttributeDataset& dataset,
                                 const TrainChannel& channel, int n_realizations, Rng rng);

/// Mean PSNR (dB) under the same protocol.
double mean_psnr(const AeModel& model, const AttributeDataset& dataset,
                 const TrainChannel& channel, int n_realizations, Rng rng);

/// Attribute agreement of decoded feature completions: interest blocks from
/// the source sample's code, the rest from the donor's. Returns the fraction
/// of (sample, donor) draws where the classifier sees the source's attributes
/// on the interest blocks and the donor's elsewhere.
double completion_agreement(const AeModel& model, const AttributeDataset& dataset, int user,
                            int n_draws, Rng rng);

}  // namespace semcast
