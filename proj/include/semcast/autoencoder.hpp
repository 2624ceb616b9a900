#pragma once

#include <vector>

#include <Eigen/Dense>

#include "semcast/channel_sim.hpp"
#include "semcast/latent.hpp"
#include "semcast/rng.hpp"

namespace semcast {

/// Two-layer affine+tanh encoder with one mirrored decoder per user. The
/// latent width equals the schema's total width; the number of decoders
/// equals the schema's number of users.
class AeModel {
 public:
  struct Layers {
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;
  };

  AeModel(LatentSchema schema, int input_dim, int hidden_dim);

  /// Xavier-uniform initialization from the given stream.
  static AeModel init(LatentSchema schema, int input_dim, int hidden_dim, Rng& rng);

  int input_dim() const { return input_dim_; }
  int hidden_dim() const { return hidden_dim_; }
  int latent_dim() const { return schema_.total_width(); }
  int n_users() const { return schema_.n_users(); }
  const LatentSchema& schema() const { return schema_; }

  Layers& encoder() { return encoder_; }
  const Layers& encoder() const { return encoder_; }
  Layers& decoder(int user) { return decoders_.at(static_cast<size_t>(user)); }
  const Layers& decoder(int user) const { return decoders_.at(static_cast<size_t>(user)); }

  /// Column-batch forward passes (deterministic).
  Eigen::MatrixXd encode(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd decode(int user, const Eigen::MatrixXd& zhat) const;
  LatentCode encode_one(const Eigen::VectorXd& x) const { return encode(x); }
  Eigen::VectorXd decode_one(int user, const LatentCode& zhat) const {
    return decode(user, zhat);
  }

  /// Flat views over every parameter tensor, encoder first then decoders.
  std::vector<double*> parameter_blocks();
  std::vector<const double*> parameter_blocks() const;
  std::vector<Eigen::Index> parameter_sizes() const;
  Eigen::Index n_parameters() const;
  bool all_finite() const;

 private:
  LatentSchema schema_;
  int input_dim_;
  int hidden_dim_;
  Layers encoder_;
  std::vector<Layers> decoders_;
};

/// Gradient accumulator with the same shape as the model's parameters.
struct AeGradients {
  AeModel::Layers encoder;
  std::vector<AeModel::Layers> decoders;

  static AeGradients zeros_like(const AeModel& model);
  void add_scaled(const AeGradients& other, double scale);
  double squared_norm() const;
  void scale(double s);
  std::vector<double*> parameter_blocks();
  std::vector<Eigen::Index> parameter_sizes() const;
};

/// Apply one plain gradient-descent step: params -= lr * grads.
void apply_gradient_step(AeModel& model, const AeGradients& grads, double lr);

struct LossResult {
  double value = 0.0;
  AeGradients grads;
};

/// Self-reconstruction loss: sum over the batch and over every user of
/// ||x - D_i(channel(E(x)))||^2, with gradients for the encoder and all
/// decoders by backpropagation. One frozen channel draw per user.
LossResult loss_self(const AeModel& model, const Eigen::MatrixXd& batch,
                     const std::vector<ChannelDraw>& user_draws);

/// Common-feature exchange: the paired batches share attribute `block`; the
/// block is swapped between the pairs, both streams are broadcast and decoded,
/// and reconstructions are compared against the original inputs.
/// draws_a/draws_b: one frozen draw per user for each stream.
LossResult loss_common(const AeModel& model, const Eigen::MatrixXd& batch_a,
                       const Eigen::MatrixXd& batch_b, int block,
                       const std::vector<ChannelDraw>& draws_a,
                       const std::vector<ChannelDraw>& draws_b);

/// Frozen channel draws for the two passes of the different-feature exchange:
/// indexed [user] for each of the four broadcast streams.
struct DifferentDraws {
  std::vector<ChannelDraw> pass1_a, pass1_b;
  std::vector<ChannelDraw> pass2_a, pass2_b;
};

/// Build the four-stream draw set by running the forward chain once; pass-2
/// scales are calibrated against the intermediate reconstructions.
DifferentDraws make_different_draws(const AeModel& model, const Eigen::MatrixXd& batch_a,
                                    const Eigen::MatrixXd& batch_b, int block,
                                    const TrainChannel& channel, Rng& rng);

/// Different-feature double exchange: swap block `block` between the pair,
/// broadcast and decode, re-encode the reconstructions, swap the same block
/// again, broadcast and decode, and compare the round-trip outputs with the
/// original inputs. Gradients flow through both passes.
LossResult loss_different(const AeModel& model, const Eigen::MatrixXd& batch_a,
                          const Eigen::MatrixXd& batch_b, int block,
                          const DifferentDraws& draws);

/// Identity (noiseless) draws for a K-user broadcast.
std::vector<ChannelDraw> identity_draws(int n_users);

/// PSNR in dB against a peak value, capped so identical inputs stay finite.
double psnr(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& reconstruction,
            double peak = 1.0, double cap_db = 300.0);

}  // namespace semcast
