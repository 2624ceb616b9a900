#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "semcast/rng.hpp"

namespace semcast {

/// Synthetic labeled dataset: every tuple of attribute values maps to one
/// sample x = tanh(M u), where u concatenates the one-hot encodings and M is
/// a random but seed-fixed mixing matrix. Regenerable bit-exactly from
/// (cardinalities, input_dim, seed). The pairing index gives, for each
/// (sample, attribute), the samples sharing and the samples differing in that
/// attribute, so exchange pairs always exist.
class AttributeDataset {
 public:
  AttributeDataset(std::vector<int> cardinalities, int input_dim, std::uint64_t seed,
                   double mix_scale = 0.8);

  int n_samples() const { return static_cast<int>(samples_.cols()); }
  int n_attributes() const { return static_cast<int>(cards_.size()); }
  int cardinality(int attr) const { return cards_.at(static_cast<size_t>(attr)); }
  int input_dim() const { return static_cast<int>(samples_.rows()); }
  std::uint64_t seed() const { return seed_; }

  const Eigen::MatrixXd& samples() const { return samples_; }  // one column per sample
  Eigen::VectorXd sample(int i) const { return samples_.col(i); }
  const std::vector<int>& label(int i) const { return labels_.at(static_cast<size_t>(i)); }

  const std::vector<int>& sharing(int sample, int attr) const {
    return sharing_.at(static_cast<size_t>(sample)).at(static_cast<size_t>(attr));
  }
  const std::vector<int>& differing(int sample, int attr) const {
    return differing_.at(static_cast<size_t>(sample)).at(static_cast<size_t>(attr));
  }

  /// Random pair of distinct samples sharing the value of `attr`.
  std::pair<int, int> draw_pair_sharing(int attr, Rng& rng) const;
  /// Random pair of distinct samples differing in the value of `attr`.
  std::pair<int, int> draw_pair_differing(int attr, Rng& rng) const;

  /// Nearest-prototype attribute classifier in data space: returns the label
  /// tuple of the closest canonical sample.
  std::vector<int> classify(const Eigen::VectorXd& x) const;

 private:
  std::vector<int> cards_;
  std::uint64_t seed_;
  Eigen::MatrixXd mixing_;
  Eigen::MatrixXd samples_;
  std::vector<std::vector<int>> labels_;
  std::vector<std::vector<std::vector<int>>> sharing_;    // [sample][attr] -> ids
  std::vector<std::vector<std::vector<int>>> differing_;  // [sample][attr] -> ids
};

}  // namespace semcast
