#include "semcast/dataset.hpp"

#include <numeric>
#include <stdexcept>

namespace semcast {

AttributeDataset::AttributeDataset(std::vector<int> cardinalities, int input_dim,
                                   std::uint64_t seed, double mix_scale)
    : cards_(std::move(cardinalities)), seed_(seed) {
  if (cards_.empty()) throw std::invalid_argument("AttributeDataset: need at least one attribute");
  long total = 1;
  int onehot_dim = 0;
  for (int c : cards_) {
    if (c < 2) throw std::invalid_argument("AttributeDataset: cardinalities must be >= 2");
    total *= c;
    onehot_dim += c;
  }
  if (total > 100000) throw std::invalid_argument("AttributeDataset: tuple space too large");
  // every attribute value must appear at least 10 times so exchange pairs exist
  for (size_t a = 0; a < cards_.size(); ++a) {
    const long appearances = total / cards_[a];
    if (appearances < 10)
      throw std::invalid_argument(
          "AttributeDataset: every attribute value must appear at least 10 times; "
          "increase the other cardinalities");
  }

  Rng rng = Rng(seed).derive("dataset-mixing");
  mixing_ = mix_scale * rng.normal_matrix(input_dim, onehot_dim);

  const int n = static_cast<int>(total);
  samples_.resize(input_dim, n);
  labels_.resize(static_cast<size_t>(n));
  std::vector<int> tuple(cards_.size(), 0);
  for (int i = 0; i < n; ++i) {
    labels_[static_cast<size_t>(i)] = tuple;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(onehot_dim);
    int off = 0;
    for (size_t a = 0; a < cards_.size(); ++a) {
      u[off + tuple[a]] = 1.0;
      off += cards_[a];
    }
    samples_.col(i) = (mixing_ * u).array().tanh().matrix();
    // advance the tuple odometer
    for (int a = static_cast<int>(cards_.size()) - 1; a >= 0; --a) {
      if (++tuple[static_cast<size_t>(a)] < cards_[static_cast<size_t>(a)]) break;
      tuple[static_cast<size_t>(a)] = 0;
    }
  }

  sharing_.resize(static_cast<size_t>(n));
  differing_.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    sharing_[static_cast<size_t>(i)].resize(cards_.size());
    differing_[static_cast<size_t>(i)].resize(cards_.size());
    for (size_t a = 0; a < cards_.size(); ++a) {
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        if (labels_[static_cast<size_t>(j)][a] == labels_[static_cast<size_t>(i)][a])
          sharing_[static_cast<size_t>(i)][a].push_back(j);
        else
          differing_[static_cast<size_t>(i)][a].push_back(j);
      }
    }
  }
}

std::pair<int, int> AttributeDataset::draw_pair_sharing(int attr, Rng& rng) const {
  const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_samples())));
  const auto& peers = sharing(i, attr);
  if (peers.empty()) throw std::logic_error("draw_pair_sharing: no peer shares the attribute");
  const int j = peers[static_cast<size_t>(rng.below(peers.size()))];
  return {i, j};
}

std::pair<int, int> AttributeDataset::draw_pair_differing(int attr, Rng& rng) const {
  const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_samples())));
  const auto& peers = differing(i, attr);
  if (peers.empty()) throw std::logic_error("draw_pair_differing: no peer differs in the attribute");
  const int j = peers[static_cast<size_t>(rng.below(peers.size()))];
  return {i, j};
}

std::vector<int> AttributeDataset::classify(const Eigen::VectorXd& x) const {
  Eigen::Index best = 0;
  double best_d = (samples_.col(0) - x).squaredNorm();
  for (Eigen::Index i = 1; i < samples_.cols(); ++i) {
    const double d = (samples_.col(i) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return labels_[static_cast<size_t>(best)];
}

}  // namespace semcast
