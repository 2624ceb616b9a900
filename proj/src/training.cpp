#include "semcast/training.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace semcast {

void TrainConfig::validate() const {
  if (steps_per_phase < 1) throw std::invalid_argument("TrainConfig: steps_per_phase must be >= 1");
  // zero is allowed as an explicit no-op (evaluation-only runs)
  if (learning_rate < 0.0 || learning_rate >= 1.0)
    throw std::invalid_argument("TrainConfig: learning_rate must lie in [0, 1)");
  if (batch_size < 2) throw std::invalid_argument("TrainConfig: batch_size must be >= 2");
  if (clip_norm < 0.0) throw std::invalid_argument("TrainConfig: clip_norm must be >= 0");
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("TrainConfig: momentum must lie in [0, 1)");
}

namespace {

Eigen::MatrixXd gather(const AttributeDataset& ds, const std::vector<int>& idx) {
  Eigen::MatrixXd out(ds.input_dim(), static_cast<Eigen::Index>(idx.size()));
  for (size_t c = 0; c < idx.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = ds.sample(idx[c]);
  return out;
}

std::vector<ChannelDraw> draws_for_users(const TrainChannel& channel, const Eigen::MatrixXd& z,
                                         int n_users, Rng& rng) {
  std::vector<ChannelDraw> draws;
  draws.reserve(static_cast<size_t>(n_users));
  for (int i = 0; i < n_users; ++i) draws.push_back(draw_channel(channel, z, rng));
  return draws;
}

}  // namespace

TrainOutcome train(const AeModel& initial, const AttributeDataset& dataset,
                   const TrainConfig& config) {
  config.validate();
  if (dataset.n_attributes() != initial.schema().n_blocks())
    throw std::invalid_argument("train: dataset attributes and schema blocks must correspond");

  TrainOutcome out{initial, {}};
  AeModel& model = out.model;
  Rng rng = Rng(config.seed).derive("train");
  const TrainChannel channel = config.channel();
  const int n_users = model.n_users();
  const int n_pairs = std::max(1, config.batch_size / 2);

  AeGradients velocity = AeGradients::zeros_like(model);
  const bool use_momentum = config.momentum > 0.0;

  for (int step = 0; step < config.steps_per_phase; ++step) {
    for (int phase = 0; phase < 3; ++phase) {
      LossResult res;
      if (phase == 0) {
        std::vector<int> idx(static_cast<size_t>(config.batch_size));
        for (auto& v : idx) v = static_cast<int>(rng.below(dataset.n_samples()));
        const Eigen::MatrixXd batch = gather(dataset, idx);
        const Eigen::MatrixXd z = model.encode(batch);
        const auto draws = draws_for_users(channel, z, n_users, rng);
        res = loss_self(model, batch, draws);
        out.history.self_loss.push_back(res.value);
      } else {
        const int attr = static_cast<int>(rng.below(dataset.n_attributes()));
        std::vector<int> ia(static_cast<size_t>(n_pairs)), ib(static_cast<size_t>(n_pairs));
        for (int p = 0; p < n_pairs; ++p) {
          const auto pr = phase == 1 ? dataset.draw_pair_sharing(attr, rng)
                                     : dataset.draw_pair_differing(attr, rng);
          ia[static_cast<size_t>(p)] = pr.first;
          ib[static_cast<size_t>(p)] = pr.second;
        }
        const Eigen::MatrixXd batch_a = gather(dataset, ia);
        const Eigen::MatrixXd batch_b = gather(dataset, ib);
        if (phase == 1) {
          Eigen::MatrixXd za = model.encode(batch_a);
          Eigen::MatrixXd zb = model.encode(batch_b);
          exchange_columns(za, zb, attr, model.schema());
          const auto draws_a = draws_for_users(channel, za, n_users, rng);
          const auto draws_b = draws_for_users(channel, zb, n_users, rng);
          res = loss_common(model, batch_a, batch_b, attr, draws_a, draws_b);
          out.history.common_loss.push_back(res.value);
        } else {
          const auto draws = make_different_draws(model, batch_a, batch_b, attr, channel, rng);
          res = loss_different(model, batch_a, batch_b, attr, draws);
          out.history.different_loss.push_back(res.value);
        }
      }

      if (!std::isfinite(res.value)) {
        std::ostringstream os;
        os << "train: loss diverged (non-finite) at cycle " << step << " phase " << phase;
        throw std::runtime_error(os.str());
      }
      if (config.clip_norm > 0.0) {
        const double norm = std::sqrt(res.grads.squared_norm());
        if (norm > config.clip_norm) res.grads.scale(config.clip_norm / norm);
      }
      if (use_momentum) {
        velocity.scale(config.momentum);
        velocity.add_scaled(res.grads, 1.0);
        apply_gradient_step(model, velocity, config.learning_rate);
      } else {
        apply_gradient_step(model, res.grads, config.learning_rate);
      }
    }
  }
  if (!model.all_finite()) throw std::runtime_error("train: parameters not finite after training");
  return out;
}

TrainOutcome train(const LatentSchema& schema, int hidden_dim, const AttributeDataset& dataset,
                   const TrainConfig& config) {
  Rng init_rng = Rng(config.seed).derive("init");
  AeModel model = AeModel::init(schema, dataset.input_dim(), hidden_dim, init_rng);
  return train(model, dataset, config);
}

double swap_accuracy(const AeModel& model, const AttributeDataset& dataset, int block,
                     int n_pairs, Rng rng) {
  if (block < 0 || block >= model.schema().n_blocks())
    throw std::out_of_range("swap_accuracy: block out of range");
  const LatentSchema& schema = model.schema();
  int hits = 0, total = 0;
  for (int p = 0; p < n_pairs; ++p) {
    const auto [ia, ib] = dataset.draw_pair_differing(block, rng);
    const LatentCode za = model.encode(dataset.sample(ia));
    const LatentCode zb = model.encode(dataset.sample(ib));
    const auto [za_sw, zb_sw] = exchange(za, zb, block, schema);
    (void)zb_sw;
    for (int u = 0; u < model.n_users(); ++u) {
      const Eigen::VectorXd xhat = model.decode(u, za_sw);
      const std::vector<int> pred = dataset.classify(xhat);
      bool ok = pred[static_cast<size_t>(block)] == dataset.label(ib)[static_cast<size_t>(block)];
      for (int a = 0; ok && a < dataset.n_attributes(); ++a) {
        if (a == block) continue;
        ok = pred[static_cast<size_t>(a)] == dataset.label(ia)[static_cast<size_t>(a)];
      }
      hits += ok ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

double mean_reconstruction_error(const AeModel& model, const AttributeDataset& dataset,
                                 const TrainChannel& channel, int n_realizations, Rng rng) {
  const Eigen::MatrixXd& x = dataset.samples();
  const Eigen::MatrixXd z = model.encode(x);
  double acc = 0.0;
  int cnt = 0;
  for (int r = 0; r < n_realizations; ++r) {
    for (int u = 0; u < model.n_users(); ++u) {
      const ChannelDraw draw = draw_channel(channel, z, rng);
      const Eigen::MatrixXd xhat = model.decode(u, draw.apply(z));
      acc += (xhat - x).squaredNorm() / static_cast<double>(x.size());
      ++cnt;
    }
  }
  return acc / static_cast<double>(cnt);
}

double mean_psnr(const AeModel& model, const AttributeDataset& dataset,
                 const TrainChannel& channel, int n_realizations, Rng rng) {
  const Eigen::MatrixXd& x = dataset.samples();
  const Eigen::MatrixXd z = model.encode(x);
  double acc = 0.0;
  int cnt = 0;
  for (int r = 0; r < n_realizations; ++r) {
    for (int u = 0; u < model.n_users(); ++u) {
      const ChannelDraw draw = draw_channel(channel, z, rng);
      const Eigen::MatrixXd xhat = model.decode(u, draw.apply(z));
      acc += psnr(x, xhat);
      ++cnt;
    }
  }
  return acc / static_cast<double>(cnt);
}

double completion_agreement(const AeModel& model, const AttributeDataset& dataset, int user,
                            int n_draws, Rng rng) {
  const LatentSchema& schema = model.schema();
  const std::vector<int>& interest = schema.interest_set(user);
  std::vector<bool> interested(static_cast<size_t>(schema.n_blocks()), false);
  for (int b : interest) interested[static_cast<size_t>(b)] = true;

  int hits = 0;
  for (int t = 0; t < n_draws; ++t) {
    const int is = static_cast<int>(rng.below(dataset.n_samples()));
    const int id = static_cast<int>(rng.below(dataset.n_samples()));
    const LatentCode z_src = model.encode(dataset.sample(is));
    const LatentCode z_donor = model.encode(dataset.sample(id));
    const LatentCode completed = select_and_complete(z_src, interest, z_donor, schema);
    const std::vector<int> pred = dataset.classify(model.decode(user, completed));
    bool ok = true;
    for (int a = 0; ok && a < dataset.n_attributes(); ++a) {
      const int want = interested[static_cast<size_t>(a)]
                           ? dataset.label(is)[static_cast<size_t>(a)]
                           : dataset.label(id)[static_cast<size_t>(a)];
      ok = pred[static_cast<size_t>(a)] == want;
    }
    hits += ok ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(n_draws);
}

}  // namespace semcast
