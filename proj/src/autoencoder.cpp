#include "semcast/autoencoder.hpp"

#include <cmath>
#include <stdexcept>

namespace semcast {

namespace {

Eigen::MatrixXd xavier(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double lim = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-lim, lim);
  return m;
}

struct LayerCache {
  Eigen::MatrixXd input;   // layer input
  Eigen::MatrixXd hidden;  // tanh activations
};

// Forward through w2 * tanh(w1 * in + b1) + b2.
Eigen::MatrixXd layers_forward(const AeModel::Layers& l, const Eigen::MatrixXd& in,
                               LayerCache* cache) {
  Eigen::MatrixXd h = ((l.w1 * in).colwise() + l.b1).array().tanh().matrix();
  Eigen::MatrixXd out = (l.w2 * h).colwise() + l.b2;
  if (cache) {
    cache->input = in;
    cache->hidden = std::move(h);
  }
  return out;
}

// Backward: accumulates parameter gradients, returns the input gradient.
Eigen::MatrixXd layers_backward(const AeModel::Layers& l, AeModel::Layers& grad,
                                const LayerCache& cache, const Eigen::MatrixXd& dout) {
  grad.w2.noalias() += dout * cache.hidden.transpose();
  grad.b2 += dout.rowwise().sum();
  Eigen::MatrixXd dh = l.w2.transpose() * dout;
  Eigen::MatrixXd da = dh.array() * (1.0 - cache.hidden.array().square());
  grad.w1.noalias() += da * cache.input.transpose();
  grad.b1 += da.rowwise().sum();
  return l.w1.transpose() * da;
}

AeModel::Layers zero_layers(Eigen::Index in, Eigen::Index hid, Eigen::Index out) {
  AeModel::Layers l;
  l.w1 = Eigen::MatrixXd::Zero(hid, in);
  l.b1 = Eigen::VectorXd::Zero(hid);
  l.w2 = Eigen::MatrixXd::Zero(out, hid);
  l.b2 = Eigen::VectorXd::Zero(out);
  return l;
}

void collect_blocks(AeModel::Layers& l, std::vector<double*>& out) {
  out.push_back(l.w1.data());
  out.push_back(l.b1.data());
  out.push_back(l.w2.data());
  out.push_back(l.b2.data());
}

void collect_sizes(const AeModel::Layers& l, std::vector<Eigen::Index>& out) {
  out.push_back(l.w1.size());
  out.push_back(l.b1.size());
  out.push_back(l.w2.size());
  out.push_back(l.b2.size());
}

}  // namespace

AeModel::AeModel(LatentSchema schema, int input_dim, int hidden_dim)
    : schema_(std::move(schema)), input_dim_(input_dim), hidden_dim_(hidden_dim) {
  if (input_dim < 1 || hidden_dim < 1)
    throw std::invalid_argument("AeModel: dimensions must be positive");
  const int d = schema_.total_width();
  encoder_ = zero_layers(input_dim_, hidden_dim_, d);
  decoders_.resize(static_cast<size_t>(schema_.n_users()));
  for (auto& dec : decoders_) dec = zero_layers(d, hidden_dim_, input_dim_);
}

AeModel AeModel::init(LatentSchema schema, int input_dim, int hidden_dim, Rng& rng) {
  AeModel m(std::move(schema), input_dim, hidden_dim);
  m.encoder_.w1 = xavier(hidden_dim, input_dim, rng);
  m.encoder_.w2 = xavier(m.latent_dim(), hidden_dim, rng);
  for (auto& dec : m.decoders_) {
    dec.w1 = xavier(hidden_dim, m.latent_dim(), rng);
    dec.w2 = xavier(input_dim, hidden_dim, rng);
  }
  return m;
}

Eigen::MatrixXd AeModel::encode(const Eigen::MatrixXd& x) const {
  if (x.rows() != input_dim_)
    throw std::invalid_argument("AeModel::encode: input dimension mismatch");
  return layers_forward(encoder_, x, nullptr);
}

Eigen::MatrixXd AeModel::decode(int user, const Eigen::MatrixXd& zhat) const {
  if (zhat.rows() != latent_dim())
    throw std::invalid_argument("AeModel::decode: latent dimension mismatch");
  return layers_forward(decoder(user), zhat, nullptr);
}

std::vector<double*> AeModel::parameter_blocks() {
  std::vector<double*> out;
  collect_blocks(encoder_, out);
  for (auto& dec : decoders_) collect_blocks(dec, out);
  return out;
}

std::vector<const double*> AeModel::parameter_blocks() const {
  std::vector<const double*> out;
  auto& self = const_cast<AeModel&>(*this);
  for (double* p : self.parameter_blocks()) out.push_back(p);
  return out;
}

std::vector<Eigen::Index> AeModel::parameter_sizes() const {
  std::vector<Eigen::Index> out;
  collect_sizes(encoder_, out);
  for (const auto& dec : decoders_) collect_sizes(dec, out);
  return out;
}

Eigen::Index AeModel::n_parameters() const {
  Eigen::Index n = 0;
  for (Eigen::Index s : parameter_sizes()) n += s;
  return n;
}

bool AeModel::all_finite() const {
  auto blocks = parameter_blocks();
  auto sizes = parameter_sizes();
  for (size_t b = 0; b < blocks.size(); ++b) {
    for (Eigen::Index i = 0; i < sizes[b]; ++i) {
      if (!std::isfinite(blocks[b][i])) return false;
    }
  }
  return true;
}

AeGradients AeGradients::zeros_like(const AeModel& model) {
  AeGradients g;
  g.encoder = zero_layers(model.input_dim(), model.hidden_dim(), model.latent_dim());
  g.decoders.resize(static_cast<size_t>(model.n_users()));
  for (auto& d : g.decoders)
    d = zero_layers(model.latent_dim(), model.hidden_dim(), model.input_dim());
  return g;
}

void AeGradients::add_scaled(const AeGradients& other, double scale) {
  auto axpy = [scale](AeModel::Layers& a, const AeModel::Layers& b) {
    a.w1 += scale * b.w1;
    a.b1 += scale * b.b1;
    a.w2 += scale * b.w2;
    a.b2 += scale * b.b2;
  };
  axpy(encoder, other.encoder);
  for (size_t i = 0; i < decoders.size(); ++i) axpy(decoders[i], other.decoders[i]);
}

double AeGradients::squared_norm() const {
  auto norm = [](const AeModel::Layers& l) {
    return l.w1.squaredNorm() + l.b1.squaredNorm() + l.w2.squaredNorm() + l.b2.squaredNorm();
  };
  double acc = norm(encoder);
  for (const auto& d : decoders) acc += norm(d);
  return acc;
}

void AeGradients::scale(double s) {
  auto sc = [s](AeModel::Layers& l) {
    l.w1 *= s;
    l.b1 *= s;
    l.w2 *= s;
    l.b2 *= s;
  };
  sc(encoder);
  for (auto& d : decoders) sc(d);
}

std::vector<double*> AeGradients::parameter_blocks() {
  std::vector<double*> out;
  collect_blocks(encoder, out);
  for (auto& d : decoders) collect_blocks(d, out);
  return out;
}

std::vector<Eigen::Index> AeGradients::parameter_sizes() const {
  std::vector<Eigen::Index> out;
  collect_sizes(encoder, out);
  for (const auto& d : decoders) collect_sizes(d, out);
  return out;
}

void apply_gradient_step(AeModel& model, const AeGradients& grads, double lr) {
  auto step = [lr](AeModel::Layers& p, const AeModel::Layers& g) {
    p.w1 -= lr * g.w1;
    p.b1 -= lr * g.b1;
    p.w2 -= lr * g.w2;
    p.b2 -= lr * g.b2;
  };
  step(model.encoder(), grads.encoder);
  for (int i = 0; i < model.n_users(); ++i) step(model.decoder(i), grads.decoders[i]);
}

std::vector<ChannelDraw> identity_draws(int n_users) {
  return std::vector<ChannelDraw>(static_cast<size_t>(n_users));
}

namespace {

const ChannelDraw& draw_for(const std::vector<ChannelDraw>& draws, int user) {
  if (draws.size() != 0 && static_cast<int>(draws.size()) <= user)
    throw std::invalid_argument("loss: need one channel draw per user");
  static const ChannelDraw identity{};
  return draws.empty() ? identity : draws[static_cast<size_t>(user)];
}

}  // namespace

LossResult loss_self(const AeModel& model, const Eigen::MatrixXd& batch,
                     const std::vector<ChannelDraw>& user_draws) {
  if (batch.cols() < 1) throw std::invalid_argument("loss_self: batch must be nonempty");
  LossResult res;
  res.grads = AeGradients::zeros_like(model);

  LayerCache enc_cache;
  const Eigen::MatrixXd z = layers_forward(model.encoder(), batch, &enc_cache);

  Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  for (int i = 0; i < model.n_users(); ++i) {
    const ChannelDraw& draw = draw_for(user_draws, i);
    const Eigen::MatrixXd zhat = draw.apply(z);
    LayerCache dec_cache;
    const Eigen::MatrixXd xhat = layers_forward(model.decoder(i), zhat, &dec_cache);
    const Eigen::MatrixXd err = xhat - batch;
    res.value += err.squaredNorm();
    const Eigen::MatrixXd dzhat =
        layers_backward(model.decoder(i), res.grads.decoders[static_cast<size_t>(i)], dec_cache,
                        2.0 * err);
    dz += draw.gain_factor * dzhat;
  }
  layers_backward(model.encoder(), res.grads.encoder, enc_cache, dz);
  return res;
}

LossResult loss_common(const AeModel& model, const Eigen::MatrixXd& batch_a,
                       const Eigen::MatrixXd& batch_b, int block,
                       const std::vector<ChannelDraw>& draws_a,
                       const std::vector<ChannelDraw>& draws_b) {
  if (batch_a.cols() != batch_b.cols() || batch_a.cols() < 1)
    throw std::invalid_argument("loss_common: paired batches must have equal nonzero size");
  const LatentSchema& schema = model.schema();
  LossResult res;
  res.grads = AeGradients::zeros_like(model);

  LayerCache ca, cb;
  Eigen::MatrixXd za = layers_forward(model.encoder(), batch_a, &ca);
  Eigen::MatrixXd zb = layers_forward(model.encoder(), batch_b, &cb);
  Eigen::MatrixXd za_sw = za, zb_sw = zb;
  exchange_columns(za_sw, zb_sw, block, schema);

  Eigen::MatrixXd dza_sw = Eigen::MatrixXd::Zero(za.rows(), za.cols());
  Eigen::MatrixXd dzb_sw = dza_sw;
  for (int i = 0; i < model.n_users(); ++i) {
    const ChannelDraw& da = draw_for(draws_a, i);
    const ChannelDraw& db = draw_for(draws_b, i);
    {
      LayerCache dc;
      const Eigen::MatrixXd xhat = layers_forward(model.decoder(i), da.apply(za_sw), &dc);
      const Eigen::MatrixXd err = xhat - batch_a;
      res.value += err.squaredNorm();
      dza_sw += da.gain_factor * layers_backward(model.decoder(i),
                                                 res.grads.decoders[static_cast<size_t>(i)], dc,
                                                 2.0 * err);
    }
    {
      LayerCache dc;
      const Eigen::MatrixXd xhat = layers_forward(model.decoder(i), db.apply(zb_sw), &dc);
      const Eigen::MatrixXd err = xhat - batch_b;
      res.value += err.squaredNorm();
      dzb_sw += db.gain_factor * layers_backward(model.decoder(i),
                                                 res.grads.decoders[static_cast<size_t>(i)], dc,
                                                 2.0 * err);
    }
  }
  // route gradients back through the swap
  exchange_columns(dza_sw, dzb_sw, block, schema);
  layers_backward(model.encoder(), res.grads.encoder, ca, dza_sw);
  layers_backward(model.encoder(), res.grads.encoder, cb, dzb_sw);
  return res;
}

DifferentDraws make_different_draws(const AeModel& model, const Eigen::MatrixXd& batch_a,
                                    const Eigen::MatrixXd& batch_b, int block,
                                    const TrainChannel& channel, Rng& rng) {
  const LatentSchema& schema = model.schema();
  DifferentDraws out;
  Eigen::MatrixXd za = model.encode(batch_a);
  Eigen::MatrixXd zb = model.encode(batch_b);
  exchange_columns(za, zb, block, schema);
  const int k = model.n_users();
  out.pass1_a.reserve(static_cast<size_t>(k));
  out.pass1_b.reserve(static_cast<size_t>(k));
  out.pass2_a.reserve(static_cast<size_t>(k));
  out.pass2_b.reserve(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) {
    out.pass1_a.push_back(draw_channel(channel, za, rng));
    out.pass1_b.push_back(draw_channel(channel, zb, rng));
  }
  // pass-2 scales are calibrated on the re-encoded, re-swapped codes, i.e.
  // exactly the streams the second broadcast carries
  for (int i = 0; i < k; ++i) {
    const Eigen::MatrixXd xa = model.decode(i, out.pass1_a[static_cast<size_t>(i)].apply(za));
    const Eigen::MatrixXd xb = model.decode(i, out.pass1_b[static_cast<size_t>(i)].apply(zb));
    Eigen::MatrixXd z2a = model.encode(xa);
    Eigen::MatrixXd z2b = model.encode(xb);
    exchange_columns(z2a, z2b, block, schema);
    out.pass2_a.push_back(draw_channel(channel, z2a, rng));
    out.pass2_b.push_back(draw_channel(channel, z2b, rng));
  }
  return out;
}

LossResult loss_different(const AeModel& model, const Eigen::MatrixXd& batch_a,
                          const Eigen::MatrixXd& batch_b, int block,
                          const DifferentDraws& draws) {
  if (batch_a.cols() != batch_b.cols() || batch_a.cols() < 1)
    throw std::invalid_argument("loss_different: paired batches must have equal nonzero size");
  const LatentSchema& schema = model.schema();
  LossResult res;
  res.grads = AeGradients::zeros_like(model);

  LayerCache ca, cb;
  Eigen::MatrixXd za = layers_forward(model.encoder(), batch_a, &ca);
  Eigen::MatrixXd zb = layers_forward(model.encoder(), batch_b, &cb);
  Eigen::MatrixXd za_sw = za, zb_sw = zb;
  exchange_columns(za_sw, zb_sw, block, schema);

  Eigen::MatrixXd dza_sw = Eigen::MatrixXd::Zero(za.rows(), za.cols());
  Eigen::MatrixXd dzb_sw = dza_sw;

  for (int i = 0; i < model.n_users(); ++i) {
    const auto ui = static_cast<size_t>(i);
    const ChannelDraw& d1a = draws.pass1_a.at(ui);
    const ChannelDraw& d1b = draws.pass1_b.at(ui);
    const ChannelDraw& d2a = draws.pass2_a.at(ui);
    const ChannelDraw& d2b = draws.pass2_b.at(ui);

    // pass 1: broadcast the swapped codes, decode
    LayerCache dc1a, dc1b;
    const Eigen::MatrixXd xt_a =
        layers_forward(model.decoder(i), d1a.apply(za_sw), &dc1a);
    const Eigen::MatrixXd xt_b =
        layers_forward(model.decoder(i), d1b.apply(zb_sw), &dc1b);

    // pass 2: re-encode, swap the same block again, broadcast, decode
    LayerCache c2a, c2b;
    Eigen::MatrixXd z2a = layers_forward(model.encoder(), xt_a, &c2a);
    Eigen::MatrixXd z2b = layers_forward(model.encoder(), xt_b, &c2b);
    Eigen::MatrixXd z2a_sw = z2a, z2b_sw = z2b;
    exchange_columns(z2a_sw, z2b_sw, block, schema);

    LayerCache dc2a, dc2b;
    const Eigen::MatrixXd xbar_a =
        layers_forward(model.decoder(i), d2a.apply(z2a_sw), &dc2a);
    const Eigen::MatrixXd xbar_b =
        layers_forward(model.decoder(i), d2b.apply(z2b_sw), &dc2b);

    const Eigen::MatrixXd err_a = xbar_a - batch_a;
    const Eigen::MatrixXd err_b = xbar_b - batch_b;
    res.value += err_a.squaredNorm() + err_b.squaredNorm();

    AeModel::Layers& dec_grad = res.grads.decoders[ui];

    // backward through pass 2
    Eigen::MatrixXd dz2a_sw =
        d2a.gain_factor * layers_backward(model.decoder(i), dec_grad, dc2a, 2.0 * err_a);
    Eigen::MatrixXd dz2b_sw =
        d2b.gain_factor * layers_backward(model.decoder(i), dec_grad, dc2b, 2.0 * err_b);
    exchange_columns(dz2a_sw, dz2b_sw, block, schema);
    const Eigen::MatrixXd dxt_a =
        layers_backward(model.encoder(), res.grads.encoder, c2a, dz2a_sw);
    const Eigen::MatrixXd dxt_b =
        layers_backward(model.encoder(), res.grads.encoder, c2b, dz2b_sw);

    // backward through pass 1
    dza_sw += d1a.gain_factor * layers_backward(model.decoder(i), dec_grad, dc1a, dxt_a);
    dzb_sw += d1b.gain_factor * layers_backward(model.decoder(i), dec_grad, dc1b, dxt_b);
  }

  exchange_columns(dza_sw, dzb_sw, block, schema);
  layers_backward(model.encoder(), res.grads.encoder, ca, dza_sw);
  layers_backward(model.encoder(), res.grads.encoder, cb, dzb_sw);
  return res;
}

double psnr(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& reconstruction, double peak,
            double cap_db) {
  if (reference.rows() != reconstruction.rows() || reference.cols() != reconstruction.cols())
    throw std::invalid_argument("psnr: shape mismatch");
  const double mse = (reference - reconstruction).squaredNorm() /
                     static_cast<double>(reference.size());
  if (mse <= 0.0) return cap_db;
  return std::min(cap_db, 10.0 * std::log10(peak * peak / mse));
}

}  // namespace semcast
