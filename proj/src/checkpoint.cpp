#include "semcast/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace semcast {

namespace {

// All multi-byte values little-endian regardless of host order.
void put_u16(std::ostream& os, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  os.write(b, 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void put_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

void require_bytes(std::istream& is) {
  if (!is) throw std::runtime_error("checkpoint: truncated file");
}

std::uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  require_bytes(is);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  require_bytes(is);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

float get_f32(std::istream& is) {
  const std::uint32_t bits = get_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

void put_tensor(std::ostream& os, const Eigen::MatrixXd& m) {
  os.put(2);
  put_u32(os, static_cast<std::uint32_t>(m.rows()));
  put_u32(os, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) put_f32(os, static_cast<float>(m(i, j)));
}

void put_tensor(std::ostream& os, const Eigen::VectorXd& v) {
  os.put(1);
  put_u32(os, static_cast<std::uint32_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f32(os, static_cast<float>(v[i]));
}

Eigen::MatrixXd get_matrix(std::istream& is) {
  const int tag = is.get();
  require_bytes(is);
  if (tag != 2) throw std::runtime_error("checkpoint: expected a rank-2 tensor");
  const auto rows = get_u32(is);
  const auto cols = get_u32(is);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = get_f32(is);
  return m;
}

Eigen::VectorXd get_vector(std::istream& is) {
  const int tag = is.get();
  require_bytes(is);
  if (tag != 1) throw std::runtime_error("checkpoint: expected a rank-1 tensor");
  const auto n = get_u32(is);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = get_f32(is);
  return v;
}

void put_layers(std::ostream& os, const AeModel::Layers& l) {
  put_tensor(os, l.w1);
  put_tensor(os, l.b1);
  put_tensor(os, l.w2);
  put_tensor(os, l.b2);
}

void get_layers(std::istream& is, AeModel::Layers& l) {
  l.w1 = get_matrix(is);
  l.b1 = get_vector(is);
  l.w2 = get_matrix(is);
  l.b2 = get_vector(is);
}

}  // namespace

void save_checkpoint(const AeModel& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
  os.write("SMAE", 4);
  put_u16(os, 1);
  const LatentSchema& schema = model.schema();
  put_u16(os, static_cast<std::uint16_t>(schema.n_blocks()));
  for (int b = 0; b < schema.n_blocks(); ++b) {
    const std::string& name = schema.block_name(b);
    if (name.size() > 255) throw std::runtime_error("save_checkpoint: block name too long");
    os.put(static_cast<char>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<std::uint32_t>(schema.block_width(b)));
  }
  put_u16(os, static_cast<std::uint16_t>(schema.n_users()));
  for (int u = 0; u < schema.n_users(); ++u) {
    const auto& set = schema.interest_set(u);
    put_u16(os, static_cast<std::uint16_t>(set.size()));
    for (int idx : set) put_u16(os, static_cast<std::uint16_t>(idx));
  }
  put_u32(os, static_cast<std::uint32_t>(model.input_dim()));
  put_u32(os, static_cast<std::uint32_t>(model.hidden_dim()));
  put_u32(os, static_cast<std::uint32_t>(4 * (1 + model.n_users())));
  put_layers(os, model.encoder());
  for (int u = 0; u < model.n_users(); ++u) put_layers(os, model.decoder(u));
  if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

AeModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SMAE", 4) != 0)
    throw std::runtime_error("load_checkpoint: bad magic, not a model checkpoint");
  const auto version = get_u16(is);
  if (version != 1)
    throw std::runtime_error("load_checkpoint: unsupported version " + std::to_string(version));
  const int n_blocks = get_u16(is);
  std::vector<LatentBlock> blocks;
  blocks.reserve(static_cast<size_t>(n_blocks));
  for (int b = 0; b < n_blocks; ++b) {
    const int len = is.get();
    std::string name(static_cast<size_t>(len), '\0');
    is.read(name.data(), len);
    const int width = static_cast<int>(get_u32(is));
    blocks.push_back({std::move(name), width});
  }
  const int n_users = get_u16(is);
  std::vector<std::vector<int>> interest(static_cast<size_t>(n_users));
  for (auto& set : interest) {
    const int count = get_u16(is);
    set.resize(static_cast<size_t>(count));
    for (auto& idx : set) idx = get_u16(is);
  }
  const int input_dim = static_cast<int>(get_u32(is));
  const int hidden_dim = static_cast<int>(get_u32(is));
  const auto n_tensors = get_u32(is);
  if (n_tensors != static_cast<std::uint32_t>(4 * (1 + n_users)))
    throw std::runtime_error("load_checkpoint: unexpected tensor count");

  AeModel model(LatentSchema(std::move(blocks), std::move(interest)), input_dim, hidden_dim);
  get_layers(is, model.encoder());
  for (int u = 0; u < n_users; ++u) get_layers(is, model.decoder(u));
  if (!is) throw std::runtime_error("load_checkpoint: truncated file " + path.string());
  return model;
}

}  // namespace semcast
