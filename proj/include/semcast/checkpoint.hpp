#pragma once

#include <filesystem>

#include "semcast/autoencoder.hpp"

namespace semcast {

/// Versioned binary model checkpoint, all integers and floats little-endian.
///
///   magic   "SMAE" (4 bytes)
///   version u16 (currently 1)
///   n_blocks u16, then per block: name_len u8, name bytes, width u32
///   n_users u16, then per user: count u16, block indices u16 each
///   input_dim u32, hidden_dim u32
///   n_tensors u32, then per tensor: rank u8, dims u32 each, data binary32
///
/// Tensor order is fixed: encoder w1,b1,w2,b2 then each decoder's w1,b1,w2,b2.
void save_checkpoint(const AeModel& model, const std::filesystem::path& path);

AeModel load_checkpoint(const std::filesystem::path& path);

}  // namespace semcast
