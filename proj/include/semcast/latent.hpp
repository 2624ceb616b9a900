#pragma once

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace semcast {

/// A latent code is a dense vector partitioned into named feature blocks.
using LatentCode = Eigen::VectorXd;

struct LatentBlock {
  std::string name;
  int width;
};

/// Partition of the latent vector into named feature blocks plus per-user
/// interest sets (which blocks each user receives).
class LatentSchema {
 public:
  LatentSchema(std::vector<LatentBlock> blocks, std::vector<std::vector<int>> interest_sets)
      : blocks_(std::move(blocks)), interest_sets_(std::move(interest_sets)) {
    if (blocks_.empty()) throw std::invalid_argument("LatentSchema: need at least one block");
    std::set<std::string> names;
    int off = 0;
    for (const auto& b : blocks_) {
      if (b.width < 1) throw std::invalid_argument("LatentSchema: block widths must be >= 1");
      if (!names.insert(b.name).second)
        throw std::invalid_argument("LatentSchema: duplicate block name " + b.name);
      offsets_.push_back(off);
      off += b.width;
    }
    total_width_ = off;
    if (interest_sets_.empty())
      throw std::invalid_argument("LatentSchema: need at least one interest set");
    for (auto& s : interest_sets_) {
      if (s.empty())
        throw std::invalid_argument("LatentSchema: every interest set must be nonempty");
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
      for (int idx : s) {
        if (idx < 0 || idx >= n_blocks())
          throw std::invalid_argument("LatentSchema: interest index out of range");
      }
    }
  }

  int n_blocks() const { return static_cast<int>(blocks_.size()); }
  int n_users() const { return static_cast<int>(interest_sets_.size()); }
  int total_width() const { return total_width_; }
  int block_offset(int b) const { return offsets_.at(static_cast<size_t>(b)); }
  int block_width(int b) const { return blocks_.at(static_cast<size_t>(b)).width; }
  const std::string& block_name(int b) const { return blocks_.at(static_cast<size_t>(b)).name; }
  const std::vector<LatentBlock>& blocks() const { return blocks_; }
  const std::vector<int>& interest_set(int user) const {
    return interest_sets_.at(static_cast<size_t>(user));
  }

  /// Interest set as a bitmap, bit b set when block b is selected.
  std::uint64_t interest_bitmap(int user) const {
    std::uint64_t bm = 0;
    for (int b : interest_set(user)) bm |= (1ull << b);
    return bm;
  }

  /// Sum of widths of the blocks set in a bitmap.
  int selected_width(std::uint64_t bitmap) const {
    int w = 0;
    for (int b = 0; b < n_blocks(); ++b)
      if (bitmap & (1ull << b)) w += block_width(b);
    return w;
  }

  bool operator==(const LatentSchema& o) const {
    if (total_width_ != o.total_width_ || blocks_.size() != o.blocks_.size()) return false;
    for (size_t i = 0; i < blocks_.size(); ++i) {
      if (blocks_[i].name != o.blocks_[i].name || blocks_[i].width != o.blocks_[i].width)
        return false;
    }
    return interest_sets_ == o.interest_sets_;
  }

 private:
  std::vector<LatentBlock> blocks_;
  std::vector<std::vector<int>> interest_sets_;
  std::vector<int> offsets_;
  int total_width_ = 0;
};

/// Swap one block between two codes; all other coordinates untouched.
/// Applying the same exchange twice restores the originals.
inline std::pair<LatentCode, LatentCode> exchange(const LatentCode& a, const LatentCode& b,
                                                  int block, const LatentSchema& schema) {
  if (a.size() != schema.total_width() || b.size() != schema.total_width())
    throw std::invalid_argument("exchange: code width does not match schema");
  if (block < 0 || block >= schema.n_blocks())
    throw std::out_of_range("exchange: block index out of range");
  LatentCode ea = a, eb = b;
  const int off = schema.block_offset(block);
  const int w = schema.block_width(block);
  ea.segment(off, w) = b.segment(off, w);
  eb.segment(off, w) = a.segment(off, w);
  return {std::move(ea), std::move(eb)};
}

/// In-place column-batch variant used by the training losses.
inline void exchange_columns(Eigen::MatrixXd& a, Eigen::MatrixXd& b, int block,
                             const LatentSchema& schema) {
  const int off = schema.block_offset(block);
  const int w = schema.block_width(block);
  a.middleRows(off, w).swap(b.middleRows(off, w));
}

/// Pack the blocks named by `interest` (ascending block order) into one vector.
inline LatentCode select_blocks(const LatentCode& code, const std::vector<int>& interest,
                                const LatentSchema& schema) {
  if (code.size() != schema.total_width())
    throw std::invalid_argument("select_blocks: code width does not match schema");
  int w = 0;
  for (int b : interest) w += schema.block_width(b);
  LatentCode out(w);
  int pos = 0;
  std::vector<int> sorted = interest;
  std::sort(sorted.begin(), sorted.end());
  for (int b : sorted) {
    out.segment(pos, schema.block_width(b)) = code.segment(schema.block_offset(b), schema.block_width(b));
    pos += schema.block_width(b);
  }
  return out;
}

/// Rebuild a full-width code: interest blocks from the received packed vector,
/// every other block from the knowledge-base donor.
inline LatentCode complete_code(const LatentCode& received, const std::vector<int>& interest,
                                const LatentCode& donor, const LatentSchema& schema) {
  if (donor.size() != schema.total_width())
    throw std::invalid_argument("complete_code: donor width does not match schema");
  int need = 0;
  for (int b : interest) need += schema.block_width(b);
  if (received.size() != need)
    throw std::invalid_argument("complete_code: received width does not match interest set");
  LatentCode out = donor;
  std::vector<int> sorted = interest;
  std::sort(sorted.begin(), sorted.end());
  int pos = 0;
  for (int b : sorted) {
    out.segment(schema.block_offset(b), schema.block_width(b)) =
        received.segment(pos, schema.block_width(b));
    pos += schema.block_width(b);
  }
  return out;
}

/// Feature completion on full-width codes: blocks in the interest set from the
/// received code, the rest from the donor.
inline LatentCode select_and_complete(const LatentCode& code, const std::vector<int>& interest,
                                      const LatentCode& donor, const LatentSchema& schema) {
  return complete_code(select_blocks(code, interest, schema), interest, donor, schema);
}

}  // namespace semcast
