#include <doctest.h>

#include "semcast/latent.hpp"
#include "semcast/rng.hpp"

using namespace semcast;

namespace {

LatentSchema desk_schema() {
  return LatentSchema({{"content", 4}, {"color", 4}, {"pose", 4}}, {{0}, {1, 2}});
}

}  // namespace

TEST_CASE("schema invariants are enforced") {
  CHECK_THROWS_AS(LatentSchema({{"a", 0}}, {{0}}), std::invalid_argument);
  CHECK_THROWS_AS(LatentSchema({{"a", 2}, {"a", 2}}, {{0}}), std::invalid_argument);
  CHECK_THROWS_AS(LatentSchema({{"a", 2}}, {{}}), std::invalid_argument);
  CHECK_THROWS_AS(LatentSchema({{"a", 2}}, {{1}}), std::invalid_argument);
  const auto s = desk_schema();
  CHECK(s.total_width() == 12);
  CHECK(s.block_offset(2) == 8);
  CHECK(s.interest_bitmap(1) == 0b110);
  CHECK(s.selected_width(0b101) == 8);
}

TEST_CASE("exchange is an involution and block-local") {
  const auto schema = desk_schema();
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    LatentCode a(12), b(12);
    for (int i = 0; i < 12; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
    }
    const int blk = static_cast<int>(rng.below(3));
    const auto [ea, eb] = exchange(a, b, blk, schema);
    const int off = schema.block_offset(blk);
    for (int i = 0; i < 12; ++i) {
      const bool in_block = i >= off && i < off + 4;
      CHECK(ea[i] == (in_block ? b[i] : a[i]));
      CHECK(eb[i] == (in_block ? a[i] : b[i]));
    }
    const auto [ra, rb] = exchange(ea, eb, blk, schema);
    CHECK(ra == a);
    CHECK(rb == b);
  }
}

TEST_CASE("self-swap is the identity") {
  const auto schema = desk_schema();
  LatentCode z = LatentCode::LinSpaced(12, 0.0, 11.0);
  const auto [a, b] = exchange(z, z, 1, schema);
  CHECK(a == z);
  CHECK(b == z);
}

TEST_CASE("exchange rejects out-of-range blocks and wrong widths") {
  const auto schema = desk_schema();
  LatentCode z = LatentCode::Zero(12);
  CHECK_THROWS_AS(exchange(z, z, 3, schema), std::out_of_range);
  LatentCode bad = LatentCode::Zero(7);
  CHECK_THROWS_AS(exchange(bad, z, 0, schema), std::invalid_argument);
}

TEST_CASE("select then complete restores full width with the donor elsewhere") {
  const auto schema = desk_schema();
  Rng rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    LatentCode code(12), donor(12);
    for (int i = 0; i < 12; ++i) {
      code[i] = rng.normal();
      donor[i] = rng.normal();
    }
    for (const auto& interest : {std::vector<int>{0}, {1, 2}, {0, 2}, {0, 1, 2}}) {
      const LatentCode packed = select_blocks(code, interest, schema);
      const LatentCode full = complete_code(packed, interest, donor, schema);
      CHECK(full.size() == 12);
      std::vector<bool> sel(3, false);
      for (int b : interest) sel[static_cast<size_t>(b)] = true;
      for (int b = 0; b < 3; ++b) {
        const int off = schema.block_offset(b);
        for (int i = 0; i < 4; ++i) {
          CHECK(full[off + i] == (sel[static_cast<size_t>(b)] ? code[off + i] : donor[off + i]));
        }
      }
    }
  }
}

TEST_CASE("select_and_complete with the full interest set returns the code") {
  const auto schema = desk_schema();
  LatentCode code = LatentCode::LinSpaced(12, -1.0, 1.0);
  LatentCode donor = LatentCode::Zero(12);
  CHECK(select_and_complete(code, {0, 1, 2}, donor, schema) == code);
}

TEST_CASE("completion rejects mismatched donors and payloads") {
  const auto schema = desk_schema();
  LatentCode packed = LatentCode::Zero(4);
  LatentCode short_donor = LatentCode::Zero(5);
  CHECK_THROWS_AS(complete_code(packed, {0}, short_donor, schema), std::invalid_argument);
  LatentCode donor = LatentCode::Zero(12);
  LatentCode wrong = LatentCode::Zero(5);
  CHECK_THROWS_AS(complete_code(wrong, {0}, donor, schema), std::invalid_argument);
}
