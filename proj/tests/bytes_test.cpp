#include <gtest/gtest.h>

#include "repchain/bytes.hpp"

using namespace repchain;

TEST(Hex, RoundTrip) {
  const Bytes b{0x00, 0x01, 0xab, 0xff};
  EXPECT_EQ(to_hex(b), "0001abff");
  EXPECT_EQ(from_hex("0001abff"), b);
  EXPECT_EQ(from_hex("0001ABFF"), b);
}

TEST(Hex, RejectsMalformed) {
  EXPECT_THROW(from_hex("abc"), std::invalid_argument);
  EXPECT_THROW(from_hex("zz"), std::invalid_argument);
  EXPECT_THROW(digest_from_hex("00"), std::invalid_argument);
}

TEST(U64, BigEndian) {
  Bytes b;
  append_u64be(b, 0x0102030405060708ULL);
  EXPECT_EQ(to_hex(b), "0102030405060708");
  EXPECT_EQ(read_u64be(b), 0x0102030405060708ULL);
  EXPECT_THROW(read_u64be(Bytes{1, 2}), std::out_of_range);
}

TEST(Encoder, LengthPrefixesEveryField) {
  auto out = Encoder{}.u64(5).bytes(Bytes{0xaa}).take();
  EXPECT_EQ(to_hex(out), "0000000000000008" "0000000000000005" "0000000000000001" "aa");
}

TEST(Encoder, NestedIsLengthPrefixed) {
  Encoder inner;
  inner.u64(1);
  auto out = Encoder{}.nested(inner).take();
  EXPECT_EQ(out.size(), 8u + 16u);
  EXPECT_EQ(read_u64be(out), 16u);
}

TEST(Encoder, NegativeIntegersAreTwosComplement) {
  auto out = Encoder{}.i64(-1).take();
  EXPECT_EQ(to_hex(out), "0000000000000008ffffffffffffffff");
}

TEST(Encoder, FieldBoundariesAreUnambiguous) {
  // ("ab", "c") and ("a", "bc") concatenate to the same bytes but must encode differently.
  auto x = Encoder{}.bytes(as_bytes("ab")).bytes(as_bytes("c")).take();
  auto y = Encoder{}.bytes(as_bytes("a")).bytes(as_bytes("bc")).take();
  EXPECT_NE(x, y);
}
