#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace repchain;
using repchain::testing::vectors;

TEST(Transaction, EncodingMatchesFixture) {
  const auto v = vectors();
  auto kp = issue_keypair(1, 0);
  auto tx = make_transaction(kp, TxId{0, 3, 9}, true);
  EXPECT_EQ(to_hex(tx.signature().tag), v["tx_0_3_9_signature"].get<std::string>());
  EXPECT_EQ(to_hex(tx.encode().take()), v["tx_0_3_9_encoding"].get<std::string>());
}

TEST(Transaction, ValidityBitIsNotOnTheWire) {
  auto kp = issue_keypair(1, 0);
  auto a = make_transaction(kp, TxId{0, 3, 9}, true);
  auto b = make_transaction(kp, TxId{0, 3, 9}, false);
  EXPECT_EQ(a.encode().take(), b.encode().take());
  EXPECT_EQ(a, b);
  EXPECT_TRUE(validate_collector(a));
  EXPECT_FALSE(validate_governor(b));
}

TEST(Transaction, SignatureCoversEveryIdField) {
  auto im = IdentityManager::issue(1, 1, 0, 0);
  auto tx = make_transaction(im.providers[0], TxId{0, 3, 9}, true);
  EXPECT_TRUE(verify_transaction(im.registry, im.providers[0].public_key, tx));
  for (int field = 0; field < 3; ++field) {
    TxId id = tx.id();
    if (field == 0) id.provider_id += 1;
    if (field == 1) id.seq += 1;
    if (field == 2) id.timestamp += 1;
    Transaction moved(id, true, tx.signature());
    EXPECT_FALSE(verify_transaction(im.registry, im.providers[0].public_key, moved)) << field;
  }
}

TEST(LabeledTransaction, SignatureBindsLabelAndCollector) {
  auto im = IdentityManager::issue(2, 1, 2, 0);
  auto tx = make_transaction(im.providers[0], TxId{0, 0, 1}, true);
  auto ltx = make_labeled(im.collectors[0], 0, tx, Label::Plus);
  EXPECT_TRUE(verify_labeled(im.registry, im.collectors[0].public_key, ltx));
  auto flipped = ltx;
  flipped.label = Label::Minus;
  EXPECT_FALSE(verify_labeled(im.registry, im.collectors[0].public_key, flipped));
  auto renamed = ltx;
  renamed.collector_id = 1;
  EXPECT_FALSE(verify_labeled(im.registry, im.collectors[1].public_key, renamed));
}

TEST(Labels, AbsentCountsAsMinus) {
  EXPECT_EQ(effective(std::nullopt), Label::Minus);
  EXPECT_EQ(effective(Label::Plus), Label::Plus);
  EXPECT_EQ(opposite(Label::Plus), Label::Minus);
}

TEST(Merkle, EmptyIsZero) { EXPECT_EQ(merkle_root(std::vector<Bytes>{}), kZeroDigest); }

TEST(Merkle, MatchesFixture) {
  const auto v = vectors();
  std::vector<Bytes> abc{Bytes{'a'}, Bytes{'b'}, Bytes{'c'}};
  EXPECT_EQ(to_hex(merkle_root(abc)), v["merkle_abc"].get<std::string>());
  std::vector<Bytes> a{Bytes{'a'}};
  EXPECT_EQ(to_hex(merkle_root(a)), v["merkle_a"].get<std::string>());
}

TEST(Merkle, OrderMatters) {
  std::vector<Bytes> ab{Bytes{'a'}, Bytes{'b'}}, ba{Bytes{'b'}, Bytes{'a'}};
  EXPECT_NE(merkle_root(ab), merkle_root(ba));
}

TEST(Commitment, TagsSeparateTheTwoLists) {
  const auto v = vectors();
  auto kp = issue_keypair(1, 0);
  auto tx = make_transaction(kp, TxId{0, 3, 9}, true);
  EXPECT_EQ(to_hex(lists_commitment({tx}, {tx})), v["commitment_tx_invalid_and_unchecked"].get<std::string>());
  EXPECT_NE(lists_commitment({tx}, {}), lists_commitment({}, {tx}));
  EXPECT_EQ(lists_commitment({}, {}), kZeroDigest);
}

TEST(Block, GenesisMatchesFixture) {
  const auto v = vectors();
  auto g = genesis_block();
  EXPECT_EQ(to_hex(g.encode()), v["genesis_encoding"].get<std::string>());
  EXPECT_EQ(to_hex(hash_block(g)), v["genesis_hash"].get<std::string>());
  EXPECT_FALSE(g.is_stake_transfer());
}

TEST(Block, HashCoversLeaderSignature) {
  Block a, b;
  b.leader_signature.tag[0] = 1;
  EXPECT_NE(hash_block(a), hash_block(b));
  EXPECT_EQ(a.signed_body(), b.signed_body());
}

TEST(StakeTransfer, SignedByPayer) {
  auto im = IdentityManager::issue(1, 0, 0, 2);
  auto t = make_stake_transfer(im.governors[0], 0, 1, 3, 0);
  EXPECT_TRUE(im.registry.verify(im.governors[0].public_key, t.signed_body(), t.signature));
  t.amount = 4;
  EXPECT_FALSE(im.registry.verify(im.governors[0].public_key, t.signed_body(), t.signature));
}
