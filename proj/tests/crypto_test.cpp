#include <gtest/gtest.h>

#include <set>

#include "test_util.hpp"

using namespace repchain;
using repchain::testing::vectors;

TEST(Sha256, KnownVector) {
  EXPECT_EQ(to_hex(sha256(as_bytes("abc"))), vectors()["sha256_abc"].get<std::string>());
}

TEST(Keys, IssuanceMatchesFixture) {
  const auto v = vectors();
  auto kp = issue_keypair(v["seed"].get<std::uint64_t>(), v["node_id"].get<std::uint64_t>());
  EXPECT_EQ(to_hex(kp.secret), v["secret"].get<std::string>());
  EXPECT_EQ(to_hex(kp.public_key), v["public_key"].get<std::string>());
}

TEST(Keys, DistinctNodesGetDistinctKeys) {
  std::set<Digest> seen;
  for (std::uint64_t seed = 0; seed < 4; ++seed)
    for (std::uint64_t node = 0; node < 50; ++node) seen.insert(issue_keypair(seed, node).public_key);
  EXPECT_EQ(seen.size(), 200u);
}

TEST(Sign, MatchesFixtureAndVerifies) {
  const auto v = vectors();
  auto kp = issue_keypair(1, 0);
  const auto msg = from_hex(v["message_hex"].get<std::string>());
  auto sig = sign(kp, msg);
  EXPECT_EQ(to_hex(sig.tag), v["signature"].get<std::string>());

  KeyRegistry reg;
  reg.enroll(kp);
  EXPECT_TRUE(verify(reg, kp.public_key, msg, sig));
}

TEST(Sign, RejectsTamperedMessageSignatureOrKey) {
  auto kp = issue_keypair(1, 0);
  auto other = issue_keypair(1, 1);
  KeyRegistry reg;
  reg.enroll(kp);
  reg.enroll(other);
  const Bytes msg{1, 2, 3};
  auto sig = sign(kp, msg);

  Bytes bad_msg = msg;
  bad_msg[0] ^= 1;
  EXPECT_FALSE(verify(reg, kp.public_key, bad_msg, sig));
  auto bad_sig = sig;
  bad_sig.tag[5] ^= 0x80;
  EXPECT_FALSE(verify(reg, kp.public_key, msg, bad_sig));
  EXPECT_FALSE(verify(reg, other.public_key, msg, sig));
}

TEST(Sign, UnknownKeyNeverVerifies) {
  auto kp = issue_keypair(9, 9);
  KeyRegistry reg;
  EXPECT_FALSE(reg.knows(kp.public_key));
  EXPECT_FALSE(verify(reg, kp.public_key, Bytes{}, sign(kp, Bytes{})));
}

TEST(Registry, RefusesMismatchedKeyPair) {
  auto kp = issue_keypair(1, 0);
  kp.public_key[0] ^= 1;
  KeyRegistry reg;
  EXPECT_THROW(reg.enroll(kp), std::invalid_argument);
}

TEST(Vrf, MatchesFixtureAndIsDeterministic) {
  const auto v = vectors();
  auto kp = issue_keypair(1, 0);
  const auto in = from_hex(v["message_hex"].get<std::string>());
  auto out = vrf_eval(kp, in);
  EXPECT_EQ(to_hex(out.value), v["vrf_value"].get<std::string>());
  EXPECT_EQ(to_hex(out.proof), v["vrf_proof"].get<std::string>());
  EXPECT_EQ(out, vrf_eval(kp, in));
}

TEST(Vrf, VerifyRejectsWrongInputOrForgedOutput) {
  auto kp = issue_keypair(1, 0);
  KeyRegistry reg;
  reg.enroll(kp);
  const Bytes in{7};
  auto out = vrf_eval(kp, in);
  EXPECT_TRUE(vrf_verify(reg, kp.public_key, in, out));
  EXPECT_FALSE(vrf_verify(reg, kp.public_key, Bytes{8}, out));
  auto forged = out;
  forged.value[0] ^= 1;
  EXPECT_FALSE(vrf_verify(reg, kp.public_key, in, forged));
  forged = out;
  forged.proof[31] ^= 1;
  EXPECT_FALSE(vrf_verify(reg, kp.public_key, in, forged));
}

TEST(IdentityManager, AssignsProvidersThenCollectorsThenGovernors) {
  auto im = IdentityManager::issue(4, 2, 3, 2);
  ASSERT_EQ(im.providers.size(), 2u);
  ASSERT_EQ(im.collectors.size(), 3u);
  ASSERT_EQ(im.governors.size(), 2u);
  EXPECT_EQ(im.collectors[0].node_id, 2u);
  EXPECT_EQ(im.governors[1].node_id, 6u);
  EXPECT_EQ(im.governors[1].public_key, issue_keypair(4, 6).public_key);
  for (const auto& kp : im.collectors) EXPECT_TRUE(im.registry.knows(kp.public_key));
}

TEST(Rng, SubstreamsAreDeterministicAndIndependent) {
  auto a = substream(5, "screen", 0);
  auto b = substream(5, "screen", 0);
  auto c = substream(5, "screen", 1);
  auto d = substream(5, "provider", 0);
  const auto x = a.next_u64();
  EXPECT_EQ(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
  EXPECT_NE(x, d.next_u64());
}

TEST(Rng, UniformAndBelowStayInRange) {
  Rng r(17);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(r.below(7), 7u);
  }
  EXPECT_FALSE(r.bernoulli(0.0));
  EXPECT_TRUE(r.bernoulli(1.0));
}
