#include "npc/circuit_io.hpp"

#include <string>

#include <gtest/gtest.h>

#include "npc/errors.hpp"
#include "npc/rng.hpp"
#include "testutil.hpp"

using npc::Circuit;
using npc::LeafAssignment;
using npc::Rng;

namespace {

TEST(CircuitIo, RoundTripPreservesEvaluationExactly) {
  const Circuit original = testutil::depth2_rule_fixture(0.2, 0.3, 0.5);
  const Circuit restored = npc::deserialize(npc::serialize(original));
  EXPECT_TRUE(restored.validate().ok());
  Rng rng(31);
  for (int i = 0; i < 10; ++i) {
    const LeafAssignment a = testutil::random_assignment(original.schema(), rng, 0.6);
    EXPECT_EQ(original.evaluate(a), restored.evaluate(a));  // 0 ulp
  }
}

TEST(CircuitIo, RoundTripRandomCircuits) {
  Rng rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    const auto schema = testutil::random_schema(rng, 3, 4);
    const Circuit original = testutil::random_circuit(schema, rng);
    const Circuit restored = npc::deserialize(npc::serialize(original));
    ASSERT_EQ(original.nodes().size(), restored.nodes().size());
    for (int i = 0; i < 5; ++i) {
      const LeafAssignment a = testutil::random_assignment(schema, rng, 0.5);
      EXPECT_EQ(original.evaluate(a), restored.evaluate(a));
    }
  }
}

TEST(CircuitIo, SerializeIsDeterministic) {
  const Circuit c = testutil::depth2_rule_fixture(1.0, 2.0, 4.0);
  EXPECT_EQ(npc::serialize(c), npc::serialize(c));
}

TEST(CircuitIo, SumArityMismatchNamesNode) {
  const std::string text =
      "npc-circuit 1\n"
      "attributes 1\n"
      "attribute a 2 0 1\n"
      "class 2 n y\n"
      "nodes 3 root 2\n"
      "0 leaf 0 0\n"
      "1 leaf 0 1\n"
      "2 sum 3 0 1 0 0.5 0.5\n";
  try {
    npc::deserialize(text);
    FAIL() << "expected ParseError";
  } catch (const npc::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("node 2"), std::string::npos);
  }
}

TEST(CircuitIo, CycleIsRejected) {
  const std::string text =
      "npc-circuit 1\n"
      "attributes 1\n"
      "attribute a 2 0 1\n"
      "class 2 n y\n"
      "nodes 2 root 0\n"
      "0 sum 1 1 1.0\n"
      "1 sum 1 0 1.0\n";
  try {
    npc::deserialize(text);
    FAIL() << "expected ParseError";
  } catch (const npc::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("cycle"), std::string::npos);
  }
}

TEST(CircuitIo, UnknownNodeKindRejected) {
  const std::string text =
      "npc-circuit 1\n"
      "attributes 1\n"
      "attribute a 2 0 1\n"
      "class 2 n y\n"
      "nodes 1 root 0\n"
      "0 max 2 0 0\n";
  EXPECT_THROW(npc::deserialize(text), npc::ParseError);
}

TEST(CircuitIo, DanglingChildRejected) {
  const std::string text =
      "npc-circuit 1\n"
      "attributes 1\n"
      "attribute a 2 0 1\n"
      "class 2 n y\n"
      "nodes 1 root 0\n"
      "0 sum 1 9 1.0\n";
  EXPECT_THROW(npc::deserialize(text), npc::ParseError);
}

TEST(CircuitIo, InvalidCircuitRejectedUnlessRelaxed) {
  const std::string text =
      "npc-circuit 1\n"
      "attributes 1\n"
      "attribute a 2 0 1\n"
      "class 2 n y\n"
      "nodes 3 root 2\n"
      "0 leaf 0 0\n"
      "1 leaf 0 1\n"
      "2 sum 2 0 1 2.0 2.0\n";
  EXPECT_THROW(npc::deserialize(text), npc::ValidationError);
  const Circuit relaxed = npc::deserialize(text, /*require_valid=*/false);
  EXPECT_FALSE(relaxed.validate().ok());
}

TEST(CircuitIo, ForwardReferencesAllowed) {
  const std::string text =
      "npc-circuit 1\n"
      "attributes 1\n"
      "attribute a 2 0 1\n"
      "class 2 n y\n"
      "nodes 3 root 0\n"
      "0 sum 2 1 2 0.25 0.75\n"
      "1 leaf 0 0\n"
      "2 leaf 0 1\n";
  const Circuit c = npc::deserialize(text);
  LeafAssignment a(2);
  a.observe(npc::VariableId{0}, 1);
  EXPECT_DOUBLE_EQ(c.evaluate(a), 0.75);
}

}  // namespace
