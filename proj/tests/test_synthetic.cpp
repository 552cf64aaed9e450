#include "npc/synthetic.hpp"

#include <filesystem>

#include <gtest/gtest.h>

#include "npc/dataset.hpp"
#include "npc/text_io.hpp"

using npc::GeneratorKind;
using npc::SyntheticData;
using npc::SyntheticSpec;
using npc::VariableId;

namespace {

TEST(GenerateSynthetic, CleanMnistAdditionWorld) {
  SyntheticSpec spec;
  spec.rows = 1000;
  spec.noise_epsilon = 0.0;
  spec.seed = 7;
  const SyntheticData data = npc::generate_synthetic(spec);
  EXPECT_EQ(data.world.schema.class_count(), 19);
  EXPECT_EQ(data.train.feature_dim, 20);
  for (const auto& sample : data.train.samples) {
    int sum = 0;
    for (int k = 0; k < 2; ++k) {
      const auto& g = sample.attribute_targets[static_cast<std::size_t>(k)];
      int hot = -1;
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (g[j] == 1.0) {
          ASSERT_EQ(hot, -1);
          hot = static_cast<int>(j);
        } else {
          ASSERT_EQ(g[j], 0.0);
        }
      }
      ASSERT_GE(hot, 0);
      sum += hot;
    }
    EXPECT_EQ(sample.class_label, sum);
  }
}

TEST(GenerateSynthetic, SplitSizesFollowTheRatio) {
  SyntheticSpec spec;
  spec.rows = 10000;
  const SyntheticData data = npc::generate_synthetic(spec);
  EXPECT_EQ(data.train.samples.size(), 8000u);
  EXPECT_EQ(data.validation.samples.size(), 1000u);
  EXPECT_EQ(data.test.samples.size(), 1000u);
  EXPECT_EQ(data.train.split, npc::Split::kTrain);
  EXPECT_EQ(data.validation.split, npc::Split::kValidation);
  EXPECT_EQ(data.test.split, npc::Split::kTest);
}

TEST(GenerateSynthetic, SameSeedIsByteIdentical) {
  SyntheticSpec spec;
  spec.rows = 500;
  spec.noise_epsilon = 0.2;
  spec.feature_sigma = 0.3;
  spec.seed = 99;
  const SyntheticData a = npc::generate_synthetic(spec);
  const SyntheticData b = npc::generate_synthetic(spec);
  const auto pa = std::filesystem::temp_directory_path() / "npc_syn_a.jsonl";
  const auto pb = std::filesystem::temp_directory_path() / "npc_syn_b.jsonl";
  npc::write_dataset_jsonl(a.train, pa);
  npc::write_dataset_jsonl(b.train, pb);
  EXPECT_EQ(npc::io::read_text_file(pa), npc::io::read_text_file(pb));
  std::filesystem::remove(pa);
  std::filesystem::remove(pb);
}

TEST(GenerateSynthetic, NoiseMixesTargetsWithUniform) {
  SyntheticSpec spec;
  spec.rows = 100;
  spec.noise_epsilon = 0.2;
  const SyntheticData data = npc::generate_synthetic(spec);
  for (const auto& sample : data.test.samples) {
    for (const auto& g : sample.attribute_targets) {
      int high = 0;
      for (double x : g) {
        if (std::abs(x - 0.82) < 1e-12) {
          ++high;
        } else {
          EXPECT_NEAR(x, 0.02, 1e-12);
        }
      }
      EXPECT_EQ(high, 1);
    }
  }
}

TEST(GenerateSynthetic, RuleWorldRespectsShapeAndDeterminism) {
  SyntheticSpec spec;
  spec.kind = GeneratorKind::kRuleWorld;
  spec.cardinalities = {3, 2, 4};
  spec.class_rule = "random_map";
  spec.class_count = 5;
  spec.rows = 200;
  spec.seed = 31;
  const SyntheticData a = npc::generate_synthetic(spec);
  const SyntheticData b = npc::generate_synthetic(spec);
  EXPECT_EQ(a.world.schema.class_count(), 5);
  EXPECT_EQ(a.world.schema.attribute_count(), 3);
  EXPECT_EQ(a.world.py_given_a, b.world.py_given_a);
  EXPECT_EQ(a.train.feature_dim, 9);
  a.train.validate();
}

TEST(GenerateSynthetic, SpecValidation) {
  SyntheticSpec spec;
  spec.noise_epsilon = 1.0;
  EXPECT_THROW(spec.validate(), npc::Error);
  spec = {};
  spec.kind = GeneratorKind::kRuleWorld;
  spec.class_rule = "random_map";
  spec.class_count = 1;
  EXPECT_THROW(spec.validate(), npc::Error);
}

}  // namespace
