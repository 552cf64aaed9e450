#include "npc/attribute_model.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "npc/dataset.hpp"
#include "npc/rng.hpp"
#include "testutil.hpp"

using npc::AttributeModel;
using npc::AttributeSchema;
using npc::Dataset;
using npc::Rng;
using npc::Sample;
using npc::SgdConfig;
using npc::VariableId;

namespace {

AttributeSchema small_schema() {
  return AttributeSchema({"color", "shape"}, {{"r", "g", "b"}, {"o", "x"}}, {"c0", "c1"});
}

TEST(Predict, ZeroModelIsUniform) {
  const AttributeModel model(small_schema(), 4);
  const auto probs = model.predict(std::vector<double>{1.0, -2.0, 0.5, 3.0});
  ASSERT_EQ(probs.size(), 2u);
  for (double p : probs[0]) EXPECT_NEAR(p, 1.0 / 3.0, 1e-12);
  for (double p : probs[1]) EXPECT_NEAR(p, 0.5, 1e-12);
}

TEST(Predict, LargeBiasSaturates) {
  AttributeModel model(small_schema(), 2);
  model.heads()[0].bias[0] = 10.0;
  const auto probs = model.predict(std::vector<double>{0.0, 0.0});
  // e^10 / (e^10 + 2) with q_k = 3
  EXPECT_GE(probs[0][0], 0.999);
  EXPECT_NEAR(probs[0][0], std::exp(10.0) / (std::exp(10.0) + 2.0), 1e-12);
}

TEST(Predict, LogitShiftInvariance) {
  AttributeModel model(small_schema(), 2);
  Rng rng(1);
  for (auto& head : model.heads()) {
    for (double& w : head.weight) w = rng.uniform(-1.0, 1.0);
    for (double& b : head.bias) b = rng.uniform(-1.0, 1.0);
  }
  const std::vector<double> x{0.3, -0.7};
  const auto before = model.predict(x);
  for (double& b : model.heads()[0].bias) b += 7.5;
  const auto after = model.predict(x);
  for (std::size_t j = 0; j < before[0].size(); ++j) {
    EXPECT_NEAR(before[0][j], after[0][j], 1e-12);
  }
}

TEST(Predict, OutputsAreValidForExtremeInputs) {
  AttributeModel model(small_schema(), 2);
  model.heads()[0].bias = {1e4, -1e4, 0.0};
  model.heads()[1].weight = {1e3, -1e3, 0.0, 0.0};
  const auto probs = model.predict(std::vector<double>{1e3, -1e3});
  for (const auto& vec : probs) {
    double total = 0.0;
    for (double p : vec) {
      EXPECT_FALSE(std::isnan(p));
      EXPECT_GE(p, 0.0);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(Predict, DimensionMismatchThrows) {
  const AttributeModel model(small_schema(), 4);
  EXPECT_THROW(model.predict(std::vector<double>{1.0}), npc::SchemaMismatchError);
}

Dataset one_hot_dataset(const AttributeSchema& schema, int feature_dim,
                        const std::vector<std::vector<int>>& attr_rows,
                        const std::vector<int>& labels) {
  Dataset d;
  d.schema = schema;
  d.feature_dim = feature_dim;
  for (std::size_t i = 0; i < attr_rows.size(); ++i) {
    Sample s;
    s.features.assign(static_cast<std::size_t>(feature_dim), 0.0);
    s.class_label = labels[i];
    for (int k = 0; k < schema.attribute_count(); ++k) {
      std::vector<double> g(static_cast<std::size_t>(schema.cardinality(VariableId{k})), 0.0);
      g[static_cast<std::size_t>(attr_rows[i][static_cast<std::size_t>(k)])] = 1.0;
      s.attribute_targets.push_back(std::move(g));
    }
    d.samples.push_back(std::move(s));
  }
  return d;
}

TEST(AttributeLoss, UniformPredictionsScoreExactlyOne) {
  Rng rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    const AttributeSchema schema = testutil::random_schema(rng, 4, 5);
    const int d = 3;
    const AttributeModel zeros(schema, d);  // uniform outputs
    Dataset data;
    data.schema = schema;
    data.feature_dim = d;
    for (int i = 0; i < 7; ++i) {
      Sample s;
      s.features = {rng.uniform(), rng.uniform(), rng.uniform()};
      s.class_label = 0;
      for (int k = 0; k < schema.attribute_count(); ++k) {
        std::vector<double> g(static_cast<std::size_t>(schema.cardinality(VariableId{k})), 0.0);
        g[static_cast<std::size_t>(rng.uniform_below(
            static_cast<std::uint64_t>(schema.cardinality(VariableId{k}))))] = 1.0;
        s.attribute_targets.push_back(std::move(g));
      }
      data.samples.push_back(std::move(s));
    }
    EXPECT_NEAR(npc::attribute_loss(zeros, data), 1.0, 1e-12);
  }
}

TEST(AttributeLoss, PerfectPredictionsScoreZero) {
  const AttributeSchema schema = small_schema();
  AttributeModel model(schema, 2);
  // saturate the correct entries hard enough that softmax rounds to 1.0
  model.heads()[0].bias = {1000.0, 0.0, 0.0};
  model.heads()[1].bias = {0.0, 1000.0};
  const Dataset data = one_hot_dataset(schema, 2, {{0, 1}, {0, 1}}, {0, 1});
  EXPECT_NEAR(npc::attribute_loss(model, data), 0.0, 1e-12);
}

TEST(AttributeLoss, ZebraTargetOnMatchingPredictionScoresOne) {
  const AttributeSchema schema({"color"}, {{"black", "white"}}, {"z", "h"});
  const AttributeModel model(schema, 1);  // uniform (0.5, 0.5) prediction
  Dataset data;
  data.schema = schema;
  data.feature_dim = 1;
  Sample s;
  s.features = {0.0};
  s.class_label = 0;
  s.attribute_targets = {{0.5, 0.5}};
  data.samples.push_back(s);
  // cross-entropy log 2 cancelled by the 1/log q normalizer
  EXPECT_NEAR(npc::attribute_loss(model, data), 1.0, 1e-12);
}

TEST(AttributeLoss, GradientsMatchFiniteDifferences) {
  Rng rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    const AttributeSchema schema = testutil::random_schema(rng, 3, 4);
    const int d = 2 + static_cast<int>(rng.uniform_below(3));
    AttributeModel model(schema, d);
    for (auto& head : model.heads()) {
      for (double& w : head.weight) w = rng.uniform(-0.8, 0.8);
      for (double& b : head.bias) b = rng.uniform(-0.5, 0.5);
    }
    Dataset data;
    data.schema = schema;
    data.feature_dim = d;
    for (int i = 0; i < 4; ++i) {
      Sample s;
      for (int c = 0; c < d; ++c) s.features.push_back(rng.uniform(-1.0, 1.0));
      s.class_label = 0;
      for (int k = 0; k < schema.attribute_count(); ++k) {
        s.attribute_targets.push_back(
            testutil::random_simplex_point(rng, schema.cardinality(VariableId{k})));
      }
      data.samples.push_back(std::move(s));
    }
    std::vector<const Sample*> batch;
    for (const Sample& s : data.samples) batch.push_back(&s);
    const npc::AttributeGradients grads = npc::attribute_loss_gradients(model, batch);
    EXPECT_NEAR(grads.loss, npc::attribute_loss(model, data), 1e-12);

    const double h = 1e-6;
    for (std::size_t k = 0; k < grads.heads.size(); ++k) {
      auto check_param = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + h;
        const double up = npc::attribute_loss(model, data);
        param = saved - h;
        const double down = npc::attribute_loss(model, data);
        param = saved;
        const double fd = (up - down) / (2.0 * h);
        EXPECT_TRUE(testutil::close_rel(analytic, fd, 1e-4, 1e-8))
            << "analytic " << analytic << " fd " << fd;
      };
      for (std::size_t i = 0; i < model.heads()[k].weight.size(); ++i) {
        check_param(model.heads()[k].weight[i], grads.heads[k].weight[i]);
      }
      for (std::size_t i = 0; i < model.heads()[k].bias.size(); ++i) {
        check_param(model.heads()[k].bias[i], grads.heads[k].bias[i]);
      }
    }
  }
}

// Features carry the attribute one-hots plus noise, so the linear heads can
// recover the targets nearly perfectly.
Dataset separable_dataset(const AttributeSchema& schema, int n, double sigma, Rng& rng) {
  int dim = 0;
  for (int k = 0; k < schema.attribute_count(); ++k) dim += schema.cardinality(VariableId{k});
  Dataset data;
  data.schema = schema;
  data.feature_dim = dim;
  for (int i = 0; i < n; ++i) {
    Sample s;
    s.features.assign(static_cast<std::size_t>(dim), 0.0);
    int offset = 0;
    s.class_label = 0;
    for (int k = 0; k < schema.attribute_count(); ++k) {
      const int q = schema.cardinality(VariableId{k});
      const int value = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(q)));
      s.features[static_cast<std::size_t>(offset + value)] = 1.0;
      std::vector<double> g(static_cast<std::size_t>(q), 0.0);
      g[static_cast<std::size_t>(value)] = 1.0;
      s.attribute_targets.push_back(std::move(g));
      offset += q;
    }
    for (double& f : s.features) f += rng.gaussian(0.0, sigma);
    data.samples.push_back(std::move(s));
  }
  return data;
}

TEST(TrainAttributes, SeparableAttributesReachLowTvDistance) {
  Rng rng(404);
  const AttributeSchema schema = small_schema();
  const Dataset train = separable_dataset(schema, 2000, 0.1, rng);
  const Dataset held_out = separable_dataset(schema, 500, 0.1, rng);
  SgdConfig config;
  config.learning_rate = 0.5;
  config.epochs = 60;
  config.batch_size = 64;
  config.seed = 9;
  const auto result = npc::train_attributes(train, nullptr, config);
  double tv = 0.0;
  for (const npc::Sample& s : held_out.samples) {
    const auto probs = result.model.predict(s.features);
    double sample_tv = 0.0;
    for (int k = 0; k < schema.attribute_count(); ++k) {
      double half_l1 = 0.0;
      for (std::size_t j = 0; j < probs[static_cast<std::size_t>(k)].size(); ++j) {
        half_l1 += std::abs(probs[static_cast<std::size_t>(k)][j] -
                            s.attribute_targets[static_cast<std::size_t>(k)][j]);
      }
      sample_tv += 0.5 * half_l1;
    }
    tv += sample_tv / schema.attribute_count();
  }
  tv /= static_cast<double>(held_out.samples.size());
  EXPECT_LE(tv, 0.05);
}

TEST(TrainAttributes, ZeroLearningRateIsANoOp) {
  Rng rng(11);
  const AttributeSchema schema = small_schema();
  const Dataset train = separable_dataset(schema, 64, 0.1, rng);
  SgdConfig config;
  config.learning_rate = 0.0;
  config.epochs = 5;
  config.seed = 3;
  const auto result = npc::train_attributes(train, nullptr, config);
  for (const auto& head : result.model.heads()) {
    for (double w : head.weight) EXPECT_EQ(w, 0.0);
    for (double b : head.bias) EXPECT_EQ(b, 0.0);
  }
  ASSERT_EQ(result.train_loss.size(), 5u);
  for (double l : result.train_loss) EXPECT_EQ(l, result.train_loss[0]);
}

TEST(TrainAttributes, SameSeedGivesBitIdenticalModels) {
  Rng rng(12);
  const AttributeSchema schema = small_schema();
  const Dataset train = separable_dataset(schema, 256, 0.2, rng);
  const Dataset valid = separable_dataset(schema, 64, 0.2, rng);
  SgdConfig config;
  config.epochs = 8;
  config.seed = 1234;
  const auto a = npc::train_attributes(train, &valid, config);
  const auto b = npc::train_attributes(train, &valid, config);
  EXPECT_EQ(npc::write_attribute_model(a.model), npc::write_attribute_model(b.model));
  EXPECT_EQ(a.train_loss, b.train_loss);
  EXPECT_EQ(a.validation_loss, b.validation_loss);
  EXPECT_EQ(a.validation_loss.size(), 8u);
}

TEST(Checkpoint, RoundTripExact) {
  Rng rng(77);
  AttributeModel model(small_schema(), 3);
  for (auto& head : model.heads()) {
    for (double& w : head.weight) w = rng.gaussian(0.0, 2.0);
    for (double& b : head.bias) b = rng.gaussian(0.0, 2.0);
  }
  const AttributeModel restored = npc::read_attribute_model(npc::write_attribute_model(model));
  ASSERT_EQ(restored.feature_dim(), model.feature_dim());
  for (std::size_t k = 0; k < model.heads().size(); ++k) {
    EXPECT_EQ(restored.heads()[k].weight, model.heads()[k].weight);
    EXPECT_EQ(restored.heads()[k].bias, model.heads()[k].bias);
  }
}

}  // namespace
