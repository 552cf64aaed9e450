#include "npc/explanations.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "npc/attribute_model.hpp"
#include "npc/npc_model.hpp"
#include "npc/rng.hpp"
#include "npc/rules.hpp"
#include "testutil.hpp"

using npc::AttributeModel;
using npc::AttributeSchema;
using npc::CeConfig;
using npc::CeResult;
using npc::Circuit;
using npc::Dataset;
using npc::MpeResult;
using npc::NpcModel;
using npc::Rng;
using npc::Rule;
using npc::RuleSet;
using npc::Sample;
using npc::VariableId;

namespace {

// Independent projection oracle: bisection on the shift lambda solving
// sum_i max(v_i + lambda, 0) = 1, no sorting involved.
std::vector<double> bisection_projection(const std::vector<double>& v) {
  double lo = -1e9, hi = 1e9;
  for (double x : v) {
    lo = std::max(lo, -x - 2.0);
    hi = std::min(hi, 2.0 - x);
  }
  lo = -2.0;
  hi = 2.0;
  for (double x : v) {
    lo = std::min(lo, -x);
    hi = std::max(hi, 1.0 - x);
  }
  const auto mass = [&](double lambda) {
    double total = 0.0;
    for (double x : v) total += std::max(x + lambda, 0.0);
    return total;
  };
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) < 1.0 ? lo : hi) = mid;
  }
  std::vector<double> out(v.size());
  const double lambda = 0.5 * (lo + hi);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] + lambda, 0.0);
  return out;
}

TEST(SimplexProject, KnownCases) {
  const auto a = npc::simplex_project(std::vector<double>{0.6, 0.6});
  EXPECT_NEAR(a[0], 0.5, 1e-12);
  EXPECT_NEAR(a[1], 0.5, 1e-12);

  // grid oracle on the 2-simplex: minimize ||b - v||^2 with b = (x, 1-x)
  const std::vector<double> v{1.2, -0.2};
  double best_x = 0.0, best_obj = 1e100;
  for (int i = 0; i <= 10000; ++i) {
    const double x = i * 1e-4;
    const double obj = (x - v[0]) * (x - v[0]) + (1.0 - x - v[1]) * (1.0 - x - v[1]);
    if (obj < best_obj) {
      best_obj = obj;
      best_x = x;
    }
  }
  const auto b = npc::simplex_project(v);
  EXPECT_NEAR(b[0], best_x, 1e-3);
  EXPECT_NEAR(b[0], 1.0, 1e-12);
  EXPECT_NEAR(b[1], 0.0, 1e-12);
}

TEST(SimplexProject, IdempotentOnFeasiblePoints) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = testutil::random_simplex_point(rng, 2 + static_cast<int>(rng.uniform_below(6)));
    const auto q = npc::simplex_project(p);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(q[i], p[i], 1e-12);
  }
}

TEST(SimplexProject, MatchesBisectionOracleOnRandomVectors) {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_below(7));
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = rng.uniform(-2.0, 2.0);
    const auto mine = npc::simplex_project(v);
    const auto oracle = bisection_projection(v);
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_NEAR(mine[i], oracle[i], 1e-3);
      EXPECT_GE(mine[i], 0.0);
      total += mine[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(SimplexProject, RejectsNonFiniteInput) {
  EXPECT_THROW(npc::simplex_project(std::vector<double>{1.0, std::nan("")}), npc::Error);
}

AttributeSchema mnist_schema() {
  std::vector<std::string> digits;
  for (int d = 0; d < 10; ++d) digits.push_back(std::to_string(d));
  std::vector<std::string> sums;
  for (int s = 0; s <= 18; ++s) sums.push_back(std::to_string(s));
  return AttributeSchema({"Number-First", "Number-Second"}, {digits, digits}, sums);
}

NpcModel mnist_npc() {
  RuleSet rs;
  rs.schema = mnist_schema();
  for (int a = 0; a < 10; ++a) {
    for (int b = 0; b < 10; ++b) rs.rules.push_back(Rule{{a, b}, a + b, 1.0});
  }
  return NpcModel(AttributeModel(mnist_schema(), 20), npc::compile_rules(rs));
}

std::vector<std::vector<double>> one_hot_probs(const AttributeSchema& schema,
                                               const std::vector<int>& values) {
  std::vector<std::vector<double>> probs;
  for (int k = 0; k < schema.attribute_count(); ++k) {
    std::vector<double> p(static_cast<std::size_t>(schema.cardinality(VariableId{k})), 0.0);
    p[static_cast<std::size_t>(values[static_cast<std::size_t>(k)])] = 1.0;
    probs.push_back(std::move(p));
  }
  return probs;
}

TEST(Mpe, OracleDigitPairIsItsOwnExplanation) {
  const NpcModel model = mnist_npc();
  const auto probs = one_hot_probs(model.schema(), {3, 5});
  const MpeResult result = npc::mpe_from_probabilities(model, probs, 8);
  EXPECT_EQ(result.assignment, (std::vector<int>{3, 5}));
  EXPECT_NEAR(result.contribution, 1.0, 1e-12);
}

TEST(Mpe, SingleAttributeArgmax) {
  AttributeSchema schema({"a"}, {{"0", "1"}}, {"y0", "y1"});
  npc::CircuitBuilder builder(schema);
  const int attr = builder.categorical(VariableId{0}, {0.5, 0.5});
  const int cls = builder.categorical(schema.class_variable(), {0.5, 0.5});
  const Circuit circuit = std::move(builder).finish(builder.product({attr, cls}));
  const NpcModel model(AttributeModel(schema, 1), circuit);
  const MpeResult result = npc::mpe_from_probabilities(model, {{0.9, 0.1}}, 0);
  EXPECT_EQ(result.assignment, (std::vector<int>{0}));
  EXPECT_NEAR(result.contribution, 0.45, 1e-12);
}

TEST(Mpe, MatchesFullTableOracleOnRandomModels) {
  Rng rng(31415);
  for (int trial = 0; trial < 25; ++trial) {
    const AttributeSchema schema = testutil::random_schema(rng, 3, 3);
    const Circuit circuit = testutil::random_circuit(schema, rng);
    const NpcModel model(AttributeModel(schema, 2), circuit);
    std::vector<std::vector<double>> probs;
    for (int k = 0; k < schema.attribute_count(); ++k) {
      probs.push_back(testutil::random_simplex_point(rng, schema.cardinality(VariableId{k})));
    }
    const int y = static_cast<int>(rng.uniform_below(
        static_cast<std::uint64_t>(schema.class_count())));

    // oracle: enumerate all attribute tuples, compute the term via the
    // reference recursion, keep the lexicographically first maximizer
    std::vector<int> best_tuple;
    double best_term = -1.0;
    std::vector<int> odom(static_cast<std::size_t>(schema.attribute_count()), 0);
    while (true) {
      npc::LeafAssignment attrs = npc::LeafAssignment::all_marginalized(schema);
      double pi = 1.0;
      for (int k = 0; k < schema.attribute_count(); ++k) {
        attrs.observe(VariableId{k}, odom[static_cast<std::size_t>(k)]);
        pi *= probs[static_cast<std::size_t>(k)]
                   [static_cast<std::size_t>(odom[static_cast<std::size_t>(k)])];
      }
      double marginal = 0.0;
      double joint_y = 0.0;
      for (int c = 0; c < schema.class_count(); ++c) {
        npc::LeafAssignment full = attrs;
        full.observe(schema.class_variable(), c);
        const double p = testutil::reference_joint(circuit, full);
        marginal += p;
        if (c == y) joint_y = p;
      }
      if (marginal > 0.0 && pi > 0.0) {
        const double term = pi * joint_y / marginal;
        if (term > best_term + 1e-15) {
          best_term = term;
          best_tuple = odom;
        }
      }
      int pos = schema.attribute_count();
      while (--pos >= 0) {
        if (++odom[static_cast<std::size_t>(pos)] < schema.cardinality(VariableId{pos})) break;
        odom[static_cast<std::size_t>(pos)] = 0;
      }
      if (pos < 0) break;
    }
    if (best_term <= 0.0) {
      EXPECT_THROW(npc::mpe_from_probabilities(model, probs, y), npc::NoExplanationError);
      continue;
    }
    const MpeResult result = npc::mpe_from_probabilities(model, probs, y);
    EXPECT_EQ(result.assignment, best_tuple);
    EXPECT_TRUE(testutil::close_rel(result.contribution, best_term, 1e-9));
  }
}

TEST(Mpe, TiesBreakLexicographically) {
  AttributeSchema schema({"a1", "a2"}, {{"0", "1"}, {"0", "1"}}, {"y0", "y1"});
  npc::CircuitBuilder builder(schema);
  const int a1 = builder.categorical(VariableId{0}, {0.5, 0.5});
  const int a2 = builder.categorical(VariableId{1}, {0.5, 0.5});
  const int cls = builder.categorical(schema.class_variable(), {0.5, 0.5});
  const Circuit circuit = std::move(builder).finish(builder.product({a1, a2, cls}));
  const NpcModel model(AttributeModel(schema, 1), circuit);
  const MpeResult result =
      npc::mpe_from_probabilities(model, {{0.5, 0.5}, {0.5, 0.5}}, 0);
  EXPECT_EQ(result.assignment, (std::vector<int>{0, 0}));
}

// A small world where features are concatenated one-hots and the attribute
// model is wired to read them out sharply.
struct AlignmentFixture {
  AttributeSchema schema{{"a1", "a2"}, {{"0", "1"}, {"0", "1"}}, {"0", "1"}};
  NpcModel model;

  AlignmentFixture() : model(make_model(schema)) {}

  static NpcModel make_model(const AttributeSchema& schema) {
    AttributeModel attr(schema, 4);
    for (int k = 0; k < 2; ++k) {
      auto& head = attr.heads()[static_cast<std::size_t>(k)];
      for (int row = 0; row < 2; ++row) head.w(row, 2 * k + row) = 25.0;
    }
    RuleSet rs;
    rs.schema = schema;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) rs.rules.push_back(Rule{{a, b}, a ^ b, 1.0});
    }
    return NpcModel(attr, npc::compile_rules(rs));
  }

  Sample sample(int a, int b, bool multi_valued = false) const {
    Sample s;
    s.features = {a == 0 ? 1.0 : 0.0, a == 1 ? 1.0 : 0.0, b == 0 ? 1.0 : 0.0,
                  b == 1 ? 1.0 : 0.0};
    s.class_label = a ^ b;
    if (multi_valued) {
      s.attribute_targets = {{0.5, 0.5}, {0.0, 0.0}};
      s.attribute_targets[1][static_cast<std::size_t>(b)] = 1.0;
    } else {
      s.attribute_targets = {{0.0, 0.0}, {0.0, 0.0}};
      s.attribute_targets[0][static_cast<std::size_t>(a)] = 1.0;
      s.attribute_targets[1][static_cast<std::size_t>(b)] = 1.0;
    }
    return s;
  }
};

TEST(AlignmentRate, OracleModelIsFullyAligned) {
  const AlignmentFixture fx;
  Dataset data;
  data.schema = fx.schema;
  data.feature_dim = 4;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) data.samples.push_back(fx.sample(a, b));
  }
  EXPECT_DOUBLE_EQ(npc::alignment_rate(fx.model, data), 1.0);
}

TEST(AlignmentRate, MultiValuedTargetAcceptsEitherSupportedValue) {
  const AlignmentFixture fx;
  Dataset data;
  data.schema = fx.schema;
  data.feature_dim = 4;
  data.samples.push_back(fx.sample(1, 0, /*multi_valued=*/true));
  // prediction picks a1=1; target support {0,1} covers it
  EXPECT_DOUBLE_EQ(npc::alignment_rate(fx.model, data), 1.0);
}

TEST(AlignmentRate, UndefinedWithoutCorrectPredictions) {
  const AlignmentFixture fx;
  Dataset data;
  data.schema = fx.schema;
  data.feature_dim = 4;
  Sample s = fx.sample(0, 1);
  s.class_label = 0;  // model will predict 1
  data.samples.push_back(s);
  EXPECT_THROW(npc::alignment_rate(fx.model, data), npc::UndefinedMetricError);
}

TEST(Counterfactual, AlreadyCorrectStaysPutWithSmallSteps) {
  const NpcModel model = mnist_npc();
  const auto init = one_hot_probs(model.schema(), {3, 5});
  CeConfig config;
  config.gamma = 0.005;
  config.iterations = 100;
  const CeResult result = npc::counterfactual_from_probabilities(model, init, 8, config);
  EXPECT_TRUE(result.corrected);
  EXPECT_EQ(result.first_corrected_iteration, 0);
  for (int k = 0; k < 2; ++k) {
    for (std::size_t j = 0; j < result.b[static_cast<std::size_t>(k)].size(); ++j) {
      EXPECT_NEAR(result.b[static_cast<std::size_t>(k)][j],
                  init[static_cast<std::size_t>(k)][j], 0.1);
    }
  }
}

TEST(Counterfactual, ConcentratesOnTheOnlySupportingAssignment) {
  AttributeSchema schema({"a1", "a2"}, {{"0", "1"}, {"0", "1"}}, {"0", "1"});
  RuleSet rs;
  rs.schema = schema;
  rs.rules = {Rule{{0, 0}, 0, 1.0}, Rule{{1, 1}, 0, 1.0}, Rule{{0, 1}, 1, 1.0}};
  const NpcModel model(AttributeModel(schema, 2), npc::compile_rules(rs));
  const std::vector<std::vector<double>> uniform{{0.5, 0.5}, {0.5, 0.5}};
  CeConfig config;
  config.gamma = 0.1;
  config.iterations = 100;
  config.record_iterates = true;
  const CeResult result = npc::counterfactual_from_probabilities(model, uniform, 1, config);
  EXPECT_TRUE(result.corrected);
  EXPECT_GE(result.b[0][0], 0.9);
  EXPECT_GE(result.b[1][1], 0.9);
  // every iterate stays feasible
  ASSERT_EQ(result.iterate_trace.size(), 101u);
  for (const auto& iterate : result.iterate_trace) {
    for (const auto& bk : iterate) {
      double total = 0.0;
      for (double x : bk) {
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, 1.0 + 1e-12);
        total += x;
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
  // the objective trace is recorded every iteration and never collapses
  ASSERT_EQ(result.objective_trace.size(), 101u);
  EXPECT_GT(result.objective_trace.back(), 0.8);
}

TEST(Counterfactual, ZeroIterationsReturnInitialization) {
  const NpcModel model = mnist_npc();
  const auto init = one_hot_probs(model.schema(), {3, 5});
  CeConfig config;
  config.iterations = 0;
  const CeResult at_target = npc::counterfactual_from_probabilities(model, init, 8, config);
  EXPECT_EQ(at_target.b, init);
  EXPECT_TRUE(at_target.corrected);
  // soften the vectors so an off-target class keeps positive mass
  auto soft = init;
  for (auto& bk : soft) {
    for (double& x : bk) x = 0.9 * x + 0.01;
  }
  const CeResult off_target = npc::counterfactual_from_probabilities(model, soft, 9, config);
  EXPECT_EQ(off_target.b, soft);
  EXPECT_FALSE(off_target.corrected);
  EXPECT_EQ(off_target.first_corrected_iteration, -1);
}

TEST(Counterfactual, UnsupportedTargetIsUncorrectable) {
  AttributeSchema schema({"a1", "a2"}, {{"0", "1"}, {"0", "1"}}, {"0", "1"});
  RuleSet rs;
  rs.schema = schema;
  rs.rules = {Rule{{0, 0}, 0, 1.0}, Rule{{1, 1}, 0, 1.0}};
  const NpcModel model(AttributeModel(schema, 2), npc::compile_rules(rs));
  const std::vector<std::vector<double>> uniform{{0.5, 0.5}, {0.5, 0.5}};
  EXPECT_THROW(npc::counterfactual_from_probabilities(model, uniform, 1, CeConfig{}),
               npc::UncorrectableError);
}

TEST(Counterfactual, InitialObjectiveEqualsPredictRawScore) {
  Rng rng(2718);
  for (int trial = 0; trial < 15; ++trial) {
    const AttributeSchema schema = testutil::random_schema(rng, 3, 3);
    const Circuit circuit = testutil::random_circuit(schema, rng);
    const NpcModel model(AttributeModel(schema, 2), circuit);
    std::vector<std::vector<double>> probs;
    for (int k = 0; k < schema.attribute_count(); ++k) {
      probs.push_back(testutil::random_simplex_point(rng, schema.cardinality(VariableId{k})));
    }
    const auto scores = npc::raw_class_scores(
        circuit, probs,
        std::vector<bool>(static_cast<std::size_t>(schema.attribute_count()), false));
    for (int y = 0; y < schema.class_count(); ++y) {
      if (scores[static_cast<std::size_t>(y)] <= 0.0) continue;
      CeConfig config;
      config.iterations = 0;
      const CeResult result = npc::counterfactual_from_probabilities(model, probs, y, config);
      EXPECT_TRUE(testutil::close_rel(result.objective_trace[0],
                                      scores[static_cast<std::size_t>(y)], 1e-9));
    }
  }
}

TEST(CorrectionRate, UndefinedWhenEverythingIsCorrect) {
  const AlignmentFixture fx;
  Dataset data;
  data.schema = fx.schema;
  data.feature_dim = 4;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) data.samples.push_back(fx.sample(a, b));
  }
  EXPECT_THROW(npc::correction_rate(fx.model, data, CeConfig{}), npc::UndefinedMetricError);
}

TEST(CorrectionRate, UnreachableTrueLabelsGiveRateZero) {
  AttributeSchema schema({"a1", "a2"}, {{"0", "1"}, {"0", "1"}}, {"0", "1"});
  RuleSet rs;
  rs.schema = schema;
  rs.rules = {Rule{{0, 0}, 0, 1.0}, Rule{{1, 1}, 0, 1.0}};
  const NpcModel model(AttributeModel(schema, 2), npc::compile_rules(rs));
  Dataset data;
  data.schema = schema;
  data.feature_dim = 2;
  Sample s;
  s.features = {0.0, 0.0};
  s.class_label = 1;  // never supported
  s.attribute_targets = {{1.0, 0.0}, {1.0, 0.0}};
  data.samples.push_back(s);
  EXPECT_DOUBLE_EQ(npc::correction_rate(model, data, CeConfig{}), 0.0);
}

}  // namespace
