#pragma once

// Synthetic dataset generator. Each latent state fixes every attribute's true
// value; the class label is a deterministic function of those values (digit
// sum or a seeded random map), so the world forms an exact X -> A -> Y chain
// whose tables accompany the emitted splits. Annotation noise epsilon mixes
// each ground-truth probability vector g_k with the uniform distribution;
// features are the concatenated one-hot encodings plus Gaussian noise.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "npc/dataset.hpp"
#include "npc/errors.hpp"
#include "npc/rng.hpp"
#include "npc/schema.hpp"
#include "npc/world.hpp"

namespace npc {

enum class GeneratorKind { kMnistAdditionLike, kRuleWorld };

struct SyntheticSpec {
  GeneratorKind kind = GeneratorKind::kMnistAdditionLike;
  // rule_world shape; mnist_addition_like fixes two ten-valued attributes
  std::vector<int> cardinalities = {10, 10};
  std::string class_rule = "sum";  // "sum" or "random_map"
  int class_count = 0;             // random_map only
  double noise_epsilon = 0.0;
  double feature_sigma = 0.1;
  int rows = 10000;
  std::uint64_t seed = 0;

  void validate() const {
    if (kind == GeneratorKind::kRuleWorld) {
      if (cardinalities.empty()) throw Error("rule_world requires at least one attribute");
      for (int q : cardinalities) {
        if (q < 2) throw Error("attribute cardinalities must be >= 2");
      }
      if (class_rule != "sum" && class_rule != "random_map") {
        throw Error("class_rule must be 'sum' or 'random_map'");
      }
      if (class_rule == "random_map" && class_count < 2) {
        throw Error("random_map requires class_count >= 2");
      }
    }
    if (!(noise_epsilon >= 0.0) || noise_epsilon >= 1.0) {
      throw Error("noise_epsilon must lie in [0, 1)");
    }
    if (!(feature_sigma >= 0.0)) throw Error("feature_sigma must be >= 0");
    if (rows < 10) throw Error("rows must be >= 10 to form 8:1:1 splits");
  }

  static SyntheticSpec from_json(const nlohmann::json& j) {
    SyntheticSpec spec;
    const std::string kind = j.value("kind", "mnist_addition_like");
    if (kind == "mnist_addition_like") {
      spec.kind = GeneratorKind::kMnistAdditionLike;
    } else if (kind == "rule_world") {
      spec.kind = GeneratorKind::kRuleWorld;
    } else {
      throw ParseError("unknown generator kind '" + kind + "'");
    }
    if (j.contains("cardinalities")) {
      spec.cardinalities = j.at("cardinalities").get<std::vector<int>>();
    }
    spec.class_rule = j.value("class_rule", std::string("sum"));
    spec.class_count = j.value("class_count", 0);
    spec.noise_epsilon = j.value("noise_epsilon", 0.0);
    spec.feature_sigma = j.value("feature_sigma", 0.1);
    spec.rows = j.value("rows", 10000);
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.validate();
    return spec;
  }
};

struct SyntheticData {
  Dataset train;
  Dataset validation;
  Dataset test;
  DiscreteWorld world;
};

namespace synthetic_detail {

inline AttributeSchema make_schema(const SyntheticSpec& spec, int class_count) {
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> values;
  if (spec.kind == GeneratorKind::kMnistAdditionLike) {
    names = {"Number-First", "Number-Second"};
    std::vector<std::string> digits;
    for (int d = 0; d < 10; ++d) digits.push_back(std::to_string(d));
    values = {digits, digits};
  } else {
    for (std::size_t k = 0; k < spec.cardinalities.size(); ++k) {
      names.push_back("attr" + std::to_string(k + 1));
      std::vector<std::string> vals;
      for (int v = 0; v < spec.cardinalities[k]; ++v) vals.push_back("v" + std::to_string(v));
      values.push_back(std::move(vals));
    }
  }
  std::vector<std::string> classes;
  for (int c = 0; c < class_count; ++c) classes.push_back(std::to_string(c));
  return AttributeSchema(std::move(names), std::move(values), std::move(classes));
}

}  // namespace synthetic_detail

// Deterministic given spec.seed; byte-identical reruns.
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::vector<int> cards = spec.kind == GeneratorKind::kMnistAdditionLike
                                     ? std::vector<int>{10, 10}
                                     : spec.cardinalities;
  const int k_count = static_cast<int>(cards.size());

  // the class map over joint assignments
  int class_count = 0;
  int max_sum = 0;
  for (int q : cards) max_sum += q - 1;
  const bool sum_rule = spec.kind == GeneratorKind::kMnistAdditionLike || spec.class_rule == "sum";
  class_count = sum_rule ? max_sum + 1 : spec.class_count;

  const AttributeSchema schema = synthetic_detail::make_schema(spec, class_count);
  const AssignmentIndexer indexer(schema);
  Rng rng(spec.seed);
  Rng map_rng = rng.fork(1);
  std::vector<int> class_map(indexer.count());
  for (std::size_t a = 0; a < indexer.count(); ++a) {
    if (sum_rule) {
      int total = 0;
      for (int v : indexer.values(a)) total += v;
      class_map[a] = total;
    } else {
      class_map[a] =
          static_cast<int>(map_rng.uniform_below(static_cast<std::uint64_t>(class_count)));
    }
  }

  int feature_dim = 0;
  for (int q : cards) feature_dim += q;

  // world tables: uniform states = joint assignments, clean one-hot channels,
  // deterministic class rows
  SyntheticData out;
  out.world.schema = schema;
  out.world.px.assign(indexer.count(), 1.0 / static_cast<double>(indexer.count()));
  out.world.channel.resize(static_cast<std::size_t>(k_count));
  out.world.py_given_a.assign(indexer.count(),
                              std::vector<double>(static_cast<std::size_t>(class_count), 0.0));
  for (std::size_t a = 0; a < indexer.count(); ++a) {
    const std::vector<int> values = indexer.values(a);
    std::vector<double> features(static_cast<std::size_t>(feature_dim), 0.0);
    int offset = 0;
    for (int k = 0; k < k_count; ++k) {
      std::vector<double> row(static_cast<std::size_t>(cards[static_cast<std::size_t>(k)]), 0.0);
      row[static_cast<std::size_t>(values[static_cast<std::size_t>(k)])] = 1.0;
      out.world.channel[static_cast<std::size_t>(k)].push_back(std::move(row));
      features[static_cast<std::size_t>(offset + values[static_cast<std::size_t>(k)])] = 1.0;
      offset += cards[static_cast<std::size_t>(k)];
    }
    out.world.py_given_a[a][static_cast<std::size_t>(class_map[a])] = 1.0;
    out.world.state_features.push_back(std::move(features));
  }
  out.world.validate();

  // dataset rows
  const int n_train = spec.rows * 8 / 10;
  const int n_validation = spec.rows / 10;
  const int n_test = spec.rows - n_train - n_validation;
  Rng row_rng = rng.fork(2);
  const auto fill = [&](Dataset& dataset, Split split, int n) {
    dataset.schema = schema;
    dataset.feature_dim = feature_dim;
    dataset.split = split;
    dataset.samples.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const std::size_t state = row_rng.uniform_below(indexer.count());
      const std::vector<int> values = indexer.values(state);
      Sample sample;
      sample.class_label = class_map[state];
      sample.features = out.world.state_features[state];
      for (double& f : sample.features) f += row_rng.gaussian(0.0, spec.feature_sigma);
      for (int k = 0; k < k_count; ++k) {
        const int q = cards[static_cast<std::size_t>(k)];
        std::vector<double> g(static_cast<std::size_t>(q), spec.noise_epsilon / q);
        g[static_cast<std::size_t>(values[static_cast<std::size_t>(k)])] +=
            1.0 - spec.noise_epsilon;
        sample.attribute_targets.push_back(std::move(g));
      }
      dataset.samples.push_back(std::move(sample));
    }
  };
  fill(out.train, Split::kTrain, n_train);
  fill(out.validation, Split::kValidation, n_validation);
  fill(out.test, Split::kTest, n_test);
  return out;
}

}  // namespace npc
