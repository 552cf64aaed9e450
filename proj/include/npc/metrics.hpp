#pragma once

// Evaluation metrics for the three model parts: mean TV distance and mean
// concept accuracy for the attribute recognizer, mean likelihood for the
// circuit, classification accuracy for the composed model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include <json.hpp>

#include "npc/attribute_model.hpp"
#include "npc/cccp.hpp"
#include "npc/dataset.hpp"
#include "npc/errors.hpp"
#include "npc/npc_model.hpp"

namespace npc {

struct MetricsReport {
  double mean_tv_distance = 0.0;
  double mean_concept_accuracy = 0.0;
  double mean_likelihood = 0.0;
  double classification_accuracy = 0.0;
  std::optional<double> alignment_rate;
  std::optional<double> correction_rate;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"schema_version", 1},
                        {"mean_tv_distance", mean_tv_distance},
                        {"mean_concept_accuracy", mean_concept_accuracy},
                        {"mean_likelihood", mean_likelihood},
                        {"classification_accuracy", classification_accuracy}};
    if (alignment_rate) j["alignment_rate"] = *alignment_rate;
    if (correction_rate) j["correction_rate"] = *correction_rate;
    return j;
  }
};

inline double tv_distance(std::span<const double> p, std::span<const double> q) {
  double half_l1 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) half_l1 += std::abs(p[i] - q[i]);
  return 0.5 * half_l1;
}

inline double mean_tv_distance(const AttributeModel& model, const Dataset& dataset) {
  if (dataset.samples.empty()) throw Error("mean_tv_distance requires a nonempty dataset");
  const int k_count = model.schema().attribute_count();
  double total = 0.0;
  for (int k = 0; k < k_count; ++k) {
    double task = 0.0;
    for (const Sample& s : dataset.samples) {
      task += tv_distance(model.predict_one(k, s.features),
                          s.attribute_targets[static_cast<std::size_t>(k)]);
    }
    total += task / static_cast<double>(dataset.samples.size());
  }
  return total / static_cast<double>(k_count);
}

// Binarize the prediction at the target's support size n_k (ties toward the
// lower index), binarize the target by support, count per-value agreements.
inline double mean_concept_accuracy(const AttributeModel& model, const Dataset& dataset) {
  if (dataset.samples.empty()) throw Error("mean_concept_accuracy requires a nonempty dataset");
  const AttributeSchema& schema = model.schema();
  double total = 0.0;
  for (const Sample& s : dataset.samples) {
    int agreements = 0;
    int value_count = 0;
    for (int k = 0; k < schema.attribute_count(); ++k) {
      const auto& g = s.attribute_targets[static_cast<std::size_t>(k)];
      int n_k = 0;
      for (double x : g) n_k += x > 0.0;
      if (n_k < 1) throw Error("mean_concept_accuracy requires nonempty target support");
      const std::vector<double> p = model.predict_one(k, s.features);
      std::vector<int> order(p.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return p[static_cast<std::size_t>(a)] > p[static_cast<std::size_t>(b)];
      });
      std::vector<bool> top(p.size(), false);
      for (int j = 0; j < n_k; ++j) top[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] = true;
      for (std::size_t v = 0; v < p.size(); ++v) {
        agreements += top[v] == (g[v] > 0.0);
        ++value_count;
      }
    }
    total += static_cast<double>(agreements) / static_cast<double>(value_count);
  }
  return total / static_cast<double>(dataset.samples.size());
}

// Arithmetic mean of the joint probabilities of the sampled test rows.
inline double mean_likelihood(const Circuit& circuit, const SampledDataset& dataset) {
  if (dataset.rows.empty()) throw Error("mean_likelihood requires a nonempty dataset");
  if (dataset.schema != circuit.schema()) {
    throw SchemaMismatchError("dataset schema does not match circuit schema");
  }
  double total = 0.0;
  for (const SampledRow& row : dataset.rows) {
    total += circuit.evaluate(detail::row_assignment(circuit.schema(), row));
  }
  return total / static_cast<double>(dataset.rows.size());
}

inline double classification_accuracy(const NpcModel& model, const Dataset& dataset,
                                      std::uint64_t enumeration_cap = kDefaultEnumerationCap) {
  if (dataset.samples.empty()) {
    throw Error("classification_accuracy requires a nonempty dataset");
  }
  const ConditionalCache cache(model.circuit, enumeration_cap);
  int correct = 0;
  for (const Sample& s : dataset.samples) {
    const auto result =
        predict_from_probabilities(cache, model.attribute_model.predict(s.features));
    correct += result.predicted_class == s.class_label;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.samples.size());
}

}  // namespace npc
