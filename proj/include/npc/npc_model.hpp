#pragma once

// The composed model: an attribute recognizer feeding a circuit-based task
// predictor. Class scores follow the total-probability expansion
//   score(y) = sum over attribute assignments a of
//              Pr_w(Y=y | A=a) * prod_k Pr_theta(A_k=a_k | x),
// enumerated exactly; assignments with zero circuit marginal contribute zero.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "npc/assignments.hpp"
#include "npc/attribute_model.hpp"
#include "npc/circuit.hpp"
#include "npc/circuit_io.hpp"
#include "npc/dataset.hpp"
#include "npc/errors.hpp"
#include "npc/rng.hpp"
#include "npc/schema.hpp"
#include "npc/text_io.hpp"

namespace npc {

inline constexpr std::uint64_t kDefaultEnumerationCap = 1000000;

struct NpcModel {
  AttributeModel attribute_model;
  Circuit circuit;

  NpcModel(AttributeModel model, Circuit task_predictor)
      : attribute_model(std::move(model)), circuit(std::move(task_predictor)) {
    if (attribute_model.schema() != circuit.schema()) {
      throw SchemaMismatchError("attribute model and circuit use different schemas");
    }
    if (!circuit.root_scope_complete()) {
      throw SchemaMismatchError("task predictor circuit must cover Y and every attribute");
    }
  }

  const AttributeSchema& schema() const { return circuit.schema(); }
};

struct ClassPosterior {
  std::vector<double> probabilities;  // renormalized to sum 1
  double raw_mass = 0.0;              // pre-renormalization total, a support diagnostic
};

struct PredictResult {
  ClassPosterior posterior;
  int predicted_class = 0;
};

namespace enumeration {

// Mixed-radix odometer over the retained attributes, lexicographic order.
class AssignmentRange {
 public:
  AssignmentRange(const AttributeSchema& schema, const std::vector<bool>& excluded,
                  std::uint64_t cap) {
    std::uint64_t count = 1;
    for (int k = 0; k < schema.attribute_count(); ++k) {
      if (excluded[static_cast<std::size_t>(k)]) continue;
      retained_.push_back(k);
      cardinalities_.push_back(schema.cardinality(VariableId{k}));
      count *= static_cast<std::uint64_t>(cardinalities_.back());
      if (count > cap) {
        throw CapacityError("attribute assignment space exceeds the enumeration cap of " +
                            std::to_string(cap) + "; prune or exclude attributes");
      }
    }
    values_.assign(retained_.size(), 0);
    done_ = false;
  }

  bool done() const { return done_; }
  const std::vector<int>& retained() const { return retained_; }
  const std::vector<int>& values() const { return values_; }

  void advance() {
    std::size_t pos = retained_.size();
    while (pos > 0) {
      --pos;
      if (++values_[pos] < cardinalities_[pos]) return;
      values_[pos] = 0;
    }
    done_ = true;
  }

 private:
  std::vector<int> retained_;
  std::vector<int> cardinalities_;
  std::vector<int> values_;
  bool done_ = false;
};

}  // namespace enumeration

// Per-assignment circuit quantities: the attribute marginal f(0, a) and the
// conditional Pr_w(Y=y | A=a) for every joint attribute assignment, computed
// by the same two passes per assignment as the direct path but only once.
// Valid while the circuit's weights are unchanged; class scores contracted
// against the cache are bit-identical to direct enumeration.
class ConditionalCache {
 public:
  explicit ConditionalCache(const Circuit& circuit,
                            std::uint64_t enumeration_cap = kDefaultEnumerationCap)
      : indexer_(circuit.schema()), class_count_(circuit.schema().class_count()) {
    const AttributeSchema& schema = circuit.schema();
    if (schema.attribute_assignment_count(enumeration_cap) > enumeration_cap) {
      throw CapacityError("attribute assignment space exceeds the enumeration cap of " +
                          std::to_string(enumeration_cap) + "; prune or exclude attributes");
    }
    marginal_.assign(indexer_.count(), 0.0);
    conditional_.assign(indexer_.count() * static_cast<std::size_t>(class_count_), 0.0);
    LeafAssignment assignment = LeafAssignment::all_marginalized(schema);
    for (std::size_t a = 0; a < indexer_.count(); ++a) {
      for (int k = 0; k < schema.attribute_count(); ++k) {
        assignment.observe(VariableId{k}, indexer_.value_at(a, k));
      }
      assignment.marginalize(schema.class_variable());
      const double log_marginal = circuit.log_evaluate(assignment);
      if (log_marginal == kNegInf) continue;
      marginal_[a] = std::exp(log_marginal);
      for (int y = 0; y < class_count_; ++y) {
        assignment.observe(schema.class_variable(), y);
        const double log_joint = circuit.log_evaluate(assignment);
        if (log_joint == kNegInf) continue;
        conditional_[a * static_cast<std::size_t>(class_count_) + static_cast<std::size_t>(y)] =
            std::exp(log_joint - log_marginal);
      }
    }
  }

  const AssignmentIndexer& indexer() const { return indexer_; }
  int class_count() const { return class_count_; }
  bool supported(std::size_t a) const { return marginal_[a] > 0.0; }
  double marginal(std::size_t a) const { return marginal_[a]; }
  double conditional(std::size_t a, int y) const {
    return conditional_[a * static_cast<std::size_t>(class_count_) + static_cast<std::size_t>(y)];
  }

 private:
  AssignmentIndexer indexer_;
  int class_count_;
  std::vector<double> marginal_;
  std::vector<double> conditional_;
};

// Raw class scores contracted against a prebuilt conditional table.
inline std::vector<double> raw_class_scores(
    const ConditionalCache& cache, const std::vector<std::vector<double>>& attribute_probabilities) {
  const int k_count = cache.indexer().attribute_count();
  std::vector<double> scores(static_cast<std::size_t>(cache.class_count()), 0.0);
  for (std::size_t a = 0; a < cache.indexer().count(); ++a) {
    if (!cache.supported(a)) continue;
    double pi = 1.0;
    for (int k = 0; k < k_count; ++k) {
      pi *= attribute_probabilities[static_cast<std::size_t>(k)]
                                   [static_cast<std::size_t>(cache.indexer().value_at(a, k))];
    }
    if (pi == 0.0) continue;
    for (int y = 0; y < cache.class_count(); ++y) {
      const double conditional = cache.conditional(a, y);
      if (conditional == 0.0) continue;
      scores[static_cast<std::size_t>(y)] += pi * conditional;
    }
  }
  return scores;
}

// Raw Eq.-style class scores from explicit attribute probability vectors.
// Excluded attributes are marginalized inside the circuit and skipped in the
// product. Probability vectors may be unnormalized as long as entries are
// nonnegative; scores scale accordingly and the argmax is unaffected.
inline std::vector<double> raw_class_scores(
    const Circuit& circuit, const std::vector<std::vector<double>>& attribute_probabilities,
    const std::vector<bool>& excluded, std::uint64_t enumeration_cap = kDefaultEnumerationCap) {
  const AttributeSchema& schema = circuit.schema();
  const int k_count = schema.attribute_count();
  if (static_cast<int>(attribute_probabilities.size()) != k_count ||
      static_cast<int>(excluded.size()) != k_count) {
    throw SchemaMismatchError("attribute probability/exclusion arity mismatch");
  }
  int excluded_count = 0;
  for (int k = 0; k < k_count; ++k) {
    if (excluded[static_cast<std::size_t>(k)]) {
      ++excluded_count;
      continue;
    }
    if (static_cast<int>(attribute_probabilities[static_cast<std::size_t>(k)].size()) !=
        schema.cardinality(VariableId{k})) {
      throw SchemaMismatchError("probability vector length mismatch for attribute " +
                                std::to_string(k));
    }
  }
  if (excluded_count == k_count) throw Error("cannot exclude every attribute");

  const int class_count = schema.class_count();
  std::vector<double> scores(static_cast<std::size_t>(class_count), 0.0);
  for (enumeration::AssignmentRange range(schema, excluded, enumeration_cap); !range.done();
       range.advance()) {
    double pi = 1.0;
    for (std::size_t i = 0; i < range.retained().size(); ++i) {
      pi *= attribute_probabilities[static_cast<std::size_t>(range.retained()[i])]
                                   [static_cast<std::size_t>(range.values()[i])];
    }
    if (pi == 0.0) continue;
    LeafAssignment assignment = LeafAssignment::all_marginalized(schema);
    for (std::size_t i = 0; i < range.retained().size(); ++i) {
      assignment.observe(VariableId{range.retained()[i]}, range.values()[i]);
    }
    const double log_marginal = circuit.log_evaluate(assignment);
    if (log_marginal == kNegInf) continue;  // zero-support assignment
    for (int y = 0; y < class_count; ++y) {
      assignment.observe(schema.class_variable(), y);
      const double log_joint = circuit.log_evaluate(assignment);
      if (log_joint == kNegInf) continue;
      scores[static_cast<std::size_t>(y)] += pi * std::exp(log_joint - log_marginal);
    }
    assignment.marginalize(schema.class_variable());
  }
  return scores;
}

inline PredictResult result_from_scores(std::vector<double> scores) {
  PredictResult result;
  double total = 0.0;
  for (double s : scores) total += s;
  result.posterior.raw_mass = total;
  int best = 0;
  for (std::size_t y = 1; y < scores.size(); ++y) {
    if (scores[y] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(y);
  }
  result.predicted_class = best;
  if (total > 0.0) {
    for (double& s : scores) s /= total;
  }
  result.posterior.probabilities = std::move(scores);
  return result;
}

inline PredictResult predict_from_probabilities(
    const NpcModel& model, const std::vector<std::vector<double>>& attribute_probabilities,
    const std::vector<bool>& excluded, std::uint64_t enumeration_cap = kDefaultEnumerationCap) {
  return result_from_scores(
      raw_class_scores(model.circuit, attribute_probabilities, excluded, enumeration_cap));
}

inline PredictResult predict_from_probabilities(
    const ConditionalCache& cache, const std::vector<std::vector<double>>& attribute_probabilities) {
  return result_from_scores(raw_class_scores(cache, attribute_probabilities));
}

inline PredictResult predict_with_exclusion(const NpcModel& model,
                                            std::span<const double> features,
                                            const std::vector<bool>& excluded,
                                            std::uint64_t enumeration_cap = kDefaultEnumerationCap) {
  return predict_from_probabilities(model, model.attribute_model.predict(features), excluded,
                                    enumeration_cap);
}

inline PredictResult predict(const NpcModel& model, std::span<const double> features,
                             std::uint64_t enumeration_cap = kDefaultEnumerationCap) {
  const std::vector<bool> none(static_cast<std::size_t>(model.schema().attribute_count()), false);
  return predict_with_exclusion(model, features, none, enumeration_cap);
}

struct JointOptConfig {
  double eta_attribute = 0.01;
  double eta_circuit = 0.0;  // circuit frozen by default
  int epochs = 10;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double weight_floor = 1e-12;
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;

  void validate() const {
    if (!(eta_attribute >= 0.0) || !(eta_circuit >= 0.0)) {
      throw Error("learning rates must be >= 0");
    }
    if (epochs < 0) throw Error("epochs must be >= 0");
    if (batch_size < 1) throw Error("batch_size must be positive");
    if (!(weight_floor > 0.0) || weight_floor > 1e-6) {
      throw Error("weight_floor must lie in (0, 1e-6]");
    }
  }
};

// Loss and gradients of -log score(y_true) for one batch: gradients for every
// attribute head parameter and every circuit sum-edge weight.
struct JointGradients {
  double loss = 0.0;
  std::vector<AffineHead> attribute_heads;
  std::vector<double> circuit_weights;
};

// When circuit gradients are not needed, a prebuilt ConditionalCache for the
// model's circuit may be supplied to skip the per-assignment circuit passes.
inline JointGradients joint_loss_gradients(const NpcModel& model,
                                           std::span<const Sample* const> batch,
                                           std::uint64_t enumeration_cap = kDefaultEnumerationCap,
                                           bool need_circuit_gradients = true,
                                           const ConditionalCache* cache = nullptr) {
  const AttributeSchema& schema = model.schema();
  const int k_count = schema.attribute_count();
  JointGradients out;
  out.attribute_heads.reserve(static_cast<std::size_t>(k_count));
  for (int k = 0; k < k_count; ++k) {
    AffineHead g;
    g.outputs = schema.cardinality(VariableId{k});
    g.inputs = model.attribute_model.feature_dim();
    g.weight.assign(static_cast<std::size_t>(g.outputs * g.inputs), 0.0);
    g.bias.assign(static_cast<std::size_t>(g.outputs), 0.0);
    out.attribute_heads.push_back(std::move(g));
  }
  out.circuit_weights.assign(static_cast<std::size_t>(model.circuit.sum_edge_count()), 0.0);
  const std::vector<bool> none(static_cast<std::size_t>(k_count), false);
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  for (std::size_t sample_index = 0; sample_index < batch.size(); ++sample_index) {
    const Sample& sample = *batch[sample_index];
    const int y_true = sample.class_label;
    const auto probs = model.attribute_model.predict(sample.features);

    double score = 0.0;
    // t[k][j] = d score / d p_k(j); multilinearity gives score = sum_j p t
    std::vector<std::vector<double>> t(static_cast<std::size_t>(k_count));
    for (int k = 0; k < k_count; ++k) {
      t[static_cast<std::size_t>(k)].assign(
          static_cast<std::size_t>(schema.cardinality(VariableId{k})), 0.0);
    }
    std::vector<double> score_w_grad(
        static_cast<std::size_t>(need_circuit_gradients ? model.circuit.sum_edge_count() : 0),
        0.0);

    std::size_t flat_index = 0;
    for (enumeration::AssignmentRange range(schema, none, enumeration_cap); !range.done();
         range.advance(), ++flat_index) {
      CircuitPass marginal_pass;
      CircuitPass joint_pass;
      double conditional = 0.0;
      if (cache != nullptr && !need_circuit_gradients) {
        if (!cache->supported(flat_index)) continue;
        conditional = cache->conditional(flat_index, y_true);
      } else {
        LeafAssignment assignment = LeafAssignment::all_marginalized(schema);
        for (int k = 0; k < k_count; ++k) {
          assignment.observe(VariableId{k}, range.values()[static_cast<std::size_t>(k)]);
        }
        marginal_pass = need_circuit_gradients
                            ? model.circuit.evaluate_with_edge_derivatives(assignment)
                            : CircuitPass{model.circuit.log_evaluate(assignment), {}};
        if (marginal_pass.log_value == kNegInf) continue;
        assignment.observe(schema.class_variable(), y_true);
        joint_pass = need_circuit_gradients
                         ? model.circuit.evaluate_with_edge_derivatives(assignment)
                         : CircuitPass{model.circuit.log_evaluate(assignment), {}};
        conditional = joint_pass.log_value == kNegInf
                          ? 0.0
                          : std::exp(joint_pass.log_value - marginal_pass.log_value);
      }

      // prefix/suffix products around each attribute position
      std::vector<double> prefix(static_cast<std::size_t>(k_count) + 1, 1.0);
      for (int k = 0; k < k_count; ++k) {
        prefix[static_cast<std::size_t>(k) + 1] =
            prefix[static_cast<std::size_t>(k)] *
            probs[static_cast<std::size_t>(k)]
                 [static_cast<std::size_t>(range.values()[static_cast<std::size_t>(k)])];
      }
      std::vector<double> suffix(static_cast<std::size_t>(k_count) + 1, 1.0);
      for (int k = k_count - 1; k >= 0; --k) {
        suffix[static_cast<std::size_t>(k)] =
            suffix[static_cast<std::size_t>(k) + 1] *
            probs[static_cast<std::size_t>(k)]
                 [static_cast<std::size_t>(range.values()[static_cast<std::size_t>(k)])];
      }
      const double pi = prefix[static_cast<std::size_t>(k_count)];
      if (conditional > 0.0) {
        score += conditional * pi;
        for (int k = 0; k < k_count; ++k) {
          t[static_cast<std::size_t>(k)]
           [static_cast<std::size_t>(range.values()[static_cast<std::size_t>(k)])] +=
              conditional * prefix[static_cast<std::size_t>(k)] *
              suffix[static_cast<std::size_t>(k) + 1];
        }
      }
      if (need_circuit_gradients && pi > 0.0) {
        // d conditional / d w_e via the quotient rule in log space
        for (int e = 0; e < model.circuit.sum_edge_count(); ++e) {
          const double led_joint = joint_pass.log_edge_derivative[static_cast<std::size_t>(e)];
          const double led_marginal =
              marginal_pass.log_edge_derivative[static_cast<std::size_t>(e)];
          double d_conditional = 0.0;
          if (led_joint != kNegInf) {
            d_conditional += std::exp(led_joint - marginal_pass.log_value);
          }
          if (led_marginal != kNegInf && joint_pass.log_value != kNegInf) {
            d_conditional -= std::exp(joint_pass.log_value + led_marginal -
                                      2.0 * marginal_pass.log_value);
          }
          if (d_conditional != 0.0) {
            score_w_grad[static_cast<std::size_t>(e)] += pi * d_conditional;
          }
        }
      }
    }

    if (score <= 0.0) {
      throw InfiniteLossError("sample " + std::to_string(sample_index) +
                              " has zero probability for its true label");
    }
    out.loss -= inv_n * std::log(score);

    for (int k = 0; k < k_count; ++k) {
      AffineHead& grad = out.attribute_heads[static_cast<std::size_t>(k)];
      const auto& p = probs[static_cast<std::size_t>(k)];
      const auto& tk = t[static_cast<std::size_t>(k)];
      for (std::size_t i = 0; i < p.size(); ++i) {
        // d(-log score)/d logit_i = p_i - p_i t_i / score
        const double delta = inv_n * (p[i] - p[i] * tk[i] / score);
        grad.bias[i] += delta;
        for (int col = 0; col < grad.inputs; ++col) {
          grad.weight[i * static_cast<std::size_t>(grad.inputs) +
                      static_cast<std::size_t>(col)] +=
              delta * sample.features[static_cast<std::size_t>(col)];
        }
      }
    }
    if (need_circuit_gradients) {
      for (std::size_t e = 0; e < score_w_grad.size(); ++e) {
        out.circuit_weights[e] -= inv_n * score_w_grad[e] / score;
      }
    }
  }
  return out;
}

struct JointTrainResult {
  NpcModel model;
  std::vector<double> train_loss;  // running mean loss per epoch
};

// Mini-batch joint training: SGD on the attribute parameters, projected
// gradient descent on the circuit weights (positivity floor, then per-node
// renormalization). Deterministic given config.seed.
inline JointTrainResult joint_optimize(const NpcModel& model, const Dataset& dataset,
                                       const JointOptConfig& config) {
  config.validate();
  if (dataset.samples.empty()) throw Error("joint_optimize requires a nonempty dataset");
  if (dataset.schema != model.schema()) {
    throw SchemaMismatchError("dataset schema does not match model schema");
  }
  // fail fast if the assignment space is too large
  (void)enumeration::AssignmentRange(
      model.schema(),
      std::vector<bool>(static_cast<std::size_t>(model.schema().attribute_count()), false),
      config.enumeration_cap);

  JointTrainResult result{model, {}};
  const bool update_circuit = config.eta_circuit > 0.0;
  // with the circuit frozen its conditional table is valid across all epochs
  std::optional<ConditionalCache> frozen_cache;
  if (!update_circuit) frozen_cache.emplace(result.model.circuit, config.enumeration_cap);
  Rng rng(config.seed);
  std::vector<std::size_t> order(dataset.samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<const Sample*> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(&dataset.samples[order[i]]);
      const JointGradients grads =
          joint_loss_gradients(result.model, batch, config.enumeration_cap, update_circuit,
                               frozen_cache ? &*frozen_cache : nullptr);
      if (!std::isfinite(grads.loss)) {
        throw DivergedTrainingError("joint loss became non-finite at epoch " +
                                    std::to_string(epoch));
      }
      epoch_loss += grads.loss;
      ++batches;
      for (std::size_t k = 0; k < grads.attribute_heads.size(); ++k) {
        AffineHead& head = result.model.attribute_model.heads()[k];
        const AffineHead& g = grads.attribute_heads[k];
        for (std::size_t i = 0; i < head.weight.size(); ++i) {
          head.weight[i] -= config.eta_attribute * g.weight[i];
        }
        for (std::size_t i = 0; i < head.bias.size(); ++i) {
          head.bias[i] -= config.eta_attribute * g.bias[i];
        }
      }
      if (update_circuit) {
        Circuit& circuit = result.model.circuit;
        std::vector<double> weights = circuit.sum_weights_flat();
        for (std::size_t e = 0; e < weights.size(); ++e) {
          weights[e] -= config.eta_circuit * grads.circuit_weights[e];
        }
        circuit.set_sum_weights_flat(weights);
        for (std::size_t id = 0; id < circuit.nodes().size(); ++id) {
          const Node& node = circuit.nodes()[id];
          if (node.kind != NodeKind::kSum) continue;
          std::vector<double> node_weights = node.weights;
          for (double& w : node_weights) w = std::max(w, config.weight_floor);
          normalize_with_floor(node_weights, config.weight_floor);
          circuit.set_sum_weights(static_cast<int>(id), std::move(node_weights));
        }
      }
    }
    result.train_loss.push_back(epoch_loss / static_cast<double>(batches));
  }
  return result;
}

// Model bundle directory: manifest + attribute checkpoint + circuit file.
inline constexpr int kBundleFormatVersion = 1;

inline void write_model_bundle(const NpcModel& model, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  nlohmann::json manifest = {{"format", "npc-bundle"},
                             {"version", kBundleFormatVersion},
                             {"schema", io::schema_to_json(model.schema())},
                             {"attribute_model", "attribute_model.txt"},
                             {"circuit", "circuit.txt"}};
  io::write_text_file(directory / "manifest.json", manifest.dump(2) + "\n");
  write_attribute_model_file(model.attribute_model, directory / "attribute_model.txt");
  write_circuit_file(model.circuit, directory / "circuit.txt");
}

inline NpcModel read_model_bundle(const std::filesystem::path& directory) {
  const auto manifest_path = directory / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw IoError("missing model bundle manifest: " + manifest_path.string());
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(io::read_text_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bad bundle manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "npc-bundle" ||
      manifest.value("version", 0) != kBundleFormatVersion) {
    throw ParseError("unsupported model bundle format");
  }
  const auto model_path = directory / manifest.at("attribute_model").get<std::string>();
  const auto circuit_path = directory / manifest.at("circuit").get<std::string>();
  if (!std::filesystem::exists(model_path)) {
    throw IoError("missing bundle artifact: " + model_path.string());
  }
  if (!std::filesystem::exists(circuit_path)) {
    throw IoError("missing bundle artifact: " + circuit_path.string());
  }
  return NpcModel(read_attribute_model_file(model_path), read_circuit_file(circuit_path));
}

}  // namespace npc
