#pragma once

// Multi-task attribute recognizer: one softmax-affine head per attribute over
// shared raw features, trained with the per-task log-cardinality-normalized
// cross-entropy loss so no attribute dominates.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "npc/dataset.hpp"
#include "npc/errors.hpp"
#include "npc/rng.hpp"
#include "npc/schema.hpp"
#include "npc/text_io.hpp"

namespace npc {

struct AffineHead {
  int outputs = 0;
  int inputs = 0;
  std::vector<double> weight;  // row-major, outputs x inputs
  std::vector<double> bias;    // outputs

  double& w(int row, int col) { return weight[static_cast<std::size_t>(row * inputs + col)]; }
  double w(int row, int col) const {
    return weight[static_cast<std::size_t>(row * inputs + col)];
  }
};

class AttributeModel {
 public:
  AttributeModel() = default;

  AttributeModel(AttributeSchema schema, int feature_dim)
      : schema_(std::move(schema)), feature_dim_(feature_dim) {
    if (feature_dim_ < 1) throw Error("feature dimension must be positive");
    heads_.reserve(static_cast<std::size_t>(schema_.attribute_count()));
    for (int k = 0; k < schema_.attribute_count(); ++k) {
      AffineHead head;
      head.outputs = schema_.cardinality(VariableId{k});
      head.inputs = feature_dim_;
      head.weight.assign(static_cast<std::size_t>(head.outputs * head.inputs), 0.0);
      head.bias.assign(static_cast<std::size_t>(head.outputs), 0.0);
      heads_.push_back(std::move(head));
    }
  }

  const AttributeSchema& schema() const { return schema_; }
  int feature_dim() const { return feature_dim_; }
  std::vector<AffineHead>& heads() { return heads_; }
  const std::vector<AffineHead>& heads() const { return heads_; }

  std::vector<double> logits(int k, std::span<const double> features) const {
    check_features(features);
    const AffineHead& head = heads_[static_cast<std::size_t>(k)];
    std::vector<double> out(head.bias);
    for (int row = 0; row < head.outputs; ++row) {
      double acc = out[static_cast<std::size_t>(row)];
      for (int col = 0; col < head.inputs; ++col) {
        acc += head.w(row, col) * features[static_cast<std::size_t>(col)];
      }
      out[static_cast<std::size_t>(row)] = acc;
    }
    return out;
  }

  // log Pr(A_k | x), max-subtracted for stability.
  std::vector<double> log_predict_one(int k, std::span<const double> features) const {
    std::vector<double> v = logits(k, features);
    double m = v[0];
    for (double x : v) m = std::max(m, x);
    double total = 0.0;
    for (double x : v) total += std::exp(x - m);
    const double log_total = m + std::log(total);
    for (double& x : v) x -= log_total;
    return v;
  }

  std::vector<double> predict_one(int k, std::span<const double> features) const {
    std::vector<double> v = log_predict_one(k, features);
    for (double& x : v) x = std::exp(x);
    return v;
  }

  // The K probability vectors f_k(x), each summing to 1.
  std::vector<std::vector<double>> predict(std::span<const double> features) const {
    std::vector<std::vector<double>> out;
    out.reserve(heads_.size());
    for (int k = 0; k < schema_.attribute_count(); ++k) {
      out.push_back(predict_one(k, features));
    }
    return out;
  }

 private:
  void check_features(std::span<const double> features) const {
    if (static_cast<int>(features.size()) != feature_dim_) {
      throw SchemaMismatchError("feature vector has dimension " +
                                std::to_string(features.size()) + ", model expects " +
                                std::to_string(feature_dim_));
    }
  }

  AttributeSchema schema_;
  int feature_dim_ = 0;
  std::vector<AffineHead> heads_;
};

// Mean multi-task loss: (1/K) sum_k (1/log q_k) * mean cross-entropy between
// g_k(x) and the predicted distribution. Uniform predictions score exactly 1.
inline double attribute_loss(const AttributeModel& model, const Dataset& dataset) {
  if (dataset.samples.empty()) throw Error("attribute_loss requires a nonempty dataset");
  if (dataset.schema != model.schema()) {
    throw SchemaMismatchError("dataset schema does not match model schema");
  }
  const int k_count = model.schema().attribute_count();
  double loss = 0.0;
  for (int k = 0; k < k_count; ++k) {
    const double normalizer =
        std::log(static_cast<double>(model.schema().cardinality(VariableId{k})));
    double task = 0.0;
    for (const Sample& s : dataset.samples) {
      const std::vector<double> log_p = model.log_predict_one(k, s.features);
      const auto& g = s.attribute_targets[static_cast<std::size_t>(k)];
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (g[j] > 0.0) task -= g[j] * log_p[j];
      }
    }
    loss += task / (normalizer * static_cast<double>(dataset.samples.size()));
  }
  return loss / static_cast<double>(k_count);
}

// Loss over a set of samples plus gradients w.r.t. every head parameter,
// laid out like the model's heads. Used by SGD and by finite-difference tests.
struct AttributeGradients {
  double loss = 0.0;
  std::vector<AffineHead> heads;  // gradient storage reusing the head layout
};

inline AttributeGradients attribute_loss_gradients(const AttributeModel& model,
                                                   std::span<const Sample* const> batch) {
  const int k_count = model.schema().attribute_count();
  AttributeGradients out;
  out.heads.reserve(static_cast<std::size_t>(k_count));
  for (int k = 0; k < k_count; ++k) {
    AffineHead g;
    g.outputs = model.heads()[static_cast<std::size_t>(k)].outputs;
    g.inputs = model.heads()[static_cast<std::size_t>(k)].inputs;
    g.weight.assign(static_cast<std::size_t>(g.outputs * g.inputs), 0.0);
    g.bias.assign(static_cast<std::size_t>(g.outputs), 0.0);
    out.heads.push_back(std::move(g));
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const Sample* s : batch) {
    for (int k = 0; k < k_count; ++k) {
      const double coef =
          inv_n /
          (static_cast<double>(k_count) *
           std::log(static_cast<double>(model.schema().cardinality(VariableId{k}))));
      const std::vector<double> log_p = model.log_predict_one(k, s->features);
      const auto& g = s->attribute_targets[static_cast<std::size_t>(k)];
      AffineHead& grad = out.heads[static_cast<std::size_t>(k)];
      for (std::size_t j = 0; j < g.size(); ++j) {
        const double p = std::exp(log_p[j]);
        if (g[j] > 0.0) out.loss -= coef * g[j] * log_p[j];
        const double delta = coef * (p - g[j]);  // d loss / d logit_j
        grad.bias[j] += delta;
        for (int col = 0; col < grad.inputs; ++col) {
          grad.weight[j * static_cast<std::size_t>(grad.inputs) +
                      static_cast<std::size_t>(col)] +=
              delta * s->features[static_cast<std::size_t>(col)];
        }
      }
    }
  }
  return out;
}

struct SgdConfig {
  double learning_rate = 0.1;
  int epochs = 50;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double lr_plateau_factor = 0.1;
  int plateau_patience = 10;

  void validate() const {
    if (!(learning_rate >= 0.0)) throw Error("learning_rate must be >= 0");
    if (epochs < 0) throw Error("epochs must be >= 0");
    if (batch_size < 1) throw Error("batch_size must be positive");
    if (!(lr_plateau_factor > 0.0) || lr_plateau_factor > 1.0) {
      throw Error("lr_plateau_factor must lie in (0, 1]");
    }
    if (plateau_patience < 1) throw Error("plateau_patience must be positive");
  }
};

struct AttributeTrainResult {
  AttributeModel model;
  std::vector<double> train_loss;       // per epoch
  std::vector<double> validation_loss;  // per epoch; empty without a validation set
};

// Mini-batch SGD on the multi-task loss, deterministic given config.seed.
// The learning rate drops by lr_plateau_factor when the monitored loss
// (validation when provided, else training) fails to improve for
// plateau_patience consecutive epochs.
inline AttributeTrainResult train_attributes(const Dataset& train, const Dataset* validation,
                                             const SgdConfig& config) {
  config.validate();
  if (train.samples.empty()) throw Error("train_attributes requires a nonempty train split");
  train.validate();
  if (validation != nullptr) validation->validate();

  AttributeTrainResult result;
  result.model = AttributeModel(train.schema, train.feature_dim);
  Rng rng(config.seed);
  double lr = config.learning_rate;
  double best_monitored = std::numeric_limits<double>::infinity();
  int stale_epochs = 0;

  std::vector<std::size_t> order(train.samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<const Sample*> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train.samples[order[i]]);
      const AttributeGradients grads = attribute_loss_gradients(result.model, batch);
      for (std::size_t k = 0; k < grads.heads.size(); ++k) {
        AffineHead& head = result.model.heads()[k];
        const AffineHead& g = grads.heads[k];
        for (std::size_t i = 0; i < head.weight.size(); ++i) head.weight[i] -= lr * g.weight[i];
        for (std::size_t i = 0; i < head.bias.size(); ++i) head.bias[i] -= lr * g.bias[i];
      }
    }
    const double train_loss = attribute_loss(result.model, train);
    if (!std::isfinite(train_loss)) {
      throw DivergedTrainingError("training loss became non-finite at epoch " +
                                  std::to_string(epoch));
    }
    result.train_loss.push_back(train_loss);
    double monitored = train_loss;
    if (validation != nullptr && !validation->samples.empty()) {
      const double validation_loss = attribute_loss(result.model, *validation);
      if (!std::isfinite(validation_loss)) {
        throw DivergedTrainingError("validation loss became non-finite at epoch " +
                                    std::to_string(epoch));
      }
      result.validation_loss.push_back(validation_loss);
      monitored = validation_loss;
    }
    if (monitored < best_monitored) {
      best_monitored = monitored;
      stale_epochs = 0;
    } else if (++stale_epochs >= config.plateau_patience) {
      lr *= config.lr_plateau_factor;
      stale_epochs = 0;
    }
  }
  return result;
}

// Checkpoint format, version 1: schema block, feature dimension, then one
// head per attribute with its weight rows and bias, round-trip exact.
inline constexpr int kAttributeModelFormatVersion = 1;

inline std::string write_attribute_model(const AttributeModel& model) {
  std::ostringstream out;
  out << "npc-attribute-model " << kAttributeModelFormatVersion << "\n";
  io::write_schema(out, model.schema());
  out << "feature_dim " << model.feature_dim() << "\n";
  for (std::size_t k = 0; k < model.heads().size(); ++k) {
    const AffineHead& head = model.heads()[k];
    out << "head " << k << " outputs " << head.outputs << " inputs " << head.inputs << "\n";
    for (int row = 0; row < head.outputs; ++row) {
      out << "w";
      for (int col = 0; col < head.inputs; ++col) {
        out << " " << io::format_double(head.w(row, col));
      }
      out << "\n";
    }
    out << "b";
    for (double b : head.bias) out << " " << io::format_double(b);
    out << "\n";
  }
  return out.str();
}

inline AttributeModel read_attribute_model(const std::string& text) {
  std::istringstream in(text);
  io::LineReader reader(in);
  auto header = reader.require("'npc-attribute-model <version>'");
  if (header.size() != 2 || header[0] != "npc-attribute-model") {
    throw ParseError("not an npc-attribute-model document");
  }
  if (io::parse_long(header[1], reader.where()) != kAttributeModelFormatVersion) {
    throw ParseError("unsupported attribute model version " + header[1]);
  }
  AttributeSchema schema = io::read_schema(reader);
  auto dim_line = reader.require("'feature_dim <d>'");
  if (dim_line.size() != 2 || dim_line[0] != "feature_dim") {
    throw ParseError(reader.where() + ": expected 'feature_dim <d>'");
  }
  AttributeModel model(schema, static_cast<int>(io::parse_long(dim_line[1], reader.where())));
  for (int k = 0; k < schema.attribute_count(); ++k) {
    AffineHead& head = model.heads()[static_cast<std::size_t>(k)];
    auto head_line = reader.require("'head <k> outputs <q> inputs <d>'");
    if (head_line.size() != 6 || head_line[0] != "head" ||
        io::parse_long(head_line[1], reader.where()) != k ||
        io::parse_long(head_line[3], reader.where()) != head.outputs ||
        io::parse_long(head_line[5], reader.where()) != head.inputs) {
      throw ParseError(reader.where() + ": malformed head record for attribute " +
                       std::to_string(k));
    }
    for (int row = 0; row < head.outputs; ++row) {
      auto w_line = reader.require("a weight row");
      if (w_line[0] != "w" || static_cast<int>(w_line.size()) != head.inputs + 1) {
        throw ParseError(reader.where() + ": malformed weight row");
      }
      for (int col = 0; col < head.inputs; ++col) {
        head.w(row, col) =
            io::parse_double(w_line[static_cast<std::size_t>(col + 1)], reader.where());
      }
    }
    auto b_line = reader.require("a bias row");
    if (b_line[0] != "b" || static_cast<int>(b_line.size()) != head.outputs + 1) {
      throw ParseError(reader.where() + ": malformed bias row");
    }
    for (int row = 0; row < head.outputs; ++row) {
      head.bias[static_cast<std::size_t>(row)] =
          io::parse_double(b_line[static_cast<std::size_t>(row + 1)], reader.where());
    }
  }
  return model;
}

inline void write_attribute_model_file(const AttributeModel& model,
                                       const std::filesystem::path& path) {
  io::write_text_file(path, write_attribute_model(model));
}

inline AttributeModel read_attribute_model_file(const std::filesystem::path& path) {
  return read_attribute_model(io::read_text_file(path));
}

}  // namespace npc
