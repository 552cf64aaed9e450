#pragma once

// Most probable explanations by exhaustive search over attribute assignments,
// and counterfactual explanations by projected gradient ascent on the
// target-class score with exact sort-based simplex projection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "npc/dataset.hpp"
#include "npc/errors.hpp"
#include "npc/npc_model.hpp"

namespace npc {

// Euclidean projection onto the probability simplex: sort descending, count
// the active support, shift by lambda, clip at zero.
inline std::vector<double> simplex_project(std::span<const double> v) {
  if (v.empty()) throw Error("cannot project an empty vector");
  for (double x : v) {
    if (!std::isfinite(x)) throw Error("simplex projection requires finite input");
  }
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<double>());
  int rho = 0;
  double cumulative = 0.0;
  double rho_sum = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    if (u[j] > (cumulative - 1.0) / static_cast<double>(j + 1)) {
      rho = static_cast<int>(j + 1);
      rho_sum = cumulative;
    }
  }
  const double lambda = (1.0 - rho_sum) / static_cast<double>(rho);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::max(v[i] + lambda, 0.0);
  }
  return out;
}

struct MpeResult {
  std::vector<int> assignment;  // per-attribute value index
  double contribution = 0.0;    // the maximized score term
};

// Exhaustive argmax of Pr_w(Y=y_hat | A=a) * prod_k p_k(a_k) over the cached
// conditional table. Zero-marginal assignments are skipped; ties break toward
// the lexicographically smallest assignment tuple.
inline MpeResult mpe_cached(const ConditionalCache& cache,
                            const std::vector<std::vector<double>>& probabilities,
                            int predicted_class) {
  const AssignmentIndexer& indexer = cache.indexer();
  MpeResult best;
  bool found = false;
  for (std::size_t a = 0; a < indexer.count(); ++a) {
    if (!cache.supported(a)) continue;
    double pi = 1.0;
    for (int k = 0; k < indexer.attribute_count(); ++k) {
      pi *= probabilities[static_cast<std::size_t>(k)]
                         [static_cast<std::size_t>(indexer.value_at(a, k))];
    }
    if (pi <= 0.0) continue;
    const double conditional = cache.conditional(a, predicted_class);
    if (conditional <= 0.0) continue;
    const double term = pi * conditional;
    if (!found || term > best.contribution) {
      best.contribution = term;
      best.assignment = indexer.values(a);
      found = true;
    }
  }
  if (!found) {
    throw NoExplanationError("every attribute assignment scores zero for class " +
                             std::to_string(predicted_class));
  }
  return best;
}

inline MpeResult mpe_from_probabilities(const NpcModel& model,
                                        const std::vector<std::vector<double>>& probabilities,
                                        int predicted_class,
                                        std::uint64_t enumeration_cap = kDefaultEnumerationCap) {
  model.schema().check_value(model.schema().class_variable(), predicted_class);
  return mpe_cached(ConditionalCache(model.circuit, enumeration_cap), probabilities,
                    predicted_class);
}

inline MpeResult mpe(const NpcModel& model, std::span<const double> features, int predicted_class,
                     std::uint64_t enumeration_cap = kDefaultEnumerationCap) {
  return mpe_from_probabilities(model, model.attribute_model.predict(features), predicted_class,
                                enumeration_cap);
}

// Fraction of correctly predicted samples whose MPE lies inside the
// ground-truth support of every attribute.
inline double alignment_rate(const NpcModel& model, const Dataset& dataset,
                             std::uint64_t enumeration_cap = kDefaultEnumerationCap) {
  if (dataset.samples.empty()) throw Error("alignment_rate requires a nonempty dataset");
  if (dataset.schema != model.schema()) {
    throw SchemaMismatchError("dataset schema does not match model schema");
  }
  const ConditionalCache cache(model.circuit, enumeration_cap);
  int correct = 0;
  int aligned = 0;
  for (const Sample& sample : dataset.samples) {
    const auto probabilities = model.attribute_model.predict(sample.features);
    const PredictResult prediction = predict_from_probabilities(cache, probabilities);
    if (prediction.predicted_class != sample.class_label) continue;
    ++correct;
    const MpeResult explanation =
        mpe_cached(cache, probabilities, prediction.predicted_class);
    bool ok = true;
    for (int k = 0; k < model.schema().attribute_count(); ++k) {
      const int value = explanation.assignment[static_cast<std::size_t>(k)];
      if (!(sample.attribute_targets[static_cast<std::size_t>(k)]
                                    [static_cast<std::size_t>(value)] > 0.0)) {
        ok = false;
        break;
      }
    }
    aligned += ok;
  }
  if (correct == 0) {
    throw UndefinedMetricError("alignment rate undefined: no correctly predicted samples");
  }
  return static_cast<double>(aligned) / static_cast<double>(correct);
}

struct CeConfig {
  double gamma = 0.01;
  int iterations = 100;
  bool record_iterates = false;  // keep every b^(t) for feasibility checks

  void validate() const {
    if (!(gamma > 0.0)) throw Error("gamma must be positive");
    if (iterations < 0) throw Error("iterations must be >= 0");
  }
};

struct CeResult {
  std::vector<std::vector<double>> b;       // final probability vectors
  std::vector<double> objective_trace;      // Pr_b(Y=y|x), initial value plus one per iteration
  bool corrected = false;                   // argmax under the final b equals the target
  int first_corrected_iteration = -1;       // -1 if the argmax never reached the target
  std::vector<std::vector<std::vector<double>>> iterate_trace;  // when record_iterates
};

namespace detail {

struct CePass {
  std::vector<double> scores;                   // raw score per class
  std::vector<std::vector<double>> gradient;    // d score(target) / d b_k(j)
};

inline CePass ce_pass(const ConditionalCache& cache, const std::vector<std::vector<double>>& b,
                      int target) {
  const AssignmentIndexer& indexer = cache.indexer();
  const int k_count = indexer.attribute_count();
  CePass pass;
  pass.scores.assign(static_cast<std::size_t>(cache.class_count()), 0.0);
  pass.gradient.resize(static_cast<std::size_t>(k_count));
  for (int k = 0; k < k_count; ++k) {
    pass.gradient[static_cast<std::size_t>(k)].assign(b[static_cast<std::size_t>(k)].size(),
                                                      0.0);
  }
  std::vector<double> prefix(static_cast<std::size_t>(k_count) + 1, 1.0);
  std::vector<double> suffix(static_cast<std::size_t>(k_count) + 1, 1.0);
  for (std::size_t a = 0; a < indexer.count(); ++a) {
    if (!cache.supported(a)) continue;
    for (int k = 0; k < k_count; ++k) {
      prefix[static_cast<std::size_t>(k) + 1] =
          prefix[static_cast<std::size_t>(k)] *
          b[static_cast<std::size_t>(k)][static_cast<std::size_t>(indexer.value_at(a, k))];
    }
    for (int k = k_count - 1; k >= 0; --k) {
      suffix[static_cast<std::size_t>(k)] =
          suffix[static_cast<std::size_t>(k) + 1] *
          b[static_cast<std::size_t>(k)][static_cast<std::size_t>(indexer.value_at(a, k))];
    }
    const double pi = prefix[static_cast<std::size_t>(k_count)];
    for (int y = 0; y < cache.class_count(); ++y) {
      const double conditional = cache.conditional(a, y);
      if (conditional == 0.0) continue;
      if (pi > 0.0) {
        pass.scores[static_cast<std::size_t>(y)] += conditional * pi;
      }
      if (y == target) {
        for (int k = 0; k < k_count; ++k) {
          pass.gradient[static_cast<std::size_t>(k)]
                       [static_cast<std::size_t>(indexer.value_at(a, k))] +=
              conditional * prefix[static_cast<std::size_t>(k)] *
              suffix[static_cast<std::size_t>(k) + 1];
        }
      }
    }
  }
  return pass;
}

inline int argmax_lowest(const std::vector<double>& scores) {
  int best = 0;
  for (std::size_t y = 1; y < scores.size(); ++y) {
    if (scores[y] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(y);
  }
  return best;
}

}  // namespace detail

// Projected gradient ascent on log Pr_b(Y=target|x), initialized at the given
// probability vectors, for a fixed number of iterations (no early stopping;
// the first iteration whose argmax hits the target is reported separately).
inline CeResult counterfactual_cached(const ConditionalCache& cache,
                                      const std::vector<std::vector<double>>& initial,
                                      int target_class, const CeConfig& config) {
  config.validate();
  const int k_count = cache.indexer().attribute_count();
  CeResult result;
  result.b = initial;
  detail::CePass pass = detail::ce_pass(cache, result.b, target_class);
  double objective = pass.scores[static_cast<std::size_t>(target_class)];
  if (objective <= 0.0) {
    throw UncorrectableError("no attribute assignment supports class " +
                             std::to_string(target_class) + " at initialization");
  }
  result.objective_trace.push_back(objective);
  if (detail::argmax_lowest(pass.scores) == target_class) result.first_corrected_iteration = 0;
  if (config.record_iterates) result.iterate_trace.push_back(result.b);

  for (int t = 1; t <= config.iterations; ++t) {
    if (objective > 0.0) {
      for (int k = 0; k < k_count; ++k) {
        auto& bk = result.b[static_cast<std::size_t>(k)];
        std::vector<double> step(bk.size());
        for (std::size_t j = 0; j < bk.size(); ++j) {
          step[j] = bk[j] + config.gamma *
                                pass.gradient[static_cast<std::size_t>(k)][j] / objective;
        }
        bk = simplex_project(step);
      }
    }
    pass = detail::ce_pass(cache, result.b, target_class);
    objective = pass.scores[static_cast<std::size_t>(target_class)];
    result.objective_trace.push_back(objective);
    if (result.first_corrected_iteration < 0 &&
        detail::argmax_lowest(pass.scores) == target_class) {
      result.first_corrected_iteration = t;
    }
    if (config.record_iterates) result.iterate_trace.push_back(result.b);
  }
  result.corrected = detail::argmax_lowest(pass.scores) == target_class;
  return result;
}

inline CeResult counterfactual_from_probabilities(
    const NpcModel& model, const std::vector<std::vector<double>>& initial, int target_class,
    const CeConfig& config, std::uint64_t enumeration_cap = kDefaultEnumerationCap) {
  model.schema().check_value(model.schema().class_variable(), target_class);
  return counterfactual_cached(ConditionalCache(model.circuit, enumeration_cap), initial,
                               target_class, config);
}

inline CeResult counterfactual(const NpcModel& model, std::span<const double> features,
                               int target_class, const CeConfig& config,
                               std::uint64_t enumeration_cap = kDefaultEnumerationCap) {
  return counterfactual_from_probabilities(model, model.attribute_model.predict(features),
                                           target_class, config, enumeration_cap);
}

// Fraction of initially mispredicted samples whose counterfactual explanation
// flips the argmax to the true label. Samples whose label has no support
// count as not corrected.
inline double correction_rate(const NpcModel& model, const Dataset& dataset,
                              const CeConfig& config,
                              std::uint64_t enumeration_cap = kDefaultEnumerationCap) {
  if (dataset.samples.empty()) throw Error("correction_rate requires a nonempty dataset");
  if (dataset.schema != model.schema()) {
    throw SchemaMismatchError("dataset schema does not match model schema");
  }
  const ConditionalCache cache(model.circuit, enumeration_cap);
  int incorrect = 0;
  int corrected = 0;
  for (const Sample& sample : dataset.samples) {
    const auto probabilities = model.attribute_model.predict(sample.features);
    const PredictResult prediction = predict_from_probabilities(cache, probabilities);
    if (prediction.predicted_class == sample.class_label) continue;
    ++incorrect;
    try {
      const CeResult ce =
          counterfactual_cached(cache, probabilities, sample.class_label, config);
      corrected += ce.corrected;
    } catch (const UncorrectableError&) {
      // unreachable target label, counts as not corrected
    }
  }
  if (incorrect == 0) {
    throw UndefinedMetricError("correction rate undefined: no incorrectly predicted samples");
  }
  return static_cast<double>(corrected) / static_cast<double>(incorrect);
}

}  // namespace npc
