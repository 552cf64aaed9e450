#pragma once

// Fully specified finite generative worlds and the compositional error bound
// checker. A world is a chain X -> A -> Y: a distribution over discrete
// states, per-attribute channels Pr(A_k | X) that are conditionally
// independent given X, and a class table Pr(Y | A). Everything downstream
// (Pr(Y|X), Pr(Y,A)) is derived by exact finite marginalization, so the two
// error-bound inequalities can be verified without sampling.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "npc/assignments.hpp"
#include "npc/dataset.hpp"
#include "npc/errors.hpp"
#include "npc/metrics.hpp"
#include "npc/npc_model.hpp"
#include "npc/schema.hpp"

namespace npc {

struct DiscreteWorld {
  AttributeSchema schema;
  std::vector<double> px;                               // |X|
  std::vector<std::vector<std::vector<double>>> channel;  // [k][state][value]
  std::vector<std::vector<double>> py_given_a;          // [assignment][class]
  std::vector<std::vector<double>> state_features;      // canonical encoding per state

  int state_count() const { return static_cast<int>(px.size()); }

  void validate() const {
    const AssignmentIndexer indexer(schema);
    const int k_count = schema.attribute_count();
    if (px.empty()) throw Error("world has no states");
    double px_total = 0.0;
    for (double p : px) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw Error("invalid state probability");
      px_total += p;
    }
    if (std::abs(px_total - 1.0) > 1e-9) throw Error("state probabilities do not sum to 1");
    if (static_cast<int>(channel.size()) != k_count) throw Error("channel count mismatch");
    for (int k = 0; k < k_count; ++k) {
      if (channel[static_cast<std::size_t>(k)].size() != px.size()) {
        throw Error("channel state count mismatch");
      }
      for (const auto& row : channel[static_cast<std::size_t>(k)]) {
        if (static_cast<int>(row.size()) != schema.cardinality(VariableId{k})) {
          throw Error("channel row length mismatch");
        }
        double total = 0.0;
        for (double p : row) {
          if (!(p >= 0.0) || !std::isfinite(p)) throw Error("invalid channel probability");
          total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) throw Error("channel row does not sum to 1");
      }
    }
    if (py_given_a.size() != indexer.count()) throw Error("class table size mismatch");
    for (const auto& row : py_given_a) {
      if (static_cast<int>(row.size()) != schema.class_count()) {
        throw Error("class table row length mismatch");
      }
      double total = 0.0;
      for (double p : row) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw Error("invalid class probability");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9) throw Error("class table row does not sum to 1");
    }
  }
};

// The learned side reduced to tables: the recognizer's conditional per state
// and the circuit's joint over (A, Y).
struct ModelTables {
  std::vector<std::vector<std::vector<double>>> attribute;  // [k][state][value]
  std::vector<std::vector<double>> joint_ya;                // [assignment][class]
};

struct BoundReport {
  double eps_overall = 0.0;
  double eps_theta = 0.0;
  std::vector<double> eps_theta_k;
  double eps_w = 0.0;
  double bound_rhs = 0.0;         // sum_k eps_theta_k + 2 eps_w
  bool holds = false;             // eps_overall <= bound_rhs + 1e-9
  bool intermediate_holds = false;  // eps_overall <= eps_theta + 2 eps_w + 1e-9

  nlohmann::json to_json() const {
    return {{"schema_version", 1},
            {"eps_overall", eps_overall},
            {"eps_theta", eps_theta},
            {"eps_theta_k", eps_theta_k},
            {"eps_w", eps_w},
            {"bound_rhs", bound_rhs},
            {"holds", holds},
            {"intermediate_holds", intermediate_holds}};
  }
};

// Evaluates every epsilon of the compositional error bound exactly from the
// tables and verifies both inequalities.
inline BoundReport check_error_bound(const DiscreteWorld& world, const ModelTables& model) {
  world.validate();
  const AttributeSchema& schema = world.schema;
  const AssignmentIndexer indexer(schema);
  const int k_count = schema.attribute_count();
  const int class_count = schema.class_count();
  const int states = world.state_count();
  if (static_cast<int>(model.attribute.size()) != k_count ||
      model.joint_ya.size() != indexer.count()) {
    throw SchemaMismatchError("model tables do not match the world's shape");
  }

  // circuit marginal over attributes and the resulting conditional
  std::vector<double> model_marginal(indexer.count(), 0.0);
  for (std::size_t a = 0; a < indexer.count(); ++a) {
    for (int y = 0; y < class_count; ++y) {
      model_marginal[a] += model.joint_ya[a][static_cast<std::size_t>(y)];
    }
  }

  BoundReport report;
  report.eps_theta_k.assign(static_cast<std::size_t>(k_count), 0.0);

  for (int s = 0; s < states; ++s) {
    const double weight = world.px[static_cast<std::size_t>(s)];
    // per-attribute TV
    for (int k = 0; k < k_count; ++k) {
      report.eps_theta_k[static_cast<std::size_t>(k)] +=
          weight * tv_distance(model.attribute[static_cast<std::size_t>(k)]
                                              [static_cast<std::size_t>(s)],
                               world.channel[static_cast<std::size_t>(k)]
                                            [static_cast<std::size_t>(s)]);
    }
    // joint attribute TV and the class posteriors
    double attr_tv = 0.0;
    std::vector<double> true_posterior(static_cast<std::size_t>(class_count), 0.0);
    std::vector<double> model_posterior(static_cast<std::size_t>(class_count), 0.0);
    for (std::size_t a = 0; a < indexer.count(); ++a) {
      const std::vector<int> values = indexer.values(a);
      double true_pi = 1.0;
      double model_pi = 1.0;
      for (int k = 0; k < k_count; ++k) {
        true_pi *= world.channel[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)]
                                [static_cast<std::size_t>(values[static_cast<std::size_t>(k)])];
        model_pi *= model.attribute[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)]
                                   [static_cast<std::size_t>(values[static_cast<std::size_t>(k)])];
      }
      attr_tv += std::abs(model_pi - true_pi);
      for (int y = 0; y < class_count; ++y) {
        true_posterior[static_cast<std::size_t>(y)] +=
            true_pi * world.py_given_a[a][static_cast<std::size_t>(y)];
        if (model_marginal[a] > 0.0) {
          model_posterior[static_cast<std::size_t>(y)] +=
              model_pi * model.joint_ya[a][static_cast<std::size_t>(y)] / model_marginal[a];
        }
      }
    }
    report.eps_theta += weight * 0.5 * attr_tv;
    report.eps_overall += weight * tv_distance(model_posterior, true_posterior);
  }

  // true joint over (A, Y) by marginalizing the states
  for (std::size_t a = 0; a < indexer.count(); ++a) {
    const std::vector<int> values = indexer.values(a);
    double pa = 0.0;
    for (int s = 0; s < states; ++s) {
      double pi = world.px[static_cast<std::size_t>(s)];
      for (int k = 0; k < k_count; ++k) {
        pi *= world.channel[static_cast<std::size_t>(k)][static_cast<std::size_t>(s)]
                           [static_cast<std::size_t>(values[static_cast<std::size_t>(k)])];
      }
      pa += pi;
    }
    for (int y = 0; y < class_count; ++y) {
      report.eps_w += 0.5 * std::abs(model.joint_ya[a][static_cast<std::size_t>(y)] -
                                     pa * world.py_given_a[a][static_cast<std::size_t>(y)]);
    }
  }

  for (double e : report.eps_theta_k) report.bound_rhs += e;
  report.bound_rhs += 2.0 * report.eps_w;
  report.holds = report.eps_overall <= report.bound_rhs + 1e-9;
  report.intermediate_holds =
      report.eps_overall <= report.eps_theta + 2.0 * report.eps_w + 1e-9;
  return report;
}

// Reduces a trained NPC to tables over the world's states: the recognizer is
// evaluated at each state's canonical feature vector, the circuit at every
// (assignment, class) pair.
inline ModelTables model_tables_from_npc(const NpcModel& model, const DiscreteWorld& world) {
  if (model.schema() != world.schema) {
    throw SchemaMismatchError("NPC schema does not match world schema");
  }
  if (world.state_features.size() != world.px.size()) {
    throw Error("world carries no canonical state features");
  }
  const AssignmentIndexer indexer(world.schema);
  ModelTables tables;
  const int k_count = world.schema.attribute_count();
  tables.attribute.resize(static_cast<std::size_t>(k_count));
  for (int s = 0; s < world.state_count(); ++s) {
    const auto probs = model.attribute_model.predict(world.state_features[static_cast<std::size_t>(s)]);
    for (int k = 0; k < k_count; ++k) {
      tables.attribute[static_cast<std::size_t>(k)].push_back(probs[static_cast<std::size_t>(k)]);
    }
  }
  tables.joint_ya.assign(indexer.count(),
                         std::vector<double>(static_cast<std::size_t>(world.schema.class_count()), 0.0));
  for (std::size_t a = 0; a < indexer.count(); ++a) {
    const std::vector<int> values = indexer.values(a);
    LeafAssignment assignment = LeafAssignment::all_marginalized(world.schema);
    for (int k = 0; k < k_count; ++k) {
      assignment.observe(VariableId{k}, values[static_cast<std::size_t>(k)]);
    }
    for (int y = 0; y < world.schema.class_count(); ++y) {
      assignment.observe(world.schema.class_variable(), y);
      tables.joint_ya[a][static_cast<std::size_t>(y)] = model.circuit.evaluate(assignment);
    }
  }
  return tables;
}

// World file: a single JSON document, version 1.
inline constexpr int kWorldFormatVersion = 1;

inline nlohmann::json world_to_json(const DiscreteWorld& world) {
  return {{"format", "npc-world"},
          {"version", kWorldFormatVersion},
          {"schema", io::schema_to_json(world.schema)},
          {"px", world.px},
          {"channel", world.channel},
          {"py_given_a", world.py_given_a},
          {"state_features", world.state_features}};
}

inline DiscreteWorld world_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "npc-world" || j.value("version", 0) != kWorldFormatVersion) {
    throw ParseError("not a supported npc-world document");
  }
  DiscreteWorld world;
  world.schema = io::schema_from_json(j.at("schema"));
  world.px = j.at("px").get<std::vector<double>>();
  world.channel = j.at("channel").get<std::vector<std::vector<std::vector<double>>>>();
  world.py_given_a = j.at("py_given_a").get<std::vector<std::vector<double>>>();
  world.state_features = j.at("state_features").get<std::vector<std::vector<double>>>();
  world.validate();
  return world;
}

inline void write_world_file(const DiscreteWorld& world, const std::filesystem::path& path) {
  io::write_text_file(path, world_to_json(world).dump() + "\n");
}

inline DiscreteWorld read_world_file(const std::filesystem::path& path) {
  try {
    return world_from_json(nlohmann::json::parse(io::read_text_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace npc
