#pragma once

// Maximum-likelihood weight fitting for a fixed circuit structure via CCCP
// multiplicative updates, plus the weight transform that turns any
// positive-weight circuit into an equivalent locally normalized one.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "npc/circuit.hpp"
#include "npc/dataset.hpp"
#include "npc/errors.hpp"
#include "npc/text_io.hpp"

namespace npc {

struct CccpConfig {
  int max_iterations = 200;
  double ll_abs_tolerance = 1e-7;
  double weight_floor = 1e-12;

  void validate() const {
    if (max_iterations < 0) throw Error("max_iterations must be >= 0");
    if (!(ll_abs_tolerance > 0.0)) throw Error("ll_abs_tolerance must be positive");
    if (!(weight_floor > 0.0) || weight_floor > 1e-6) {
      throw Error("weight_floor must lie in (0, 1e-6]");
    }
  }
};

struct TrainingTrace {
  std::vector<double> mean_log_likelihood;
  bool converged = false;
  int iterations_run = 0;
};

inline std::string write_trace_csv(const TrainingTrace& trace) {
  std::ostringstream out;
  out << "iteration,mean_log_likelihood\n";
  for (std::size_t i = 0; i < trace.mean_log_likelihood.size(); ++i) {
    out << i << "," << io::format_double(trace.mean_log_likelihood[i]) << "\n";
  }
  return out.str();
}

inline void write_trace_csv_file(const TrainingTrace& trace, const std::filesystem::path& path) {
  io::write_text_file(path, write_trace_csv(trace));
}

// Rescales every sum edge by its child's all-marginalized subcircuit value and
// renormalizes each node, yielding a locally normalized circuit that computes
// the old distribution divided by the old root marginal.
inline Circuit normalize_weights(const Circuit& circuit) {
  for (const Node& n : circuit.nodes()) {
    if (n.kind != NodeKind::kSum) continue;
    for (double w : n.weights) {
      if (!(w > 0.0)) throw Error("normalize_weights requires strictly positive weights");
    }
  }
  const std::vector<double> log_z =
      circuit.forward_log(LeafAssignment::all_marginalized(circuit.schema()));
  std::vector<Node> nodes = circuit.nodes();
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    Node& n = nodes[id];
    if (n.kind != NodeKind::kSum) continue;
    double total = 0.0;
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      n.weights[i] *= std::exp(log_z[static_cast<std::size_t>(n.children[i])] - log_z[id]);
      total += n.weights[i];
    }
    // total is already 1 up to rounding; tighten so validate() passes exactly
    for (double& w : n.weights) w /= total;
  }
  return Circuit(circuit.schema(), std::move(nodes), circuit.root());
}

namespace detail {

inline LeafAssignment row_assignment(const AttributeSchema& schema, const SampledRow& row) {
  LeafAssignment a(schema.variable_count());
  if (static_cast<int>(row.attributes.size()) != schema.attribute_count()) {
    throw SchemaMismatchError("row attribute count does not match schema");
  }
  for (int k = 0; k < schema.attribute_count(); ++k) {
    a.observe(VariableId{k}, row.attributes[static_cast<std::size_t>(k)]);
  }
  a.observe(schema.class_variable(), row.class_label);
  return a;
}

}  // namespace detail

// Fits the circuit's sum weights to the rows by multiplicative updates.
// Structure is preserved; the returned trace's log-likelihood sequence is
// non-decreasing up to rounding. Rows the circuit assigns zero probability
// cannot be reached by multiplicative updates and are reported upfront.
inline std::pair<Circuit, TrainingTrace> cccp_fit(const Circuit& circuit,
                                                  const SampledDataset& dataset,
                                                  const CccpConfig& config = {}) {
  config.validate();
  if (dataset.rows.empty()) throw Error("cccp_fit requires a nonempty dataset");
  if (dataset.schema != circuit.schema()) {
    throw SchemaMismatchError("dataset schema does not match circuit schema");
  }

  std::vector<LeafAssignment> assignments;
  assignments.reserve(dataset.rows.size());
  for (const SampledRow& row : dataset.rows) {
    assignments.push_back(detail::row_assignment(circuit.schema(), row));
  }

  Circuit fitted = circuit;
  const int edge_count = fitted.sum_edge_count();
  const double n = static_cast<double>(assignments.size());

  std::vector<double> edge_stats(static_cast<std::size_t>(edge_count), 0.0);
  // One sweep over the data: mean log-likelihood under the current weights
  // plus, per sum edge, sum_rows w_e * adjoint * child_value / root_value
  // (the multiplicative update statistic, already including w_e).
  const auto sweep = [&](bool collect_stats) {
    if (collect_stats) edge_stats.assign(static_cast<std::size_t>(edge_count), 0.0);
    double ll = 0.0;
    std::vector<std::size_t> unreachable;
    for (std::size_t r = 0; r < assignments.size(); ++r) {
      const CircuitPass pass = collect_stats
                                   ? fitted.evaluate_with_edge_derivatives(assignments[r])
                                   : CircuitPass{fitted.log_evaluate(assignments[r]), {}};
      if (pass.log_value == kNegInf) {
        unreachable.push_back(r);
        continue;
      }
      ll += pass.log_value;
      if (!collect_stats) continue;
      for (int e = 0; e < edge_count; ++e) {
        const double led = pass.log_edge_derivative[static_cast<std::size_t>(e)];
        if (led == kNegInf) continue;
        edge_stats[static_cast<std::size_t>(e)] +=
            fitted.sum_weight(e) * std::exp(led - pass.log_value);
      }
    }
    if (!unreachable.empty()) {
      throw UnreachableRowsError(std::to_string(unreachable.size()) +
                                     " dataset rows have zero probability under the circuit",
                                 std::move(unreachable));
    }
    return ll / n;
  };

  TrainingTrace trace;
  double current_ll = sweep(/*collect_stats=*/true);
  trace.mean_log_likelihood.push_back(current_ll);

  for (int t = 0; t < config.max_iterations; ++t) {
    for (std::size_t id = 0; id < fitted.nodes().size(); ++id) {
      const Node& node = fitted.nodes()[id];
      if (node.kind != NodeKind::kSum) continue;
      std::vector<double> updated(node.children.size());
      double total = 0.0;
      for (std::size_t i = 0; i < node.children.size(); ++i) {
        const int e = fitted.sum_edge_index(static_cast<int>(id), static_cast<int>(i));
        updated[i] = edge_stats[static_cast<std::size_t>(e)];
        total += updated[i];
      }
      if (total <= 0.0) continue;  // node unused by the data, keep its weights
      normalize_with_floor(updated, config.weight_floor);
      fitted.set_sum_weights(static_cast<int>(id), std::move(updated));
    }
    trace.iterations_run = t + 1;
    const double next_ll = sweep(/*collect_stats=*/true);
    trace.mean_log_likelihood.push_back(next_ll);
    const double improvement = next_ll - current_ll;
    current_ll = next_ll;
    if (improvement < config.ll_abs_tolerance) {
      trace.converged = true;
      break;
    }
  }
  return {std::move(fitted), std::move(trace)};
}

}  // namespace npc
