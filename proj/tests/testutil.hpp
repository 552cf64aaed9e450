#pragma once

// Shared test machinery: independent reference evaluation of circuits by
// direct recursion, exhaustive-enumeration oracles, random valid-circuit
// generation, and finite differences. Everything here deliberately avoids the
// library's log-space sweep so it can serve as an oracle for it.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <vector>

#include "npc/circuit.hpp"
#include "npc/rng.hpp"
#include "npc/schema.hpp"

namespace testutil {

// Direct linear-space recursion with memoization; no topological sweep, no
// log-sum-exp. Fully observed assignments only.
inline double reference_value(const npc::Circuit& circuit, int node,
                              const npc::LeafAssignment& full,
                              std::map<int, double>& memo) {
  auto it = memo.find(node);
  if (it != memo.end()) return it->second;
  const npc::Node& n = circuit.nodes()[static_cast<std::size_t>(node)];
  double out = 0.0;
  switch (n.kind) {
    case npc::NodeKind::kLeaf:
      out = full.value(npc::VariableId{n.variable}) == n.value ? 1.0 : 0.0;
      break;
    case npc::NodeKind::kSum:
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        out += n.weights[i] * reference_value(circuit, n.children[i], full, memo);
      }
      break;
    case npc::NodeKind::kProduct:
      out = 1.0;
      for (int child : n.children) out *= reference_value(circuit, child, full, memo);
      break;
  }
  memo.emplace(node, out);
  return out;
}

inline double reference_joint(const npc::Circuit& circuit, const npc::LeafAssignment& full) {
  std::map<int, double> memo;
  return reference_value(circuit, circuit.root(), full, memo);
}

// Calls fn once per completion of the marginalized variables in `partial`.
inline void for_each_completion(const npc::AttributeSchema& schema,
                                const npc::LeafAssignment& partial,
                                const std::function<void(const npc::LeafAssignment&)>& fn) {
  std::vector<int> free_vars;
  for (int v = 0; v < schema.variable_count(); ++v) {
    if (!partial.is_observed(npc::VariableId{v})) free_vars.push_back(v);
  }
  npc::LeafAssignment current = partial;
  std::vector<int> odom(free_vars.size(), 0);
  while (true) {
    for (std::size_t i = 0; i < free_vars.size(); ++i) {
      current.observe(npc::VariableId{free_vars[i]}, odom[i]);
    }
    fn(current);
    std::size_t pos = 0;
    while (pos < free_vars.size()) {
      if (++odom[pos] < schema.cardinality(npc::VariableId{free_vars[pos]})) break;
      odom[pos] = 0;
      ++pos;
    }
    if (pos == free_vars.size()) break;
    if (free_vars.empty()) break;
  }
}

// Exhaustive-enumeration probability of a partial assignment: the sum of
// reference joints over all completions.
inline double enumerated_probability(const npc::Circuit& circuit,
                                     const npc::LeafAssignment& partial) {
  double total = 0.0;
  for_each_completion(circuit.schema(), partial, [&](const npc::LeafAssignment& full) {
    total += reference_joint(circuit, full);
  });
  return total;
}

inline std::vector<double> random_simplex_point(npc::Rng& rng, int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  double total = 0.0;
  for (double& x : w) {
    x = 0.1 + -std::log(1.0 - rng.uniform());
    total += x;
  }
  for (double& x : w) x /= total;
  return w;
}

namespace detail {

inline int build_random(npc::CircuitBuilder& builder, const npc::AttributeSchema& schema,
                        std::vector<int> vars, npc::Rng& rng, int sum_budget) {
  if (vars.size() == 1) {
    const npc::VariableId v{vars[0]};
    if (sum_budget > 0 && rng.uniform() < 0.3) {
      const int a = builder.categorical(v, random_simplex_point(rng, schema.cardinality(v)));
      const int b = builder.categorical(v, random_simplex_point(rng, schema.cardinality(v)));
      return builder.sum({a, b}, random_simplex_point(rng, 2));
    }
    return builder.categorical(v, random_simplex_point(rng, schema.cardinality(v)));
  }
  const bool make_sum = sum_budget > 0 && rng.uniform() < 0.5;
  if (make_sum) {
    const int arity = 2 + static_cast<int>(rng.uniform_below(2));
    std::vector<int> children;
    for (int i = 0; i < arity; ++i) {
      children.push_back(build_random(builder, schema, vars, rng, sum_budget - 1));
    }
    return builder.sum(std::move(children), random_simplex_point(rng, arity));
  }
  rng.shuffle(vars);
  const std::size_t cut = 1 + rng.uniform_below(vars.size() - 1);
  std::vector<int> left(vars.begin(), vars.begin() + static_cast<std::ptrdiff_t>(cut));
  std::vector<int> right(vars.begin() + static_cast<std::ptrdiff_t>(cut), vars.end());
  const int a = build_random(builder, schema, std::move(left), rng, sum_budget);
  const int b = build_random(builder, schema, std::move(right), rng, sum_budget);
  return builder.product({a, b});
}

}  // namespace detail

// A random smooth, decomposable, locally normalized circuit over the full
// variable set of the schema.
inline npc::Circuit random_circuit(const npc::AttributeSchema& schema, npc::Rng& rng,
                                   int sum_budget = 3) {
  npc::CircuitBuilder builder(schema);
  std::vector<int> vars;
  for (int v = 0; v < schema.variable_count(); ++v) vars.push_back(v);
  const int root = detail::build_random(builder, schema, std::move(vars), rng, sum_budget);
  return std::move(builder).finish(root);
}

// Random schema with K attributes and bounded cardinalities.
inline npc::AttributeSchema random_schema(npc::Rng& rng, int max_attributes = 3,
                                          int max_cardinality = 3) {
  const int k = 1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(max_attributes)));
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> values;
  for (int i = 0; i < k; ++i) {
    names.push_back("a" + std::to_string(i));
    const int q = 2 + static_cast<int>(
                          rng.uniform_below(static_cast<std::uint64_t>(max_cardinality - 1)));
    std::vector<std::string> vals;
    for (int j = 0; j < q; ++j) vals.push_back(std::to_string(j));
    values.push_back(std::move(vals));
  }
  const int cy = 2 + static_cast<int>(
                         rng.uniform_below(static_cast<std::uint64_t>(max_cardinality - 1)));
  std::vector<std::string> classes;
  for (int j = 0; j < cy; ++j) classes.push_back("y" + std::to_string(j));
  return npc::AttributeSchema(std::move(names), std::move(values), std::move(classes));
}

// Random assignment with each variable independently observed or marginalized.
inline npc::LeafAssignment random_assignment(const npc::AttributeSchema& schema, npc::Rng& rng,
                                             double observe_probability = 0.7) {
  npc::LeafAssignment a = npc::LeafAssignment::all_marginalized(schema);
  for (int v = 0; v < schema.variable_count(); ++v) {
    const npc::VariableId var{v};
    if (rng.uniform() < observe_probability) {
      a.observe(var, static_cast<int>(
                         rng.uniform_below(static_cast<std::uint64_t>(schema.cardinality(var)))));
    }
  }
  return a;
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline bool close_rel(double a, double b, double rtol, double atol = 1e-9) {
  return std::abs(a - b) <= atol + rtol * std::max(std::abs(a), std::abs(b));
}

// Figure-style depth-2 fixture: two binary attributes, binary class, three
// rule product nodes under one root sum node.
inline npc::Circuit depth2_rule_fixture(double w1, double w2, double w3) {
  npc::AttributeSchema schema({"a1", "a2"}, {{"0", "1"}, {"0", "1"}}, {"0", "1"});
  npc::CircuitBuilder builder(schema);
  const npc::VariableId a1{0}, a2{1}, y{2};
  const double total = w1 + w2 + w3;
  const int p1 = builder.product({builder.leaf(a1, 0), builder.leaf(a2, 0), builder.leaf(y, 0)});
  const int p2 = builder.product({builder.leaf(a1, 1), builder.leaf(a2, 1), builder.leaf(y, 1)});
  const int p3 = builder.product({builder.leaf(a1, 0), builder.leaf(a2, 1), builder.leaf(y, 1)});
  const int root = builder.sum({p1, p2, p3}, {w1 / total, w2 / total, w3 / total});
  return std::move(builder).finish(root);
}

}  // namespace testutil
