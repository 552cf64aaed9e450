#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "npc/errors.hpp"
#include "npc/schema.hpp"

namespace npc {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Absolute tolerance for structural probability checks (weight sums, root
// normalization).
inline constexpr double kProbabilityTolerance = 1e-9;

enum class NodeKind { kLeaf, kSum, kProduct };

// One circuit node. Leaves are indicators I(variable = value); sum nodes mix
// their children with positive weights; product nodes multiply theirs.
struct Node {
  NodeKind kind = NodeKind::kLeaf;
  int variable = -1;  // leaf only
  int value = -1;     // leaf only
  std::vector<int> children;
  std::vector<double> weights;  // sum only, parallel to children

  static Node leaf(VariableId v, int value) {
    Node n;
    n.kind = NodeKind::kLeaf;
    n.variable = v.index;
    n.value = value;
    return n;
  }
  static Node sum(std::vector<int> children, std::vector<double> weights) {
    Node n;
    n.kind = NodeKind::kSum;
    n.children = std::move(children);
    n.weights = std::move(weights);
    return n;
  }
  static Node product(std::vector<int> children) {
    Node n;
    n.kind = NodeKind::kProduct;
    n.children = std::move(children);
    return n;
  }
};

// Per-variable evidence: every variable is either observed at one value or
// marginalized (all its indicators read 1).
class LeafAssignment {
 public:
  static constexpr int kMarginalized = -1;

  explicit LeafAssignment(int variable_count)
      : entries_(static_cast<std::size_t>(variable_count), kMarginalized) {}

  static LeafAssignment all_marginalized(const AttributeSchema& schema) {
    return LeafAssignment(schema.variable_count());
  }

  LeafAssignment& observe(VariableId v, int value) {
    entries_.at(static_cast<std::size_t>(v.index)) = value;
    return *this;
  }
  LeafAssignment& marginalize(VariableId v) {
    entries_.at(static_cast<std::size_t>(v.index)) = kMarginalized;
    return *this;
  }

  bool is_observed(VariableId v) const {
    return entries_.at(static_cast<std::size_t>(v.index)) != kMarginalized;
  }
  int value(VariableId v) const { return entries_.at(static_cast<std::size_t>(v.index)); }
  int variable_count() const { return static_cast<int>(entries_.size()); }
  const std::vector<int>& raw() const { return entries_; }

 private:
  std::vector<int> entries_;
};

struct ValidationIssue {
  int node = -1;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string to_string() const {
    std::string out;
    for (const auto& issue : issues) {
      out += "node " + std::to_string(issue.node) + ": " + issue.message + "\n";
    }
    return out;
  }
};

struct SumEdge {
  int node = -1;
  int child_position = -1;
};

// Result of a forward pass that also carries log d f / d w_e per sum edge,
// indexed like Circuit::sum_edge_index.
struct CircuitPass {
  double log_value = kNegInf;
  std::vector<double> log_edge_derivative;
};

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = a > b ? a : b;
  return m + std::log1p(std::exp(-(a > b ? a - b : b - a)));
}

// Rescales nonnegative weights to sum to 1 with every entry >= floor. Entries
// that would fall below the floor are pinned there and the rest share the
// remaining mass proportionally.
inline void normalize_with_floor(std::vector<double>& weights, double floor) {
  const std::size_t n = weights.size();
  if (n == 0) return;
  if (floor * static_cast<double>(n) >= 1.0) {
    throw Error("weight floor too large for the node arity");
  }
  std::vector<bool> pinned(n, false);
  for (int pass = 0; pass < static_cast<int>(n) + 1; ++pass) {
    double free_mass = 1.0;
    double free_total = 0.0;
    std::size_t pinned_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pinned[i]) {
        free_mass -= floor;
        ++pinned_count;
      } else {
        free_total += weights[i];
      }
    }
    if (pinned_count == n || free_total <= 0.0) {
      for (std::size_t i = 0; i < n; ++i) weights[i] = 1.0 / static_cast<double>(n);
      return;
    }
    const double scale = free_mass / free_total;
    bool newly_pinned = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (pinned[i]) continue;
      if (weights[i] * scale < floor) {
        pinned[i] = true;
        newly_pinned = true;
      }
    }
    if (!newly_pinned) {
      for (std::size_t i = 0; i < n; ++i) {
        weights[i] = pinned[i] ? floor : weights[i] * scale;
      }
      return;
    }
  }
}

// Smooth, decomposable probabilistic circuit over a schema's variables.
//
// Immutable after construction except for sum-weight updates, which the
// learning modules perform under exclusive access. All inference entry points
// are const and safe for concurrent use on a shared circuit.
class Circuit {
 public:
  Circuit(AttributeSchema schema, std::vector<Node> nodes, int root)
      : schema_(std::move(schema)), nodes_(std::move(nodes)), root_(root) {
    check_structure();
    build_topological_order();
    build_scopes();
    build_edge_index();
  }

  const AttributeSchema& schema() const { return schema_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  int root() const { return root_; }
  const std::vector<int>& topological_order() const { return topo_; }

  std::uint64_t scope(int node) const { return scopes_.at(static_cast<std::size_t>(node)); }
  std::uint64_t root_scope() const { return scopes_[static_cast<std::size_t>(root_)]; }

  // True when the root covers Y and every attribute, as task predictors must.
  bool root_scope_complete() const {
    const int n = schema_.variable_count();
    return root_scope() == ((n == 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1));
  }

  // Reports every violation of smoothness, decomposability, weight positivity,
  // and local normalization. Structural representability (DAG, index ranges,
  // arity) is enforced at construction instead.
  ValidationReport validate() const {
    ValidationReport report;
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
      const Node& n = nodes_[id];
      if (n.kind == NodeKind::kSum) {
        double total = 0.0;
        for (std::size_t i = 0; i < n.weights.size(); ++i) {
          if (!(n.weights[i] > 0.0) || !std::isfinite(n.weights[i])) {
            report.issues.push_back({static_cast<int>(id),
                                     "weight " + std::to_string(i) + " is not strictly positive"});
          }
        }
        for (double w : n.weights) total += w;
        if (std::abs(total - 1.0) > kProbabilityTolerance) {
          report.issues.push_back(
              {static_cast<int>(id), "weights sum to " + std::to_string(total) + ", expected 1"});
        }
        for (std::size_t i = 1; i < n.children.size(); ++i) {
          if (scope(n.children[i]) != scope(n.children[0])) {
            report.issues.push_back({static_cast<int>(id),
                                     "smoothness violation: child scopes differ"});
            break;
          }
        }
      } else if (n.kind == NodeKind::kProduct) {
        std::uint64_t seen = 0;
        for (int child : n.children) {
          if (seen & scope(child)) {
            report.issues.push_back({static_cast<int>(id),
                                     "decomposability violation: child scopes overlap"});
            break;
          }
          seen |= scope(child);
        }
      }
    }
    return report;
  }

  // Bottom-up log-value sweep. Marginalized variables read all indicators as
  // 1; a zero value is represented as -inf and propagates through products.
  std::vector<double> forward_log(const LeafAssignment& assignment) const {
    check_assignment(assignment);
    std::vector<double> logv(nodes_.size(), 0.0);
    for (int id : topo_) {
      const Node& n = nodes_[static_cast<std::size_t>(id)];
      double& out = logv[static_cast<std::size_t>(id)];
      switch (n.kind) {
        case NodeKind::kLeaf: {
          const int observed = assignment.raw()[static_cast<std::size_t>(n.variable)];
          out = (observed == LeafAssignment::kMarginalized || observed == n.value) ? 0.0
                                                                                   : kNegInf;
          break;
        }
        case NodeKind::kSum: {
          double m = kNegInf;
          for (std::size_t i = 0; i < n.children.size(); ++i) {
            const double term =
                std::log(n.weights[i]) + logv[static_cast<std::size_t>(n.children[i])];
            if (term > m) m = term;
          }
          if (m == kNegInf) {
            out = kNegInf;
            break;
          }
          double acc = 0.0;
          for (std::size_t i = 0; i < n.children.size(); ++i) {
            acc += std::exp(std::log(n.weights[i]) +
                            logv[static_cast<std::size_t>(n.children[i])] - m);
          }
          out = m + std::log(acc);
          break;
        }
        case NodeKind::kProduct: {
          double acc = 0.0;
          for (int child : n.children) {
            const double lv = logv[static_cast<std::size_t>(child)];
            if (lv == kNegInf) {
              acc = kNegInf;
              break;
            }
            acc += lv;
          }
          out = acc;
          break;
        }
      }
    }
    return logv;
  }

  // Top-down log-adjoint sweep: log d f_root / d value(node). Requires the
  // matching forward sweep's log values.
  std::vector<double> backward_log(const std::vector<double>& logv) const {
    std::vector<double> logd(nodes_.size(), kNegInf);
    logd[static_cast<std::size_t>(root_)] = 0.0;
    for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
      const int id = *it;
      const double d = logd[static_cast<std::size_t>(id)];
      if (d == kNegInf) continue;
      const Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.kind == NodeKind::kSum) {
        for (std::size_t i = 0; i < n.children.size(); ++i) {
          double& slot = logd[static_cast<std::size_t>(n.children[i])];
          slot = log_add(slot, d + std::log(n.weights[i]));
        }
      } else if (n.kind == NodeKind::kProduct) {
        int zero_count = 0;
        double finite_sum = 0.0;
        for (int child : n.children) {
          const double lv = logv[static_cast<std::size_t>(child)];
          if (lv == kNegInf) {
            ++zero_count;
          } else {
            finite_sum += lv;
          }
        }
        if (zero_count >= 2) continue;
        for (int child : n.children) {
          const double lv = logv[static_cast<std::size_t>(child)];
          double partial;
          if (zero_count == 0) {
            partial = finite_sum - lv;
          } else {
            partial = (lv == kNegInf) ? finite_sum : kNegInf;
          }
          if (partial == kNegInf) continue;
          double& slot = logd[static_cast<std::size_t>(child)];
          slot = log_add(slot, d + partial);
        }
      }
    }
    return logd;
  }

  double log_evaluate(const LeafAssignment& assignment) const {
    return forward_log(assignment)[static_cast<std::size_t>(root_)];
  }

  // f_S under the assignment: joint probability when fully observed, the
  // corresponding marginal otherwise.
  double evaluate(const LeafAssignment& assignment) const {
    return std::exp(log_evaluate(assignment));
  }

  // Pr(target = value | given), two forward passes. `given` must marginalize
  // the target variable and have strictly positive probability.
  double conditional(VariableId target, int value, const LeafAssignment& given) const {
    schema_.check_value(target, value);
    if (given.is_observed(target)) {
      throw Error("conditional target variable must be marginalized in the evidence");
    }
    const double log_denominator = log_evaluate(given);
    if (log_denominator == kNegInf) {
      throw UndefinedConditionalError("conditioning evidence has zero probability");
    }
    LeafAssignment joint = given;
    joint.observe(target, value);
    return std::exp(log_evaluate(joint) - log_denominator);
  }

  int sum_edge_count() const { return static_cast<int>(edge_node_.size()); }

  SumEdge sum_edge(int flat_index) const {
    return {edge_node_.at(static_cast<std::size_t>(flat_index)),
            edge_child_pos_.at(static_cast<std::size_t>(flat_index))};
  }

  int sum_edge_index(int node, int child_position) const {
    return edge_offset_.at(static_cast<std::size_t>(node)) + child_position;
  }

  double sum_weight(int flat_index) const {
    const SumEdge e = sum_edge(flat_index);
    return nodes_[static_cast<std::size_t>(e.node)]
        .weights[static_cast<std::size_t>(e.child_position)];
  }

  // d log f / d w_e for every sum edge, one bottom-up and one top-down pass.
  std::vector<double> weight_gradients(const LeafAssignment& assignment) const {
    const std::vector<double> logv = forward_log(assignment);
    const double log_f = logv[static_cast<std::size_t>(root_)];
    if (log_f == kNegInf) {
      throw GradientUndefinedError("circuit output is zero under the assignment");
    }
    const std::vector<double> logd = backward_log(logv);
    std::vector<double> grads(static_cast<std::size_t>(sum_edge_count()), 0.0);
    fill_edge_terms(logv, logd, [&](int edge, double log_df) {
      grads[static_cast<std::size_t>(edge)] = std::exp(log_df - log_f);
    });
    return grads;
  }

  // Forward value plus log d f / d w_e per edge (-inf where the derivative is
  // zero). Defined even when the output is zero; used by the learners.
  CircuitPass evaluate_with_edge_derivatives(const LeafAssignment& assignment) const {
    const std::vector<double> logv = forward_log(assignment);
    CircuitPass pass;
    pass.log_value = logv[static_cast<std::size_t>(root_)];
    pass.log_edge_derivative.assign(static_cast<std::size_t>(sum_edge_count()), kNegInf);
    const std::vector<double> logd = backward_log(logv);
    fill_edge_terms(logv, logd, [&](int edge, double log_df) {
      pass.log_edge_derivative[static_cast<std::size_t>(edge)] = log_df;
    });
    return pass;
  }

  void set_sum_weights(int node, std::vector<double> weights) {
    Node& n = nodes_.at(static_cast<std::size_t>(node));
    if (n.kind != NodeKind::kSum) throw Error("set_sum_weights on a non-sum node");
    if (weights.size() != n.children.size()) {
      throw Error("weight count does not match child count");
    }
    n.weights = std::move(weights);
  }

  std::vector<double> sum_weights_flat() const {
    std::vector<double> out(static_cast<std::size_t>(sum_edge_count()));
    for (int e = 0; e < sum_edge_count(); ++e) out[static_cast<std::size_t>(e)] = sum_weight(e);
    return out;
  }

  void set_sum_weights_flat(std::span<const double> weights) {
    if (static_cast<int>(weights.size()) != sum_edge_count()) {
      throw Error("flat weight vector does not match sum edge count");
    }
    for (int e = 0; e < sum_edge_count(); ++e) {
      const SumEdge edge = sum_edge(e);
      nodes_[static_cast<std::size_t>(edge.node)]
          .weights[static_cast<std::size_t>(edge.child_position)] =
          weights[static_cast<std::size_t>(e)];
    }
  }

 private:
  void check_structure() const {
    if (nodes_.empty()) throw CircuitStructureError("circuit has no nodes");
    if (root_ < 0 || root_ >= static_cast<int>(nodes_.size())) {
      throw CircuitStructureError("root index out of range");
    }
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
      const Node& n = nodes_[id];
      switch (n.kind) {
        case NodeKind::kLeaf:
          if (!n.children.empty()) {
            throw CircuitStructureError("leaf node " + std::to_string(id) + " has children");
          }
          schema_.check_value(VariableId{n.variable}, n.value);
          break;
        case NodeKind::kSum:
          if (n.children.empty()) {
            throw CircuitStructureError("sum node " + std::to_string(id) + " has no children");
          }
          if (n.children.size() != n.weights.size()) {
            throw CircuitStructureError("sum node " + std::to_string(id) +
                                        " has mismatched child/weight counts");
          }
          break;
        case NodeKind::kProduct:
          if (n.children.empty()) {
            throw CircuitStructureError("product node " + std::to_string(id) +
                                        " has no children");
          }
          break;
      }
      for (int child : n.children) {
        if (child < 0 || child >= static_cast<int>(nodes_.size())) {
          throw CircuitStructureError("node " + std::to_string(id) +
                                      " references missing child " + std::to_string(child));
        }
      }
    }
  }

  void build_topological_order() {
    const std::size_t count = nodes_.size();
    std::vector<int> pending(count, 0);
    std::vector<std::vector<int>> parents(count);
    for (std::size_t id = 0; id < count; ++id) {
      pending[id] = static_cast<int>(nodes_[id].children.size());
      for (int child : nodes_[id].children) {
        parents[static_cast<std::size_t>(child)].push_back(static_cast<int>(id));
      }
    }
    topo_.clear();
    topo_.reserve(count);
    std::vector<int> frontier;
    for (std::size_t id = 0; id < count; ++id) {
      if (pending[id] == 0) frontier.push_back(static_cast<int>(id));
    }
    for (std::size_t head = 0; head < frontier.size(); ++head) {
      const int id = frontier[head];
      topo_.push_back(id);
      for (int parent : parents[static_cast<std::size_t>(id)]) {
        if (--pending[static_cast<std::size_t>(parent)] == 0) frontier.push_back(parent);
      }
    }
    if (topo_.size() != count) {
      throw CircuitStructureError("circuit graph contains a cycle");
    }
  }

  void build_scopes() {
    scopes_.assign(nodes_.size(), 0);
    for (int id : topo_) {
      const Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.kind == NodeKind::kLeaf) {
        scopes_[static_cast<std::size_t>(id)] = std::uint64_t{1} << n.variable;
      } else {
        std::uint64_t s = 0;
        for (int child : n.children) s |= scopes_[static_cast<std::size_t>(child)];
        scopes_[static_cast<std::size_t>(id)] = s;
      }
    }
  }

  void build_edge_index() {
    edge_offset_.assign(nodes_.size(), -1);
    edge_node_.clear();
    edge_child_pos_.clear();
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
      if (nodes_[id].kind != NodeKind::kSum) continue;
      edge_offset_[id] = static_cast<int>(edge_node_.size());
      for (std::size_t i = 0; i < nodes_[id].children.size(); ++i) {
        edge_node_.push_back(static_cast<int>(id));
        edge_child_pos_.push_back(static_cast<int>(i));
      }
    }
  }

  template <typename Sink>
  void fill_edge_terms(const std::vector<double>& logv, const std::vector<double>& logd,
                       Sink&& sink) const {
    for (int e = 0; e < sum_edge_count(); ++e) {
      const SumEdge edge = sum_edge(e);
      const double dn = logd[static_cast<std::size_t>(edge.node)];
      if (dn == kNegInf) continue;
      const Node& n = nodes_[static_cast<std::size_t>(edge.node)];
      const double cv =
          logv[static_cast<std::size_t>(n.children[static_cast<std::size_t>(edge.child_position)])];
      if (cv == kNegInf) continue;
      sink(e, dn + cv);
    }
  }

  void check_assignment(const LeafAssignment& assignment) const {
    if (assignment.variable_count() != schema_.variable_count()) {
      throw SchemaMismatchError("assignment covers " +
                                std::to_string(assignment.variable_count()) +
                                " variables, schema has " +
                                std::to_string(schema_.variable_count()));
    }
    for (int v = 0; v < schema_.variable_count(); ++v) {
      const int observed = assignment.raw()[static_cast<std::size_t>(v)];
      if (observed == LeafAssignment::kMarginalized) continue;
      schema_.check_value(VariableId{v}, observed);
    }
  }

  AttributeSchema schema_;
  std::vector<Node> nodes_;
  int root_;
  std::vector<int> topo_;
  std::vector<std::uint64_t> scopes_;
  std::vector<int> edge_offset_;
  std::vector<int> edge_node_;
  std::vector<int> edge_child_pos_;
};

// Incremental assembly with shared indicator leaves. Children are created
// before parents, so the node table is already topologically ordered.
class CircuitBuilder {
 public:
  explicit CircuitBuilder(AttributeSchema schema) : schema_(std::move(schema)) {}

  int leaf(VariableId v, int value) {
    schema_.check_value(v, value);
    const auto key = std::make_pair(v.index, value);
    auto it = leaves_.find(key);
    if (it != leaves_.end()) return it->second;
    const int id = add(Node::leaf(v, value));
    leaves_.emplace(key, id);
    return id;
  }

  int sum(std::vector<int> children, std::vector<double> weights) {
    return add(Node::sum(std::move(children), std::move(weights)));
  }

  int product(std::vector<int> children) { return add(Node::product(std::move(children))); }

  // Sum node over every indicator of one variable: a categorical leaf
  // distribution.
  int categorical(VariableId v, std::vector<double> probabilities) {
    std::vector<int> children;
    children.reserve(probabilities.size());
    for (int value = 0; value < static_cast<int>(probabilities.size()); ++value) {
      children.push_back(leaf(v, value));
    }
    return sum(std::move(children), std::move(probabilities));
  }

  Circuit finish(int root) && {
    return Circuit(std::move(schema_), std::move(nodes_), root);
  }

 private:
  int add(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
  }

  AttributeSchema schema_;
  std::vector<Node> nodes_;
  std::map<std::pair<int, int>, int> leaves_;
};

}  // namespace npc
