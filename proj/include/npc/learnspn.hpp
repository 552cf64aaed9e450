#pragma once

// LearnSPN-style structure learning over categorical rows: recursive variable
// splits via pairwise G-test independence graphs (product nodes) and hard-EM
// row clustering over product-of-categoricals mixtures (sum nodes), with
// Laplace-smoothed categorical leaf distributions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "npc/circuit.hpp"
#include "npc/dataset.hpp"
#include "npc/errors.hpp"
#include "npc/rng.hpp"

namespace npc {

struct LearnSpnConfig {
  double independence_threshold = 0.001;  // G-test p-value below which variables are dependent
  int min_rows_to_split = 50;
  int cluster_count = 2;
  int max_depth = 20;
  std::uint64_t rng_seed = 0;
  double laplace_alpha = 0.1;

  void validate() const {
    if (!(independence_threshold >= 0.0)) throw Error("independence_threshold must be >= 0");
    if (min_rows_to_split < 1) throw Error("min_rows_to_split must be positive");
    if (cluster_count < 2) throw Error("cluster_count must be >= 2");
    if (max_depth < 1) throw Error("max_depth must be positive");
    if (!(laplace_alpha > 0.0)) throw Error("laplace_alpha must be positive");
  }
};

namespace stats {

// Upper regularized incomplete gamma Q(a, x), by series for P when x < a+1
// and by continued fraction otherwise.
inline double gamma_q(double a, double x) {
  if (x <= 0.0) return 1.0;
  const double log_gamma_a = std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    const double p = sum * std::exp(-x + a * std::log(x) - log_gamma_a);
    return 1.0 - p;
  }
  // Lentz's continued fraction
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - log_gamma_a);
}

inline double chi_square_pvalue(double statistic, int degrees_of_freedom) {
  if (degrees_of_freedom < 1) return 1.0;
  return gamma_q(0.5 * degrees_of_freedom, 0.5 * statistic);
}

}  // namespace stats

namespace learnspn_detail {

// Row/variable view over a sampled dataset. Variable K is the class column.
struct Columns {
  const SampledDataset* data = nullptr;

  int value(std::size_t row, int variable) const {
    const SampledRow& r = data->rows[row];
    if (variable == data->schema.attribute_count()) return r.class_label;
    return r.attributes[static_cast<std::size_t>(variable)];
  }
  int cardinality(int variable) const {
    return data->schema.cardinality(VariableId{variable});
  }
};

// Likelihood-ratio (G) test of independence between two columns over a row
// subset; returns the chi-square p-value.
inline double g_test_pvalue(const Columns& columns, const std::vector<std::size_t>& rows,
                            int var_a, int var_b) {
  const int qa = columns.cardinality(var_a);
  const int qb = columns.cardinality(var_b);
  std::vector<double> counts(static_cast<std::size_t>(qa * qb), 0.0);
  std::vector<double> row_sums(static_cast<std::size_t>(qa), 0.0);
  std::vector<double> col_sums(static_cast<std::size_t>(qb), 0.0);
  for (std::size_t r : rows) {
    const int a = columns.value(r, var_a);
    const int b = columns.value(r, var_b);
    counts[static_cast<std::size_t>(a * qb + b)] += 1.0;
    row_sums[static_cast<std::size_t>(a)] += 1.0;
    col_sums[static_cast<std::size_t>(b)] += 1.0;
  }
  const double n = static_cast<double>(rows.size());
  double g = 0.0;
  for (int a = 0; a < qa; ++a) {
    for (int b = 0; b < qb; ++b) {
      const double o = counts[static_cast<std::size_t>(a * qb + b)];
      if (o <= 0.0) continue;
      const double e = row_sums[static_cast<std::size_t>(a)] *
                       col_sums[static_cast<std::size_t>(b)] / n;
      g += 2.0 * o * std::log(o / e);
    }
  }
  return stats::chi_square_pvalue(g, (qa - 1) * (qb - 1));
}

// Connected components of the pairwise-dependency graph, in ascending order
// of their smallest variable.
inline std::vector<std::vector<int>> dependency_components(
    const Columns& columns, const std::vector<std::size_t>& rows,
    const std::vector<int>& variables, double threshold) {
  const std::size_t n = variables.size();
  std::vector<int> component(n, -1);
  std::vector<std::vector<int>> adjacency(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (g_test_pvalue(columns, rows, variables[i], variables[j]) < threshold) {
        adjacency[i].push_back(static_cast<int>(j));
        adjacency[j].push_back(static_cast<int>(i));
      }
    }
  }
  std::vector<std::vector<int>> components;
  for (std::size_t start = 0; start < n; ++start) {
    if (component[start] >= 0) continue;
    const int id = static_cast<int>(components.size());
    components.emplace_back();
    std::vector<std::size_t> stack{start};
    component[start] = id;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      components[static_cast<std::size_t>(id)].push_back(variables[v]);
      for (int u : adjacency[v]) {
        if (component[static_cast<std::size_t>(u)] < 0) {
          component[static_cast<std::size_t>(u)] = id;
          stack.push_back(static_cast<std::size_t>(u));
        }
      }
    }
    std::sort(components.back().begin(), components.back().end());
  }
  return components;
}

// Hard EM over a product-of-categoricals mixture. Returns per-row cluster
// labels in [0, cluster_count); clusters may come out empty.
inline std::vector<int> cluster_rows(const Columns& columns,
                                     const std::vector<std::size_t>& rows,
                                     const std::vector<int>& variables, int cluster_count,
                                     double laplace_alpha, Rng& rng) {
  std::vector<int> labels(rows.size());
  for (int& label : labels) {
    label = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(cluster_count)));
  }
  for (int iteration = 0; iteration < 20; ++iteration) {
    // M step: smoothed per-cluster categorical parameters
    std::vector<double> cluster_sizes(static_cast<std::size_t>(cluster_count), 0.0);
    for (int label : labels) cluster_sizes[static_cast<std::size_t>(label)] += 1.0;
    std::vector<std::vector<std::vector<double>>> log_theta(
        static_cast<std::size_t>(cluster_count));
    for (int c = 0; c < cluster_count; ++c) {
      log_theta[static_cast<std::size_t>(c)].resize(variables.size());
      for (std::size_t vi = 0; vi < variables.size(); ++vi) {
        log_theta[static_cast<std::size_t>(c)][vi].assign(
            static_cast<std::size_t>(columns.cardinality(variables[vi])), 0.0);
      }
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const int c = labels[r];
      for (std::size_t vi = 0; vi < variables.size(); ++vi) {
        log_theta[static_cast<std::size_t>(c)][vi][static_cast<std::size_t>(
            columns.value(rows[r], variables[vi]))] += 1.0;
      }
    }
    for (int c = 0; c < cluster_count; ++c) {
      for (std::size_t vi = 0; vi < variables.size(); ++vi) {
        auto& theta = log_theta[static_cast<std::size_t>(c)][vi];
        const double denominator =
            cluster_sizes[static_cast<std::size_t>(c)] +
            laplace_alpha * static_cast<double>(theta.size());
        for (double& t : theta) t = std::log((t + laplace_alpha) / denominator);
      }
    }
    // E step: reassign to the highest-likelihood cluster, lowest index on ties
    bool changed = false;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      int best = 0;
      double best_ll = kNegInf;
      for (int c = 0; c < cluster_count; ++c) {
        double ll = 0.0;
        for (std::size_t vi = 0; vi < variables.size(); ++vi) {
          ll += log_theta[static_cast<std::size_t>(c)][vi][static_cast<std::size_t>(
              columns.value(rows[r], variables[vi]))];
        }
        if (ll > best_ll) {
          best_ll = ll;
          best = c;
        }
      }
      if (best != labels[r]) {
        labels[r] = best;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return labels;
}

inline int leaf_distribution(CircuitBuilder& builder, const Columns& columns,
                             const std::vector<std::size_t>& rows, int variable,
                             double laplace_alpha) {
  const int q = columns.cardinality(variable);
  std::vector<double> weights(static_cast<std::size_t>(q), laplace_alpha);
  for (std::size_t r : rows) {
    weights[static_cast<std::size_t>(columns.value(r, variable))] += 1.0;
  }
  const double denominator =
      static_cast<double>(rows.size()) + laplace_alpha * static_cast<double>(q);
  for (double& w : weights) w /= denominator;
  return builder.categorical(VariableId{variable}, std::move(weights));
}

inline int factorized_product(CircuitBuilder& builder, const Columns& columns,
                              const std::vector<std::size_t>& rows,
                              const std::vector<int>& variables, double laplace_alpha) {
  std::vector<int> children;
  children.reserve(variables.size());
  for (int v : variables) {
    children.push_back(leaf_distribution(builder, columns, rows, v, laplace_alpha));
  }
  if (children.size() == 1) return children[0];
  return builder.product(std::move(children));
}

inline int build(CircuitBuilder& builder, const Columns& columns,
                 const std::vector<std::size_t>& rows, const std::vector<int>& variables,
                 int depth, const LearnSpnConfig& config, Rng& rng) {
  if (variables.size() == 1) {
    return leaf_distribution(builder, columns, rows, variables[0], config.laplace_alpha);
  }
  if (static_cast<int>(rows.size()) < config.min_rows_to_split || depth >= config.max_depth) {
    return factorized_product(builder, columns, rows, variables, config.laplace_alpha);
  }
  const auto components =
      dependency_components(columns, rows, variables, config.independence_threshold);
  if (components.size() > 1) {
    std::vector<int> children;
    children.reserve(components.size());
    for (const auto& component : components) {
      children.push_back(build(builder, columns, rows, component, depth + 1, config, rng));
    }
    return builder.product(std::move(children));
  }
  const std::vector<int> labels = cluster_rows(columns, rows, variables, config.cluster_count,
                                               config.laplace_alpha, rng);
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(config.cluster_count));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    groups[static_cast<std::size_t>(labels[r])].push_back(rows[r]);
  }
  std::erase_if(groups, [](const auto& g) { return g.empty(); });
  if (groups.size() <= 1) {
    // clustering failed to separate the rows
    return factorized_product(builder, columns, rows, variables, config.laplace_alpha);
  }
  std::vector<int> children;
  std::vector<double> weights;
  for (const auto& group : groups) {
    children.push_back(build(builder, columns, group, variables, depth + 1, config, rng));
    weights.push_back(static_cast<double>(group.size()) / static_cast<double>(rows.size()));
  }
  return builder.sum(std::move(children), std::move(weights));
}

}  // namespace learnspn_detail

// Learns a smooth, decomposable, locally normalized circuit over
// {A_1..A_K, Y} from concrete rows. Deterministic given config.rng_seed.
inline Circuit learn_structure(const SampledDataset& dataset, const LearnSpnConfig& config = {}) {
  config.validate();
  if (dataset.rows.empty()) throw Error("learn_structure requires a nonempty dataset");
  learnspn_detail::Columns columns{&dataset};
  std::vector<std::size_t> rows(dataset.rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
  std::vector<int> variables(static_cast<std::size_t>(dataset.schema.variable_count()));
  for (std::size_t v = 0; v < variables.size(); ++v) variables[v] = static_cast<int>(v);

  Rng rng(config.rng_seed);
  CircuitBuilder builder(dataset.schema);
  const int root = learnspn_detail::build(builder, columns, rows, variables, 0, config, rng);
  return std::move(builder).finish(root);
}

}  // namespace npc
