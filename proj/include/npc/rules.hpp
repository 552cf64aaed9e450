#pragma once

// Weighted conjunctive rules over (A_1..A_K, Y) and their compilation into a
// depth-2 sum-of-products circuit. The compiled circuit's root outputs the
// empirical joint distribution encoded by the normalized rule weights.

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "npc/circuit.hpp"
#include "npc/dataset.hpp"
#include "npc/errors.hpp"
#include "npc/schema.hpp"
#include "npc/text_io.hpp"

namespace npc {

struct Rule {
  std::vector<int> attribute_values;  // one value index per attribute
  int class_value = 0;
  double weight = 0.0;
};

struct RuleSet {
  AttributeSchema schema;
  std::vector<Rule> rules;

  void validate() const {
    double total = 0.0;
    std::map<std::pair<std::vector<int>, int>, int> seen;
    for (std::size_t l = 0; l < rules.size(); ++l) {
      const Rule& r = rules[l];
      if (static_cast<int>(r.attribute_values.size()) != schema.attribute_count()) {
        throw SchemaMismatchError("rule " + std::to_string(l) + " covers " +
                                  std::to_string(r.attribute_values.size()) + " attributes");
      }
      for (int k = 0; k < schema.attribute_count(); ++k) {
        schema.check_value(VariableId{k}, r.attribute_values[static_cast<std::size_t>(k)]);
      }
      schema.check_value(schema.class_variable(), r.class_value);
      if (!(r.weight >= 0.0)) {
        throw Error("rule " + std::to_string(l) + " has negative weight");
      }
      auto [it, inserted] = seen.emplace(std::make_pair(r.attribute_values, r.class_value),
                                         static_cast<int>(l));
      if (!inserted) {
        throw Error("rules " + std::to_string(it->second) + " and " + std::to_string(l) +
                    " share the same assignment tuple");
      }
      total += r.weight;
    }
    if (!(total > 0.0)) throw Error("rule set has zero total weight");
  }
};

// Depth-2 compilation: one product node per rule over its K+1 indicator
// leaves, one root sum node weighted by the normalized rule weights.
inline Circuit compile_rules(const RuleSet& rule_set) {
  if (rule_set.rules.empty()) throw Error("cannot compile an empty rule set");
  rule_set.validate();
  double total = 0.0;
  for (const Rule& r : rule_set.rules) total += r.weight;

  CircuitBuilder builder(rule_set.schema);
  std::vector<int> products;
  std::vector<double> weights;
  products.reserve(rule_set.rules.size());
  for (const Rule& r : rule_set.rules) {
    std::vector<int> leaves;
    leaves.reserve(r.attribute_values.size() + 1);
    for (int k = 0; k < rule_set.schema.attribute_count(); ++k) {
      leaves.push_back(
          builder.leaf(VariableId{k}, r.attribute_values[static_cast<std::size_t>(k)]));
    }
    leaves.push_back(builder.leaf(rule_set.schema.class_variable(), r.class_value));
    products.push_back(builder.product(std::move(leaves)));
    weights.push_back(r.weight / total);
  }
  const int root = builder.sum(std::move(products), std::move(weights));
  return std::move(builder).finish(root);
}

// One rule per distinct (a_1..a_K, y) tuple, weighted by its empirical
// frequency. Rules come out in lexicographic tuple order.
inline RuleSet rules_from_dataset(const SampledDataset& dataset) {
  if (dataset.rows.empty()) throw Error("cannot derive rules from an empty dataset");
  std::map<std::pair<std::vector<int>, int>, std::size_t> counts;
  for (const SampledRow& row : dataset.rows) {
    counts[std::make_pair(row.attributes, row.class_label)] += 1;
  }
  RuleSet out;
  out.schema = dataset.schema;
  const double n = static_cast<double>(dataset.rows.size());
  for (const auto& [tuple, count] : counts) {
    Rule r;
    r.attribute_values = tuple.first;
    r.class_value = tuple.second;
    r.weight = static_cast<double>(count) / n;
    out.rules.push_back(std::move(r));
  }
  return out;
}

// Rule file format, version 1: the schema block followed by one record per
// rule listing value names and a nonnegative weight.
//
//   npc-rules 1
//   attributes <K>
//   attribute <name> <q> <values...>
//   class <n> <values...>
//   rule <a_1 name> ... <a_K name> <y name> <weight>
inline constexpr int kRuleFormatVersion = 1;

inline std::string write_rules(const RuleSet& rule_set) {
  std::ostringstream out;
  out << "npc-rules " << kRuleFormatVersion << "\n";
  io::write_schema(out, rule_set.schema);
  for (const Rule& r : rule_set.rules) {
    out << "rule";
    for (int k = 0; k < rule_set.schema.attribute_count(); ++k) {
      out << " "
          << rule_set.schema.value_name(VariableId{k},
                                        r.attribute_values[static_cast<std::size_t>(k)]);
    }
    out << " " << rule_set.schema.value_name(rule_set.schema.class_variable(), r.class_value);
    out << " " << io::format_double(r.weight) << "\n";
  }
  return out.str();
}

// Duplicate assignment tuples are merged by summing their weights, matching
// frequency-count rule construction.
inline RuleSet read_rules(const std::string& text) {
  std::istringstream in(text);
  io::LineReader reader(in);
  auto header = reader.require("'npc-rules <version>'");
  if (header.size() != 2 || header[0] != "npc-rules") {
    throw ParseError("not an npc-rules document");
  }
  if (io::parse_long(header[1], reader.where()) != kRuleFormatVersion) {
    throw ParseError("unsupported npc-rules version " + header[1]);
  }
  RuleSet out;
  out.schema = io::read_schema(reader);
  const int k = out.schema.attribute_count();
  std::map<std::pair<std::vector<int>, int>, std::size_t> index_of;
  std::vector<std::string> line;
  int ordinal = 0;
  while (reader.next(line)) {
    ++ordinal;
    const std::string ctx = reader.where() + " (rule " + std::to_string(ordinal) + ")";
    if (line[0] != "rule") throw ParseError(ctx + ": expected 'rule ...'");
    if (static_cast<int>(line.size()) != k + 3) {
      throw ParseError(ctx + ": expected " + std::to_string(k) +
                       " attribute values, a class value, and a weight");
    }
    Rule r;
    try {
      for (int i = 0; i < k; ++i) {
        r.attribute_values.push_back(
            out.schema.value_index(VariableId{i}, line[static_cast<std::size_t>(1 + i)]));
      }
      r.class_value = out.schema.value_index(out.schema.class_variable(),
                                             line[static_cast<std::size_t>(1 + k)]);
    } catch (const SchemaMismatchError& e) {
      throw ParseError(ctx + ": " + e.what());
    }
    r.weight = io::parse_double(line[static_cast<std::size_t>(2 + k)], ctx);
    if (!(r.weight >= 0.0)) throw ParseError(ctx + ": negative weight");
    const auto key = std::make_pair(r.attribute_values, r.class_value);
    auto it = index_of.find(key);
    if (it != index_of.end()) {
      out.rules[it->second].weight += r.weight;
    } else {
      index_of.emplace(key, out.rules.size());
      out.rules.push_back(std::move(r));
    }
  }
  if (out.rules.empty()) throw ParseError("rule file contains no rules");
  return out;
}

inline void write_rules_file(const RuleSet& rules, const std::filesystem::path& path) {
  io::write_text_file(path, write_rules(rules));
}

inline RuleSet read_rules_file(const std::filesystem::path& path) {
  return read_rules(io::read_text_file(path));
}

}  // namespace npc
