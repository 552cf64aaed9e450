#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "npc/errors.hpp"

namespace npc {

// Index into the variable universe of a schema: 0..K-1 are the attributes
// A_1..A_K, index K is the class variable Y.
struct VariableId {
  int index = 0;
  friend constexpr bool operator==(VariableId, VariableId) = default;
};

// The K categorical attributes, their value names, and the class label set.
// Every circuit, rule set, dataset, and model in this library is tied to one
// schema; operations that mix objects verify schema equality.
class AttributeSchema {
 public:
  AttributeSchema() = default;

  AttributeSchema(std::vector<std::string> attribute_names,
                  std::vector<std::vector<std::string>> attribute_values,
                  std::vector<std::string> class_values)
      : attribute_names_(std::move(attribute_names)),
        attribute_values_(std::move(attribute_values)),
        class_values_(std::move(class_values)) {
    check_invariants();
  }

  int attribute_count() const { return static_cast<int>(attribute_names_.size()); }
  // Attributes plus the class variable.
  int variable_count() const { return attribute_count() + 1; }
  VariableId class_variable() const { return VariableId{attribute_count()}; }

  bool is_class_variable(VariableId v) const { return v.index == attribute_count(); }

  int cardinality(VariableId v) const {
    check_variable(v);
    if (is_class_variable(v)) return static_cast<int>(class_values_.size());
    return static_cast<int>(attribute_values_[v.index].size());
  }

  int class_count() const { return static_cast<int>(class_values_.size()); }

  const std::vector<std::string>& attribute_names() const { return attribute_names_; }
  const std::string& attribute_name(int k) const { return attribute_names_.at(k); }
  const std::vector<std::string>& attribute_value_names(int k) const {
    return attribute_values_.at(k);
  }
  const std::vector<std::string>& class_value_names() const { return class_values_; }

  const std::string& value_name(VariableId v, int value) const {
    check_value(v, value);
    if (is_class_variable(v)) return class_values_[value];
    return attribute_values_[v.index][value];
  }

  int attribute_index(const std::string& name) const {
    for (int k = 0; k < attribute_count(); ++k) {
      if (attribute_names_[k] == name) return k;
    }
    throw SchemaMismatchError("unknown attribute name: " + name);
  }

  int value_index(VariableId v, const std::string& name) const {
    check_variable(v);
    const auto& names = is_class_variable(v) ? class_values_ : attribute_values_[v.index];
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return static_cast<int>(i);
    }
    throw SchemaMismatchError("unknown value name '" + name + "' for variable " +
                              std::to_string(v.index));
  }

  // Total number of joint attribute assignments, saturating at cap.
  std::uint64_t attribute_assignment_count(std::uint64_t cap) const {
    std::uint64_t n = 1;
    for (int k = 0; k < attribute_count(); ++k) {
      n *= static_cast<std::uint64_t>(attribute_values_[k].size());
      if (n > cap) return cap + 1;
    }
    return n;
  }

  void check_variable(VariableId v) const {
    if (v.index < 0 || v.index >= variable_count()) {
      throw SchemaMismatchError("variable index " + std::to_string(v.index) +
                                " outside schema with " + std::to_string(variable_count()) +
                                " variables");
    }
  }

  void check_value(VariableId v, int value) const {
    check_variable(v);
    if (value < 0 || value >= cardinality(v)) {
      throw SchemaMismatchError("value index " + std::to_string(value) +
                                " outside cardinality of variable " + std::to_string(v.index));
    }
  }

  friend bool operator==(const AttributeSchema&, const AttributeSchema&) = default;

 private:
  void check_invariants() const {
    if (attribute_names_.empty()) throw SchemaError("schema requires at least one attribute");
    if (attribute_names_.size() != attribute_values_.size()) {
      throw SchemaError("attribute name/value list size mismatch");
    }
    if (class_values_.size() < 2) throw SchemaError("class variable requires >= 2 values");
    // Scope masks are 64-bit; desk-scale schemas fit comfortably.
    if (variable_count() > 64) throw SchemaError("more than 64 variables unsupported");
    std::unordered_set<std::string> names(attribute_names_.begin(), attribute_names_.end());
    if (names.size() != attribute_names_.size()) {
      throw SchemaError("duplicate attribute name");
    }
    for (std::size_t k = 0; k < attribute_values_.size(); ++k) {
      if (attribute_values_[k].size() < 2) {
        throw SchemaError("attribute '" + attribute_names_[k] + "' requires >= 2 values");
      }
      std::unordered_set<std::string> vals(attribute_values_[k].begin(),
                                           attribute_values_[k].end());
      if (vals.size() != attribute_values_[k].size()) {
        throw SchemaError("duplicate value name in attribute '" + attribute_names_[k] + "'");
      }
    }
    std::unordered_set<std::string> cvals(class_values_.begin(), class_values_.end());
    if (cvals.size() != class_values_.size()) throw SchemaError("duplicate class value name");
  }

  std::vector<std::string> attribute_names_;
  std::vector<std::vector<std::string>> attribute_values_;
  std::vector<std::string> class_values_;
};

}  // namespace npc
