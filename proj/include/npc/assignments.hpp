#pragma once

#include <cstddef>
#include <vector>

#include "npc/schema.hpp"

namespace npc {

// Lexicographic mixed-radix indexing of joint attribute assignments, with the
// last attribute varying fastest.
class AssignmentIndexer {
 public:
  explicit AssignmentIndexer(const AttributeSchema& schema) {
    const int k = schema.attribute_count();
    cardinalities_.resize(static_cast<std::size_t>(k));
    strides_.assign(static_cast<std::size_t>(k), 1);
    for (int i = 0; i < k; ++i) {
      cardinalities_[static_cast<std::size_t>(i)] = schema.cardinality(VariableId{i});
    }
    for (int i = k - 2; i >= 0; --i) {
      strides_[static_cast<std::size_t>(i)] = strides_[static_cast<std::size_t>(i + 1)] *
                                              cardinalities_[static_cast<std::size_t>(i + 1)];
    }
    count_ = 1;
    for (int c : cardinalities_) count_ *= static_cast<std::size_t>(c);
  }

  std::size_t count() const { return count_; }
  int attribute_count() const { return static_cast<int>(cardinalities_.size()); }

  std::size_t index(const std::vector<int>& values) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      idx += static_cast<std::size_t>(values[k]) * static_cast<std::size_t>(strides_[k]);
    }
    return idx;
  }

  std::vector<int> values(std::size_t index) const {
    std::vector<int> out(cardinalities_.size());
    for (std::size_t k = 0; k < cardinalities_.size(); ++k) {
      out[k] = static_cast<int>(index / static_cast<std::size_t>(strides_[k])) %
               cardinalities_[k];
    }
    return out;
  }

  int value_at(std::size_t index, int attribute) const {
    return static_cast<int>(index / static_cast<std::size_t>(
                                        strides_[static_cast<std::size_t>(attribute)])) %
           cardinalities_[static_cast<std::size_t>(attribute)];
  }

 private:
  std::vector<int> cardinalities_;
  std::vector<int> strides_;
  std::size_t count_ = 0;
};

}  // namespace npc
