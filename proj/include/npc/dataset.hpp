#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "npc/errors.hpp"
#include "npc/rng.hpp"
#include "npc/schema.hpp"
#include "npc/text_io.hpp"

namespace npc {

// One labeled example: raw features, the class label, and per-attribute
// ground-truth probability vectors g_k(x).
struct Sample {
  std::vector<double> features;
  int class_label = 0;
  std::vector<std::vector<double>> attribute_targets;
};

enum class Split { kTrain, kValidation, kTest };

inline std::string split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

inline Split split_from_name(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw ParseError("unknown split name '" + name + "'");
}

struct Dataset {
  AttributeSchema schema;
  int feature_dim = 0;
  Split split = Split::kTrain;
  std::vector<Sample> samples;

  void validate() const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Sample& s = samples[i];
      const std::string where = "sample " + std::to_string(i);
      if (static_cast<int>(s.features.size()) != feature_dim) {
        throw SchemaMismatchError(where + ": feature dimension mismatch");
      }
      for (double f : s.features) {
        if (!std::isfinite(f)) throw SchemaMismatchError(where + ": non-finite feature");
      }
      schema.check_value(schema.class_variable(), s.class_label);
      if (static_cast<int>(s.attribute_targets.size()) != schema.attribute_count()) {
        throw SchemaMismatchError(where + ": wrong number of attribute targets");
      }
      for (int k = 0; k < schema.attribute_count(); ++k) {
        const auto& g = s.attribute_targets[static_cast<std::size_t>(k)];
        if (static_cast<int>(g.size()) != schema.cardinality(VariableId{k})) {
          throw SchemaMismatchError(where + ": target length mismatch for attribute " +
                                    std::to_string(k));
        }
        double total = 0.0;
        for (double p : g) {
          if (!(p >= 0.0) || !std::isfinite(p)) {
            throw SchemaMismatchError(where + ": negative or non-finite target entry");
          }
          total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) {
          throw SchemaMismatchError(where + ": attribute target sums to " +
                                    std::to_string(total));
        }
      }
    }
  }
};

// A dataset row with concrete attribute values, i.e. an element of D-bar.
struct SampledRow {
  std::vector<int> attributes;
  int class_label = 0;
};

struct SampledDataset {
  AttributeSchema schema;
  std::vector<SampledRow> rows;
};

// One categorical draw per (row, attribute) from g_k(x); deterministic given
// the seed.
inline SampledDataset sample_attribute_values(const Dataset& dataset, std::uint64_t seed) {
  if (dataset.samples.empty()) throw Error("cannot sample attribute values: dataset is empty");
  Rng rng(seed);
  SampledDataset out;
  out.schema = dataset.schema;
  out.rows.reserve(dataset.samples.size());
  for (const Sample& s : dataset.samples) {
    SampledRow row;
    row.class_label = s.class_label;
    row.attributes.reserve(s.attribute_targets.size());
    for (const auto& g : s.attribute_targets) {
      row.attributes.push_back(rng.categorical(g));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

namespace io {

inline nlohmann::json schema_to_json(const AttributeSchema& schema) {
  nlohmann::json attrs = nlohmann::json::array();
  for (int k = 0; k < schema.attribute_count(); ++k) {
    attrs.push_back({{"name", schema.attribute_name(k)},
                     {"values", schema.attribute_value_names(k)}});
  }
  return {{"attributes", attrs}, {"class_values", schema.class_value_names()}};
}

inline AttributeSchema schema_from_json(const nlohmann::json& j) {
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> values;
  for (const auto& attr : j.at("attributes")) {
    names.push_back(attr.at("name").get<std::string>());
    values.push_back(attr.at("values").get<std::vector<std::string>>());
  }
  try {
    return AttributeSchema(std::move(names), std::move(values),
                           j.at("class_values").get<std::vector<std::string>>());
  } catch (const SchemaError& e) {
    throw ParseError(std::string("invalid schema: ") + e.what());
  }
}

}  // namespace io

// JSON-lines dataset format, version 1: a header object followed by one row
// object per line. One-hot attribute targets are stored as value names,
// probabilistic targets as arrays.
inline constexpr int kDatasetFormatVersion = 1;

inline void write_dataset_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  nlohmann::json header = {{"format", "npc-dataset"},
                           {"version", kDatasetFormatVersion},
                           {"split", split_name(dataset.split)},
                           {"feature_dim", dataset.feature_dim},
                           {"schema", io::schema_to_json(dataset.schema)}};
  out << header.dump() << "\n";
  for (const Sample& s : dataset.samples) {
    nlohmann::json row;
    row["features"] = s.features;
    row["class"] = dataset.schema.value_name(dataset.schema.class_variable(), s.class_label);
    nlohmann::json targets = nlohmann::json::array();
    for (int k = 0; k < dataset.schema.attribute_count(); ++k) {
      const auto& g = s.attribute_targets[static_cast<std::size_t>(k)];
      int hot = -1;
      bool one_hot = true;
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (g[j] == 1.0 && hot < 0) {
          hot = static_cast<int>(j);
        } else if (g[j] != 0.0) {
          one_hot = false;
          break;
        }
      }
      if (one_hot && hot >= 0) {
        targets.push_back(dataset.schema.value_name(VariableId{k}, hot));
      } else {
        targets.push_back(g);
      }
    }
    row["attributes"] = std::move(targets);
    out << row.dump() << "\n";
  }
  if (!out) throw IoError("write failed for " + path.string());
}

inline Dataset read_dataset_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty dataset file");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": bad header: " + e.what());
  }
  if (header.value("format", "") != "npc-dataset") {
    throw ParseError(path.string() + ": not an npc-dataset file");
  }
  if (header.value("version", 0) != kDatasetFormatVersion) {
    throw ParseError(path.string() + ": unsupported dataset version");
  }
  Dataset dataset;
  dataset.schema = io::schema_from_json(header.at("schema"));
  dataset.feature_dim = header.at("feature_dim").get<int>();
  dataset.split = split_from_name(header.at("split").get<std::string>());
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_number) + ": " + e.what());
    }
    Sample s;
    s.features = row.at("features").get<std::vector<double>>();
    s.class_label = dataset.schema.value_index(dataset.schema.class_variable(),
                                               row.at("class").get<std::string>());
    const auto& targets = row.at("attributes");
    if (static_cast<int>(targets.size()) != dataset.schema.attribute_count()) {
      throw ParseError(path.string() + ":" + std::to_string(line_number) +
                       ": wrong attribute count");
    }
    for (int k = 0; k < dataset.schema.attribute_count(); ++k) {
      const auto& t = targets[static_cast<std::size_t>(k)];
      const int q = dataset.schema.cardinality(VariableId{k});
      if (t.is_string()) {
        std::vector<double> g(static_cast<std::size_t>(q), 0.0);
        g[static_cast<std::size_t>(
            dataset.schema.value_index(VariableId{k}, t.get<std::string>()))] = 1.0;
        s.attribute_targets.push_back(std::move(g));
      } else {
        s.attribute_targets.push_back(t.get<std::vector<double>>());
      }
    }
    dataset.samples.push_back(std::move(s));
  }
  dataset.validate();
  return dataset;
}

}  // namespace npc
