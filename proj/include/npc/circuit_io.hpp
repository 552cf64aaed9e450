#pragma once

// Textual circuit format, version 1.
//
//   npc-circuit 1
//   attributes <K>
//   attribute <name> <q> <value names...>      (K lines)
//   class <n> <class value names...>
//   nodes <count> root <id>
//   <id> leaf <variable> <value index>
//   <id> sum <arity> <child ids...> <weights...>
//   <id> product <arity> <child ids...>
//
// Node ids must be exactly 0..count-1 but may appear in any order; forward
// references are allowed. Weights are decimal, round-trip exact at 17
// significant digits.

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "npc/circuit.hpp"
#include "npc/errors.hpp"
#include "npc/schema.hpp"
#include "npc/text_io.hpp"

namespace npc {

inline constexpr int kCircuitFormatVersion = 1;

inline std::string serialize(const Circuit& circuit) {
  std::ostringstream out;
  out << "npc-circuit " << kCircuitFormatVersion << "\n";
  io::write_schema(out, circuit.schema());
  out << "nodes " << circuit.nodes().size() << " root " << circuit.root() << "\n";
  for (std::size_t id = 0; id < circuit.nodes().size(); ++id) {
    const Node& n = circuit.nodes()[id];
    out << id;
    switch (n.kind) {
      case NodeKind::kLeaf:
        out << " leaf " << n.variable << " " << n.value;
        break;
      case NodeKind::kSum:
        out << " sum " << n.children.size();
        for (int child : n.children) out << " " << child;
        for (double w : n.weights) out << " " << io::format_double(w);
        break;
      case NodeKind::kProduct:
        out << " product " << n.children.size();
        for (int child : n.children) out << " " << child;
        break;
    }
    out << "\n";
  }
  return out.str();
}

// Parses and reconstructs a circuit; re-runs validate unless `require_valid`
// is false (used when loading deliberately unnormalized circuits).
inline Circuit deserialize(const std::string& text, bool require_valid = true) {
  std::istringstream in(text);
  io::LineReader reader(in);
  auto header = reader.require("'npc-circuit <version>'");
  if (header.size() != 2 || header[0] != "npc-circuit") {
    throw ParseError("not an npc-circuit document");
  }
  if (io::parse_long(header[1], reader.where()) != kCircuitFormatVersion) {
    throw ParseError("unsupported npc-circuit version " + header[1]);
  }
  AttributeSchema schema = io::read_schema(reader);
  auto counts = reader.require("'nodes <count> root <id>'");
  if (counts.size() != 4 || counts[0] != "nodes" || counts[2] != "root") {
    throw ParseError(reader.where() + ": expected 'nodes <count> root <id>'");
  }
  const long node_count = io::parse_long(counts[1], reader.where());
  const long root = io::parse_long(counts[3], reader.where());
  if (node_count <= 0) throw ParseError(reader.where() + ": node count must be positive");

  std::vector<Node> nodes(static_cast<std::size_t>(node_count));
  std::vector<bool> seen(static_cast<std::size_t>(node_count), false);
  for (long i = 0; i < node_count; ++i) {
    auto line = reader.require("a node record");
    const std::string ctx = reader.where();
    const long id = io::parse_long(line.at(0), ctx);
    if (id < 0 || id >= node_count) {
      throw ParseError(ctx + ": node id " + std::to_string(id) + " outside 0.." +
                       std::to_string(node_count - 1));
    }
    if (seen[static_cast<std::size_t>(id)]) {
      throw ParseError(ctx + ": duplicate node id " + std::to_string(id));
    }
    seen[static_cast<std::size_t>(id)] = true;
    if (line.size() < 2) throw ParseError(ctx + ": missing node kind");
    const std::string& kind = line[1];
    Node node;
    if (kind == "leaf") {
      if (line.size() != 4) {
        throw ParseError(ctx + ": node " + std::to_string(id) +
                         ": leaf expects '<variable> <value>'");
      }
      node = Node::leaf(VariableId{static_cast<int>(io::parse_long(line[2], ctx))},
                        static_cast<int>(io::parse_long(line[3], ctx)));
    } else if (kind == "sum") {
      if (line.size() < 3) throw ParseError(ctx + ": sum node " + std::to_string(id) + " truncated");
      const long arity = io::parse_long(line[2], ctx);
      if (arity < 1 || static_cast<long>(line.size()) != 3 + 2 * arity) {
        throw ParseError(ctx + ": sum node " + std::to_string(id) + " declares arity " +
                         std::to_string(arity) + " but carries " +
                         std::to_string(line.size() - 3) + " child/weight tokens");
      }
      std::vector<int> children;
      std::vector<double> weights;
      for (long c = 0; c < arity; ++c) {
        children.push_back(static_cast<int>(io::parse_long(line[static_cast<std::size_t>(3 + c)], ctx)));
      }
      for (long c = 0; c < arity; ++c) {
        weights.push_back(io::parse_double(line[static_cast<std::size_t>(3 + arity + c)], ctx));
      }
      node = Node::sum(std::move(children), std::move(weights));
    } else if (kind == "product") {
      if (line.size() < 3) {
        throw ParseError(ctx + ": product node " + std::to_string(id) + " truncated");
      }
      const long arity = io::parse_long(line[2], ctx);
      if (arity < 1 || static_cast<long>(line.size()) != 3 + arity) {
        throw ParseError(ctx + ": product node " + std::to_string(id) + " declares arity " +
                         std::to_string(arity) + " but lists " + std::to_string(line.size() - 3) +
                         " children");
      }
      std::vector<int> children;
      for (long c = 0; c < arity; ++c) {
        children.push_back(static_cast<int>(io::parse_long(line[static_cast<std::size_t>(3 + c)], ctx)));
      }
      node = Node::product(std::move(children));
    } else {
      throw ParseError(ctx + ": unknown node kind '" + kind + "'");
    }
    nodes[static_cast<std::size_t>(id)] = std::move(node);
  }

  Circuit circuit = [&] {
    try {
      return Circuit(std::move(schema), std::move(nodes), static_cast<int>(root));
    } catch (const CircuitStructureError& e) {
      throw ParseError(std::string("invalid circuit structure: ") + e.what());
    } catch (const SchemaMismatchError& e) {
      throw ParseError(std::string("leaf outside schema: ") + e.what());
    }
  }();
  if (require_valid) {
    const ValidationReport report = circuit.validate();
    if (!report.ok()) {
      throw ValidationError("deserialized circuit fails validation:\n" + report.to_string());
    }
  }
  return circuit;
}

inline void write_circuit_file(const Circuit& circuit, const std::filesystem::path& path) {
  io::write_text_file(path, serialize(circuit));
}

inline Circuit read_circuit_file(const std::filesystem::path& path, bool require_valid = true) {
  return deserialize(io::read_text_file(path), require_valid);
}

}  // namespace npc
