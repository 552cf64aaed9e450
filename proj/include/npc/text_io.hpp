#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "npc/errors.hpp"
#include "npc/schema.hpp"

namespace npc::io {

// Shortest decimal form that round-trips a double exactly.
inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& token, const std::string& context) {
  char* end = nullptr;
  const double value = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') {
    throw ParseError(context + ": expected a number, got '" + token + "'");
  }
  return value;
}

inline long parse_long(const std::string& token, const std::string& context) {
  char* end = nullptr;
  const long value = std::strtol(token.c_str(), &end, 10);
  if (end == token.c_str() || *end != '\0') {
    throw ParseError(context + ": expected an integer, got '" + token + "'");
  }
  return value;
}

// Line-oriented tokenizer. Blank lines and '#' comment lines are skipped;
// every record is one line of whitespace-separated tokens.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next record as tokens; false at end of input.
  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_number_;
      tokens.clear();
      std::istringstream ss(line);
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      if (tokens.empty() || tokens[0][0] == '#') continue;
      return true;
    }
    return false;
  }

  std::vector<std::string> require(const std::string& what) {
    std::vector<std::string> tokens;
    if (!next(tokens)) throw ParseError("unexpected end of input, expected " + what);
    return tokens;
  }

  int line_number() const { return line_number_; }

  std::string where() const { return "line " + std::to_string(line_number_); }

 private:
  std::istream& in_;
  int line_number_ = 0;
};

inline void check_token_name(const std::string& name, const std::string& what) {
  if (name.empty()) throw IoError(what + " name is empty");
  for (char c : name) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '#') {
      throw IoError(what + " name '" + name + "' contains whitespace or '#'");
    }
  }
}

inline void write_schema(std::ostream& out, const AttributeSchema& schema) {
  out << "attributes " << schema.attribute_count() << "\n";
  for (int k = 0; k < schema.attribute_count(); ++k) {
    check_token_name(schema.attribute_name(k), "attribute");
    out << "attribute " << schema.attribute_name(k) << " "
        << schema.attribute_value_names(k).size();
    for (const auto& v : schema.attribute_value_names(k)) {
      check_token_name(v, "value");
      out << " " << v;
    }
    out << "\n";
  }
  out << "class " << schema.class_value_names().size();
  for (const auto& v : schema.class_value_names()) {
    check_token_name(v, "class value");
    out << " " << v;
  }
  out << "\n";
}

inline AttributeSchema read_schema(LineReader& reader) {
  auto header = reader.require("'attributes <K>'");
  if (header.size() != 2 || header[0] != "attributes") {
    throw ParseError(reader.where() + ": expected 'attributes <K>'");
  }
  const long k = parse_long(header[1], reader.where());
  if (k < 1) throw ParseError(reader.where() + ": attribute count must be >= 1");
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> values;
  for (long i = 0; i < k; ++i) {
    auto line = reader.require("'attribute <name> <q> <values...>'");
    if (line.size() < 3 || line[0] != "attribute") {
      throw ParseError(reader.where() + ": expected 'attribute <name> <q> <values...>'");
    }
    const long q = parse_long(line[2], reader.where());
    if (q < 2 || static_cast<long>(line.size()) != 3 + q) {
      throw ParseError(reader.where() + ": attribute '" + line[1] + "' declares " +
                       std::to_string(q) + " values but lists " +
                       std::to_string(line.size() - 3));
    }
    names.push_back(line[1]);
    values.emplace_back(line.begin() + 3, line.end());
  }
  auto cls = reader.require("'class <n> <values...>'");
  if (cls.size() < 2 || cls[0] != "class") {
    throw ParseError(reader.where() + ": expected 'class <n> <values...>'");
  }
  const long n = parse_long(cls[1], reader.where());
  if (n < 2 || static_cast<long>(cls.size()) != 2 + n) {
    throw ParseError(reader.where() + ": class declares " + std::to_string(n) +
                     " values but lists " + std::to_string(cls.size() - 2));
  }
  std::vector<std::string> class_values(cls.begin() + 2, cls.end());
  try {
    return AttributeSchema(std::move(names), std::move(values), std::move(class_values));
  } catch (const SchemaError& e) {
    throw ParseError(reader.where() + ": invalid schema: " + e.what());
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace npc::io
