#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "adcs/dynamics.hpp"

namespace adcs {

/// Shortest text that parses back to exactly `v` ("nan"/"inf" for specials).
std::string format_double(double v);
/// Throws ParseError with `context` on malformed input.
double parse_double(const std::string& text, const std::string& context);

/// Sectioned key = value text document. Key order is preserved on output.
class IniDocument {
 public:
  IniDocument() = default;

  /// Throws MissingArtifactError if absent, ParseError if malformed.
  static IniDocument load(const std::string& path, const std::string& what = "config file");
  static IniDocument parse(const std::string& text, const std::string& source = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;
  /// Every (section, key) pair in file order; top-level keys have section "".
  std::vector<std::pair<std::string, std::string>> entries() const;

  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key) const;
  std::int64_t get_int(const std::string& section, const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  /// "a, b, c"
  Vec3 get_vec3(const std::string& section, const std::string& key) const;
  Vec3 get_vec3(const std::string& section, const std::string& key, const Vec3& fallback) const;
  std::vector<int> get_int_list(const std::string& section, const std::string& key) const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  void set(const std::string& section, const std::string& key, double value);
  void set(const std::string& section, const std::string& key, const Vec3& value);

  std::string to_string() const;
  void save(const std::string& path) const;
  const std::string& source() const { return source_; }

 private:
  boost::property_tree::ptree tree_;
  std::string source_ = "<memory>";
};

std::string format_vec3(const Vec3& v);

/// Streaming CSV writer with a mandatory header row.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(std::span<const double> values);
  /// Mixed rows: text cells are written verbatim.
  void row(const std::vector<std::string>& cells);
  std::size_t columns() const { return columns_; }

 private:
  std::ofstream out_;
  std::string path_;
  std::size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a named column; throws ParseError if absent.
  std::size_t column(const std::string& name) const;
};

/// Reads an all-numeric CSV. Throws MissingArtifactError or ParseError.
CsvTable read_csv(const std::string& path);

/// Decorrelated child seed for stream `index` of `master` (splitmix64).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace adcs
