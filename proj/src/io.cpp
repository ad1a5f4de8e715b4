#include "adcs/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "adcs/errors.hpp"

namespace adcs {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(s);
  while (std::getline(in, cell, sep)) out.push_back(trim(cell));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

pt::ptree::path_type key_path(const std::string& section, const std::string& key) {
  return pt::ptree::path_type(section + '\x1f' + key, '\x1f');
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  if (t == "nan" || t == "-nan") return std::numeric_limits<double>::quiet_NaN();
  if (t == "inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t[0] == '+') ++first;
  const auto res = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ParseError("invalid number '" + t + "' in " + context);
  return v;
}

// --- IniDocument ------------------------------------------------------------

IniDocument IniDocument::load(const std::string& path, const std::string& what) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError(what + " not found", path);
  std::ifstream in(path);
  if (!in) throw MissingArtifactError(what + " unreadable", path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

IniDocument IniDocument::parse(const std::string& text, const std::string& source) {
  IniDocument doc;
  doc.source_ = source;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, doc.tree_);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError("malformed " + source + ": " + e.message() + " (line " +
                     std::to_string(e.line()) + ")");
  }
  return doc;
}

bool IniDocument::has(const std::string& section, const std::string& key) const {
  return static_cast<bool>(tree_.get_child_optional(key_path(section, key)));
}

bool IniDocument::has_section(const std::string& section) const {
  return static_cast<bool>(tree_.get_child_optional(pt::ptree::path_type(section, '\x1f')));
}

std::vector<std::pair<std::string, std::string>> IniDocument::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [name, node] : tree_) {
    if (node.empty()) {
      out.emplace_back("", name);
    } else {
      for (const auto& [key, value] : node) out.emplace_back(name, key);
    }
  }
  return out;
}

std::string IniDocument::get_string(const std::string& section, const std::string& key) const {
  const auto v = tree_.get_optional<std::string>(key_path(section, key));
  if (!v) throw ParseError("missing key [" + section + "] " + key + " in " + source_);
  return trim(*v);
}

std::string IniDocument::get_string(const std::string& section, const std::string& key,
                                    const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

double IniDocument::get_double(const std::string& section, const std::string& key) const {
  return parse_double(get_string(section, key), "[" + section + "] " + key + " of " + source_);
}

double IniDocument::get_double(const std::string& section, const std::string& key, double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

std::int64_t IniDocument::get_int(const std::string& section, const std::string& key) const {
  const std::string t = get_string(section, key);
  std::int64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ParseError("invalid integer '" + t + "' for [" + section + "] " + key + " in " + source_);
  return v;
}

std::int64_t IniDocument::get_int(const std::string& section, const std::string& key,
                                  std::int64_t fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

bool IniDocument::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  std::string t = get_string(section, key);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  throw ParseError("invalid boolean '" + t + "' for [" + section + "] " + key + " in " + source_);
}

Vec3 IniDocument::get_vec3(const std::string& section, const std::string& key) const {
  const auto cells = split(get_string(section, key), ',');
  if (cells.size() != 3)
    throw ParseError("[" + section + "] " + key + " in " + source_ + " must have three components");
  const std::string ctx = "[" + section + "] " + key + " of " + source_;
  return {parse_double(cells[0], ctx), parse_double(cells[1], ctx), parse_double(cells[2], ctx)};
}

Vec3 IniDocument::get_vec3(const std::string& section, const std::string& key, const Vec3& fallback) const {
  return has(section, key) ? get_vec3(section, key) : fallback;
}

std::vector<int> IniDocument::get_int_list(const std::string& section, const std::string& key) const {
  std::vector<int> out;
  for (const auto& cell : split(get_string(section, key), ',')) {
    int v = 0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size())
      throw ParseError("invalid integer list for [" + section + "] " + key + " in " + source_);
    out.push_back(v);
  }
  return out;
}

void IniDocument::set(const std::string& section, const std::string& key, const std::string& value) {
  tree_.put(key_path(section, key), value);
}

void IniDocument::set(const std::string& section, const std::string& key, double value) {
  set(section, key, format_double(value));
}

void IniDocument::set(const std::string& section, const std::string& key, const Vec3& value) {
  set(section, key, format_vec3(value));
}

std::string IniDocument::to_string() const {
  std::ostringstream out;
  pt::ini_parser::write_ini(out, tree_);
  return out.str();
}

void IniDocument::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << to_string();
}

std::string format_vec3(const Vec3& v) {
  return format_double(v[0]) + ", " + format_double(v[1]) + ", " + format_double(v[2]);
}

// --- CSV ------------------------------------------------------------------

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), path_(path), columns_(header.size()) {
  if (!out_) throw Error("cannot write " + path);
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::row(std::span<const double> values) {
  if (values.size() != columns_) throw DimensionError("CSV row width mismatch for " + path_);
  for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_double(values[i]);
  out_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw DimensionError("CSV row width mismatch for " + path_);
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
  out_ << '\n';
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError("CSV column '" + name + "' not found");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(const std::string& path) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError("CSV file not found", path);
  std::ifstream in(path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV file: " + path);
  table.header = split(line, ',');
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != table.header.size())
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(table.header.size()) + " cells");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c, path + ":" + std::to_string(lineno)));
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace adcs
