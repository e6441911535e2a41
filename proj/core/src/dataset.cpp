#include "npvine/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "npvine/error.hpp"
#include "npvine/kde.hpp"

namespace npvine {

Dataset::Dataset(std::vector<std::string> names, std::vector<std::vector<double>> columns)
    : names_(std::move(names)), columns_(std::move(columns)) {
  if (names_.size() != columns_.size()) fail(ErrorKind::schema_mismatch, "dataset: names and columns differ in count");
  for (const auto& c : columns_) {
    if (c.size() != columns_.front().size()) fail(ErrorKind::schema_mismatch, "dataset: ragged columns");
  }
}

std::vector<double> Dataset::row(std::size_t i) const {
  std::vector<double> out(cols());
  for (std::size_t j = 0; j < cols(); ++j) out[j] = columns_[j][i];
  return out;
}

std::optional<std::size_t> Dataset::index_of(const std::string& name) const {
  for (std::size_t j = 0; j < names_.size(); ++j) {
    if (names_[j] == name) return j;
  }
  return std::nullopt;
}

Dataset Dataset::select_rows(std::span<const std::size_t> indices) const {
  std::vector<std::vector<double>> cols(columns_.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    cols[j].reserve(indices.size());
    for (const auto i : indices) cols[j].push_back(columns_[j].at(i));
  }
  return Dataset(names_, std::move(cols));
}

Dataset Dataset::head(std::size_t count) const {
  std::vector<std::size_t> idx(std::min(count, rows()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return select_rows(idx);
}

Dataset Dataset::without_column(std::size_t j) const {
  auto names = names_;
  auto cols = columns_;
  names.erase(names.begin() + static_cast<std::ptrdiff_t>(j));
  cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(j));
  return Dataset(std::move(names), std::move(cols));
}

Dataset Dataset::with_column(std::size_t position, std::string name, std::vector<double> values) const {
  auto names = names_;
  auto cols = columns_;
  names.insert(names.begin() + static_cast<std::ptrdiff_t>(position), std::move(name));
  cols.insert(cols.begin() + static_cast<std::ptrdiff_t>(position), std::move(values));
  return Dataset(std::move(names), std::move(cols));
}

Dataset Dataset::project(std::span<const std::string> names) const {
  std::vector<std::vector<double>> cols;
  for (const auto& name : names) {
    const auto j = index_of(name);
    if (!j) fail(ErrorKind::schema_mismatch, "column '" + name + "' is missing");
    cols.push_back(columns_[*j]);
  }
  return Dataset(std::vector<std::string>(names.begin(), names.end()), std::move(cols));
}

Dataset Dataset::concat(const Dataset& other) const {
  if (other.names_ != names_) fail(ErrorKind::schema_mismatch, "cannot concatenate tables with different columns");
  auto cols = columns_;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    cols[j].insert(cols[j].end(), other.columns_[j].begin(), other.columns_[j].end());
  }
  return Dataset(names_, std::move(cols));
}

void Dataset::set_column(std::size_t j, std::vector<double> values) {
  if (values.size() != rows()) fail(ErrorKind::schema_mismatch, "set_column: wrong length");
  columns_.at(j) = std::move(values);
}

namespace {

// Splits one logical CSV record; quoted fields may contain commas, doubled quotes and newlines.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  char ch;
  while (in.get(ch)) {
    any = true;
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      ++line;
      break;
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  if (!any) return false;
  if (in_quotes) fail(ErrorKind::parse, "unterminated quoted field near line " + std::to_string(line));
  fields.push_back(std::move(field));
  return true;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

Dataset read_csv(std::istream& in) {
  std::vector<std::string> fields;
  std::size_t line = 1;
  if (!read_record(in, fields, line)) fail(ErrorKind::parse, "CSV is empty; a header row is required");
  std::vector<std::string> names;
  for (auto& f : fields) names.push_back(trim(f));
  if (!names.empty() && names.front().rfind("\xEF\xBB\xBF", 0) == 0) names.front().erase(0, 3);
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j].empty()) fail(ErrorKind::parse, "header column " + std::to_string(j + 1) + " has no name");
  }

  std::vector<std::vector<double>> columns(names.size());
  std::size_t row = 0;
  for (;;) {
    const std::size_t record_line = line;
    if (!read_record(in, fields, line)) break;
    if (fields.size() == 1 && trim(fields.front()).empty()) continue;  // blank line
    ++row;
    if (fields.size() != names.size()) {
      fail(ErrorKind::parse, "line " + std::to_string(record_line) + ": expected " + std::to_string(names.size()) +
                                 " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string cell = trim(fields[j]);
      double value = 0.0;
      const auto* first = cell.data();
      const auto* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, value);
      if (cell.empty() || ec != std::errc() || ptr != last) {
        fail(ErrorKind::parse, "line " + std::to_string(record_line) + ", column '" + names[j] +
                                   "': non-numeric cell '" + cell + "'");
      }
      columns[j].push_back(value);
    }
  }
  return Dataset(std::move(names), std::move(columns));
}

Dataset read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::parse, "cannot open '" + path + "'");
  return read_csv(in);
}

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void write_csv(std::ostream& out, const Dataset& data) {
  for (std::size_t j = 0; j < data.cols(); ++j) out << (j ? "," : "") << quote_if_needed(data.names()[j]);
  out << '\n';
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t j = 0; j < data.cols(); ++j) out << (j ? "," : "") << format_double(data.at(i, j));
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::parse, "cannot write '" + path + "'");
  write_csv(out, data);
}

Standardizer Standardizer::fit(const Dataset& reference) {
  Standardizer s;
  s.names = reference.names();
  for (std::size_t j = 0; j < reference.cols(); ++j) {
    const auto col = reference.column(j);
    s.mean.push_back(std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size()));
    const double sd = sample_sd(col);
    if (!(sd > 0.0)) fail(ErrorKind::degenerate_sample, "column '" + reference.names()[j] + "' has zero variance");
    s.sd.push_back(sd);
  }
  return s;
}

std::size_t Standardizer::position(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) fail(ErrorKind::schema_mismatch, "no standardization stored for column '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

Dataset Standardizer::apply(const Dataset& data) const {
  auto cols = data.columns();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const std::size_t k = position(data.names()[j]);
    for (auto& v : cols[j]) v = (v - mean[k]) / sd[k];
  }
  return Dataset(data.names(), std::move(cols));
}

double Standardizer::restore(const std::string& name, double value) const {
  const std::size_t k = position(name);
  return mean[k] + sd[k] * value;
}

}  // namespace npvine
