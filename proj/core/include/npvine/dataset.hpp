#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace npvine {

/// Numeric table stored column by column. Column order defines variable indices.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> names, std::vector<std::vector<double>> columns);

  std::size_t rows() const noexcept { return columns_.empty() ? 0 : columns_.front().size(); }
  std::size_t cols() const noexcept { return columns_.size(); }
  bool empty() const noexcept { return rows() == 0; }

  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<std::vector<double>>& columns() const noexcept { return columns_; }
  std::span<const double> column(std::size_t j) const { return columns_.at(j); }
  double at(std::size_t row, std::size_t col) const { return columns_[col][row]; }
  std::vector<double> row(std::size_t i) const;

  std::optional<std::size_t> index_of(const std::string& name) const;

  /// Rows at the given indices, in that order.
  Dataset select_rows(std::span<const std::size_t> indices) const;
  Dataset head(std::size_t count) const;
  Dataset without_column(std::size_t j) const;
  Dataset with_column(std::size_t position, std::string name, std::vector<double> values) const;

  /// Reorders/filters columns to match `names`. Throws Error(schema_mismatch) if one is missing.
  Dataset project(std::span<const std::string> names) const;

  /// Appends the rows of `other`; throws Error(schema_mismatch) on differing column names.
  Dataset concat(const Dataset& other) const;

  void set_column(std::size_t j, std::vector<double> values);

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
};

/// Reads an RFC-4180 style CSV with a header row. Every data cell must be a
/// decimal number; failures throw Error(parse) naming the row and column.
Dataset read_csv(std::istream& in);
Dataset read_csv_file(const std::string& path);

/// Writes values in shortest round-trip form.
void write_csv(std::ostream& out, const Dataset& data);
void write_csv_file(const std::string& path, const Dataset& data);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Column-wise z-scoring with statistics taken from a reference table, keyed by column name.
struct Standardizer {
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> sd;

  /// Throws Error(degenerate_sample) for a constant column.
  static Standardizer fit(const Dataset& reference);

  /// Standardizes every column of `data`; Error(schema_mismatch) for a column the standardizer does not know.
  Dataset apply(const Dataset& data) const;

  /// Maps a standardized value of column `name` back to raw units.
  double restore(const std::string& name, double value) const;

 private:
  std::size_t position(const std::string& name) const;
};

}  // namespace npvine
