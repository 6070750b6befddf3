#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pcsindy {

// Column-oriented table of equally long named series. Column order is insertion order.
class SeriesTable {
 public:
  SeriesTable() = default;

  void add_column(std::string name, std::vector<double> values = {});
  bool has(std::string_view name) const;
  // Throws ConfigError naming the missing column.
  const std::vector<double>& column(std::string_view name) const;
  std::vector<double>& column(std::string_view name);
  std::size_t index_of(std::string_view name) const;

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& column_at(std::size_t i) const { return data_[i]; }
  std::vector<double>& column_at(std::size_t i) { return data_[i]; }
  std::size_t cols() const { return names_.size(); }
  std::size_t rows() const { return data_.empty() ? 0 : data_.front().size(); }

  // Appends one value per column, in column order.
  void append_row(std::span<const double> row);
  void reserve(std::size_t rows);
  SeriesTable select_rows(std::span<const std::size_t> rows) const;
  SeriesTable slice(std::size_t begin, std::size_t end) const;

  // Throws ConfigError if columns differ in length.
  void check_rectangular() const;

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<double>> data_;
};

// Numbers are written in shortest round-trip form, so output is reproducible
// and reading back gives the same doubles.
void write_csv(std::ostream& os, const SeriesTable& table);
void write_csv(const std::filesystem::path& path, const SeriesTable& table);
SeriesTable read_csv(std::istream& is);
SeriesTable read_csv(const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace pcsindy
