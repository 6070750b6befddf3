#include "pcsindy/series.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "pcsindy/errors.hpp"

namespace pcsindy {

void SeriesTable::add_column(std::string name, std::vector<double> values) {
  if (has(name)) throw ConfigError("duplicate column '" + name + "'");
  if (!data_.empty() && values.empty()) values.assign(rows(), 0.0);
  if (!data_.empty() && values.size() != rows())
    throw ConfigError("column '" + name + "' has " + std::to_string(values.size()) +
                      " rows, table has " + std::to_string(rows()));
  names_.push_back(std::move(name));
  data_.push_back(std::move(values));
}

bool SeriesTable::has(std::string_view name) const {
  for (const auto& n : names_)
    if (n == name) return true;
  return false;
}

std::size_t SeriesTable::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  throw ConfigError("missing channel '" + std::string(name) + "'");
}

const std::vector<double>& SeriesTable::column(std::string_view name) const {
  return data_[index_of(name)];
}

std::vector<double>& SeriesTable::column(std::string_view name) { return data_[index_of(name)]; }

void SeriesTable::append_row(std::span<const double> row) {
  if (row.size() != data_.size())
    throw ConfigError("row has " + std::to_string(row.size()) + " values, table has " +
                      std::to_string(data_.size()) + " columns");
  for (std::size_t i = 0; i < row.size(); ++i) data_[i].push_back(row[i]);
}

void SeriesTable::reserve(std::size_t n) {
  for (auto& c : data_) c.reserve(n);
}

SeriesTable SeriesTable::select_rows(std::span<const std::size_t> rows) const {
  SeriesTable out;
  for (std::size_t c = 0; c < names_.size(); ++c) {
    std::vector<double> v;
    v.reserve(rows.size());
    for (auto r : rows) v.push_back(data_[c].at(r));
    out.names_.push_back(names_[c]);
    out.data_.push_back(std::move(v));
  }
  return out;
}

SeriesTable SeriesTable::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows()) throw ConfigError("row slice out of range");
  SeriesTable out;
  out.names_ = names_;
  for (const auto& c : data_)
    out.data_.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(begin),
                           c.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

void SeriesTable::check_rectangular() const {
  for (std::size_t i = 0; i < data_.size(); ++i)
    if (data_[i].size() != rows())
      throw ConfigError("column '" + names_[i] + "' has inconsistent length");
}

std::string format_double(double v) { return fmt::format("{}", v); }

void write_csv(std::ostream& os, const SeriesTable& table) {
  table.check_rectangular();
  const auto& names = table.names();
  for (std::size_t c = 0; c < names.size(); ++c) os << (c ? "," : "") << names[c];
  os << '\n';
  fmt::memory_buffer buf;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    buf.clear();
    for (std::size_t c = 0; c < table.cols(); ++c) {
      if (c) buf.push_back(',');
      fmt::format_to(std::back_inserter(buf), "{}", table.column_at(c)[r]);
    }
    buf.push_back('\n');
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

void write_csv(const std::filesystem::path& path, const SeriesTable& table) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open '" + path.string() + "' for writing");
  write_csv(os, table);
  if (!os) throw ConfigError("failed writing '" + path.string() + "'");
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view s, std::size_t line_no) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    // from_chars rejects "inf"/"nan" spellings produced by other tools.
    if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf" || s == "Inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf" || s == "-Inf") return -std::numeric_limits<double>::infinity();
    throw ConfigError("line " + std::to_string(line_no) + ": cannot parse '" + std::string(s) +
                      "' as a number");
  }
  return v;
}

}  // namespace

SeriesTable read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("empty CSV input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  SeriesTable table;
  for (auto name : split(line)) table.add_column(std::string(name));
  std::vector<double> row(table.cols());
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split(line);
    if (fields.size() != table.cols())
      throw ConfigError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(table.cols()) + " fields, got " +
                        std::to_string(fields.size()));
    for (std::size_t i = 0; i < fields.size(); ++i) row[i] = parse_number(fields[i], line_no);
    table.append_row(row);
  }
  return table;
}

SeriesTable read_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open '" + path.string() + "'");
  return read_csv(is);
}

}  // namespace pcsindy
