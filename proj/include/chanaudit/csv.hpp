#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace chanaudit::csv {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct Row {
  std::size_t line = 0;  // 1-based physical line where the record starts
  std::vector<std::string> fields;
};

/// RFC 4180 reader: quoted fields may contain commas, doubled quotes and
/// newlines. Lines starting with '#' outside quotes are skipped.
class Reader {
 public:
  explicit Reader(std::istream& in, char delimiter = ',') : in_(in), delim_(delimiter) {}
  std::optional<Row> next();

 private:
  std::istream& in_;
  char delim_;
  std::size_t line_ = 0;
};

/// Header-indexed view over a table.
class Table {
 public:
  static Table read(std::istream& in, char delimiter = ',');

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<Row>& rows() const { return rows_; }
  bool has(std::string_view column) const;
  std::optional<std::size_t> index(std::string_view column) const;

  /// Field of `row` under `column`; empty string when the column is absent.
  std::string_view get(const Row& row, std::string_view column) const;
  std::string_view require(const Row& row, std::string_view column) const;

 private:
  std::vector<std::string> header_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Row> rows_;
};

std::string quote(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace chanaudit::csv
