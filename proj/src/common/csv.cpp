#include "chanaudit/csv.hpp"

namespace chanaudit::csv {

std::optional<Row> Reader::next() {
  std::string line;
  while (true) {
    if (!std::getline(in_, line)) return std::nullopt;
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    break;
  }

  Row row;
  row.line = line_;
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == line.size()) {
      if (!quoted) break;
      // Quoted field spans a newline.
      std::string more;
      if (!std::getline(in_, more)) throw ParseError(row.line, "unterminated quoted field");
      ++line_;
      if (!more.empty() && more.back() == '\r') more.pop_back();
      field.push_back('\n');
      line = std::move(more);
      i = 0;
      continue;
    }
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        quoted = false;
        ++i;
        continue;
      }
      field.push_back(c);
      ++i;
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == delim_) {
      row.fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
    ++i;
  }
  row.fields.push_back(std::move(field));
  return row;
}

Table Table::read(std::istream& in, char delimiter) {
  Reader reader(in, delimiter);
  Table t;
  auto header = reader.next();
  if (!header) throw ParseError(0, "missing header row");
  t.header_ = header->fields;
  for (std::size_t i = 0; i < t.header_.size(); ++i) t.index_.emplace(t.header_[i], i);
  while (auto row = reader.next()) {
    if (row->fields.size() != t.header_.size())
      throw ParseError(row->line, "expected " + std::to_string(t.header_.size()) + " fields, found " +
                                      std::to_string(row->fields.size()));
    t.rows_.push_back(std::move(*row));
  }
  return t;
}

bool Table::has(std::string_view column) const { return index_.contains(std::string(column)); }

std::optional<std::size_t> Table::index(std::string_view column) const {
  auto it = index_.find(std::string(column));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string_view Table::get(const Row& row, std::string_view column) const {
  auto idx = index(column);
  if (!idx) return {};
  return row.fields[*idx];
}

std::string_view Table::require(const Row& row, std::string_view column) const {
  auto idx = index(column);
  if (!idx) throw ParseError(row.line, "missing column '" + std::string(column) + "'");
  return row.fields[*idx];
}

std::string quote(std::string_view field) {
  const bool needs = field.find_first_of(",\"\n\r") != std::string_view::npos ||
                     (!field.empty() && field.front() == '#');
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << quote(fields[i]);
  }
  out << '\n';
}

}  // namespace chanaudit::csv
