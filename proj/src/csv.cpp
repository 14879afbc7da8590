#include "pathmed/csv.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace pathmed {

int CsvTable::column(const std::string& name) const {
  for (size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return static_cast<int>(j);
  return -1;
}

namespace {

// parses one record, honoring quoted fields with embedded separators,
// quotes, and newlines; returns false at end of input
bool read_record(std::istream& in, std::vector<std::string>& fields,
                 int& line_no) {
  fields.clear();
  std::string field;
  bool quoted = false, any = false;
  int c;
  while ((c = in.get()) != EOF) {
    any = true;
    if (quoted) {
      if (c == '"') {
        int next = in.peek();
        if (next == '"') {
          in.get();
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field += static_cast<char>(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      ++line_no;
      fields.push_back(std::move(field));
      return true;
    } else if (c == '\n') {
      ++line_no;
      fields.push_back(std::move(field));
      return true;
    } else {
      field += static_cast<char>(c);
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::config, "cannot open '" + path + "'");
  CsvTable t;
  std::vector<std::string> fields;
  int line_no = 1;
  if (!read_record(in, fields, line_no) || fields.empty() ||
      (fields.size() == 1 && fields[0].empty()))
    throw Error(ErrorCategory::data, path + ": missing header row");
  t.header = fields;
  int record_line = line_no;
  while (read_record(in, fields, line_no)) {
    if (fields.size() == 1 && fields[0].empty()) {
      record_line = line_no;
      continue;  // trailing blank line
    }
    if (fields.size() != t.header.size())
      throw Error(ErrorCategory::data,
                  path + ":" + std::to_string(record_line) + ": expected " +
                      std::to_string(t.header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    std::vector<double> row(fields.size());
    for (size_t j = 0; j < fields.size(); ++j) {
      try {
        size_t used = 0;
        row[j] = std::stod(fields[j], &used);
        while (used < fields[j].size() &&
               std::isspace(static_cast<unsigned char>(fields[j][used])))
          ++used;
        if (used != fields[j].size()) throw std::invalid_argument(fields[j]);
      } catch (const std::exception&) {
        throw Error(ErrorCategory::data,
                    path + ":" + std::to_string(record_line) + ": column '" +
                        t.header[j] + "' value '" + fields[j] +
                        "' is not numeric");
      }
      if (!std::isfinite(row[j]))
        throw Error(ErrorCategory::data,
                    path + ":" + std::to_string(record_line) + ": column '" +
                        t.header[j] + "' is not finite");
    }
    t.rows.push_back(std::move(row));
    record_line = line_no;
  }
  if (t.rows.empty())
    throw Error(ErrorCategory::data, path + ": no data rows");
  return t;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorCategory::config, "cannot open '" + path + "' for writing");
  for (size_t j = 0; j < table.header.size(); ++j) {
    if (j) out << ',';
    out << table.header[j];
  }
  out << '\n';
  out.precision(12);
  for (const auto& row : table.rows) {
    for (size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << row[j];
    }
    out << '\n';
  }
}

}  // namespace pathmed
