#ifndef PATHMED_CSV_HPP
#define PATHMED_CSV_HPP

#include <string>
#include <vector>

#include "pathmed/types.hpp"

namespace pathmed {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  Index ncols() const { return static_cast<Index>(header.size()); }
  Index nrows() const { return static_cast<Index>(rows.size()); }
  int column(const std::string& name) const;  // -1 if absent
};

// Strict quoted-field CSV reader. A header row is required; every cell must
// parse as a finite number. Errors carry 1-based line numbers.
CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const CsvTable& table);

}  // namespace pathmed

#endif
