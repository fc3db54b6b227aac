// SPDX-License-Identifier: Apache-2.0

#ifndef NRWE_CSV_HPP
#define NRWE_CSV_HPP

#include <string>
#include <vector>

#include "data.hpp"

namespace nrwe {

/// Strict CSV dialect: comma separated, header row required, '.' decimal,
/// no quoting or locale handling.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // row-major

  int column_index(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

/// Assemble a DataMatrix from named columns; the constant column is added
/// implicitly as the first control.
DataMatrix data_from_csv(const CsvTable& table, const std::string& outcome,
                         const std::string& treatment,
                         const std::vector<std::string>& controls);

std::string data_to_csv(const DataMatrix& data);

void write_file(const std::string& path, const std::string& content);

}  // namespace nrwe

#endif  // NRWE_CSV_HPP
