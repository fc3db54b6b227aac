// SPDX-License-Identifier: Apache-2.0

#include "csv.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "format.hpp"

namespace nrwe {

int CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (line_no == 1) {
      table.header = fields;
      continue;
    }
    if (fields.size() != table.header.size())
      fail(ErrorCode::ParseError,
           path + ":" + std::to_string(line_no) + ": expected " +
               std::to_string(table.header.size()) + " fields, got " +
               std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(f.c_str(), &end);
      if (end == f.c_str() || *end != '\0' || errno == ERANGE)
        fail(ErrorCode::ParseError,
             path + ":" + std::to_string(line_no) + ": bad numeric field '" + f + "'");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty())
    fail(ErrorCode::ParseError, path + ": missing header row");
  return table;
}

DataMatrix data_from_csv(const CsvTable& table, const std::string& outcome,
                         const std::string& treatment,
                         const std::vector<std::string>& controls) {
  auto require = [&](const std::string& name) {
    const int idx = table.column_index(name);
    if (idx < 0)
      fail(ErrorCode::InvalidArgument, "column '" + name + "' not found in input");
    return idx;
  };
  const int y_idx = require(outcome);
  const int t_idx = require(treatment);
  std::vector<int> c_idx;
  for (const auto& c : controls) c_idx.push_back(require(c));

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  DataMatrix d;
  d.y.resize(n);
  d.t.resize(n);
  d.x.resize(n, static_cast<Eigen::Index>(c_idx.size()) + 1);
  d.x.col(0).setOnes();
  d.control_names.push_back("const");
  for (const auto& c : controls) d.control_names.push_back(c);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    d.y[i] = row[static_cast<std::size_t>(y_idx)];
    d.t[i] = row[static_cast<std::size_t>(t_idx)];
    for (std::size_t j = 0; j < c_idx.size(); ++j)
      d.x(i, static_cast<Eigen::Index>(j) + 1) =
          row[static_cast<std::size_t>(c_idx[j])];
  }
  d.validate();
  return d;
}

std::string data_to_csv(const DataMatrix& data) {
  std::ostringstream out;
  out << "y,t";
  for (std::size_t j = 1; j < data.control_names.size(); ++j)
    out << ',' << data.control_names[j];
  for (Eigen::Index j = static_cast<Eigen::Index>(data.control_names.size());
       j < data.x.cols(); ++j)
    out << ",x" << j;
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << format_g17(data.y[i]) << ',' << format_g17(data.t[i]);
    for (Eigen::Index j = 1; j < data.x.cols(); ++j)
      out << ',' << format_g17(data.x(i, j));
    out << '\n';
  }
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  out << content;
  if (!out) fail(ErrorCode::IoError, "failed writing '" + path + "'");
}

}  // namespace nrwe
