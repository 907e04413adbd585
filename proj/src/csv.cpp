#include "cdcd/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cdcd {

void write_csv(const std::string& path, const Eigen::MatrixXd& values,
               const std::vector<std::string>& names) {
  if (static_cast<Eigen::Index>(names.size()) != values.cols())
    throw std::invalid_argument("write_csv: header length mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);

  for (std::size_t j = 0; j < names.size(); ++j) {
    if (j) out << ',';
    out << names[j];
  }
  out << '\n';

  char buffer[64];
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer),
                                           values(i, j),
                                           std::chars_format::general, 17);
      out.write(buffer, ptr - buffer);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

NamedMatrix read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path);

  NamedMatrix result;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("read_csv: empty file " + path);
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) result.names.push_back(cell);
  }
  if (result.names.empty())
    throw std::runtime_error("read_csv: missing header in " + path);

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double value = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      while (first < last && (*first == ' ' || *first == '\t')) ++first;
      const auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc{})
        throw std::runtime_error("read_csv: non-numeric cell '" + cell + "' in " + path);
      if (!std::isfinite(value))
        throw std::runtime_error("read_csv: non-finite value in " + path);
      row.push_back(value);
    }
    if (row.size() != result.names.size())
      throw std::runtime_error("read_csv: ragged row in " + path);
    rows.push_back(std::move(row));
  }

  result.values.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(result.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      result.values(i, j) = rows[i][j];
  return result;
}

}  // namespace cdcd
