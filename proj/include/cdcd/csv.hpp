#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace cdcd {

struct NamedMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd values;
};

/// Comma-separated, mandatory header row, one subject per row. Values are
/// written with 17 significant digits so finite doubles round-trip exactly.
void write_csv(const std::string& path, const Eigen::MatrixXd& values,
               const std::vector<std::string>& names);

NamedMatrix read_csv(const std::string& path);

}  // namespace cdcd
