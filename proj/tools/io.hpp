#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "nlfb/extended.hpp"

namespace nlfb::cli {

/// Shortest-unambiguous ("%.17g") text for CSV cells; "inf"/"nan" spelled out.
std::string cell(double v);

/// JSON has no infinity; infinite values are written as the string "inf".
nlohmann::json to_json(const ExtendedReal& x);
nlohmann::json to_json(double v);
nlohmann::json to_json(const Eigen::VectorXd& v);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Buffers rows in memory; close() writes the file.
class CsvWriter {
public:
  explicit CsvWriter(const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void close(const std::filesystem::path& path) const;

private:
  std::string buffer_;
  std::size_t columns_;
};

struct TrajectorySeries {
  Eigen::VectorXd t, g, h;
};

/// Reads the t, g and h columns of a trajectory CSV by header name.
TrajectorySeries read_trajectory_csv(const std::filesystem::path& path);

}  // namespace nlfb::cli
