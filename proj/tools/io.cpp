#include "io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "nlfb/errors.hpp"

namespace nlfb::cli {

std::string cell(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json to_json(const ExtendedReal& x) {
  return x.is_infinite() ? nlohmann::json("inf") : nlohmann::json(x.value());
}

nlohmann::json to_json(double v) {
  if (std::isfinite(v)) return v;
  return cell(v);
}

nlohmann::json to_json(const Eigen::VectorXd& v) {
  auto a = nlohmann::json::array();
  for (double x : v) a.push_back(to_json(x));
  return a;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) buffer_ += (i ? "," : "") + header[i];
  buffer_ += '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_) throw std::logic_error("CsvWriter: row width differs from header");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) buffer_ += ',';
    buffer_ += cell(values[i]);
  }
  buffer_ += '\n';
}

void CsvWriter::close(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << buffer_;
}

TrajectorySeries read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trajectory " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  std::map<std::string, std::size_t> col;
  {
    std::stringstream ss(line);
    std::string name;
    for (std::size_t i = 0; std::getline(ss, name, ','); ++i) col[name] = i;
  }
  for (const char* need : {"t", "g", "h"})
    if (!col.count(need)) throw ValidationError(path.string() + ": missing column " + need);
  std::vector<double> t, g, h;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    auto at = [&](const char* name) {
      const std::size_t i = col.at(name);
      if (i >= cells.size())
        throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": short row");
      try {
        return std::stod(cells[i]);
      } catch (const std::exception&) {
        throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": bad number \"" +
                              cells[i] + "\"");
      }
    };
    t.push_back(at("t"));
    g.push_back(at("g"));
    h.push_back(at("h"));
  }
  auto vec = [](const std::vector<double>& v) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  return {vec(t), vec(g), vec(h)};
}

}  // namespace nlfb::cli
