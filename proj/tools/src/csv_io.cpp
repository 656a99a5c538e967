#include "ghsel_cli/cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace ghsel::cli {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& what) {
  throw std::invalid_argument(source + ": line " + std::to_string(line) + ": " + what);
}

double parse_cell(const std::string& s, const std::string& source, int line, const std::string& col) {
  double x = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, x);
  if (s.empty() || ec != std::errc() || ptr != end)
    fail(source, line, "column '" + col + "': '" + s + "' is not a number");
  return x;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in, const std::string& source) {
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line)) throw std::invalid_argument(source + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split(line);
  if (header.size() < 2 || header[0] != "time" || header[1] != "status")
    fail(source, 1, "header must start with time,status");
  const std::vector<std::string> names(header.begin() + 2, header.end());
  std::vector<double> t, d, x;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      fail(source, lineno, "expected " + std::to_string(header.size()) + " fields, found " +
                               std::to_string(cells.size()));
    const double ti = parse_cell(cells[0], source, lineno, "time");
    if (!(ti > 0.0) || !std::isfinite(ti)) fail(source, lineno, "time must be positive and finite");
    const double si = parse_cell(cells[1], source, lineno, "status");
    if (si != 0.0 && si != 1.0) fail(source, lineno, "status must be 0 or 1, found '" + cells[1] + "'");
    t.push_back(ti);
    d.push_back(si);
    for (std::size_t j = 2; j < cells.size(); ++j) {
      const double v = parse_cell(cells[j], source, lineno, header[j]);
      if (!std::isfinite(v)) fail(source, lineno, "column '" + header[j] + "' is not finite");
      x.push_back(v);
    }
  }
  if (t.empty()) throw std::invalid_argument(source + ": no data rows");
  const auto n = static_cast<Eigen::Index>(t.size());
  const auto p = static_cast<Eigen::Index>(names.size());
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = x[static_cast<std::size_t>(i * p + j)];
  return Dataset(Eigen::Map<Eigen::VectorXd>(t.data(), n), Eigen::Map<Eigen::VectorXd>(d.data(), n),
                 std::move(X), names);
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_dataset_csv(in, path);
}

void write_dataset_csv(std::ostream& out, const Dataset& d) {
  out << "time,status";
  for (const auto& nm : d.names()) out << ',' << nm;
  out << '\n' << std::setprecision(17);
  for (int i = 0; i < d.n(); ++i) {
    out << d.t()(i) << ',' << static_cast<int>(d.delta()(i));
    for (int j = 0; j < d.p(); ++j) out << ',' << d.X()(i, j);
    out << '\n';
  }
}

}  // namespace ghsel::cli
