#include "dynmix/cli/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dynmix::cli {

namespace {

std::string strip(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  s = s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw FileError("cannot open '" + path.string() + "': no such file");
  std::ifstream in(path);
  if (!in) throw FileError("cannot open '" + path.string() + "' for reading");
  return in;
}

// Full-string parse; false on trailing garbage.
bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size();
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(strip(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

CsvTable read_csv_table(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!have_header && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (strip(line).empty()) continue;
    if (!have_header) {
      t.header = split_csv_line(line);
      have_header = true;
    } else {
      t.rows.push_back(split_csv_line(line));
    }
  }
  if (!have_header) throw InputError("'" + path.string() + "' is empty (a header row is required)");
  return t;
}

Sample read_sample_csv(const std::filesystem::path& path, const std::string& column) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t lineno = 0;
  std::size_t col = 0;
  bool have_header = false;
  std::vector<double> values;
  std::vector<std::size_t> bad;

  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (strip(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (!have_header) {
      have_header = true;
      if (!column.empty()) {
        const auto it = std::find(fields.begin(), fields.end(), column);
        if (it == fields.end())
          throw InputError("'" + path.string() + "' has no column named '" + column + "'");
        col = static_cast<std::size_t>(it - fields.begin());
      }
      continue;
    }
    double v;
    if (col < fields.size() && parse_double(fields[col], v) && std::isfinite(v) && v > 0.0)
      values.push_back(v);
    else
      bad.push_back(lineno);
  }
  if (!have_header) throw InputError("'" + path.string() + "' is empty (a header row is required)");
  if (!bad.empty()) {
    std::string rows;
    for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 20); ++i)
      rows += (i ? ", " : "") + std::to_string(bad[i]);
    if (bad.size() > 20) rows += ", ...";
    throw InputError("'" + path.string() + "': " + std::to_string(bad.size()) +
                     " row(s) are not positive numbers (lines " + rows + ")");
  }
  if (values.empty()) throw InputError("'" + path.string() + "' has no data rows");
  return Sample(std::move(values));
}

std::vector<double> parse_real_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& field : split_csv_line(s)) {
    double v;
    if (!parse_double(field, v) || !std::isfinite(v))
      throw InputError(what + ": '" + field + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw InputError(what + ": empty list");
  return out;
}

}  // namespace dynmix::cli
