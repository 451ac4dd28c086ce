#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynmix/distributions.hpp"

namespace dynmix::cli {

/// Input file missing or unreadable.
class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad CSV rows, bad option values, bad config.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Splits one comma-separated line; surrounding whitespace and double quotes
/// are stripped from each field.
std::vector<std::string> split_csv_line(const std::string& line);

/// Reads a comma-separated file with a header row. `column` names the column
/// to use; empty means the first. Rows that are not positive finite numbers
/// are reported together, by line number, in one InputError.
Sample read_sample_csv(const std::filesystem::path& path, const std::string& column = "");

/// Header row plus data rows, all as strings.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv_table(const std::filesystem::path& path);

/// Parses a comma-separated list of reals ("0.5,0.9"). Throws InputError.
std::vector<double> parse_real_list(const std::string& s, const std::string& what);

}  // namespace dynmix::cli
