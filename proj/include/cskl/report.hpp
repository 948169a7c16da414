#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cskl/mkl.hpp"

namespace cskl {

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Shortest round-trippable decimal for a double.
std::string format_real(double value);

/// Minimal CSV builder; fields containing separators are quoted.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  CsvWriter& add(std::string value);
  CsvWriter& add(double value);
  CsvWriter& add(long long value);
  CsvWriter& add(int value) { return add(static_cast<long long>(value)); }
  CsvWriter& add(std::size_t value) { return add(static_cast<long long>(value)); }
  void end_row();

  std::string str() const { return out_; }

 private:
  void field(const std::string& text);

  std::string out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

/// iteration,objective,step,gamma_sum,nonzero_gamma
std::string trace_csv(const OptTrace& trace);

}  // namespace cskl
