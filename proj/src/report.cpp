#include "cskl/report.hpp"

#include <charconv>
#include <fstream>

#include "cskl/error.hpp"

namespace cskl {

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string format_real(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  for (auto& h : header) field(h);
  end_row();
}

void CsvWriter::field(const std::string& text) {
  if (in_row_ > 0) out_ += ',';
  if (text.find_first_of(",\"\n") != std::string::npos) {
    out_ += '"';
    for (char ch : text) {
      if (ch == '"') out_ += '"';
      out_ += ch;
    }
    out_ += '"';
  } else {
    out_ += text;
  }
  ++in_row_;
}

CsvWriter& CsvWriter::add(std::string value) {
  field(value);
  return *this;
}

CsvWriter& CsvWriter::add(double value) {
  field(format_real(value));
  return *this;
}

CsvWriter& CsvWriter::add(long long value) {
  field(std::to_string(value));
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_)
    throw InvalidArgument("csv row has " + std::to_string(in_row_) + " fields, header has " +
                          std::to_string(columns_));
  out_ += '\n';
  in_row_ = 0;
}

std::string trace_csv(const OptTrace& trace) {
  CsvWriter csv({"iteration", "objective", "step", "gamma_sum", "nonzero_gamma"});
  for (const auto& e : trace.entries) {
    csv.add(e.iteration).add(e.objective).add(e.step).add(e.gamma.sum());
    csv.add(static_cast<std::size_t>((e.gamma.array() > 0.0).count()));
    csv.end_row();
  }
  return csv.str();
}

}  // namespace cskl
