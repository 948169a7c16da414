#include "cskl/bank_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "cskl/report.hpp"

namespace cskl {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'K', 'B'};

class Writer {
 public:
  void bytes(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out_.push_back(static_cast<char>((v >> s) & 0xFFu));
  }
  void u64(std::uint64_t v) {
    for (int s = 0; s < 64; s += 8) out_.push_back(static_cast<char>((v >> s) & 0xFFu));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::vector<char> take() { return std::move(out_); }

 private:
  std::vector<char> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<char>& in) : in_(in) {}

  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n)
      throw BankFormatError(BankFormatError::Kind::kTruncated,
                            std::string("bank file truncated while reading ") + what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int s = 0; s < 32; s += 8) v |= std::uint32_t{static_cast<std::uint8_t>(in_[pos_++])} << s;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int s = 0; s < 64; s += 8) v |= std::uint64_t{static_cast<std::uint8_t>(in_[pos_++])} << s;
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::size_t remaining() const { return in_.size() - pos_; }
  const char* data() const { return in_.data() + pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  const std::vector<char>& in_;
  std::size_t pos_ = 0;
};

std::optional<KernelSpec> spec_from_tag(std::uint8_t tag, double p0, double p1) {
  switch (tag) {
    case 0:
      return std::nullopt;
    case 1:
      return KernelSpec::gaussian(p0);
    case 2:
      return KernelSpec::polynomial(static_cast<int>(p0), p1);
    case 3:
      return KernelSpec::linear();
    default:
      throw BankFormatError(BankFormatError::Kind::kInvalidContent,
                            "unknown kernel spec tag " + std::to_string(tag));
  }
}

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::vector<double> parse_csv_row(const std::string& line, const std::filesystem::path& path,
                                  std::size_t line_no) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      row.push_back(std::stod(cell, &used));
    } catch (const std::exception&) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) +
                            ": cannot parse '" + cell + "' as a number");
    }
  }
  return row;
}

}  // namespace

std::vector<char> encode_bank(const KernelBank& bank) {
  bank.validate();
  const bool binary = bank.is_binary();
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kBankFormatVersion);
  w.u32(static_cast<std::uint32_t>(bank.num_kernels()));
  w.u32(static_cast<std::uint32_t>(bank.num_samples()));
  w.u8(binary ? 0 : 1);
  for (int y : bank.labels) {
    if (binary)
      w.u8(static_cast<std::uint8_t>(static_cast<std::int8_t>(y)));
    else
      w.u32(static_cast<std::uint32_t>(static_cast<std::int32_t>(y)));
  }
  for (const auto& k : bank.kernels) {
    const auto& src = k.source();
    w.u8(static_cast<std::uint8_t>(src ? src->kind : KernelKind::kPrecomputed));
    const auto [p0, p1] = src ? src->parameters() : std::pair<double, double>{0.0, 0.0};
    w.f64(p0);
    w.f64(p1);
    const Matrix& v = k.values();
    for (Eigen::Index i = 0; i < v.rows(); ++i)
      for (Eigen::Index j = 0; j < v.cols(); ++j) w.f64(v(i, j));
  }
  return w.take();
}

KernelBank decode_bank(const std::vector<char>& bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw BankFormatError(BankFormatError::Kind::kBadMagic, "not a kernel bank file (bad magic)");
  r.skip(4);
  const std::uint32_t version = r.u32("version");
  if (version != kBankFormatVersion)
    throw BankFormatError(BankFormatError::Kind::kUnsupportedVersion,
                          "unsupported bank format version " + std::to_string(version));
  const std::uint32_t n_kernels = r.u32("kernel count");
  const std::uint32_t m = r.u32("sample count");
  if (n_kernels == 0 || m == 0)
    throw BankFormatError(BankFormatError::Kind::kDimensionMismatch,
                          "bank declares zero kernels or zero samples");
  const std::uint8_t encoding = r.u8("label encoding");
  if (encoding > 1)
    throw BankFormatError(BankFormatError::Kind::kInvalidContent,
                          "unknown label encoding " + std::to_string(encoding));

  KernelBank bank;
  bank.labels.reserve(m);
  for (std::uint32_t i = 0; i < m; ++i) {
    if (encoding == 0) {
      const auto y = static_cast<std::int8_t>(r.u8("labels"));
      if (y != 1 && y != -1)
        throw BankFormatError(BankFormatError::Kind::kInvalidContent,
                              "binary label encoding holds value " + std::to_string(y));
      bank.labels.push_back(y);
    } else {
      bank.labels.push_back(static_cast<std::int32_t>(r.u32("labels")));
    }
  }

  const std::size_t per_kernel = 1 + 16 + std::size_t{m} * m * 8;
  const std::size_t expected = per_kernel * n_kernels;
  if (r.remaining() < expected)
    throw BankFormatError(BankFormatError::Kind::kTruncated,
                          "bank payload truncated: expected " + std::to_string(expected) +
                              " bytes for " + std::to_string(n_kernels) + " kernels of " +
                              std::to_string(m) + " samples, found " +
                              std::to_string(r.remaining()));
  if (r.remaining() > expected)
    throw BankFormatError(BankFormatError::Kind::kDimensionMismatch,
                          "bank payload has " + std::to_string(r.remaining() - expected) +
                              " trailing bytes; declared dimensions are inconsistent");

  bank.kernels.reserve(n_kernels);
  for (std::uint32_t j = 0; j < n_kernels; ++j) {
    const std::uint8_t tag = r.u8("spec tag");
    const double p0 = r.f64("parameter");
    const double p1 = r.f64("parameter");
    Matrix v(m, m);
    for (Eigen::Index i = 0; i < v.rows(); ++i)
      for (Eigen::Index c = 0; c < v.cols(); ++c) v(i, c) = r.f64("kernel values");
    try {
      bank.kernels.emplace_back(std::move(v), spec_from_tag(tag, p0, p1));
    } catch (const KernelError& e) {
      throw BankFormatError(BankFormatError::Kind::kInvalidContent,
                            "kernel " + std::to_string(j) + ": " + e.what());
    }
  }
  return bank;
}

void save_bank(const KernelBank& bank, const std::filesystem::path& path) {
  const std::vector<char> bytes = encode_bank(bank);
  write_file_atomic(path, std::string_view(bytes.data(), bytes.size()));
}

KernelBank load_bank(const std::filesystem::path& path) { return decode_bank(read_file(path)); }

KernelBank import_csv_bank(const std::vector<std::filesystem::path>& kernel_paths,
                           const std::filesystem::path& labels_path) {
  KernelBank bank;
  {
    std::ifstream in(labels_path);
    if (!in) throw IoError("cannot open " + labels_path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      for (double v : parse_csv_row(line, labels_path, line_no)) {
        if (v != std::floor(v)) throw InvalidArgument("labels must be integers");
        bank.labels.push_back(static_cast<int>(v));
      }
    }
  }
  const auto m = static_cast<Eigen::Index>(bank.labels.size());
  for (const auto& path : kernel_paths) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    Matrix v(m, m);
    std::string line;
    Eigen::Index row = 0;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto values = parse_csv_row(line, path, line_no);
      if (row >= m || static_cast<Eigen::Index>(values.size()) != m)
        throw InvalidArgument(path.string() + ": expected a " + std::to_string(m) + "x" +
                              std::to_string(m) + " matrix matching the label count");
      for (Eigen::Index c = 0; c < m; ++c) v(row, c) = values[static_cast<std::size_t>(c)];
      ++row;
    }
    if (row != m)
      throw InvalidArgument(path.string() + ": has " + std::to_string(row) + " rows, expected " +
                            std::to_string(m));
    Matrix sym = 0.5 * (v + v.transpose());
    bank.kernels.emplace_back(std::move(sym));
  }
  bank.validate();
  return bank;
}

std::vector<std::string> load_groups(const std::filesystem::path& path, std::size_t num_kernels) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> groups(num_kernels);
  std::vector<bool> seen(num_kernels, false);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) +
                            ": expected kernel_index,group_name");
    std::size_t index = 0;
    try {
      index = std::stoul(line.substr(0, comma));
    } catch (const std::exception&) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": bad kernel index");
    }
    if (index >= num_kernels)
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) +
                            ": kernel index out of range");
    groups[index] = line.substr(comma + 1);
    seen[index] = true;
  }
  for (std::size_t j = 0; j < num_kernels; ++j)
    if (!seen[j]) throw InvalidArgument(path.string() + ": no group for kernel " + std::to_string(j));
  return groups;
}

}  // namespace cskl
