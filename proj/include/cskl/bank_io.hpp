#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cskl/error.hpp"
#include "cskl/kernel.hpp"

namespace cskl {

/// Binary kernel bank file (all integers and reals little-endian):
///
///   "CSKB" | u32 version=1 | u32 n_kernels | u32 n_samples | u8 label_encoding
///   labels: n_samples x i8 (encoding 0, values +1/-1) or i32 (encoding 1, multiclass)
///   per kernel: u8 spec tag | f64 param0 | f64 param1 | n_samples^2 f64 row-major
class BankFormatError : public Error {
 public:
  enum class Kind { kBadMagic, kUnsupportedVersion, kTruncated, kDimensionMismatch, kInvalidContent };

  BankFormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kBankFormatVersion = 1;

std::vector<char> encode_bank(const KernelBank& bank);
KernelBank decode_bank(const std::vector<char>& bytes);

/// Atomic write (temp file then rename).
void save_bank(const KernelBank& bank, const std::filesystem::path& path);
KernelBank load_bank(const std::filesystem::path& path);

/// One CSV per kernel (m rows of m comma-separated reals) plus a labels CSV
/// (one integer per line or comma separated). Slight asymmetry from text
/// rounding is removed by averaging with the transpose. Values are returned
/// raw; pass the result through prepare_bank() before training.
KernelBank import_csv_bank(const std::vector<std::filesystem::path>& kernel_paths,
                           const std::filesystem::path& labels_path);

/// Descriptor-group mapping: one "kernel_index,group_name" line per kernel.
std::vector<std::string> load_groups(const std::filesystem::path& path, std::size_t num_kernels);

}  // namespace cskl
