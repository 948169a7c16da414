#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cskl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Feature matrix (one sample per row) with integer class labels.
struct Dataset {
  Matrix points;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  /// Throws InvalidArgument unless m >= 2, two distinct labels and finite features.
  void validate() const;
};

enum class KernelKind : std::uint8_t { kPrecomputed = 0, kGaussian = 1, kPolynomial = 2, kLinear = 3 };

struct KernelSpec {
  KernelKind kind = KernelKind::kLinear;
  double width = 1.0;   // gaussian sigma
  int degree = 2;       // polynomial degree
  double offset = 0.0;  // polynomial offset c
  std::vector<int> features;  // empty = all features

  static KernelSpec gaussian(double sigma, std::vector<int> features = {});
  static KernelSpec polynomial(int degree, double offset, std::vector<int> features = {});
  static KernelSpec linear(std::vector<int> features = {});

  void validate() const;
  /// The two f64 parameter slots of the bank file format.
  std::pair<double, double> parameters() const;
  std::string describe() const;
};

/// Dense symmetric Gram matrix with cached trace.
///
/// `scale` is the factor that maps raw kernel evaluations to the stored values;
/// it is needed to evaluate train-versus-test kernels consistently.
class GramMatrix {
 public:
  GramMatrix() = default;
  /// Checks symmetry; throws KernelError on asymmetric or non-finite input.
  explicit GramMatrix(Matrix values, std::optional<KernelSpec> source = std::nullopt,
                      double scale = 1.0);

  const Matrix& values() const { return values_; }
  double trace() const { return trace_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.rows()); }
  const std::optional<KernelSpec>& source() const { return source_; }
  double scale() const { return scale_; }

 private:
  Matrix values_;
  double trace_ = 0.0;
  std::optional<KernelSpec> source_;
  double scale_ = 1.0;
};

/// Kernels over a shared sample set plus labels.
///
/// Labels are {+1,-1} for binary tasks; multiclass banks carry arbitrary
/// non-negative class ids and are reduced to binary banks before training.
struct KernelBank {
  std::vector<GramMatrix> kernels;
  std::vector<int> labels;
  std::vector<std::string> groups;  // descriptor group per kernel, empty when unknown

  std::size_t num_kernels() const { return kernels.size(); }
  std::size_t num_samples() const { return labels.size(); }
  bool is_binary() const;
  /// Dimension agreement, label count, group count. Throws InvalidArgument.
  void validate() const;
};

GramMatrix compute_gram(const Dataset& data, const KernelSpec& spec);

/// Raw kernel between every row of `rows` and every row of `cols` (rows.size x cols.size).
Matrix compute_cross_gram(const Matrix& rows, const Matrix& cols, const KernelSpec& spec);

GramMatrix trace_normalize(const GramMatrix& kernel, double target);

GramMatrix stabilize(const GramMatrix& kernel, double jitter);

/// Entrywise sum of gamma_j * K_j.
GramMatrix combine(const KernelBank& bank, const Vector& gamma);

/// Same as combine() but writes into a caller-owned buffer; used in solver inner loops.
void combine_into(const KernelBank& bank, const Vector& gamma, Matrix& out);

inline constexpr double kDefaultJitter = 1e-8;

/// Normalizes every kernel to trace m and adds jitter * (trace/m) to the diagonal.
KernelBank prepare_bank(std::vector<GramMatrix> kernels, std::vector<int> labels,
                        std::vector<std::string> groups = {}, double jitter = kDefaultJitter);

/// Restriction of every kernel to the given sample indices (values only, not re-normalized).
KernelBank restrict_bank(const KernelBank& bank, const std::vector<std::size_t>& indices);

}  // namespace cskl
