#include "cskl/kernel.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "cskl/error.hpp"

namespace cskl {

void Dataset::validate() const {
  if (labels.size() < 2) throw InvalidArgument("dataset needs at least 2 samples");
  if (static_cast<std::size_t>(points.rows()) != labels.size())
    throw InvalidArgument("dataset has " + std::to_string(points.rows()) + " points but " +
                          std::to_string(labels.size()) + " labels");
  std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) throw InvalidArgument("dataset needs at least two distinct labels");
  if (!points.allFinite()) throw InvalidArgument("dataset contains non-finite features");
}

KernelSpec KernelSpec::gaussian(double sigma, std::vector<int> features) {
  KernelSpec s;
  s.kind = KernelKind::kGaussian;
  s.width = sigma;
  s.features = std::move(features);
  return s;
}

KernelSpec KernelSpec::polynomial(int degree, double offset, std::vector<int> features) {
  KernelSpec s;
  s.kind = KernelKind::kPolynomial;
  s.degree = degree;
  s.offset = offset;
  s.features = std::move(features);
  return s;
}

KernelSpec KernelSpec::linear(std::vector<int> features) {
  KernelSpec s;
  s.kind = KernelKind::kLinear;
  s.features = std::move(features);
  return s;
}

void KernelSpec::validate() const {
  switch (kind) {
    case KernelKind::kGaussian:
      if (!(width > 0.0) || !std::isfinite(width))
        throw InvalidArgument("gaussian width must be strictly positive");
      break;
    case KernelKind::kPolynomial:
      if (degree < 1) throw InvalidArgument("polynomial degree must be >= 1");
      if (!(offset >= 0.0)) throw InvalidArgument("polynomial offset must be >= 0");
      break;
    case KernelKind::kLinear:
      break;
    case KernelKind::kPrecomputed:
      throw InvalidArgument("precomputed kernels cannot be evaluated from features");
  }
}

std::pair<double, double> KernelSpec::parameters() const {
  switch (kind) {
    case KernelKind::kGaussian:
      return {width, 0.0};
    case KernelKind::kPolynomial:
      return {static_cast<double>(degree), offset};
    default:
      return {0.0, 0.0};
  }
}

std::string KernelSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case KernelKind::kGaussian:
      os << "gaussian(sigma=" << width << ")";
      break;
    case KernelKind::kPolynomial:
      os << "polynomial(degree=" << degree << ",offset=" << offset << ")";
      break;
    case KernelKind::kLinear:
      os << "linear";
      break;
    case KernelKind::kPrecomputed:
      os << "precomputed";
      break;
  }
  if (!features.empty()) {
    os << "[";
    for (std::size_t i = 0; i < features.size(); ++i) os << (i ? " " : "") << features[i];
    os << "]";
  }
  return os.str();
}

GramMatrix::GramMatrix(Matrix values, std::optional<KernelSpec> source, double scale)
    : values_(std::move(values)), source_(std::move(source)), scale_(scale) {
  if (values_.rows() != values_.cols()) throw KernelError("gram matrix must be square");
  const Eigen::Index m = values_.rows();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      const double a = values_(i, j);
      const double b = values_(j, i);
      if (!std::isfinite(a) || !std::isfinite(b))
        throw KernelError("non-finite gram entry at (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
      if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a)))
        throw KernelError("gram matrix not symmetric at (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
    }
  }
  trace_ = values_.trace();
}

bool KernelBank::is_binary() const {
  for (int y : labels)
    if (y != 1 && y != -1) return false;
  return true;
}

void KernelBank::validate() const {
  if (kernels.empty()) throw InvalidArgument("kernel bank is empty");
  const std::size_t m = labels.size();
  for (std::size_t j = 0; j < kernels.size(); ++j) {
    if (kernels[j].size() != m)
      throw InvalidArgument("kernel " + std::to_string(j) + " has dimension " +
                            std::to_string(kernels[j].size()) + ", expected " +
                            std::to_string(m));
  }
  if (!groups.empty() && groups.size() != kernels.size())
    throw InvalidArgument("descriptor group mapping covers " + std::to_string(groups.size()) +
                          " kernels, bank has " + std::to_string(kernels.size()));
}

namespace {

Matrix select_features(const Matrix& points, const std::vector<int>& features) {
  if (features.empty()) return points;
  Matrix out(points.rows(), static_cast<Eigen::Index>(features.size()));
  for (std::size_t f = 0; f < features.size(); ++f) {
    if (features[f] < 0 || features[f] >= points.cols())
      throw InvalidArgument("feature index " + std::to_string(features[f]) + " out of range");
    out.col(static_cast<Eigen::Index>(f)) = points.col(features[f]);
  }
  return out;
}

double evaluate(const KernelSpec& spec, const Eigen::Ref<const Vector>& a,
                const Eigen::Ref<const Vector>& b) {
  switch (spec.kind) {
    case KernelKind::kGaussian:
      return std::exp(-(a - b).squaredNorm() / (2.0 * spec.width * spec.width));
    case KernelKind::kPolynomial:
      return std::pow(a.dot(b) + spec.offset, spec.degree);
    case KernelKind::kLinear:
      return a.dot(b);
    case KernelKind::kPrecomputed:
      break;
  }
  throw InvalidArgument("cannot evaluate a precomputed kernel");
}

}  // namespace

GramMatrix compute_gram(const Dataset& data, const KernelSpec& spec) {
  spec.validate();
  const Matrix x = select_features(data.points, spec.features);
  const Eigen::Index m = x.rows();
  Matrix k(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      const double v = evaluate(spec, x.row(i).transpose(), x.row(j).transpose());
      if (!std::isfinite(v))
        throw KernelError("non-finite kernel value for pair (" + std::to_string(i) + "," +
                          std::to_string(j) + ") with " + spec.describe());
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return GramMatrix(std::move(k), spec);
}

Matrix compute_cross_gram(const Matrix& rows, const Matrix& cols, const KernelSpec& spec) {
  spec.validate();
  const Matrix a = select_features(rows, spec.features);
  const Matrix b = select_features(cols, spec.features);
  Matrix k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      const double v = evaluate(spec, a.row(i).transpose(), b.row(j).transpose());
      if (!std::isfinite(v))
        throw KernelError("non-finite kernel value for pair (" + std::to_string(i) + "," +
                          std::to_string(j) + ") with " + spec.describe());
      k(i, j) = v;
    }
  }
  return k;
}

GramMatrix trace_normalize(const GramMatrix& kernel, double target) {
  if (!(kernel.trace() > 0.0))
    throw KernelError("cannot normalize a kernel with non-positive trace " +
                      std::to_string(kernel.trace()));
  const double factor = target / kernel.trace();
  return GramMatrix(kernel.values() * factor, kernel.source(), kernel.scale() * factor);
}

GramMatrix stabilize(const GramMatrix& kernel, double jitter) {
  if (jitter < 0.0) throw InvalidArgument("jitter must be non-negative");
  if (jitter == 0.0) return kernel;
  Matrix v = kernel.values();
  v.diagonal().array() += jitter;
  return GramMatrix(std::move(v), kernel.source(), kernel.scale());
}

void combine_into(const KernelBank& bank, const Vector& gamma, Matrix& out) {
  if (static_cast<std::size_t>(gamma.size()) != bank.num_kernels())
    throw InvalidArgument("weight vector has length " + std::to_string(gamma.size()) +
                          ", bank has " + std::to_string(bank.num_kernels()) + " kernels");
  const auto m = static_cast<Eigen::Index>(bank.num_samples());
  out.setZero(m, m);
  for (std::size_t j = 0; j < bank.num_kernels(); ++j) {
    const double g = gamma[static_cast<Eigen::Index>(j)];
    if (g < 0.0) throw InvalidArgument("kernel weights must be non-negative");
    if (g == 0.0) continue;
    out.noalias() += g * bank.kernels[j].values();
  }
}

GramMatrix combine(const KernelBank& bank, const Vector& gamma) {
  Matrix out;
  combine_into(bank, gamma, out);
  return GramMatrix(std::move(out));
}

KernelBank prepare_bank(std::vector<GramMatrix> kernels, std::vector<int> labels,
                        std::vector<std::string> groups, double jitter) {
  KernelBank bank;
  bank.labels = std::move(labels);
  bank.groups = std::move(groups);
  const double m = static_cast<double>(bank.labels.size());
  bank.kernels.reserve(kernels.size());
  for (auto& k : kernels) {
    GramMatrix normalized = trace_normalize(k, m);
    bank.kernels.push_back(stabilize(normalized, jitter * normalized.trace() / m));
  }
  bank.validate();
  return bank;
}

KernelBank restrict_bank(const KernelBank& bank, const std::vector<std::size_t>& indices) {
  const auto n = static_cast<Eigen::Index>(indices.size());
  KernelBank out;
  out.groups = bank.groups;
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= bank.num_samples()) throw InvalidArgument("sample index out of range");
    out.labels.push_back(bank.labels[i]);
  }
  for (const auto& k : bank.kernels) {
    Matrix v(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b)
        v(a, b) = k.values()(static_cast<Eigen::Index>(indices[a]),
                             static_cast<Eigen::Index>(indices[b]));
    out.kernels.emplace_back(std::move(v), k.source(), k.scale());
  }
  return out;
}

}  // namespace cskl
