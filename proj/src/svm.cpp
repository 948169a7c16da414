#include "cskl/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cskl/error.hpp"

namespace cskl {

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_labels(const Matrix& kernel, const std::vector<int>& labels) {
  if (kernel.rows() != kernel.cols())
    throw InvalidArgument("kernel matrix must be square");
  if (static_cast<std::size_t>(kernel.rows()) != labels.size())
    throw InvalidArgument("kernel has " + std::to_string(kernel.rows()) + " rows but " +
                          std::to_string(labels.size()) + " labels");
  for (int y : labels)
    if (y != 1 && y != -1) throw InvalidArgument("SVM labels must be +1 or -1");
}

Matrix signed_kernel(const Matrix& kernel, const std::vector<int>& labels) {
  const auto m = kernel.rows();
  Vector y(m);
  for (Eigen::Index i = 0; i < m; ++i) y[i] = labels[static_cast<std::size_t>(i)];
  return y.asDiagonal() * kernel * y.asDiagonal();
}

long iteration_cap(const SvmConfig& cfg, std::size_t m) {
  if (cfg.max_iterations > 0) return cfg.max_iterations;
  return std::max<long>(1000000, 10000 * static_cast<long>(m));
}

// Midpoint of [lower, upper], tolerating one open side.
double interval_midpoint(double lower, double upper) {
  if (std::isinf(lower) && std::isinf(upper)) return 0.0;
  if (std::isinf(lower)) return upper;
  if (std::isinf(upper)) return lower;
  return 0.5 * (lower + upper);
}

void fill_support(SvmSolution& s, double tolerance) {
  s.support_indices.clear();
  for (Eigen::Index i = 0; i < s.alpha.size(); ++i)
    if (s.alpha[i] > tolerance) s.support_indices.push_back(static_cast<std::size_t>(i));
}

bool feasible_start(const Vector* warm, const std::vector<int>& labels, double ub,
                    std::optional<double> sum_target) {
  if (warm == nullptr || static_cast<std::size_t>(warm->size()) != labels.size()) return false;
  double sum = 0.0;
  double signed_sum = 0.0;
  for (Eigen::Index i = 0; i < warm->size(); ++i) {
    const double a = (*warm)[i];
    if (!(a >= 0.0) || a > ub) return false;
    sum += a;
    signed_sum += a * labels[static_cast<std::size_t>(i)];
  }
  if (std::abs(signed_sum) > 1e-10 * std::max(1.0, sum)) return false;
  if (sum_target && std::abs(sum - *sum_target) > 1e-10) return false;
  return true;
}

// Maximal violating pair for the C-SVM. Returns the gap, -inf if no pair exists.
double select_c_pair(const Vector& alpha, const Vector& grad, const std::vector<int>& y, double c,
                     Eigen::Index& out_i, Eigen::Index& out_j) {
  double gmax = -kInf;
  double gmin = kInf;
  out_i = -1;
  out_j = -1;
  for (Eigen::Index t = 0; t < alpha.size(); ++t) {
    const int yt = y[static_cast<std::size_t>(t)];
    const double v = -yt * grad[t];
    const bool up = yt == 1 ? alpha[t] < c : alpha[t] > 0.0;
    const bool low = yt == 1 ? alpha[t] > 0.0 : alpha[t] < c;
    if (up && v > gmax) {
      gmax = v;
      out_i = t;
    }
    if (low && v < gmin) {
      gmin = v;
      out_j = t;
    }
  }
  if (out_i < 0 || out_j < 0) return -kInf;
  return gmax - gmin;
}

// Maximal violating pair inside one class for the nu-SVM (gradient of 1/2 a'Qa).
double select_nu_pair(const Vector& alpha, const Vector& grad, const std::vector<int>& y, double ub,
                      Eigen::Index& out_i, Eigen::Index& out_j) {
  double best = -kInf;
  out_i = -1;
  out_j = -1;
  for (int cls : {1, -1}) {
    double gmin = kInf;
    double gmax = -kInf;
    Eigen::Index i = -1;
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < alpha.size(); ++t) {
      if (y[static_cast<std::size_t>(t)] != cls) continue;
      if (alpha[t] < ub && grad[t] < gmin) {
        gmin = grad[t];
        i = t;
      }
      if (alpha[t] > 0.0 && grad[t] > gmax) {
        gmax = grad[t];
        j = t;
      }
    }
    if (i >= 0 && j >= 0 && gmax - gmin > best) {
      best = gmax - gmin;
      out_i = i;
      out_j = j;
    }
  }
  return best;
}

}  // namespace

void SvmConfig::validate() const {
  if (variant == SvmVariant::kC) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("C must be > 0");
  } else {
    if (!(nu > 0.0 && nu <= 1.0)) throw InvalidArgument("nu must lie in (0, 1]");
  }
  if (!(kkt_tolerance > 0.0)) throw InvalidArgument("KKT tolerance must be > 0");
  if (max_iterations < 0) throw InvalidArgument("max_iterations must be >= 0");
}

double SvmConfig::upper_bound(std::size_t m) const {
  return variant == SvmVariant::kC ? c : 1.0 / static_cast<double>(m);
}

void check_nu_feasible(const std::vector<int>& labels, double nu) {
  std::size_t pos = 0;
  std::size_t neg = 0;
  for (int y : labels) (y == 1 ? pos : neg)++;
  const double limit = 2.0 * static_cast<double>(std::min(pos, neg)) / static_cast<double>(labels.size());
  if (nu > limit + 1e-12)
    throw InfeasibleNu("nu = " + std::to_string(nu) + " is infeasible; class balance allows at most " +
                       std::to_string(limit));
}

SvmSolution solve_csvm(const Matrix& kernel, const std::vector<int>& labels, const SvmConfig& cfg,
                       const Vector* warm_start) {
  check_labels(kernel, labels);
  cfg.validate();
  if (cfg.variant != SvmVariant::kC) throw InvalidArgument("solve_csvm needs a C-SVM config");
  const auto m = kernel.rows();
  const double c = cfg.c;
  const Matrix q = signed_kernel(kernel, labels);

  SvmSolution s;
  s.alpha = feasible_start(warm_start, labels, c, std::nullopt) ? *warm_start : Vector::Zero(m);
  Vector grad = q * s.alpha - Vector::Ones(m);

  const long cap = iteration_cap(cfg, labels.size());
  long iter = 0;
  double gap = 0.0;
  for (;; ++iter) {
    Eigen::Index i = 0;
    Eigen::Index j = 0;
    gap = select_c_pair(s.alpha, grad, labels, c, i, j);
    if (i < 0 || gap <= cfg.kkt_tolerance) break;
    if (iter >= cap)
      throw SvmNonConvergence("SMO did not converge in " + std::to_string(cap) +
                                  " iterations (KKT violation " + std::to_string(gap) + ")",
                              gap);

    const double old_i = s.alpha[i];
    const double old_j = s.alpha[j];
    double& ai = s.alpha[i];
    double& aj = s.alpha[j];
    if (labels[static_cast<std::size_t>(i)] != labels[static_cast<std::size_t>(j)]) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) {
          aj = 0.0;
          ai = diff;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = -diff;
      }
      if (diff > 0.0) {
        if (ai > c) {
          ai = c;
          aj = c - diff;
        }
      } else if (aj > c) {
        aj = c;
        ai = c + diff;
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c) {
        if (ai > c) {
          ai = c;
          aj = sum - c;
        }
      } else if (aj < 0.0) {
        aj = 0.0;
        ai = sum;
      }
      if (sum > c) {
        if (aj > c) {
          aj = c;
          ai = sum - c;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = sum;
      }
    }
    const double di = ai - old_i;
    const double dj = aj - old_j;
    grad.noalias() += di * q.col(i) + dj * q.col(j);
  }
  s.iterations = iter;
  s.kkt_violation = std::max(gap, 0.0);

  // bias from unbounded support vectors, else the feasible interval midpoint
  double upper = kInf;
  double lower = -kInf;
  double free_sum = 0.0;
  int free_count = 0;
  for (Eigen::Index t = 0; t < m; ++t) {
    const int yt = labels[static_cast<std::size_t>(t)];
    const double yg = yt * grad[t];
    if (s.alpha[t] >= c) {
      if (yt == -1) upper = std::min(upper, yg);
      else lower = std::max(lower, yg);
    } else if (s.alpha[t] <= 0.0) {
      if (yt == 1) upper = std::min(upper, yg);
      else lower = std::max(lower, yg);
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  const double r = free_count > 0 ? free_sum / free_count : interval_midpoint(lower, upper);
  s.bias = -r;
  s.dual_objective = s.alpha.sum() - 0.5 * s.alpha.dot(q * s.alpha);
  fill_support(s, cfg.kkt_tolerance);
  return s;
}

SvmSolution solve_nusvm(const Matrix& kernel, const std::vector<int>& labels, const SvmConfig& cfg,
                        const Vector* warm_start) {
  check_labels(kernel, labels);
  cfg.validate();
  if (cfg.variant != SvmVariant::kNu) throw InvalidArgument("solve_nusvm needs a nu-SVM config");
  check_nu_feasible(labels, cfg.nu);
  const auto m = kernel.rows();
  const double ub = cfg.upper_bound(labels.size());
  const Matrix q = signed_kernel(kernel, labels);

  SvmSolution s;
  if (feasible_start(warm_start, labels, ub, cfg.nu)) {
    s.alpha = *warm_start;
  } else {
    s.alpha = Vector::Zero(m);
    double remaining_pos = cfg.nu / 2.0;
    double remaining_neg = cfg.nu / 2.0;
    for (Eigen::Index t = 0; t < m; ++t) {
      double& remaining = labels[static_cast<std::size_t>(t)] == 1 ? remaining_pos : remaining_neg;
      s.alpha[t] = std::min(ub, remaining);
      remaining -= s.alpha[t];
    }
  }
  Vector grad = q * s.alpha;

  const long cap = iteration_cap(cfg, labels.size());
  long iter = 0;
  double gap = 0.0;
  for (;; ++iter) {
    Eigen::Index i = 0;
    Eigen::Index j = 0;
    gap = select_nu_pair(s.alpha, grad, labels, ub, i, j);
    if (i < 0 || gap <= cfg.kkt_tolerance) break;
    if (iter >= cap)
      throw SvmNonConvergence("SMO did not converge in " + std::to_string(cap) +
                                  " iterations (KKT violation " + std::to_string(gap) + ")",
                              gap);
    // move mass from j (large gradient) to i (small gradient), same class
    double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
    if (quad <= 0.0) quad = kTau;
    double delta = (grad[j] - grad[i]) / quad;
    const double room_i = ub - s.alpha[i];
    const double room_j = s.alpha[j];
    if (delta >= room_i && room_i <= room_j) {
      delta = room_i;
      s.alpha[i] = ub;
      s.alpha[j] -= delta;
      if (room_i == room_j) s.alpha[j] = 0.0;
    } else if (delta >= room_j) {
      delta = room_j;
      s.alpha[i] += delta;
      s.alpha[j] = 0.0;
    } else {
      s.alpha[i] += delta;
      s.alpha[j] -= delta;
    }
    grad.noalias() += delta * (q.col(i) - q.col(j));
  }
  s.iterations = iter;
  s.kkt_violation = std::max(gap, 0.0);

  // r1, r2: KKT values of the two classes (gradient equals rho -/+ b on free vectors)
  double r[2] = {0.0, 0.0};
  for (int k = 0; k < 2; ++k) {
    const int cls = k == 0 ? 1 : -1;
    double upper = kInf;
    double lower = -kInf;
    double free_sum = 0.0;
    int free_count = 0;
    for (Eigen::Index t = 0; t < m; ++t) {
      if (labels[static_cast<std::size_t>(t)] != cls) continue;
      if (s.alpha[t] >= ub) lower = std::max(lower, grad[t]);
      else if (s.alpha[t] <= 0.0) upper = std::min(upper, grad[t]);
      else {
        free_sum += grad[t];
        ++free_count;
      }
    }
    r[k] = free_count > 0 ? free_sum / free_count : interval_midpoint(lower, upper);
  }
  s.margin = 0.5 * (r[0] + r[1]);
  s.bias = 0.5 * (r[1] - r[0]);
  s.dual_objective = -0.5 * s.alpha.dot(q * s.alpha);
  fill_support(s, cfg.kkt_tolerance);
  return s;
}

SvmSolution solve_svm(const Matrix& kernel, const std::vector<int>& labels, const SvmConfig& cfg,
                      const Vector* warm_start) {
  return cfg.variant == SvmVariant::kC ? solve_csvm(kernel, labels, cfg, warm_start)
                                       : solve_nusvm(kernel, labels, cfg, warm_start);
}

Vector compute_d(const Vector& alpha, const std::vector<int>& labels, const KernelBank& bank) {
  if (static_cast<std::size_t>(alpha.size()) != bank.num_samples() || labels.size() != bank.num_samples())
    throw InvalidArgument("alpha/labels do not match the bank sample count");
  Vector ya(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) ya[i] = alpha[i] * labels[static_cast<std::size_t>(i)];
  Vector d(static_cast<Eigen::Index>(bank.num_kernels()));
  for (std::size_t j = 0; j < bank.num_kernels(); ++j)
    d[static_cast<Eigen::Index>(j)] = ya.dot(bank.kernels[j].values() * ya);
  return d;
}

Vector decision_values(const SvmSolution& model, const Matrix& cross, const std::vector<int>& labels) {
  if (cross.rows() != model.alpha.size() || labels.size() != static_cast<std::size_t>(cross.rows()))
    throw InvalidArgument("cross kernel has " + std::to_string(cross.rows()) +
                          " rows, model has " + std::to_string(model.alpha.size()) + " samples");
  Vector ya(model.alpha.size());
  for (Eigen::Index i = 0; i < ya.size(); ++i)
    ya[i] = model.alpha[i] * labels[static_cast<std::size_t>(i)];
  Vector f = cross.transpose() * ya;
  f.array() += model.bias;
  return f;
}

double kkt_violation(const Matrix& kernel, const std::vector<int>& labels, const SvmConfig& cfg,
                     const Vector& alpha) {
  check_labels(kernel, labels);
  const Matrix q = signed_kernel(kernel, labels);
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  double gap = 0.0;
  if (cfg.variant == SvmVariant::kC) {
    const Vector grad = q * alpha - Vector::Ones(alpha.size());
    gap = select_c_pair(alpha, grad, labels, cfg.c, i, j);
  } else {
    const Vector grad = q * alpha;
    gap = select_nu_pair(alpha, grad, labels, cfg.upper_bound(labels.size()), i, j);
  }
  return std::max(gap, 0.0);
}

}  // namespace cskl
