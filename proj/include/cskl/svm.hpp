#pragma once

#include <optional>
#include <vector>

#include "cskl/kernel.hpp"

namespace cskl {

enum class SvmVariant { kC, kNu };

struct SvmConfig {
  SvmVariant variant = SvmVariant::kC;
  double c = 10.0;   // box bound for the C-SVM
  double nu = 0.2;   // sum of alphas for the nu-SVM
  double kkt_tolerance = 1e-6;
  /// Iteration cap for SMO; 0 selects max(1000000, 10000 * m).
  long max_iterations = 0;

  static SvmConfig c_svm(double c) {
    SvmConfig s;
    s.variant = SvmVariant::kC;
    s.c = c;
    return s;
  }
  static SvmConfig nu_svm(double nu) {
    SvmConfig s;
    s.variant = SvmVariant::kNu;
    s.nu = nu;
    return s;
  }

  void validate() const;
  /// Upper bound of each alpha: C, or 1/m for the nu-SVM.
  double upper_bound(std::size_t m) const;
};

struct SvmSolution {
  Vector alpha;
  double bias = 0.0;
  /// sum(alpha) - 1/2 a'YKYa for the C-SVM, -1/2 a'YKYa for the nu-SVM.
  double dual_objective = 0.0;
  std::vector<std::size_t> support_indices;
  double margin = 0.0;  // rho, nu-SVM only
  long iterations = 0;
  double kkt_violation = 0.0;  // maximal violating pair gap at exit
};

/// Throws InfeasibleNu when nu > 2 * min(#pos, #neg) / m.
void check_nu_feasible(const std::vector<int>& labels, double nu);

/// SMO with maximal-violating-pair working set selection.
///
/// `warm_start`, when given and feasible for the problem, seeds alpha.
SvmSolution solve_csvm(const Matrix& kernel, const std::vector<int>& labels, const SvmConfig& cfg,
                       const Vector* warm_start = nullptr);

/// nu-SVM with sum(alpha) = nu enforced as an equality; working pairs are
/// drawn from within one class so both equalities stay satisfied.
SvmSolution solve_nusvm(const Matrix& kernel, const std::vector<int>& labels, const SvmConfig& cfg,
                        const Vector* warm_start = nullptr);

/// Dispatches on cfg.variant.
SvmSolution solve_svm(const Matrix& kernel, const std::vector<int>& labels, const SvmConfig& cfg,
                      const Vector* warm_start = nullptr);

inline SvmSolution solve_csvm(const GramMatrix& k, const std::vector<int>& y, const SvmConfig& cfg) {
  return solve_csvm(k.values(), y, cfg);
}
inline SvmSolution solve_nusvm(const GramMatrix& k, const std::vector<int>& y, const SvmConfig& cfg) {
  return solve_nusvm(k.values(), y, cfg);
}

/// d_j = alpha' Y K_j Y alpha for every kernel in the bank.
Vector compute_d(const Vector& alpha, const std::vector<int>& labels, const KernelBank& bank);

/// f(x_t) = sum_i alpha_i y_i K_cross(i, t) + bias for every column t.
Vector decision_values(const SvmSolution& model, const Matrix& cross, const std::vector<int>& labels);

/// Largest violation of the KKT conditions of the problem `solution` claims to solve.
double kkt_violation(const Matrix& kernel, const std::vector<int>& labels, const SvmConfig& cfg,
                     const Vector& alpha);

}  // namespace cskl
