#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cskl/capped_simplex.hpp"
#include "cskl/error.hpp"
#include "cskl/kernel.hpp"
#include "cskl/svm.hpp"

namespace cskl {

enum class WeightConstraint { kCappedSimplex, kUnitSimplex, kLpBall };

/// Kernel weights together with the set they are constrained to.
struct MklWeights {
  Vector gamma;
  WeightConstraint constraint = WeightConstraint::kCappedSimplex;
  int t = 1;       // capped simplex only
  double p = 2.0;  // lp ball only

  static MklWeights capped(Vector gamma, int t);
  static MklWeights unit(Vector gamma);
  static MklWeights lp_ball(Vector gamma, double p);

  /// Throws InvalidArgument when gamma leaves its constraint set.
  void validate() const;
  /// Number of weights above `threshold`.
  std::size_t count_selected(double threshold = 1e-6) const;
};

/// Combination weighted by the stored gamma.
GramMatrix combine(const KernelBank& bank, const MklWeights& weights);

enum class GammaStepKind { kReducedGradient, kLpDirection };

struct CsklConfig {
  int t = 1;
  SvmConfig svm;
  double epsilon = 1e-5;  // relative objective change between outer iterations
  int max_outer_iters = 200;
  GammaStepKind gamma_step = GammaStepKind::kReducedGradient;
  int line_search_evals = 30;
  /// Convergence additionally requires g_t(d) - gamma'd <= this * g_t(d).
  double certificate_tolerance = 1e-4;
  /// Parallel-tangent extrapolation after every gamma step.
  bool accelerate = true;

  void validate(std::size_t num_kernels) const;
};

struct TraceEntry {
  int iteration = 0;
  double objective = 0.0;  // J(gamma) at the recorded gamma
  Vector gamma;
  Vector d;
  double step = 0.0;  // step length that produced this gamma (0 for the first entry)
  long smo_iterations = 0;
  int svm_solves = 0;
  double seconds = 0.0;
};

struct OptTrace {
  std::vector<TraceEntry> entries;
};

struct MklResult {
  MklWeights weights;
  SvmSolution svm;
  OptTrace trace;
  bool converged = false;
};

/// Raised when an inner SVM solve fails; keeps the trace collected so far.
class MklTrainingError : public Error {
 public:
  MklTrainingError(const std::string& what, OptTrace trace) : Error(what), trace_(std::move(trace)) {}
  const OptTrace& trace() const { return trace_; }

 private:
  OptTrace trace_;
};

/// J(gamma): optimal SVM dual value on the combined kernel, with warm starts
/// across calls. Counts SMO work for the trace.
class ObjectiveEvaluator {
 public:
  ObjectiveEvaluator(const KernelBank& bank, const SvmConfig& svm);

  struct Point {
    Vector gamma;
    SvmSolution svm;
    double objective = 0.0;
  };

  Point evaluate(const Vector& gamma);
  Vector d(const SvmSolution& svm) const { return compute_d(svm.alpha, bank_.labels, bank_); }

  long smo_iterations() const { return smo_iterations_; }
  int solves() const { return solves_; }
  void reset_counters() {
    smo_iterations_ = 0;
    solves_ = 0;
  }
  const KernelBank& bank() const { return bank_; }

 private:
  const KernelBank& bank_;
  SvmConfig svm_;
  Matrix combined_;
  std::optional<Vector> warm_;
  long smo_iterations_ = 0;
  int solves_ = 0;
};

struct GammaStep {
  ObjectiveEvaluator::Point point;  // new gamma with its SVM solution
  double step = 0.0;                // total distance travelled along the directions
  Vector direction;                 // first direction taken (zero when stationary)
};

/// One reduced-gradient update of gamma starting from `current`.
///
/// Walks along the descent direction saturating one coordinate at a time while
/// J keeps decreasing, then golden-section searches the last segment. `pivot`
/// selects the coordinate absorbing the equality constraint.
GammaStep reduced_gradient_gamma_step(ObjectiveEvaluator& eval, const ObjectiveEvaluator::Point& current,
                                      const Vector& d, int line_search_evals,
                                      std::size_t (*pivot)(const Vector&) = central_pivot);

/// One LP-direction update: exact LP direction then golden-section on [0, S_max].
GammaStep lp_gamma_step(ObjectiveEvaluator& eval, const ObjectiveEvaluator::Point& current,
                        const Vector& d, int line_search_evals);

/// Line search from `current` along current.gamma - anchor (parallel tangents).
/// Returns `current` unchanged when no feasible improvement exists.
GammaStep parallel_tangent_step(ObjectiveEvaluator& eval, const ObjectiveEvaluator::Point& current,
                                const Vector& anchor, int line_search_evals);

/// Capped-simplex MKL (sum gamma = t, 0 <= gamma <= 1), alternating SMO and gamma steps.
MklResult cskl_train(const KernelBank& bank, const CsklConfig& cfg);

/// Unit-simplex MKL with the largest-weight pivot.
MklResult simplemkl_train(const KernelBank& bank, const SvmConfig& svm, double epsilon = 1e-5,
                          int max_outer_iters = 200, double certificate_tolerance = 1e-4,
                          bool accelerate = true);

/// Closed-form l_p weight for fixed d: d^(1/(p-1)) / ||d^(1/(p-1))||_p.
/// All-zero d yields the uniform point on the unit l_p sphere.
Vector lpnorm_weights(const Vector& d, double p);

/// L_p-norm MKL by alternating SMO with lpnorm_weights().
MklResult lpnorm_mkl_train(const KernelBank& bank, double p, const SvmConfig& svm,
                           double epsilon = 1e-5, int max_outer_iters = 200);

/// Fixed weights (no weight learning); used as a comparison baseline.
MklResult fixed_weights_train(const KernelBank& bank, const MklWeights& weights, const SvmConfig& svm);

}  // namespace cskl
