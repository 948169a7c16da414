#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cskl/kernel.hpp"
#include "cskl/mkl.hpp"

namespace cskl {

/// Two (or more) identity-covariance Gaussian classes, per-dimension and
/// joint kernels, plus label-independent noise kernels.
struct SyntheticConfig {
  std::size_t m = 500;       // samples over train and test together
  int dim = 3;
  double separation = 3.0;   // class c has mean separation * c in every coordinate
  int classes = 2;
  std::uint64_t seed = 1;
  std::vector<double> gaussian_widths{0.5, 2.0};
  std::vector<int> polynomial_degrees{2, 3};
  double polynomial_offset = 1.0;
  int noisy_kernels = 2;
  int noise_dim = 3;         // noise features per noisy kernel
  double train_fraction = 0.5;

  std::size_t total_kernels() const;
  void validate() const;
};

/// Samples (informative features first, then noise features) and the kernel
/// specs/groups applied to them, in bank order.
struct SyntheticSample {
  Dataset data;
  std::vector<KernelSpec> specs;
  std::vector<std::string> groups;
};

SyntheticSample sample_synthetic(const SyntheticConfig& cfg);

/// Normalized, stabilized bank over every sample (train and test).
KernelBank synthetic_full_bank(const SyntheticConfig& cfg);

/// Train/test split with a bank over the training part and the train-vs-test
/// kernels scaled consistently with it.
struct EvalProblem {
  std::string name;
  KernelBank train;
  std::vector<Matrix> cross;  // per kernel, m_train x q
  std::vector<int> test_labels;
  std::vector<std::size_t> train_index;  // positions in the source sample set
  std::vector<std::size_t> test_index;
};

struct SyntheticSplit {
  Dataset train;
  Dataset test;
  KernelBank bank;
  EvalProblem problem;
};

/// Draws the samples, splits them (stratified) and builds the training bank.
SyntheticSplit generate_synthetic(const SyntheticConfig& cfg);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class shuffle with `seed`; round(fraction * class size) samples go to train.
Split stratified_split(const std::vector<int>& labels, double train_fraction, std::uint64_t seed);

/// Builds an EvalProblem from a bank over all samples. `binary_labels`, when
/// non-empty, replaces the bank labels (indexed like the bank).
EvalProblem make_eval_problem(const KernelBank& full, const Split& split,
                              const std::vector<int>& binary_labels = {}, std::string name = {},
                              double jitter = kDefaultJitter);

/// Combined train-vs-test kernel for the given weights.
Matrix combine_cross(const EvalProblem& problem, const Vector& gamma);
Vector predict_decision(const EvalProblem& problem, const MklResult& model);
double accuracy(const Vector& decision, const std::vector<int>& labels);

enum class SolverKind { kCskl, kSimpleMkl, kLpMkl, kUniform };

struct SolverSpec {
  SolverKind kind = SolverKind::kCskl;
  /// CSKL only: candidate t values; with several, the best test accuracy wins
  /// (ties to the smallest t). Empty means 1..N.
  std::vector<int> t_values;
  double p = 2.0;

  std::string label() const;
  static SolverSpec parse(const std::string& text);
};

struct ExperimentConfig {
  SvmConfig svm;
  double epsilon = 1e-5;
  int max_outer_iters = 200;
  GammaStepKind gamma_step = GammaStepKind::kReducedGradient;
  int threads = 1;
};

struct SolverOutcome {
  std::optional<MklResult> model;
  int t = 0;  // chosen t for CSKL
  double accuracy = 0.0;
  std::size_t selected_kernels = 0;
  std::size_t selected_groups = 0;
  std::string error;  // non-empty when training failed
  bool ok() const { return error.empty(); }
};

/// Trains one solver on a problem's training bank (single t for CSKL).
MklResult train_solver(const KernelBank& bank, SolverKind kind, int t, double p, const ExperimentConfig& cfg);

/// Trains and evaluates; for CSKL with several t values keeps the best.
SolverOutcome run_solver(const EvalProblem& problem, const SolverSpec& spec, const ExperimentConfig& cfg);

/// Distinct descriptor groups whose kernels carry weight above `threshold`.
/// Without a group mapping every kernel is its own group.
std::size_t count_groups(const KernelBank& bank, const Vector& gamma, double threshold = 1e-6);

/// Runs `fn(i)` for i in [0, count) on up to `threads` workers. Results must be
/// stored by index so output order never depends on scheduling.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

struct SweepRow {
  int t = 0;
  std::size_t problem = 0;
  double accuracy = 0.0;
  double objective = 0.0;
  Vector gamma;
  std::size_t selected_kernels = 0;
  std::size_t selected_groups = 0;
  bool converged = false;
  int iterations = 0;
  double seconds = 0.0;
  std::string error;
};

struct SweepReport {
  std::vector<int> t_values;
  std::vector<std::string> problem_names;
  std::vector<SweepRow> rows;  // t-major, problem-minor

  /// Mean accuracy over problems for each t (failed runs excluded).
  std::vector<double> mean_accuracy() const;
  std::vector<double> mean_selected_groups() const;
};

/// CSKL for every t on every problem, evaluated on the test split.
SweepReport sweep_t(const std::vector<EvalProblem>& problems, const std::vector<int>& t_values,
                    const ExperimentConfig& cfg);

enum class MulticlassScheme { kOneVsOne, kOneVsRest };

struct BinaryTask {
  std::string name;
  int positive = 0;
  int negative = 0;
  bool rest = false;  // positive class against every other class
  EvalProblem problem;        // test restricted to the task's classes
  std::vector<Matrix> cross_all;  // train-vs-every-test-sample
};

/// Binary tasks of a multiclass bank over all samples, after `split`.
std::vector<BinaryTask> make_tasks(const KernelBank& full, const Split& split, MulticlassScheme scheme,
                                   double jitter = kDefaultJitter);

struct MulticlassModel {
  MulticlassScheme scheme = MulticlassScheme::kOneVsOne;
  std::vector<int> classes;
  std::vector<SolverOutcome> models;  // aligned with the task list
};

MulticlassModel train_multiclass(const std::vector<BinaryTask>& tasks, MulticlassScheme scheme,
                                 const SolverSpec& solver, const ExperimentConfig& cfg);

/// One label per test sample: majority vote (ties by summed decision values,
/// then lowest class id) or argmax decision value.
std::vector<int> predict_multiclass(const MulticlassModel& model, const std::vector<BinaryTask>& tasks);

struct ComparisonRow {
  std::string task;
  std::vector<SolverOutcome> outcomes;  // aligned with the solver list
};

struct Tally {
  std::size_t wins = 0;
  std::size_t losses = 0;
  std::size_t ties = 0;
  std::size_t failed = 0;
  /// Histograms of the winning solver's selected-group count: index = count.
  std::vector<std::size_t> reference_win_groups;
  std::vector<std::size_t> other_win_groups;
};

struct ComparisonReport {
  std::vector<std::string> solvers;
  std::vector<ComparisonRow> rows;
  /// tallies[k-1]: solver 0 against solver k.
  std::vector<Tally> tallies;
};

/// Requires at least two solvers. Solver 0 is the reference of every tally.
ComparisonReport compare_solvers(const std::vector<EvalProblem>& tasks, const std::vector<SolverSpec>& solvers,
                                 const ExperimentConfig& cfg);

}  // namespace cskl
