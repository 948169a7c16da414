#include "cskl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "cskl/error.hpp"

namespace cskl {

std::size_t SyntheticConfig::total_kernels() const {
  return (gaussian_widths.size() + polynomial_degrees.size()) * static_cast<std::size_t>(dim + 1) +
         static_cast<std::size_t>(noisy_kernels);
}

void SyntheticConfig::validate() const {
  if (dim < 1) throw InvalidArgument("dim must be >= 1");
  if (classes < 2) throw InvalidArgument("need at least two classes");
  if (m < static_cast<std::size_t>(4 * classes)) throw InvalidArgument("too few samples for the class count");
  if (noisy_kernels < 0 || noise_dim < 1) throw InvalidArgument("invalid noise kernel settings");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("train fraction must lie in (0,1)");
  for (double w : gaussian_widths)
    if (!(w > 0.0)) throw InvalidArgument("gaussian widths must be > 0");
  for (int q : polynomial_degrees)
    if (q < 1) throw InvalidArgument("polynomial degrees must be >= 1");
  if (!(polynomial_offset >= 0.0)) throw InvalidArgument("polynomial offset must be >= 0");
  if (total_kernels() == 0) throw InvalidArgument("configuration yields no kernels");
}

namespace {

double median_pairwise_distance(const Matrix& x) {
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(x.rows() * (x.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) dist.push_back((x.row(i) - x.row(j)).norm());
  auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  return *mid;
}

std::vector<int> range_features(int begin, int count) {
  std::vector<int> f(static_cast<std::size_t>(count));
  std::iota(f.begin(), f.end(), begin);
  return f;
}

Matrix block(const Matrix& k, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = 0; b < cols.size(); ++b)
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          k(static_cast<Eigen::Index>(rows[a]), static_cast<Eigen::Index>(cols[b]));
  return out;
}

Dataset subset(const Dataset& data, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.points.resize(static_cast<Eigen::Index>(idx.size()), data.points.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.points.row(static_cast<Eigen::Index>(i)) = data.points.row(static_cast<Eigen::Index>(idx[i]));
    out.labels.push_back(data.labels[idx[i]]);
  }
  return out;
}

std::vector<int> sorted_classes(const std::vector<int>& labels) {
  std::set<int> s(labels.begin(), labels.end());
  return {s.begin(), s.end()};
}

}  // namespace

SyntheticSample sample_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int noise_cols = cfg.noisy_kernels * cfg.noise_dim;
  SyntheticSample s;
  s.data.points.resize(static_cast<Eigen::Index>(cfg.m), cfg.dim + noise_cols);
  const std::size_t per_class = cfg.m / static_cast<std::size_t>(cfg.classes);
  const std::size_t extra = cfg.m % static_cast<std::size_t>(cfg.classes);
  Eigen::Index row = 0;
  for (int c = 0; c < cfg.classes; ++c) {
    const std::size_t count = per_class + (static_cast<std::size_t>(c) < extra ? 1 : 0);
    const int label = cfg.classes == 2 ? (c == 0 ? -1 : 1) : c;
    for (std::size_t i = 0; i < count; ++i, ++row) {
      for (int f = 0; f < cfg.dim; ++f) s.data.points(row, f) = cfg.separation * c + normal(rng);
      for (int f = 0; f < noise_cols; ++f) s.data.points(row, cfg.dim + f) = normal(rng);
      s.data.labels.push_back(label);
    }
  }

  std::vector<std::pair<std::vector<int>, std::string>> subsets;
  for (int f = 0; f < cfg.dim; ++f) subsets.emplace_back(std::vector<int>{f}, "dim" + std::to_string(f));
  subsets.emplace_back(range_features(0, cfg.dim), "all");
  for (const auto& [features, group] : subsets) {
    for (double w : cfg.gaussian_widths) {
      s.specs.push_back(KernelSpec::gaussian(w, features));
      s.groups.push_back(group);
    }
    for (int q : cfg.polynomial_degrees) {
      s.specs.push_back(KernelSpec::polynomial(q, cfg.polynomial_offset, features));
      s.groups.push_back(group);
    }
  }
  for (int j = 0; j < cfg.noisy_kernels; ++j) {
    const auto features = range_features(cfg.dim + j * cfg.noise_dim, cfg.noise_dim);
    Matrix noise(s.data.points.rows(), cfg.noise_dim);
    for (int f = 0; f < cfg.noise_dim; ++f) noise.col(f) = s.data.points.col(features[static_cast<std::size_t>(f)]);
    s.specs.push_back(KernelSpec::gaussian(median_pairwise_distance(noise), features));
    s.groups.push_back("noise" + std::to_string(j));
  }
  return s;
}

namespace {

KernelBank raw_bank(const SyntheticSample& s) {
  KernelBank bank;
  bank.labels = s.data.labels;
  bank.groups = s.groups;
  for (const auto& spec : s.specs) bank.kernels.push_back(compute_gram(s.data, spec));
  return bank;
}

}  // namespace

KernelBank synthetic_full_bank(const SyntheticConfig& cfg) {
  const SyntheticSample s = sample_synthetic(cfg);
  KernelBank raw = raw_bank(s);
  return prepare_bank(std::move(raw.kernels), std::move(raw.labels), std::move(raw.groups));
}

Split stratified_split(const std::vector<int>& labels, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("train fraction must lie in (0,1)");
  std::mt19937_64 rng(seed);
  Split split;
  for (int c : sorted_classes(labels)) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) members.push_back(i);
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(members.size())));
    split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

EvalProblem make_eval_problem(const KernelBank& full, const Split& split, const std::vector<int>& binary_labels,
                              std::string name, double jitter) {
  full.validate();
  const std::vector<int>& labels = binary_labels.empty() ? full.labels : binary_labels;
  if (labels.size() != full.num_samples()) throw InvalidArgument("label vector does not cover the bank");
  EvalProblem p;
  p.name = std::move(name);
  p.train_index = split.train;
  p.test_index = split.test;
  for (std::size_t i : split.train) p.train.labels.push_back(labels.at(i));
  for (std::size_t i : split.test) p.test_labels.push_back(labels.at(i));
  p.train.groups = full.groups;
  const double m_train = static_cast<double>(split.train.size());
  for (const auto& k : full.kernels) {
    Matrix train_block = block(k.values(), split.train, split.train);
    const double tr = train_block.trace();
    if (!(tr > 0.0)) throw KernelError("training block of a kernel has non-positive trace");
    const double factor = m_train / tr;
    GramMatrix normalized(train_block * factor, k.source(), k.scale() * factor);
    p.train.kernels.push_back(stabilize(normalized, jitter));
    p.cross.push_back(block(k.values(), split.train, split.test) * factor);
  }
  p.train.validate();
  return p;
}

SyntheticSplit generate_synthetic(const SyntheticConfig& cfg) {
  const SyntheticSample s = sample_synthetic(cfg);
  const KernelBank raw = raw_bank(s);
  const Split split = stratified_split(s.data.labels, cfg.train_fraction, cfg.seed);
  SyntheticSplit out;
  out.problem = make_eval_problem(raw, split, {}, "synthetic-seed" + std::to_string(cfg.seed));
  out.train = subset(s.data, split.train);
  out.test = subset(s.data, split.test);
  out.bank = out.problem.train;
  return out;
}

Matrix combine_cross(const EvalProblem& problem, const Vector& gamma) {
  if (static_cast<std::size_t>(gamma.size()) != problem.cross.size())
    throw InvalidArgument("weight vector does not match the kernel count");
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(problem.train.num_samples()),
                            static_cast<Eigen::Index>(problem.test_labels.size()));
  for (std::size_t j = 0; j < problem.cross.size(); ++j)
    if (gamma[static_cast<Eigen::Index>(j)] != 0.0) out.noalias() += gamma[static_cast<Eigen::Index>(j)] * problem.cross[j];
  return out;
}

Vector predict_decision(const EvalProblem& problem, const MklResult& model) {
  return decision_values(model.svm, combine_cross(problem, model.weights.gamma), problem.train.labels);
}

double accuracy(const Vector& decision, const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int predicted = decision[static_cast<Eigen::Index>(i)] >= 0.0 ? 1 : -1;
    if (predicted == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::string SolverSpec::label() const {
  std::ostringstream os;
  switch (kind) {
    case SolverKind::kCskl:
      os << "cskl";
      if (t_values.size() == 1) os << ":t=" << t_values.front();
      else if (!t_values.empty()) os << ":t=" << t_values.front() << ".." << t_values.back();
      break;
    case SolverKind::kSimpleMkl:
      os << "simplemkl";
      break;
    case SolverKind::kLpMkl:
      os << "lpmkl:p=" << p;
      break;
    case SolverKind::kUniform:
      os << "uniform";
      break;
  }
  return os.str();
}

SolverSpec SolverSpec::parse(const std::string& text) {
  SolverSpec s;
  if (text == "cskl") s.kind = SolverKind::kCskl;
  else if (text == "simplemkl") s.kind = SolverKind::kSimpleMkl;
  else if (text == "lpmkl") s.kind = SolverKind::kLpMkl;
  else if (text == "uniform") s.kind = SolverKind::kUniform;
  else throw InvalidArgument("unknown solver '" + text + "' (expected cskl, simplemkl, lpmkl or uniform)");
  return s;
}

MklResult train_solver(const KernelBank& bank, SolverKind kind, int t, double p, const ExperimentConfig& cfg) {
  switch (kind) {
    case SolverKind::kCskl: {
      CsklConfig c;
      c.t = t;
      c.svm = cfg.svm;
      c.epsilon = cfg.epsilon;
      c.max_outer_iters = cfg.max_outer_iters;
      c.gamma_step = cfg.gamma_step;
      return cskl_train(bank, c);
    }
    case SolverKind::kSimpleMkl:
      return simplemkl_train(bank, cfg.svm, cfg.epsilon, cfg.max_outer_iters);
    case SolverKind::kLpMkl:
      return lpnorm_mkl_train(bank, p, cfg.svm, cfg.epsilon, cfg.max_outer_iters);
    case SolverKind::kUniform: {
      const auto n = static_cast<Eigen::Index>(bank.num_kernels());
      return fixed_weights_train(bank, MklWeights::capped(Vector::Ones(n), static_cast<int>(n)), cfg.svm);
    }
  }
  throw InvalidArgument("unknown solver kind");
}

std::size_t count_groups(const KernelBank& bank, const Vector& gamma, double threshold) {
  std::set<std::string> selected;
  std::size_t kernels = 0;
  for (Eigen::Index j = 0; j < gamma.size(); ++j) {
    if (gamma[j] <= threshold) continue;
    ++kernels;
    if (!bank.groups.empty()) selected.insert(bank.groups[static_cast<std::size_t>(j)]);
  }
  return bank.groups.empty() ? kernels : selected.size();
}

SolverOutcome run_solver(const EvalProblem& problem, const SolverSpec& spec, const ExperimentConfig& cfg) {
  SolverOutcome best;
  std::vector<int> ts{0};
  if (spec.kind == SolverKind::kCskl) {
    ts = spec.t_values;
    if (ts.empty()) {
      ts.resize(problem.train.num_kernels());
      std::iota(ts.begin(), ts.end(), 1);
    }
  }
  bool have = false;
  for (int t : ts) {
    try {
      MklResult model = train_solver(problem.train, spec.kind, t, spec.p, cfg);
      const double acc = accuracy(predict_decision(problem, model), problem.test_labels);
      if (!have || acc > best.accuracy) {
        best.t = t;
        best.accuracy = acc;
        best.selected_kernels = model.weights.count_selected();
        best.selected_groups = count_groups(problem.train, model.weights.gamma);
        best.model = std::move(model);
        best.error.clear();
        have = true;
      }
    } catch (const Error& e) {
      if (!have) best.error = e.what();
    }
  }
  return best;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<double> SweepReport::mean_accuracy() const {
  std::vector<double> out;
  for (int t : t_values) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : rows)
      if (r.t == t && r.error.empty()) {
        sum += r.accuracy;
        ++n;
      }
    out.push_back(n > 0 ? sum / n : 0.0);
  }
  return out;
}

std::vector<double> SweepReport::mean_selected_groups() const {
  std::vector<double> out;
  for (int t : t_values) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : rows)
      if (r.t == t && r.error.empty()) {
        sum += static_cast<double>(r.selected_groups);
        ++n;
      }
    out.push_back(n > 0 ? sum / n : 0.0);
  }
  return out;
}

SweepReport sweep_t(const std::vector<EvalProblem>& problems, const std::vector<int>& t_values,
                    const ExperimentConfig& cfg) {
  if (problems.empty()) throw InvalidArgument("sweep needs at least one problem");
  const std::size_t n = problems.front().train.num_kernels();
  for (int t : t_values)
    if (t < 1 || static_cast<std::size_t>(t) > n)
      throw InvalidArgument("t = " + std::to_string(t) + " outside 1.." + std::to_string(n));
  SweepReport report;
  report.t_values = t_values;
  for (const auto& p : problems) report.problem_names.push_back(p.name);
  report.rows.resize(t_values.size() * problems.size());
  parallel_for(report.rows.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t ti = job / problems.size();
    const std::size_t pi = job % problems.size();
    SweepRow& row = report.rows[job];
    row.t = t_values[ti];
    row.problem = pi;
    try {
      const MklResult model = train_solver(problems[pi].train, SolverKind::kCskl, row.t, 2.0, cfg);
      row.accuracy = accuracy(predict_decision(problems[pi], model), problems[pi].test_labels);
      row.objective = model.trace.entries.back().objective;
      row.gamma = model.weights.gamma;
      row.selected_kernels = model.weights.count_selected();
      row.selected_groups = count_groups(problems[pi].train, model.weights.gamma);
      row.converged = model.converged;
      row.iterations = static_cast<int>(model.trace.entries.size());
      for (const auto& e : model.trace.entries) row.seconds += e.seconds;
    } catch (const Error& e) {
      row.error = e.what();
    }
  });
  return report;
}

std::vector<BinaryTask> make_tasks(const KernelBank& full, const Split& split, MulticlassScheme scheme,
                                   double jitter) {
  const std::vector<int> classes = sorted_classes(full.labels);
  if (classes.size() < 2) throw InvalidArgument("need at least two classes");
  struct Def {
    int positive;
    int negative;
    bool rest;
  };
  std::vector<Def> defs;
  if (classes.size() == 2) {
    defs.push_back({classes[1], classes[0], false});
  } else if (scheme == MulticlassScheme::kOneVsOne) {
    for (std::size_t a = 0; a < classes.size(); ++a)
      for (std::size_t b = a + 1; b < classes.size(); ++b) defs.push_back({classes[a], classes[b], false});
  } else {
    for (int c : classes) defs.push_back({c, 0, true});
  }

  std::vector<BinaryTask> tasks;
  for (const Def& def : defs) {
    auto member = [&](int y) { return def.rest || y == def.positive || y == def.negative; };
    std::vector<int> binary(full.num_samples(), 0);
    for (std::size_t i = 0; i < binary.size(); ++i)
      if (member(full.labels[i])) binary[i] = full.labels[i] == def.positive ? 1 : -1;
    Split task_split;
    for (std::size_t i : split.train)
      if (member(full.labels[i])) task_split.train.push_back(i);
    for (std::size_t i : split.test)
      if (member(full.labels[i])) task_split.test.push_back(i);
    BinaryTask task;
    task.positive = def.positive;
    task.negative = def.negative;
    task.rest = def.rest;
    task.name = std::to_string(def.positive) + (def.rest ? "-vs-rest" : "-vs-" + std::to_string(def.negative));
    task.problem = make_eval_problem(full, task_split, binary, task.name, jitter);
    for (std::size_t j = 0; j < full.num_kernels(); ++j) {
      const double factor = task.problem.train.kernels[j].scale() / full.kernels[j].scale();
      task.cross_all.push_back(block(full.kernels[j].values(), task_split.train, split.test) * factor);
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

MulticlassModel train_multiclass(const std::vector<BinaryTask>& tasks, MulticlassScheme scheme,
                                 const SolverSpec& solver, const ExperimentConfig& cfg) {
  MulticlassModel model;
  model.scheme = scheme;
  std::set<int> classes;
  for (const auto& t : tasks) {
    classes.insert(t.positive);
    if (!t.rest) classes.insert(t.negative);
  }
  model.classes.assign(classes.begin(), classes.end());
  model.models.resize(tasks.size());
  parallel_for(tasks.size(), cfg.threads,
               [&](std::size_t i) { model.models[i] = run_solver(tasks[i].problem, solver, cfg); });
  return model;
}

std::vector<int> predict_multiclass(const MulticlassModel& model, const std::vector<BinaryTask>& tasks) {
  if (tasks.empty()) return {};
  const auto q = static_cast<std::size_t>(tasks.front().cross_all.front().cols());
  std::vector<Vector> decisions(tasks.size());
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const SolverOutcome& o = model.models[k];
    if (!o.ok() || !o.model) continue;
    Matrix cross = Matrix::Zero(tasks[k].cross_all.front().rows(), static_cast<Eigen::Index>(q));
    for (std::size_t j = 0; j < tasks[k].cross_all.size(); ++j)
      cross += o.model->weights.gamma[static_cast<Eigen::Index>(j)] * tasks[k].cross_all[j];
    decisions[k] = decision_values(o.model->svm, cross, tasks[k].problem.train.labels);
  }
  std::vector<int> out(q, model.classes.empty() ? 0 : model.classes.front());
  const bool rest = model.scheme == MulticlassScheme::kOneVsRest && tasks.size() > 1;
  for (std::size_t s = 0; s < q; ++s) {
    std::map<int, double> votes;
    std::map<int, double> score;
    for (int c : model.classes) {
      votes[c] = 0.0;
      score[c] = rest ? -std::numeric_limits<double>::infinity() : 0.0;
    }
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      if (decisions[k].size() == 0) continue;
      const double f = decisions[k][static_cast<Eigen::Index>(s)];
      if (rest) {
        score[tasks[k].positive] = f;
      } else {
        votes[f >= 0.0 ? tasks[k].positive : tasks[k].negative] += 1.0;
        score[tasks[k].positive] += f;
        score[tasks[k].negative] -= f;
      }
    }
    int best = model.classes.front();
    for (int c : model.classes) {
      const bool better = rest ? score[c] > score[best]
                               : (votes[c] > votes[best] || (votes[c] == votes[best] && score[c] > score[best]));
      if (better) best = c;
    }
    out[s] = best;
  }
  return out;
}

ComparisonReport compare_solvers(const std::vector<EvalProblem>& tasks, const std::vector<SolverSpec>& solvers,
                                 const ExperimentConfig& cfg) {
  if (solvers.size() < 2) throw InvalidArgument("comparison needs at least two solvers");
  ComparisonReport report;
  for (const auto& s : solvers) report.solvers.push_back(s.label());
  report.rows.resize(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    report.rows[i].task = tasks[i].name;
    report.rows[i].outcomes.resize(solvers.size());
  }
  parallel_for(tasks.size() * solvers.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t ti = job / solvers.size();
    const std::size_t si = job % solvers.size();
    report.rows[ti].outcomes[si] = run_solver(tasks[ti], solvers[si], cfg);
  });
  const std::size_t max_groups = tasks.empty() ? 0 : tasks.front().train.num_kernels();
  for (std::size_t k = 1; k < solvers.size(); ++k) {
    Tally tally;
    tally.reference_win_groups.assign(max_groups + 1, 0);
    tally.other_win_groups.assign(max_groups + 1, 0);
    for (const auto& row : report.rows) {
      const auto& ref = row.outcomes[0];
      const auto& other = row.outcomes[k];
      if (!ref.ok() || !other.ok()) {
        ++tally.failed;
      } else if (ref.accuracy > other.accuracy) {
        ++tally.wins;
        ++tally.reference_win_groups[std::min(ref.selected_groups, max_groups)];
      } else if (ref.accuracy < other.accuracy) {
        ++tally.losses;
        ++tally.other_win_groups[std::min(other.selected_groups, max_groups)];
      } else {
        ++tally.ties;
      }
    }
    report.tallies.push_back(std::move(tally));
  }
  return report;
}

}  // namespace cskl
