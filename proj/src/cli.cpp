#include "cskl/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "cskl/bank_io.hpp"
#include "cskl/experiments.hpp"
#include "cskl/report.hpp"

namespace cskl {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// Every flag of every subcommand; unused fields keep their defaults.
struct RunConfig {
  std::vector<std::string> bank;
  std::string labels;
  std::string groups;
  std::string solver = "cskl";
  std::vector<std::string> solvers;
  std::string svm = "c";
  int t = 0;
  double p = 2.0;
  double c = 10.0;
  double nu = 0.2;
  double epsilon = 1e-5;
  double jitter = kDefaultJitter;
  int max_outer_iters = 200;
  std::string gamma_step = "rg";
  std::uint64_t seed = 1;
  int seeds = 1;
  int threads = 1;
  std::string out;
  int t_min = 1;
  int t_max = 0;
  std::string scheme = "ovo";
  std::size_t m = 500;
  int classes = 2;
  double train_fraction = 0.5;
};

struct ValidationError : InvalidArgument {
  using InvalidArgument::InvalidArgument;
};

SvmConfig svm_config(const RunConfig& rc) {
  SvmConfig s;
  if (rc.svm == "c") s = SvmConfig::c_svm(rc.c);
  else if (rc.svm == "nu") s = SvmConfig::nu_svm(rc.nu);
  else throw ValidationError("--svm must be 'c' or 'nu'");
  s.validate();
  return s;
}

ExperimentConfig experiment_config(const RunConfig& rc) {
  ExperimentConfig e;
  e.svm = svm_config(rc);
  if (!(rc.epsilon > 0.0)) throw ValidationError("--epsilon must be > 0");
  e.epsilon = rc.epsilon;
  if (rc.max_outer_iters < 1) throw ValidationError("--max-outer-iters must be >= 1");
  e.max_outer_iters = rc.max_outer_iters;
  if (rc.gamma_step == "rg") e.gamma_step = GammaStepKind::kReducedGradient;
  else if (rc.gamma_step == "lp") e.gamma_step = GammaStepKind::kLpDirection;
  else throw ValidationError("--gamma-step must be 'rg' or 'lp'");
  if (rc.threads < 1) throw ValidationError("--threads must be >= 1");
  e.threads = rc.threads;
  return e;
}

SyntheticConfig synthetic_config(const RunConfig& rc, std::uint64_t seed) {
  SyntheticConfig s;
  s.m = rc.m;
  s.classes = rc.classes;
  s.seed = seed;
  s.train_fraction = rc.train_fraction;
  s.validate();
  return s;
}

Json svm_json(const SvmConfig& s) {
  Json j;
  j["variant"] = s.variant == SvmVariant::kC ? "c" : "nu";
  if (s.variant == SvmVariant::kC) j["c"] = s.c;
  else j["nu"] = s.nu;
  j["kkt_tolerance"] = s.kkt_tolerance;
  return j;
}

Json synthetic_json(const SyntheticConfig& s) {
  Json j;
  j["m"] = s.m;
  j["dim"] = s.dim;
  j["separation"] = s.separation;
  j["classes"] = s.classes;
  j["gaussian_kernel"] = "exp(-|x-y|^2/(2 sigma^2))";
  j["gaussian_widths"] = s.gaussian_widths;
  j["polynomial_degrees"] = s.polynomial_degrees;
  j["polynomial_offset"] = s.polynomial_offset;
  j["noisy_kernels"] = s.noisy_kernels;
  j["noise_dim"] = s.noise_dim;
  j["noise_width"] = "median pairwise distance of the noise features";
  j["train_fraction"] = s.train_fraction;
  j["total_kernels"] = s.total_kernels();
  return j;
}

Json config_json(const RunConfig& rc, const std::string& command) {
  Json j;
  j["command"] = command;
  j["bank"] = rc.bank;
  j["labels"] = rc.labels;
  j["groups"] = rc.groups;
  j["solver"] = rc.solver;
  j["solvers"] = rc.solvers;
  j["svm"] = rc.svm;
  j["t"] = rc.t;
  j["p"] = rc.p;
  j["c"] = rc.c;
  j["nu"] = rc.nu;
  j["epsilon"] = rc.epsilon;
  j["jitter"] = rc.jitter;
  j["max_outer_iters"] = rc.max_outer_iters;
  j["gamma_step"] = rc.gamma_step;
  j["seed"] = rc.seed;
  j["seeds"] = rc.seeds;
  j["t_min"] = rc.t_min;
  j["t_max"] = rc.t_max;
  j["scheme"] = rc.scheme;
  j["m"] = rc.m;
  j["classes"] = rc.classes;
  j["train_fraction"] = rc.train_fraction;
  return j;
}

fs::path prepare_out_dir(const std::string& out) {
  if (out.empty()) throw ValidationError("--out is required");
  fs::path dir(out);
  std::error_code ec;
  if (fs::exists(dir, ec) && !fs::is_directory(dir, ec))
    throw IoError("output path " + out + " exists and is not a directory");
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + out + ": " + ec.message());
  return dir;
}

KernelBank load_input_bank(const RunConfig& rc) {
  if (rc.bank.empty()) throw ValidationError("--bank is required");
  KernelBank bank;
  if (!rc.labels.empty()) {
    std::vector<fs::path> paths(rc.bank.begin(), rc.bank.end());
    bank = import_csv_bank(paths, rc.labels);
  } else {
    if (rc.bank.size() != 1) throw ValidationError("several --bank files need --labels (CSV import)");
    bank = load_bank(rc.bank.front());
  }
  if (!rc.groups.empty()) bank.groups = load_groups(rc.groups, bank.num_kernels());
  return bank;
}

std::string vector_csv(const std::string& name, const Vector& v) {
  CsvWriter csv({"index", name});
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    csv.add(static_cast<long long>(i)).add(v[i]);
    csv.end_row();
  }
  return csv.str();
}

void write_json(const fs::path& path, const Json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

int cmd_gen_synthetic(const RunConfig& rc, std::ostream& out) {
  const SyntheticConfig cfg = synthetic_config(rc, rc.seed);
  const fs::path dir = prepare_out_dir(rc.out);
  const KernelBank bank = synthetic_full_bank(cfg);
  save_bank(bank, dir / "bank.cskb");
  std::string groups;
  for (std::size_t j = 0; j < bank.groups.size(); ++j) groups += std::to_string(j) + "," + bank.groups[j] + "\n";
  write_file_atomic(dir / "groups.txt", groups);

  Json summary;
  summary["config"] = config_json(rc, "gen-synthetic");
  summary["synthetic"] = synthetic_json(cfg);
  summary["kernels"] = bank.num_kernels();
  summary["samples"] = bank.num_samples();
  Json traces = Json::array();
  for (const auto& k : bank.kernels) traces.push_back(k.trace());
  summary["traces"] = traces;
  write_json(dir / "summary.json", summary);

  out << "wrote " << (dir / "bank.cskb").string() << ": N=" << bank.num_kernels() << " m=" << bank.num_samples()
      << "\n";
  for (std::size_t j = 0; j < bank.num_kernels(); ++j) {
    const auto& src = bank.kernels[j].source();
    out << "  kernel " << j << " " << (src ? src->describe() : "precomputed") << " group=" << bank.groups[j]
        << " trace=" << format_real(bank.kernels[j].trace()) << "\n";
  }
  return kExitOk;
}

int cmd_train(const RunConfig& rc, const CLI::App& sub, std::ostream& out) {
  const bool has_t = sub.count("--t") > 0;
  const bool has_p = sub.count("--p") > 0;
  const SolverSpec solver = SolverSpec::parse(rc.solver);
  if (has_t && solver.kind != SolverKind::kCskl) throw ValidationError("--t is only valid with --solver cskl");
  if (has_p && solver.kind != SolverKind::kLpMkl) throw ValidationError("--p is only valid with --solver lpmkl");
  if (solver.kind == SolverKind::kCskl && !has_t) throw ValidationError("--solver cskl needs --t");
  if (solver.kind == SolverKind::kLpMkl && !(rc.p > 1.0)) throw ValidationError("--p must be > 1");
  const ExperimentConfig cfg = experiment_config(rc);
  const fs::path dir = prepare_out_dir(rc.out);

  KernelBank input = load_input_bank(rc);
  if (!input.is_binary()) throw ValidationError("train needs binary (+1/-1) labels");
  if (solver.kind == SolverKind::kCskl && (rc.t < 1 || static_cast<std::size_t>(rc.t) > input.num_kernels()))
    throw ValidationError("--t must lie in 1.." + std::to_string(input.num_kernels()));
  if (!(rc.jitter >= 0.0)) throw ValidationError("--jitter must be >= 0");
  const KernelBank bank = prepare_bank(input.kernels, input.labels, input.groups, rc.jitter);

  const fs::path trace_path = dir / "trace.csv";
  MklResult result;
  try {
    result = train_solver(bank, solver.kind, rc.t, rc.p, cfg);
  } catch (const MklTrainingError& e) {
    write_file_atomic(trace_path, trace_csv(e.trace()));
    throw;
  }
  write_file_atomic(trace_path, trace_csv(result.trace));
  write_file_atomic(dir / "gamma.csv", vector_csv("gamma", result.weights.gamma));
  write_file_atomic(dir / "alpha.csv", vector_csv("alpha", result.svm.alpha));

  const auto& last = result.trace.entries.back();
  Json summary;
  summary["config"] = config_json(rc, "train");
  summary["svm_config"] = svm_json(cfg.svm);
  summary["converged"] = result.converged;
  summary["outer_iterations"] = result.trace.entries.size();
  summary["objective"] = last.objective;
  summary["bias"] = result.svm.bias;
  if (cfg.svm.variant == SvmVariant::kNu) summary["margin"] = result.svm.margin;
  summary["gamma"] = std::vector<double>(result.weights.gamma.data(),
                                         result.weights.gamma.data() + result.weights.gamma.size());
  summary["d"] = std::vector<double>(last.d.data(), last.d.data() + last.d.size());
  summary["selected_kernels"] = result.weights.count_selected();
  summary["selected_groups"] = count_groups(bank, result.weights.gamma);
  summary["support_vectors"] = result.svm.support_indices.size();
  if (solver.kind == SolverKind::kCskl) {
    const double gt = topt_value(last.d, rc.t);
    summary["certificate_gap"] = gt - result.weights.gamma.dot(last.d);
  }
  write_json(dir / "summary.json", summary);

  out << (result.converged ? "converged" : "stopped at iteration cap") << " after "
      << result.trace.entries.size() << " outer iterations; objective " << format_real(last.objective) << "\n";
  out << "gamma:";
  for (Eigen::Index j = 0; j < result.weights.gamma.size(); ++j) out << " " << format_real(result.weights.gamma[j]);
  out << "\n";
  return result.converged ? kExitOk : kExitNonConvergence;
}

std::vector<EvalProblem> experiment_problems(const RunConfig& rc, std::size_t* num_kernels, Json& source) {
  std::vector<EvalProblem> problems;
  if (!rc.bank.empty()) {
    KernelBank bank = load_input_bank(rc);
    if (!bank.is_binary()) throw ValidationError("sweep needs binary (+1/-1) labels; use compare for multiclass");
    const Split split = stratified_split(bank.labels, rc.train_fraction, rc.seed);
    problems.push_back(make_eval_problem(bank, split, {}, "bank-seed" + std::to_string(rc.seed), rc.jitter));
    source["kind"] = "bank";
  } else {
    if (rc.seeds < 1) throw ValidationError("--seeds must be >= 1");
    if (rc.classes != 2) throw ValidationError("sweep uses binary synthetic data (--classes 2)");
    for (int s = 0; s < rc.seeds; ++s) {
      const SyntheticConfig cfg = synthetic_config(rc, rc.seed + static_cast<std::uint64_t>(s));
      problems.push_back(generate_synthetic(cfg).problem);
    }
    source["kind"] = "synthetic";
    source["synthetic"] = synthetic_json(synthetic_config(rc, rc.seed));
  }
  *num_kernels = problems.front().train.num_kernels();
  return problems;
}

int cmd_sweep(const RunConfig& rc, std::ostream& out) {
  const ExperimentConfig cfg = experiment_config(rc);
  if (rc.t_min < 1) throw ValidationError("--t-min must be >= 1");
  if (rc.t_max != 0 && rc.t_max < rc.t_min) throw ValidationError("--t-max must be >= --t-min");
  const fs::path dir = prepare_out_dir(rc.out);
  std::size_t n = 0;
  Json source;
  const auto problems = experiment_problems(rc, &n, source);
  const int t_max = rc.t_max == 0 ? static_cast<int>(n) : rc.t_max;
  if (static_cast<std::size_t>(t_max) > n) throw ValidationError("--t-max exceeds the kernel count " + std::to_string(n));
  if (rc.t_min > t_max) throw ValidationError("--t-min exceeds --t-max");
  std::vector<int> ts;
  for (int t = rc.t_min; t <= t_max; ++t) ts.push_back(t);

  const SweepReport report = sweep_t(problems, ts, cfg);

  std::vector<std::string> header{"t", "problem", "accuracy", "objective", "selected_kernels", "selected_groups",
                                  "converged", "outer_iterations", "error"};
  for (std::size_t j = 0; j < n; ++j) header.push_back("gamma_" + std::to_string(j));
  CsvWriter rows(header);
  for (const auto& r : report.rows) {
    rows.add(r.t).add(report.problem_names[r.problem]).add(r.accuracy).add(r.objective);
    rows.add(r.selected_kernels).add(r.selected_groups).add(std::string(r.converged ? "1" : "0"));
    rows.add(r.iterations).add(r.error);
    for (std::size_t j = 0; j < n; ++j)
      rows.add(r.gamma.size() > 0 ? r.gamma[static_cast<Eigen::Index>(j)] : 0.0);
    rows.end_row();
  }
  write_file_atomic(dir / "sweep.csv", rows.str());

  const auto mean = report.mean_accuracy();
  const auto groups = report.mean_selected_groups();
  CsvWriter plot({"t", "mean_accuracy"});
  CsvWriter group_plot({"t", "mean_selected_groups"});
  Json per_t = Json::array();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    plot.add(ts[i]).add(mean[i]);
    plot.end_row();
    group_plot.add(ts[i]).add(groups[i]);
    group_plot.end_row();
    per_t.push_back({{"t", ts[i]}, {"mean_accuracy", mean[i]}, {"mean_selected_groups", groups[i]}});
  }
  write_file_atomic(dir / "accuracy_vs_t.csv", plot.str());
  write_file_atomic(dir / "groups_vs_t.csv", group_plot.str());

  Json summary;
  summary["config"] = config_json(rc, "sweep");
  summary["svm_config"] = svm_json(cfg.svm);
  summary["source"] = source;
  summary["problems"] = report.problem_names;
  summary["per_t"] = per_t;
  std::size_t failures = 0;
  for (const auto& r : report.rows) failures += r.error.empty() ? 0 : 1;
  summary["failed_runs"] = failures;
  write_json(dir / "summary.json", summary);

  out << "t,mean_accuracy\n";
  for (std::size_t i = 0; i < ts.size(); ++i) out << ts[i] << "," << format_real(mean[i]) << "\n";
  return kExitOk;
}

int cmd_compare(const RunConfig& rc, std::ostream& out) {
  if (rc.solvers.size() < 2) throw ValidationError("compare needs at least two --solver values");
  std::vector<SolverSpec> solvers;
  for (const auto& s : rc.solvers) {
    SolverSpec spec = SolverSpec::parse(s);
    if (spec.kind == SolverKind::kCskl) {
      if (rc.t > 0) spec.t_values = {rc.t};
      else if (rc.t_max > 0) {
        if (rc.t_max < rc.t_min) throw ValidationError("--t-max must be >= --t-min");
        for (int t = rc.t_min; t <= rc.t_max; ++t) spec.t_values.push_back(t);
      }
    }
    if (spec.kind == SolverKind::kLpMkl) {
      if (!(rc.p > 1.0)) throw ValidationError("--p must be > 1");
      spec.p = rc.p;
    }
    solvers.push_back(spec);
  }
  MulticlassScheme scheme;
  if (rc.scheme == "ovo") scheme = MulticlassScheme::kOneVsOne;
  else if (rc.scheme == "ovr") scheme = MulticlassScheme::kOneVsRest;
  else throw ValidationError("--scheme must be 'ovo' or 'ovr'");
  const ExperimentConfig cfg = experiment_config(rc);
  const fs::path dir = prepare_out_dir(rc.out);

  KernelBank full;
  Json source;
  if (!rc.bank.empty()) {
    full = load_input_bank(rc);
    source["kind"] = "bank";
  } else {
    const SyntheticConfig sc = synthetic_config(rc, rc.seed);
    full = synthetic_full_bank(sc);
    source["kind"] = "synthetic";
    source["synthetic"] = synthetic_json(sc);
  }
  for (const auto& s : solvers)
    for (int t : s.t_values)
      if (t < 1 || static_cast<std::size_t>(t) > full.num_kernels())
        throw ValidationError("t = " + std::to_string(t) + " outside 1.." + std::to_string(full.num_kernels()));
  const Split split = stratified_split(full.labels, rc.train_fraction, rc.seed);
  const auto tasks = make_tasks(full, split, scheme, rc.jitter);
  std::vector<EvalProblem> problems;
  for (const auto& t : tasks) problems.push_back(t.problem);

  const ComparisonReport report = compare_solvers(problems, solvers, cfg);

  CsvWriter rows({"task", "solver", "accuracy", "t", "selected_kernels", "selected_groups", "error"});
  for (const auto& row : report.rows) {
    for (std::size_t s = 0; s < solvers.size(); ++s) {
      const auto& o = row.outcomes[s];
      rows.add(row.task).add(report.solvers[s]).add(o.accuracy).add(o.t).add(o.selected_kernels);
      rows.add(o.selected_groups).add(o.error);
      rows.end_row();
    }
  }
  write_file_atomic(dir / "comparison.csv", rows.str());

  CsvWriter ratios({"task", "reference", "other", "accuracy_ratio"});
  for (const auto& row : report.rows) {
    for (std::size_t k = 1; k < solvers.size(); ++k) {
      const auto& a = row.outcomes[0];
      const auto& b = row.outcomes[k];
      if (!a.ok() || !b.ok()) continue;
      const double ratio = b.accuracy > 0.0 ? a.accuracy / b.accuracy : (a.accuracy > 0.0 ? 1e300 : 1.0);
      ratios.add(row.task).add(report.solvers[0]).add(report.solvers[k]).add(ratio);
      ratios.end_row();
    }
  }
  write_file_atomic(dir / "ratios.csv", ratios.str());

  CsvWriter hist({"reference", "other", "winner", "selected_groups", "tasks"});
  Json tallies = Json::array();
  for (std::size_t k = 1; k < solvers.size(); ++k) {
    const Tally& t = report.tallies[k - 1];
    for (std::size_t g = 0; g < t.reference_win_groups.size(); ++g) {
      hist.add(report.solvers[0]).add(report.solvers[k]).add(report.solvers[0]).add(g).add(t.reference_win_groups[g]);
      hist.end_row();
    }
    for (std::size_t g = 0; g < t.other_win_groups.size(); ++g) {
      hist.add(report.solvers[0]).add(report.solvers[k]).add(report.solvers[k]).add(g).add(t.other_win_groups[g]);
      hist.end_row();
    }
    tallies.push_back({{"reference", report.solvers[0]},
                       {"other", report.solvers[k]},
                       {"wins", t.wins},
                       {"losses", t.losses},
                       {"ties", t.ties},
                       {"failed", t.failed}});
  }
  write_file_atomic(dir / "group_histogram.csv", hist.str());

  // multiclass accuracy per solver
  Json multiclass = Json::array();
  for (std::size_t s = 0; s < solvers.size(); ++s) {
    MulticlassModel model;
    model.scheme = scheme;
    std::set<int> classes(full.labels.begin(), full.labels.end());
    model.classes.assign(classes.begin(), classes.end());
    for (const auto& row : report.rows) model.models.push_back(row.outcomes[s]);
    const auto predicted = predict_multiclass(model, tasks);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < split.test.size(); ++i) correct += predicted[i] == full.labels[split.test[i]] ? 1 : 0;
    multiclass.push_back({{"solver", report.solvers[s]},
                          {"accuracy", split.test.empty() ? 0.0 : static_cast<double>(correct) / split.test.size()}});
  }

  Json summary;
  summary["config"] = config_json(rc, "compare");
  summary["svm_config"] = svm_json(cfg.svm);
  summary["source"] = source;
  summary["tasks"] = report.rows.size();
  summary["solvers"] = report.solvers;
  Json means = Json::array();
  for (std::size_t s = 0; s < solvers.size(); ++s) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& row : report.rows)
      if (row.outcomes[s].ok()) {
        sum += row.outcomes[s].accuracy;
        ++n;
      }
    means.push_back({{"solver", report.solvers[s]}, {"mean_task_accuracy", n ? sum / n : 0.0}, {"tasks", n}});
  }
  summary["mean_accuracy"] = means;
  summary["tallies"] = tallies;
  summary["multiclass_accuracy"] = multiclass;
  Json failures = Json::array();
  for (const auto& row : report.rows)
    for (std::size_t s = 0; s < solvers.size(); ++s)
      if (!row.outcomes[s].ok())
        failures.push_back({{"task", row.task}, {"solver", report.solvers[s]}, {"error", row.outcomes[s].error}});
  summary["failures"] = failures;
  write_json(dir / "summary.json", summary);

  out << report.rows.size() << " tasks x " << solvers.size() << " solvers\n";
  for (const auto& t : tallies)
    out << t["reference"].get<std::string>() << " vs " << t["other"].get<std::string>() << ": wins "
        << t["wins"] << ", losses " << t["losses"] << ", ties " << t["ties"] << ", failed " << t["failed"] << "\n";
  return kExitOk;
}

int cmd_inspect_bank(const RunConfig& rc, std::ostream& out) {
  const KernelBank bank = load_input_bank(rc);
  std::map<int, std::size_t> counts;
  for (int y : bank.labels) ++counts[y];
  out << "kernels: " << bank.num_kernels() << "\nsamples: " << bank.num_samples() << "\nlabels:";
  for (const auto& [label, n] : counts) out << " " << label << "=" << n;
  out << "\n";
  for (std::size_t j = 0; j < bank.num_kernels(); ++j) {
    const auto& k = bank.kernels[j];
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(k.values(), Eigen::EigenvaluesOnly);
    out << "  kernel " << j << " " << (k.source() ? k.source()->describe() : "precomputed");
    if (!bank.groups.empty()) out << " group=" << bank.groups[j];
    out << " trace=" << format_real(k.trace()) << " min_eigenvalue=" << format_real(eig.eigenvalues().minCoeff())
        << "\n";
  }
  return kExitOk;
}

void add_common(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--threads", rc.threads, "worker threads for independent runs");
  sub->add_option("--out", rc.out, "output directory");
}

void add_bank(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--bank", rc.bank, "bank file, or kernel CSV files together with --labels");
  sub->add_option("--labels", rc.labels, "labels CSV (switches --bank to CSV import)");
  sub->add_option("--groups", rc.groups, "descriptor group mapping (kernel_index,group_name per line)");
}

void add_svm(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--svm", rc.svm, "SVM variant: c or nu")->check(CLI::IsMember({"c", "nu"}));
  sub->add_option("--c", rc.c, "C of the C-SVM");
  sub->add_option("--nu", rc.nu, "nu of the nu-SVM");
  sub->add_option("--epsilon", rc.epsilon, "relative objective change that stops the outer loop");
  sub->add_option("--max-outer-iters", rc.max_outer_iters, "outer iteration cap");
  sub->add_option("--gamma-step", rc.gamma_step, "gamma update: rg (reduced gradient) or lp")
      ->check(CLI::IsMember({"rg", "lp"}));
  sub->add_option("--jitter", rc.jitter, "diagonal jitter relative to trace/m");
}

void add_synthetic(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--seed", rc.seed, "random seed (data and split)");
  sub->add_option("--m", rc.m, "synthetic samples (train and test together)");
  sub->add_option("--classes", rc.classes, "synthetic class count");
  sub->add_option("--train-fraction", rc.train_fraction, "fraction of each class used for training");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Capped-simplex multiple kernel learning"};
  app.set_config("--config", "", "read options from a configuration file");
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig rc;

  auto* gen = app.add_subcommand("gen-synthetic", "generate the synthetic kernel bank");
  add_synthetic(gen, rc);
  add_common(gen, rc);

  auto* train = app.add_subcommand("train", "train one MKL model on a bank");
  add_bank(train, rc);
  train->add_option("--solver", rc.solver, "cskl, simplemkl or lpmkl")
      ->check(CLI::IsMember({"cskl", "simplemkl", "lpmkl"}));
  train->add_option("--t", rc.t, "number of kernels to select (cskl)");
  train->add_option("--p", rc.p, "norm parameter (lpmkl)");
  add_svm(train, rc);
  add_common(train, rc);

  auto* sweep = app.add_subcommand("sweep", "sweep t and report test accuracy");
  add_bank(sweep, rc);
  add_svm(sweep, rc);
  add_synthetic(sweep, rc);
  sweep->add_option("--seeds", rc.seeds, "synthetic replicates (seeds seed..seed+k-1)");
  sweep->add_option("--t-min", rc.t_min, "smallest t");
  sweep->add_option("--t-max", rc.t_max, "largest t (default N)");
  add_common(sweep, rc);

  auto* compare = app.add_subcommand("compare", "compare solvers over binary tasks");
  add_bank(compare, rc);
  add_svm(compare, rc);
  add_synthetic(compare, rc);
  compare->add_option("--solver", rc.solvers, "solver to compare (repeat; first is the reference)")
      ->check(CLI::IsMember({"cskl", "simplemkl", "lpmkl", "uniform"}));
  compare->add_option("--t", rc.t, "fixed t for cskl (default: best over --t-min..--t-max, or all)");
  compare->add_option("--t-min", rc.t_min, "smallest t for best-of-t cskl");
  compare->add_option("--t-max", rc.t_max, "largest t for best-of-t cskl");
  compare->add_option("--p", rc.p, "norm parameter (lpmkl)");
  compare->add_option("--scheme", rc.scheme, "multiclass reduction: ovo or ovr")->check(CLI::IsMember({"ovo", "ovr"}));
  add_common(compare, rc);

  auto* inspect = app.add_subcommand("inspect-bank", "print a bank summary");
  add_bank(inspect, rc);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*gen) return cmd_gen_synthetic(rc, out);
    if (*train) return cmd_train(rc, *train, out);
    if (*sweep) return cmd_sweep(rc, out);
    if (*compare) return cmd_compare(rc, out);
    if (*inspect) return cmd_inspect_bank(rc, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const BankFormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const MklTrainingError& e) {
    err << "error: solver failed: " << e.what() << " (partial trace written to trace.csv)\n";
    return kExitNonConvergence;
  } catch (const SvmNonConvergence& e) {
    err << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace cskl
