#include "cskl/mkl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>

namespace cskl {

namespace {

constexpr double kSnap = 1e-12;
constexpr double kGolden = 0.6180339887498949;

void snap_into_box(Vector& gamma) {
  for (Eigen::Index i = 0; i < gamma.size(); ++i) {
    if (gamma[i] < kSnap) gamma[i] = 0.0;
    else if (gamma[i] > 1.0 - kSnap) gamma[i] = 1.0;
  }
}

Vector point_along(const Vector& base, const Vector& direction, double step) {
  Vector g = base + step * direction;
  snap_into_box(g);
  return g;
}

// Directions at rounding level would turn into huge, meaningless step lengths.
bool negligible(const Vector& direction) { return !(direction.cwiseAbs().maxCoeff() > kSnap); }

bool leaves_box(const Vector& gamma, const Vector& direction, std::size_t index) {
  const auto i = static_cast<Eigen::Index>(index);
  return (gamma[i] <= 0.0 && direction[i] < 0.0) || (gamma[i] >= 1.0 && direction[i] > 0.0);
}

// Golden-section search of J(base + s*D) on [0, hi]. Both endpoints are known;
// returns the best point seen, never worse than `base`.
ObjectiveEvaluator::Point golden_section(ObjectiveEvaluator& eval, const ObjectiveEvaluator::Point& base,
                                         const ObjectiveEvaluator::Point& end, const Vector& direction,
                                         double hi, int max_evals, double* best_step) {
  ObjectiveEvaluator::Point best = base;
  *best_step = 0.0;
  if (end.objective < best.objective) {
    best = end;
    *best_step = hi;
  }
  const double tolerance = 1e-6 * hi;
  double a = 0.0;
  double b = hi;
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  auto fc = eval.evaluate(point_along(base.gamma, direction, c));
  auto fd = eval.evaluate(point_along(base.gamma, direction, d));
  int evals = 2;
  auto consider = [&](const ObjectiveEvaluator::Point& p, double s) {
    if (p.objective < best.objective) {
      best = p;
      *best_step = s;
    }
  };
  consider(fc, c);
  consider(fd, d);
  while (evals < max_evals && (b - a) > tolerance) {
    if (fc.objective <= fd.objective) {
      b = d;
      d = c;
      fd = std::move(fc);
      c = b - kGolden * (b - a);
      fc = eval.evaluate(point_along(base.gamma, direction, c));
      consider(fc, c);
    } else {
      a = c;
      c = d;
      fc = std::move(fd);
      d = a + kGolden * (b - a);
      fd = eval.evaluate(point_along(base.gamma, direction, d));
      consider(fd, d);
    }
    ++evals;
  }
  return best;
}

using StepFn = std::function<GammaStep(ObjectiveEvaluator&, const ObjectiveEvaluator::Point&, const Vector&)>;

// Wraps a gamma step with parallel-tangent extrapolation from the iterate before.
StepFn with_parallel_tangents(StepFn inner, int line_search_evals) {
  auto anchor = std::make_shared<std::optional<Vector>>();
  return [inner = std::move(inner), anchor, line_search_evals](
             ObjectiveEvaluator& eval, const ObjectiveEvaluator::Point& current, const Vector& d) {
    GammaStep out = inner(eval, current, d);
    if (*anchor) {
      GammaStep extra = parallel_tangent_step(eval, out.point, **anchor, line_search_evals);
      out.step += extra.step;
      out.point = std::move(extra.point);
    }
    *anchor = current.gamma;
    return out;
  };
}
using CertificateFn = std::function<bool(const Vector& gamma, const Vector& d)>;

MklResult alternate(const KernelBank& bank, const SvmConfig& svm, Vector gamma,
                    const std::function<MklWeights(Vector)>& wrap, const StepFn& step_fn,
                    double epsilon, int max_outer_iters, const CertificateFn& certificate) {
  if (!bank.is_binary()) throw InvalidArgument("MKL training needs binary (+1/-1) labels");
  bank.validate();
  svm.validate();
  if (svm.variant == SvmVariant::kNu) check_nu_feasible(bank.labels, svm.nu);

  using Clock = std::chrono::steady_clock;
  ObjectiveEvaluator eval(bank, svm);
  MklResult result;
  auto started = Clock::now();
  ObjectiveEvaluator::Point current;
  try {
    current = eval.evaluate(gamma);
  } catch (const SvmNonConvergence& e) {
    throw MklTrainingError(e.what(), result.trace);
  }
  double step = 0.0;
  double previous = 0.0;
  for (int it = 0;; ++it) {
    const Vector d = eval.d(current.svm);
    TraceEntry entry;
    entry.iteration = it;
    entry.objective = current.objective;
    entry.gamma = current.gamma;
    entry.d = d;
    entry.step = step;
    entry.smo_iterations = eval.smo_iterations();
    entry.svm_solves = eval.solves();
    const auto now = Clock::now();
    entry.seconds = std::chrono::duration<double>(now - started).count();
    started = now;
    eval.reset_counters();
    result.trace.entries.push_back(std::move(entry));

    if (it > 0 && std::abs(current.objective - previous) <= epsilon * std::max(1.0, std::abs(current.objective)) &&
        certificate(current.gamma, d)) {
      result.converged = true;
      break;
    }
    if (it >= max_outer_iters) break;
    previous = current.objective;
    try {
      GammaStep next = step_fn(eval, current, d);
      step = next.step;
      current = std::move(next.point);
    } catch (const SvmNonConvergence& e) {
      throw MklTrainingError(e.what(), result.trace);
    }
  }
  result.weights = wrap(current.gamma);
  result.svm = std::move(current.svm);
  return result;
}

}  // namespace

MklWeights MklWeights::capped(Vector gamma, int t) {
  MklWeights w;
  w.gamma = std::move(gamma);
  w.constraint = WeightConstraint::kCappedSimplex;
  w.t = t;
  return w;
}

MklWeights MklWeights::unit(Vector gamma) {
  MklWeights w;
  w.gamma = std::move(gamma);
  w.constraint = WeightConstraint::kUnitSimplex;
  w.t = 1;
  return w;
}

MklWeights MklWeights::lp_ball(Vector gamma, double p) {
  MklWeights w;
  w.gamma = std::move(gamma);
  w.constraint = WeightConstraint::kLpBall;
  w.p = p;
  return w;
}

void MklWeights::validate() const {
  if (gamma.size() == 0) throw InvalidArgument("empty weight vector");
  if (!gamma.allFinite()) throw InvalidArgument("non-finite kernel weight");
  if (gamma.minCoeff() < 0.0) throw InvalidArgument("negative kernel weight");
  switch (constraint) {
    case WeightConstraint::kCappedSimplex:
      if (t < 1 || t > gamma.size()) throw InvalidArgument("t outside 1..N");
      if (gamma.maxCoeff() > 1.0 + 1e-12) throw InvalidArgument("kernel weight above 1");
      if (std::abs(gamma.sum() - t) > 1e-8) throw InvalidArgument("weights do not sum to t");
      break;
    case WeightConstraint::kUnitSimplex:
      if (std::abs(gamma.sum() - 1.0) > 1e-8) throw InvalidArgument("weights do not sum to 1");
      break;
    case WeightConstraint::kLpBall: {
      if (!(p > 1.0)) throw InvalidArgument("p must be > 1");
      const double norm = std::pow(gamma.array().pow(p).sum(), 1.0 / p);
      if (norm > 1.0 + 1e-8) throw InvalidArgument("weights outside the unit l_p ball");
      break;
    }
  }
}

std::size_t MklWeights::count_selected(double threshold) const {
  return static_cast<std::size_t>((gamma.array() > threshold).count());
}

GramMatrix combine(const KernelBank& bank, const MklWeights& weights) {
  return combine(bank, weights.gamma);
}

void CsklConfig::validate(std::size_t num_kernels) const {
  if (t < 1 || static_cast<std::size_t>(t) > num_kernels)
    throw InvalidArgument("t = " + std::to_string(t) + " outside 1.." + std::to_string(num_kernels));
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
  if (max_outer_iters < 1) throw InvalidArgument("max_outer_iters must be >= 1");
  if (line_search_evals < 2) throw InvalidArgument("line search needs at least 2 evaluations");
  if (!(certificate_tolerance > 0.0)) throw InvalidArgument("certificate tolerance must be > 0");
  svm.validate();
}

ObjectiveEvaluator::ObjectiveEvaluator(const KernelBank& bank, const SvmConfig& svm)
    : bank_(bank), svm_(svm) {}

ObjectiveEvaluator::Point ObjectiveEvaluator::evaluate(const Vector& gamma) {
  combine_into(bank_, gamma, combined_);
  Point p;
  p.gamma = gamma;
  p.svm = solve_svm(combined_, bank_.labels, svm_, warm_ ? &*warm_ : nullptr);
  p.objective = p.svm.dual_objective;
  warm_ = p.svm.alpha;
  smo_iterations_ += p.svm.iterations;
  ++solves_;
  return p;
}

GammaStep reduced_gradient_gamma_step(ObjectiveEvaluator& eval, const ObjectiveEvaluator::Point& current,
                                      const Vector& d, int line_search_evals,
                                      std::size_t (*pivot)(const Vector&)) {
  const Vector phi = -0.5 * d;
  const Vector& gamma = current.gamma;
  const std::size_t mu = pivot(gamma);
  Vector direction = descent_direction(gamma, mu, phi);
  // A pivot stuck on a bound cannot absorb the move; the LP direction is the
  // best feasible direction from such a vertex.
  if (leaves_box(gamma, direction, mu)) direction = lp_direction(gamma, phi);

  GammaStep out;
  out.point = current;
  out.direction = direction;
  if (negligible(direction) || !(phi.dot(direction) < 0.0)) {
    out.direction.setZero();
    return out;
  }

  ObjectiveEvaluator::Point at = current;
  Vector dir = direction;
  double travelled = 0.0;
  while (!negligible(dir)) {
    const auto bound = max_step(at.gamma, dir);
    if (!bound || bound->max_step <= 0.0) break;
    Vector trial_gamma = point_along(at.gamma, dir, bound->max_step);
    trial_gamma[static_cast<Eigen::Index>(bound->index)] = bound->hits_upper ? 1.0 : 0.0;
    ObjectiveEvaluator::Point trial = eval.evaluate(trial_gamma);
    if (trial.objective < at.objective) {
      at = std::move(trial);
      travelled += bound->max_step;
      const auto nu = static_cast<Eigen::Index>(bound->index);
      if (bound->index == mu) break;
      dir[static_cast<Eigen::Index>(mu)] += dir[nu];
      dir[nu] = 0.0;
      continue;
    }
    double best_step = 0.0;
    at = golden_section(eval, at, trial, dir, bound->max_step, line_search_evals, &best_step);
    travelled += best_step;
    break;
  }
  out.point = std::move(at);
  out.step = travelled;
  return out;
}

GammaStep lp_gamma_step(ObjectiveEvaluator& eval, const ObjectiveEvaluator::Point& current, const Vector& d,
                        int line_search_evals) {
  const Vector phi = -0.5 * d;
  GammaStep out;
  out.point = current;
  out.direction = lp_direction(current.gamma, phi);
  if (negligible(out.direction) || !(phi.dot(out.direction) < 0.0)) {
    out.direction.setZero();
    return out;
  }
  const auto bound = max_step(current.gamma, out.direction);
  if (!bound || bound->max_step <= 0.0) return out;
  Vector end_gamma = point_along(current.gamma, out.direction, bound->max_step);
  end_gamma[static_cast<Eigen::Index>(bound->index)] = bound->hits_upper ? 1.0 : 0.0;
  const auto end = eval.evaluate(end_gamma);
  double best_step = 0.0;
  out.point = golden_section(eval, current, end, out.direction, bound->max_step, line_search_evals, &best_step);
  out.step = best_step;
  return out;
}

GammaStep parallel_tangent_step(ObjectiveEvaluator& eval, const ObjectiveEvaluator::Point& current,
                                const Vector& anchor, int line_search_evals) {
  GammaStep out;
  out.point = current;
  out.direction = current.gamma - anchor;
  const auto bound = max_step(current.gamma, out.direction);
  if (negligible(out.direction) || !bound || !(bound->max_step > 0.0)) {
    out.direction.setZero();
    return out;
  }
  Vector end_gamma = point_along(current.gamma, out.direction, bound->max_step);
  end_gamma[static_cast<Eigen::Index>(bound->index)] = bound->hits_upper ? 1.0 : 0.0;
  const auto end = eval.evaluate(end_gamma);
  double best_step = 0.0;
  out.point = golden_section(eval, current, end, out.direction, bound->max_step, line_search_evals, &best_step);
  out.step = best_step;
  return out;
}

MklResult cskl_train(const KernelBank& bank, const CsklConfig& cfg) {
  cfg.validate(bank.num_kernels());
  const int t = cfg.t;
  const auto n = static_cast<Eigen::Index>(bank.num_kernels());
  Vector gamma = Vector::Constant(n, static_cast<double>(t) / static_cast<double>(n));
  snap_into_box(gamma);
  StepFn step;
  if (cfg.gamma_step == GammaStepKind::kReducedGradient) {
    step = [&](ObjectiveEvaluator& e, const ObjectiveEvaluator::Point& p, const Vector& d) {
      return reduced_gradient_gamma_step(e, p, d, cfg.line_search_evals, central_pivot);
    };
  } else {
    step = [&](ObjectiveEvaluator& e, const ObjectiveEvaluator::Point& p, const Vector& d) {
      return lp_gamma_step(e, p, d, cfg.line_search_evals);
    };
  }
  if (cfg.accelerate) step = with_parallel_tangents(std::move(step), cfg.line_search_evals);
  auto certificate = [&](const Vector& g, const Vector& d) {
    const double best = topt_value(d, t);
    return best - g.dot(d) <= cfg.certificate_tolerance * std::max(best, 1e-300);
  };
  return alternate(
      bank, cfg.svm, std::move(gamma), [t](Vector g) { return MklWeights::capped(std::move(g), t); }, step,
      cfg.epsilon, cfg.max_outer_iters, certificate);
}

MklResult simplemkl_train(const KernelBank& bank, const SvmConfig& svm, double epsilon, int max_outer_iters,
                          double certificate_tolerance, bool accelerate) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
  const auto n = static_cast<Eigen::Index>(bank.num_kernels());
  if (n == 0) throw InvalidArgument("kernel bank is empty");
  Vector gamma = Vector::Constant(n, 1.0 / static_cast<double>(n));
  StepFn step = [](ObjectiveEvaluator& e, const ObjectiveEvaluator::Point& p, const Vector& d) {
    return reduced_gradient_gamma_step(e, p, d, 30, largest_pivot);
  };
  if (accelerate) step = with_parallel_tangents(std::move(step), 30);
  auto certificate = [&](const Vector& g, const Vector& d) {
    const double best = d.maxCoeff();
    return best - g.dot(d) <= certificate_tolerance * std::max(best, 1e-300);
  };
  return alternate(
      bank, svm, std::move(gamma), [](Vector g) { return MklWeights::unit(std::move(g)); }, step, epsilon,
      max_outer_iters, certificate);
}

Vector lpnorm_weights(const Vector& d, double p) {
  if (!(p > 1.0)) throw InvalidArgument("p must be > 1");
  const auto n = d.size();
  const Vector clipped = d.cwiseMax(0.0);
  if (clipped.maxCoeff() <= 0.0) return Vector::Constant(n, std::pow(static_cast<double>(n), -1.0 / p));
  const Vector powered = clipped.array().pow(1.0 / (p - 1.0));
  const double norm = std::pow(powered.array().pow(p).sum(), 1.0 / p);
  return powered / norm;
}

MklResult lpnorm_mkl_train(const KernelBank& bank, double p, const SvmConfig& svm, double epsilon,
                           int max_outer_iters) {
  if (!(p > 1.0)) throw InvalidArgument("p must be > 1");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
  const auto n = static_cast<Eigen::Index>(bank.num_kernels());
  if (n == 0) throw InvalidArgument("kernel bank is empty");
  Vector gamma = Vector::Constant(n, std::pow(static_cast<double>(n), -1.0 / p));
  auto step = [p](ObjectiveEvaluator& e, const ObjectiveEvaluator::Point& cur, const Vector& d) {
    GammaStep out;
    out.point = e.evaluate(lpnorm_weights(d, p));
    out.direction = out.point.gamma - cur.gamma;
    out.step = out.direction.norm();
    return out;
  };
  auto always = [](const Vector&, const Vector&) { return true; };
  return alternate(
      bank, svm, std::move(gamma), [p](Vector g) { return MklWeights::lp_ball(std::move(g), p); }, step, epsilon,
      max_outer_iters, always);
}

MklResult fixed_weights_train(const KernelBank& bank, const MklWeights& weights, const SvmConfig& svm) {
  if (!bank.is_binary()) throw InvalidArgument("MKL training needs binary (+1/-1) labels");
  ObjectiveEvaluator eval(bank, svm);
  auto point = eval.evaluate(weights.gamma);
  MklResult result;
  TraceEntry entry;
  entry.objective = point.objective;
  entry.gamma = point.gamma;
  entry.d = eval.d(point.svm);
  entry.smo_iterations = eval.smo_iterations();
  entry.svm_solves = 1;
  result.trace.entries.push_back(std::move(entry));
  result.weights = weights;
  result.svm = std::move(point.svm);
  result.converged = true;
  return result;
}

}  // namespace cskl
