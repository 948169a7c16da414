#include "cskl/capped_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cskl/error.hpp"

namespace cskl {

namespace {

void check_t(const Vector& v, int t) {
  if (t < 1 || t > v.size())
    throw InvalidArgument("t = " + std::to_string(t) + " outside 1.." + std::to_string(v.size()));
}

std::vector<Eigen::Index> order_descending(const Vector& v) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return v[a] > v[b]; });
  return idx;
}

}  // namespace

double topt_value(const Vector& v, int t) {
  check_t(v, t);
  const auto idx = order_descending(v);
  double sum = 0.0;
  for (int k = 0; k < t; ++k) sum += v[idx[static_cast<std::size_t>(k)]];
  return sum;
}

Vector topt_gamma(const Vector& v, int t) {
  check_t(v, t);
  const auto idx = order_descending(v);
  const double threshold = v[idx[static_cast<std::size_t>(t - 1)]];
  Vector gamma = Vector::Zero(v.size());
  int above = 0;
  int tied = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] > threshold) {
      gamma[i] = 1.0;
      ++above;
    } else if (v[i] == threshold) {
      ++tied;
    }
  }
  const double share = static_cast<double>(t - above) / tied;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] == threshold) gamma[i] = share;
  return gamma;
}

std::size_t central_pivot(const Vector& gamma) {
  std::size_t best = 0;
  for (Eigen::Index m = 1; m < gamma.size(); ++m)
    if (std::abs(gamma[m] - 0.5) < std::abs(gamma[static_cast<Eigen::Index>(best)] - 0.5))
      best = static_cast<std::size_t>(m);
  return best;
}

std::size_t largest_pivot(const Vector& gamma) {
  Eigen::Index best = 0;
  gamma.maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

Vector descent_direction(const Vector& gamma, std::size_t pivot, const Vector& phi) {
  const auto mu = static_cast<Eigen::Index>(pivot);
  if (mu >= gamma.size() || phi.size() != gamma.size())
    throw InvalidArgument("descent_direction: pivot or gradient size mismatch");
  Vector d = Vector::Zero(gamma.size());
  double absorbed = 0.0;
  for (Eigen::Index m = 0; m < gamma.size(); ++m) {
    if (m == mu) continue;
    const double reduced = phi[m] - phi[mu];
    if (gamma[m] <= 0.0 && reduced > 0.0) continue;
    if (gamma[m] >= 1.0 && reduced < 0.0) continue;
    d[m] = -reduced;
    absorbed += reduced;
  }
  d[mu] = absorbed;
  return d;
}

std::optional<StepBound> max_step(const Vector& gamma, const Vector& direction) {
  std::optional<StepBound> best;
  for (Eigen::Index m = 0; m < gamma.size(); ++m) {
    const double dm = direction[m];
    if (dm == 0.0) continue;
    const bool up = dm > 0.0;
    const double room = up ? (1.0 - gamma[m]) / dm : -gamma[m] / dm;
    const double step = std::max(room, 0.0);
    if (!best || step < best->max_step)
      best = StepBound{step, static_cast<std::size_t>(m), up};
  }
  return best;
}

Vector lp_direction(const Vector& gamma, const Vector& phi) {
  if (phi.size() != gamma.size()) throw InvalidArgument("lp_direction: size mismatch");
  const Eigen::Index n = gamma.size();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return phi[a] < phi[b]; });

  const double total = gamma.sum();
  Vector target = Vector::Zero(n);
  double placed = 0.0;
  std::size_t k = 0;
  while (k < idx.size()) {
    std::size_t end = k;
    while (end < idx.size() && phi[idx[end]] == phi[idx[k]]) ++end;
    const double size = static_cast<double>(end - k);
    const double need = std::max(total - placed, 0.0);
    double group_gamma = 0.0;
    for (std::size_t g = k; g < end; ++g) group_gamma += gamma[idx[g]];
    if (std::abs(need - group_gamma) <= 1e-12 * std::max(1.0, size)) {
      for (std::size_t g = k; g < end; ++g) target[idx[g]] = gamma[idx[g]];
    } else if (need >= size) {
      for (std::size_t g = k; g < end; ++g) target[idx[g]] = 1.0;
    } else if (need >= group_gamma) {
      const double room = size - group_gamma;
      const double fill = room > 0.0 ? (need - group_gamma) / room : 0.0;
      for (std::size_t g = k; g < end; ++g)
        target[idx[g]] = gamma[idx[g]] + (1.0 - gamma[idx[g]]) * fill;
    } else {
      const double keep = group_gamma > 0.0 ? need / group_gamma : 0.0;
      for (std::size_t g = k; g < end; ++g) target[idx[g]] = gamma[idx[g]] * keep;
    }
    placed += std::min(need, size);
    k = end;
  }
  return target - gamma;
}

}  // namespace cskl
