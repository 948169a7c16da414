#pragma once

#include <cstddef>
#include <optional>

#include "cskl/kernel.hpp"

namespace cskl {

/// Sum of the t largest entries of v (g_t).
double topt_value(const Vector& v, int t);

/// Maximizer of gamma'v over {sum(gamma) = t, 0 <= gamma <= 1}.
///
/// Entries above the t-th largest value get 1, entries below get 0, and the
/// remaining mass is split equally over the entries tied with the t-th value.
Vector topt_gamma(const Vector& v, int t);

/// Pivot closest to the middle of the box (argmin |gamma_m - 0.5|, lowest index on ties).
std::size_t central_pivot(const Vector& gamma);
/// Pivot with the largest weight (lowest index on ties).
std::size_t largest_pivot(const Vector& gamma);

/// Reduced-gradient descent direction with pivot `pivot`.
///
/// D_m = phi_pivot - phi_m for every non-pivot coordinate unless it sits at a
/// bound and the move would leave the box; D_pivot absorbs the negated sum so
/// that sum(D) = 0.
Vector descent_direction(const Vector& gamma, std::size_t pivot, const Vector& phi);

struct StepBound {
  double max_step = 0.0;
  std::size_t index = 0;  // coordinate that saturates first
  bool hits_upper = false;
};

/// Largest S with gamma + S*D inside [0,1]^N. Empty for a zero direction.
std::optional<StepBound> max_step(const Vector& gamma, const Vector& direction);

/// Exact solution of min phi'D s.t. sum(D) = 0, -gamma <= D <= 1 - gamma.
///
/// Mass goes to the smallest phi first. Within the threshold tie group the
/// move from gamma is spread proportionally, so a constant phi yields D = 0.
Vector lp_direction(const Vector& gamma, const Vector& phi);

}  // namespace cskl
