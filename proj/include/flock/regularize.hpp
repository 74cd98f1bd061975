#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "flock/errors.hpp"

namespace flock {

// Regularization f(w) = exp(-1/(w + a)), a > 0.
//
// f is strictly increasing on [0, inf) with infimum alpha = exp(-1/a) at w = 0
// and supremum 1, so every regularized weight w * f(w) stays within a constant
// factor of w. Analysis helpers below (condition checker, bound constructors)
// accept any strictly increasing callable with range in (0, 1); this family is
// the default and the only built-in.
class RegFn {
 public:
  explicit RegFn(double a) : a_(a) {
    if (!(a > 0.0)) throw std::invalid_argument("regularization shift must be positive");
  }

  double a() const { return a_; }

  // Infimum of f, attained in the limit w -> 0+ and at w = 0.
  double alpha() const { return std::exp(-1.0 / a_); }

  double operator()(double w) const {
    if (w < 0.0) throw NegativeWeight(w);
    return std::exp(-1.0 / (w + a_));
  }

 private:
  double a_;
};

// Evaluation grid for the smoothness condition. w ranges over {0} plus a
// log-spaced sweep of (0, w_max]; the deviating weight w* ranges over the same
// log-spaced sweep (w* = 0 makes the condition trivially 0 <= 0).
struct ConditionGrid {
  double w_max = 100.0;
  int points = 400;
  double floor_frac = 1e-6;  // smallest grid point as a fraction of w_max

  std::vector<double> log_axis() const {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(points));
    const double lo = std::log(w_max * floor_frac);
    const double hi = std::log(w_max);
    for (int k = 0; k < points; ++k) {
      const double t = points == 1 ? 1.0 : static_cast<double>(k) / (points - 1);
      v.push_back(std::exp(lo + (hi - lo) * t));
    }
    v.back() = w_max;  // exact endpoint, no rounding drift
    return v;
  }
};

struct ConditionReport {
  bool holds = false;
  // min over the grid of (lambda w* f(w*) + eps w f(w)) - w* f(w + w*);
  // nonnegative everywhere iff the condition holds on the grid
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_w = 0.0;
  double worst_w_star = 0.0;
};

// Checks w* f(w + w*) <= lambda w* f(w*) + eps w f(w) over the grid.
// Requires lambda > 1 - eps: as w* -> 0 the condition degenerates to
// f(w*) <= lambda f(w*) + eps-term, which fails for any smaller lambda.
template <typename F = RegFn>
ConditionReport check_condition(const F& f, double lambda, double eps, const ConditionGrid& grid) {
  if (!(eps >= 0.0 && eps < 1.0)) throw InvalidBound("eps must lie in [0, 1)");
  if (!(lambda > 1.0 - eps)) throw InvalidBound("condition requires lambda > 1 - eps");
  const std::vector<double> axis = grid.log_axis();
  std::vector<double> ws;
  ws.reserve(axis.size() + 1);
  ws.push_back(0.0);
  ws.insert(ws.end(), axis.begin(), axis.end());

  ConditionReport rep;
  for (double w : ws) {
    const double fw = f(w);
    for (double wstar : axis) {
      const double lhs = wstar * f(w + wstar);
      const double rhs = lambda * wstar * f(wstar) + eps * w * fw;
      const double margin = rhs - lhs;
      if (margin < rep.worst_margin) {
        rep.worst_margin = margin;
        rep.worst_w = w;
        rep.worst_w_star = wstar;
      }
    }
  }
  rep.holds = rep.worst_margin >= 0.0;
  return rep;
}

// Smallest lambda certified by the closed-form construction for weights in
// [w_min, w_max]: lambda = f(wM + wm)/f(wm) * (1 - eps wM f(wM) / (wm f(wM + wm))).
// Approaches 1 as the regularization flattens (a -> inf) or eps -> 0 with a
// degenerate bracket.
template <typename F = RegFn>
double closed_form_lambda(const F& f, double eps, double w_min, double w_max) {
  if (!(w_min > 0.0) || !(w_max >= w_min)) {
    throw DegenerateBracket("weight bracket requires 0 < w_min <= w_max");
  }
  if (!(eps >= 0.0 && eps < 1.0)) throw InvalidBound("eps must lie in [0, 1)");
  const double f_sum = f(w_max + w_min);
  const double lambda = f_sum / f(w_min) * (1.0 - eps * w_max * f(w_max) / (w_min * f_sum));
  if (!(lambda > 1.0 - eps)) throw InvalidBound("bracket too wide: lambda <= 1 - eps");
  return lambda;
}

struct PoaBound {
  double lambda = 1.0;
  double eps = 0.0;
  double w_min = 0.0;  // bracket the bound was certified for, kept for reporting
  double w_max = 0.0;
};

// Equilibrium inefficiency bound lambda / (1 - eps) implied by the smoothness
// condition. Always > 1 given the validity constraint.
inline double poa_bound(const PoaBound& b) {
  if (!(b.eps >= 0.0 && b.eps < 1.0)) throw InvalidBound("eps must lie in [0, 1)");
  if (!(b.lambda > 1.0 - b.eps)) throw InvalidBound("bound requires lambda > 1 - eps");
  return b.lambda / (1.0 - b.eps);
}

}  // namespace flock
