#include "smfpca/bfgs.hpp"

#include "smfpca/errors.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <limits>

namespace smfpca {

std::string to_string(BfgsStatus status) {
  switch (status) {
    case BfgsStatus::GradientConverged: return "gradient-converged";
    case BfgsStatus::ObjectiveConverged: return "objective-converged";
    case BfgsStatus::MaxIterations: return "max-iterations";
    case BfgsStatus::LineSearchFailed: return "line-search-failed";
  }
  return "unknown";
}

namespace {

struct Trial {
  double alpha = 0.0;
  double f = 0.0;
  double df = 0.0;  // directional derivative
  Eigen::VectorXd g;
  bool finite() const { return std::isfinite(f) && std::isfinite(df); }
};

// Minimizer of the cubic matching values and slopes at a and b; falls
// back to bisection when the cubic has no real minimizer.
double cubic_step(const Trial& a, const Trial& b) {
  const double mid = 0.5 * (a.alpha + b.alpha);
  if (!a.finite() || !b.finite() || a.alpha == b.alpha) return mid;
  const double d1 = a.df + b.df - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.df * b.df;
  if (!(disc >= 0.0)) return mid;
  const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
  const double denom = b.df - a.df + 2.0 * d2;
  if (denom == 0.0) return mid;
  const double alpha = b.alpha - (b.alpha - a.alpha) * (b.df + d2 - d1) / denom;
  return std::isfinite(alpha) ? alpha : mid;
}

class LineSearch {
 public:
  LineSearch(const ObjectiveFn& fn, const Eigen::VectorXd& x, const Eigen::VectorXd& p, double f0, double df0,
             const BfgsOptions& opt)
      : fn_(fn), x_(x), p_(p), f0_(f0), df0_(df0), opt_(opt) {}

  // Returns true with `out` set to an accepted step.
  bool run(double alpha_init, Trial& out) {
    Trial prev{0.0, f0_, df0_, {}};
    double alpha = alpha_init;
    for (int i = 0;; ++i) {
      if (budget_exhausted()) return fallback(out);
      Trial cur = eval(alpha);
      if (!cur.finite() || cur.f > f0_ + opt_.c1 * alpha * df0_ || (i > 0 && cur.f >= prev.f))
        return zoom(prev, cur, out);
      if (std::abs(cur.df) <= -opt_.c2 * df0_) {
        out = std::move(cur);
        return true;
      }
      if (cur.df >= 0.0) return zoom(cur, prev, out);
      // Extrapolate, keeping the new step within [1.1, 4] times the current one.
      double next = cubic_step(prev, cur);
      next = std::clamp(next, 1.1 * alpha, 4.0 * alpha);
      prev = std::move(cur);
      alpha = next;
    }
  }

  int evaluations() const { return evaluations_; }

 private:
  bool budget_exhausted() const { return evaluations_ >= opt_.max_line_search; }

  Trial eval(double alpha) {
    ++evaluations_;
    Trial t;
    t.alpha = alpha;
    t.g.resize(x_.size());
    t.f = fn_(x_ + alpha * p_, t.g);
    t.df = t.g.allFinite() ? t.g.dot(p_) : std::numeric_limits<double>::quiet_NaN();
    if (t.finite() && t.f <= f0_ + opt_.c1 * alpha * df0_ && (!best_armijo_ || t.f < best_armijo_->f))
      best_armijo_ = t;
    return t;
  }

  bool zoom(Trial lo, Trial hi, Trial& out) {
    while (!budget_exhausted()) {
      const double a = std::min(lo.alpha, hi.alpha);
      const double b = std::max(lo.alpha, hi.alpha);
      const double width = b - a;
      if (width <= 1e-16 * std::max(1.0, b)) break;
      double alpha = cubic_step(lo, hi);
      if (!(alpha >= a + 0.1 * width && alpha <= b - 0.1 * width)) alpha = 0.5 * (a + b);
      Trial cur = eval(alpha);
      if (!cur.finite() || cur.f > f0_ + opt_.c1 * alpha * df0_ || cur.f >= lo.f) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.df) <= -opt_.c2 * df0_) {
          out = std::move(cur);
          return true;
        }
        if (cur.df * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
    }
    return fallback(out);
  }

  // Budget spent without a strong-Wolfe point: accept the best step that
  // at least satisfies sufficient decrease.
  bool fallback(Trial& out) {
    if (!best_armijo_) return false;
    out = *best_armijo_;
    return true;
  }

  const ObjectiveFn& fn_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& p_;
  double f0_;
  double df0_;
  const BfgsOptions& opt_;
  int evaluations_ = 0;
  std::optional<Trial> best_armijo_;
};

}  // namespace

BfgsResult minimize_bfgs(const ObjectiveFn& objective, Eigen::VectorXd x0, const BfgsOptions& options) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = std::move(x0);
  res.gradient.resize(n);
  res.f = objective(res.x, res.gradient);
  res.evaluations = 1;
  if (!std::isfinite(res.f) || !res.gradient.allFinite()) throw DivergedError("objective is not finite at the starting point");
  res.trace.push_back(res.f);

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  bool just_reset = false;

  while (true) {
    if (res.gradient.lpNorm<Eigen::Infinity>() < options.grad_tol) {
      res.status = BfgsStatus::GradientConverged;
      return res;
    }
    if (res.iterations >= options.max_iterations) {
      res.status = BfgsStatus::MaxIterations;
      return res;
    }

    Eigen::VectorXd p = -(h * res.gradient);
    double df0 = res.gradient.dot(p);
    if (!(df0 < 0.0)) {
      h.setIdentity();
      p = -res.gradient;
      df0 = -res.gradient.squaredNorm();
    }
    const double alpha0 = scaled ? 1.0 : std::min(1.0, 1.0 / res.gradient.lpNorm<Eigen::Infinity>());

    LineSearch ls(objective, res.x, p, res.f, df0, options);
    Trial step;
    const bool ok = ls.run(alpha0, step);
    res.evaluations += ls.evaluations();
    if (!ok) {
      if (just_reset) {
        res.status = BfgsStatus::LineSearchFailed;
        return res;
      }
      // Retry once along steepest descent with a fresh curvature model.
      h.setIdentity();
      scaled = false;
      just_reset = true;
      continue;
    }
    just_reset = false;

    const Eigen::VectorXd s = step.alpha * p;
    const Eigen::VectorXd y = step.g - res.gradient;
    const double f_prev = res.f;
    res.x += s;
    res.f = step.f;
    res.gradient = std::move(step.g);
    ++res.iterations;
    res.trace.push_back(res.f);

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        h *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h * y;
      const double yhy = y.dot(hy);
      h += ((1.0 + rho * yhy) * rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
    }

    if (f_prev - res.f < options.f_tol * std::max(1.0, std::abs(res.f))) {
      res.status = BfgsStatus::ObjectiveConverged;
      return res;
    }
  }
}

}  // namespace smfpca
