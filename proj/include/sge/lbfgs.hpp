#pragma once

// Limited-memory BFGS with a strong-Wolfe line search (bracketing + zoom with
// safeguarded cubic interpolation).
//
// The objective is any callable  double f(const VectorXd& z, VectorXd& grad).
// It may throw sge::Error of category immersion or numeric at trial points;
// such points are treated as infeasible and the step is shortened. At the
// starting point the error propagates.
//
// An optional preconditioner applies a fixed SPD approximation of the inverse
// Hessian; it replaces the identity as the seed matrix of the two-loop
// recursion and in steepest-descent restarts.

#include "sge/core.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

namespace sge {

struct LbfgsConfig {
  int memory = 20;
  double g_tol = 1e-9;       // stop when |grad|_2 <= g_tol
  double f_tol = 1e-13;      // stop when f_k - f_{k+1} <= f_tol * max(|f_k|, |f_{k+1}|, 1)
  int max_iterations = 300;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 40;

  void check() const {
    if (memory < 1) throw Error(ErrorCategory::input, "L-BFGS memory must be >= 1");
    if (!(0.0 < c1 && c1 < c2 && c2 < 1.0))
      throw Error(ErrorCategory::input, "line search needs 0 < c1 < c2 < 1");
    if (max_iterations < 0) throw Error(ErrorCategory::input, "max_iterations must be >= 0");
    if (!(g_tol >= 0.0) || !(f_tol >= 0.0))
      throw Error(ErrorCategory::input, "tolerances must be >= 0");
  }
};

struct LbfgsIterate {
  double energy;
  double grad_norm;
  double step;  // accepted step length (0 for the starting point)
};

using Preconditioner = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

enum class LbfgsStop { gradient, energy, max_iterations, line_search };

inline const char* to_string(LbfgsStop s) {
  switch (s) {
    case LbfgsStop::gradient: return "gradient";
    case LbfgsStop::energy: return "energy";
    case LbfgsStop::max_iterations: return "max_iterations";
    case LbfgsStop::line_search: return "line_search";
  }
  return "unknown";
}

struct LbfgsResult {
  Eigen::VectorXd z;
  double energy = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStop stop = LbfgsStop::max_iterations;
  bool line_search_failed = false;
  std::string message;  // last infeasible-trial reason, if any
  std::vector<LbfgsIterate> trace;

  bool converged() const { return stop == LbfgsStop::gradient || stop == LbfgsStop::energy; }
};

namespace detail {

struct TrialPoint {
  double alpha = 0.0;
  double f = 0.0;
  double df = 0.0;  // directional derivative
  Eigen::VectorXd z, g;
};

/// Minimizer of the cubic through (a, fa, da), (b, fb, db), or nullopt.
inline std::optional<double> cubic_minimizer(double a, double fa, double da, double b, double fb,
                                             double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (!(disc >= 0.0)) return std::nullopt;
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  const double x = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
  if (!std::isfinite(x)) return std::nullopt;
  return x;
}

template <class F>
class LineSearch {
 public:
  LineSearch(F& f, const LbfgsConfig& cfg, const Eigen::VectorXd& z0, double f0, double df0,
             const Eigen::VectorXd& p, int& evaluations, std::string& message)
      : f_(f), cfg_(cfg), z0_(z0), f0_(f0), df0_(df0), p_(p), evals_(evaluations), message_(message) {}

  std::optional<TrialPoint> run(double alpha) {
    TrialPoint prev;
    prev.alpha = 0.0;
    prev.f = f0_;
    prev.df = df0_;
    double alpha_max = std::numeric_limits<double>::infinity();
    for (int i = 0; i < cfg_.max_line_search; ++i) {
      auto cur = evaluate(alpha);
      if (!cur) {
        // Infeasible: back off toward the last feasible point.
        alpha_max = alpha;
        alpha = prev.alpha + 0.5 * (alpha - prev.alpha);
        continue;
      }
      if (cur->f > f0_ + cfg_.c1 * alpha * df0_ || (i > 0 && cur->f >= prev.f))
        return zoom(prev, *cur);
      if (std::abs(cur->df) <= -cfg_.c2 * df0_) return cur;
      if (cur->df >= 0.0) return zoom(*cur, prev);
      prev = std::move(*cur);
      alpha = std::min(2.0 * alpha, prev.alpha + 0.5 * (alpha_max - prev.alpha));
      if (!std::isfinite(alpha)) alpha = 2.0 * prev.alpha;
    }
    return prev.alpha > 0.0 ? std::optional<TrialPoint>(prev) : std::nullopt;
  }

 private:
  std::optional<TrialPoint> evaluate(double alpha) {
    TrialPoint t;
    t.alpha = alpha;
    t.z = z0_ + alpha * p_;
    t.g.resize(t.z.size());
    ++evals_;
    try {
      t.f = f_(t.z, t.g);
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::immersion && e.category() != ErrorCategory::numeric)
        throw;
      message_ = e.what();
      return std::nullopt;
    }
    if (!std::isfinite(t.f) || !t.g.allFinite()) {
      message_ = "non-finite energy or gradient at trial step";
      return std::nullopt;
    }
    t.df = t.g.dot(p_);
    return t;
  }

  std::optional<TrialPoint> zoom(TrialPoint lo, TrialPoint hi) {
    for (int j = 0; j < cfg_.max_line_search; ++j) {
      const double a = std::min(lo.alpha, hi.alpha), b = std::max(lo.alpha, hi.alpha);
      const double width = b - a;
      double alpha = 0.5 * (a + b);
      if (std::isfinite(hi.f)) {
        if (auto c = cubic_minimizer(lo.alpha, lo.f, lo.df, hi.alpha, hi.f, hi.df))
          if (*c > a + 0.1 * width && *c < b - 0.1 * width) alpha = *c;
      }
      if (width <= 1e-16 * std::max(1.0, b)) break;
      auto cur = evaluate(alpha);
      if (!cur) {
        hi = TrialPoint{};
        hi.alpha = alpha;
        hi.f = std::numeric_limits<double>::infinity();
        continue;
      }
      if (cur->f > f0_ + cfg_.c1 * alpha * df0_ || cur->f >= lo.f) {
        hi = std::move(*cur);
      } else {
        if (std::abs(cur->df) <= -cfg_.c2 * df0_) return cur;
        if (cur->df * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(*cur);
      }
    }
    // Zoom budget exhausted: settle for sufficient decrease if we have it.
    if (lo.alpha > 0.0 && lo.f < f0_) return lo;
    return std::nullopt;
  }

  F& f_;
  const LbfgsConfig& cfg_;
  const Eigen::VectorXd& z0_;
  double f0_, df0_;
  const Eigen::VectorXd& p_;
  int& evals_;
  std::string& message_;
};

}  // namespace detail

template <class F>
LbfgsResult lbfgs_minimize(F&& f, Eigen::VectorXd z0, const LbfgsConfig& cfg,
                           const Preconditioner& h0 = {}) {
  cfg.check();
  auto seed = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return h0 ? h0(v) : v; };
  LbfgsResult r;
  r.z = std::move(z0);
  r.gradient.resize(r.z.size());
  r.energy = f(r.z, r.gradient);
  r.evaluations = 1;
  if (!std::isfinite(r.energy) || !r.gradient.allFinite())
    throw Error(ErrorCategory::numeric, "energy or gradient is not finite at the starting point");
  r.trace.push_back({r.energy, r.gradient.norm(), 0.0});

  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> Rho;
  for (;;) {
    const double gnorm = r.gradient.norm();
    if (gnorm <= cfg.g_tol) {
      r.stop = LbfgsStop::gradient;
      return r;
    }
    if (r.iterations >= cfg.max_iterations) {
      r.stop = LbfgsStop::max_iterations;
      return r;
    }

    // Two-loop recursion.
    Eigen::VectorXd q = r.gradient;
    std::vector<double> a(S.size());
    for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
      a[i] = Rho[i] * S[i].dot(q);
      q -= a[i] * Y[i];
    }
    if (S.empty()) {
      q = seed(q);
    } else {
      const Eigen::VectorXd hy = seed(Y.back());
      q = seed(q) * (S.back().dot(Y.back()) / Y.back().dot(hy));
    }
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double b = Rho[i] * Y[i].dot(q);
      q += (a[i] - b) * S[i];
    }
    Eigen::VectorXd p = -q;
    double df0 = r.gradient.dot(p);
    auto restart = [&] {
      S.clear();
      Y.clear();
      Rho.clear();
      p = -seed(r.gradient);
      df0 = r.gradient.dot(p);
    };
    if (!(df0 < 0.0)) restart();
    // Without curvature pairs an unpreconditioned direction has no scale.
    const double alpha0 = (S.empty() && !h0) ? std::min(1.0, 1.0 / p.norm()) : 1.0;

    detail::LineSearch<std::remove_reference_t<F>> ls(f, cfg, r.z, r.energy, df0, p,
                                                      r.evaluations, r.message);
    auto step = ls.run(alpha0);
    if (!step && !S.empty()) {
      // Retry once along (preconditioned) steepest descent with a fresh memory.
      restart();
      detail::LineSearch<std::remove_reference_t<F>> sd(f, cfg, r.z, r.energy, df0, p,
                                                        r.evaluations, r.message);
      step = sd.run(std::min(1.0, 1.0 / p.norm()));
    }
    if (!step) {
      r.line_search_failed = true;
      r.stop = LbfgsStop::line_search;
      return r;
    }

    const double f_old = r.energy;
    Eigen::VectorXd s = step->z - r.z;
    Eigen::VectorXd y = step->g - r.gradient;
    r.z = std::move(step->z);
    r.gradient = std::move(step->g);
    r.energy = step->f;
    ++r.iterations;
    r.trace.push_back({r.energy, r.gradient.norm(), step->alpha});

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      Rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > cfg.memory) {
        S.pop_front();
        Y.pop_front();
        Rho.pop_front();
      }
    }
    if (f_old - r.energy <= cfg.f_tol * std::max({std::abs(f_old), std::abs(r.energy), 1.0})) {
      r.stop = LbfgsStop::energy;
      return r;
    }
  }
}

}  // namespace sge
