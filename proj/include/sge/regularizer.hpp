#pragma once

// Weight-change regularization: TV through per-component first differences,
// its Huber smoothing and prox (soft thresholding), and the clipped {0,1}
// double-well penalty.

#include "sge/core.hpp"
#include "sge/graphcore.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numeric>
#include <vector>

namespace sge {

/// D = diag(D^1, ..., D^K), D^k the (N_k - 1) x N_k first difference.
/// Never formed densely.
class DifferenceOperator {
 public:
  DifferenceOperator() = default;
  explicit DifferenceOperator(std::vector<int> edge_counts) : counts_(std::move(edge_counts)) {
    for (int n : counts_)
      if (n < 1) throw Error(ErrorCategory::input, "every component needs at least one edge");
  }

  const std::vector<int>& edge_counts() const { return counts_; }
  Eigen::Index cols() const { return std::accumulate(counts_.begin(), counts_.end(), Eigen::Index{0}); }
  Eigen::Index rows() const { return cols() - static_cast<Eigen::Index>(counts_.size()); }

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check(x.size(), cols());
    Eigen::VectorXd y(rows());
    Eigen::Index in = 0, out = 0;
    for (int n : counts_) {
      for (int i = 1; i < n; ++i) y[out++] = x[in + i] - x[in + i - 1];
      in += n;
    }
    return y;
  }

  Eigen::VectorXd adjoint(const Eigen::Ref<const Eigen::VectorXd>& y) const {
    check(y.size(), rows());
    Eigen::VectorXd x = Eigen::VectorXd::Zero(cols());
    Eigen::Index in = 0, out = 0;
    for (int n : counts_) {
      for (int i = 1; i < n; ++i) {
        x[in + i] += y[out];
        x[in + i - 1] -= y[out];
        ++out;
      }
      in += n;
    }
    return x;
  }

 private:
  static void check(Eigen::Index got, Eigen::Index want) {
    if (got != want)
      throw Error(ErrorCategory::input, "difference operator: vector has length " +
                                            std::to_string(got) + ", expected " +
                                            std::to_string(want));
  }

  std::vector<int> counts_;
};

inline double tv_norm(const Eigen::Ref<const Eigen::VectorXd>& delta_rho,
                      const DifferenceOperator& D) {
  return D.apply(delta_rho).lpNorm<1>();
}

struct HuberParams {
  double alpha = 1.0;
  double gamma = 1.0;

  double threshold() const { return alpha / gamma; }
  void check() const {
    if (!(alpha > 0.0) || !(gamma > 0.0) || !std::isfinite(alpha / gamma))
      throw Error(ErrorCategory::input, "Huber parameters need alpha > 0 and gamma > 0");
  }
};

inline double huber(double v, const HuberParams& p) {
  const double a = std::abs(v);
  return a <= p.threshold() ? 0.5 * p.gamma * v * v : p.alpha * (a - 0.5 * p.threshold());
}

inline double huber_grad(double v, const HuberParams& p) {
  if (std::abs(v) <= p.threshold()) return p.gamma * v;
  return v > 0.0 ? p.alpha : -p.alpha;
}

inline double shrink(double w, double threshold) {
  if (w > threshold) return w - threshold;
  if (w < -threshold) return w + threshold;
  return 0.0;
}

inline Eigen::VectorXd shrink(const Eigen::Ref<const Eigen::VectorXd>& w, double threshold) {
  if (!(threshold > 0.0)) throw Error(ErrorCategory::input, "shrink threshold must be > 0");
  return w.unaryExpr([threshold](double x) { return shrink(x, threshold); });
}

/// Sum of huber((D x)_i) and its gradient D^T huber'(D x).
struct HuberTv {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

inline HuberTv huber_tv(const Eigen::Ref<const Eigen::VectorXd>& x, const DifferenceOperator& D,
                        const HuberParams& p) {
  p.check();
  const Eigen::VectorXd y = D.apply(x);
  Eigen::VectorXd g(y.size());
  HuberTv out;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    out.value += huber(y[i], p);
    g[i] = huber_grad(y[i], p);
  }
  out.gradient = D.adjoint(g);
  return out;
}

struct PenaltyConfig {
  double beta_tilde = 1.0;
  double clip_epsilon = 0.5;

  void check() const {
    if (!(beta_tilde >= 0.0)) throw Error(ErrorCategory::input, "beta_tilde must be >= 0");
    if (!(clip_epsilon > 0.0)) throw Error(ErrorCategory::input, "clip_epsilon must be > 0");
  }
};

/// 8 (rho (rho - 1))^2 on [-eps, 1 + eps], continued linearly with matching
/// value and slope outside.
inline double double_well(double rho, double eps) {
  auto p = [](double r) { const double q = r * (r - 1.0); return 8.0 * q * q; };
  auto dp = [](double r) { return 16.0 * r * (r - 1.0) * (2.0 * r - 1.0); };
  if (rho < -eps) return p(-eps) + dp(-eps) * (rho + eps);
  if (rho > 1.0 + eps) return p(1.0 + eps) + dp(1.0 + eps) * (rho - 1.0 - eps);
  return p(rho);
}

inline double double_well_grad(double rho, double eps) {
  auto dp = [](double r) { return 16.0 * r * (r - 1.0) * (2.0 * r - 1.0); };
  return dp(std::clamp(rho, -eps, 1.0 + eps));
}

template <int Dim>
struct PenaltyValue {
  double value = 0.0;
  std::vector<double> weights;           // d/d rho_i
  std::vector<Polyline<Dim>> vertices;   // d/d vertices
};

/// sum_i P(rho_i) |e_i| over the graph's own weights (unscaled by beta).
template <int Dim>
PenaltyValue<Dim> zero_one_penalty(const PolygonalGraph<Dim>& g, const PenaltyConfig& cfg) {
  cfg.check();
  PenaltyValue<Dim> out;
  out.weights.resize(g.size());
  std::size_t edge = 0;
  for (const auto& comp : g.vertices) {
    Polyline<Dim> gv(comp.size(), Vec<Dim>::Zero());
    for (std::size_t v = 0; v + 1 < comp.size(); ++v, ++edge) {
      const double len = g.edges[edge].norm();
      if (!(len > 0.0)) throw Error(ErrorCategory::immersion, "zero-length edge in penalty");
      const double rho = g.weights[edge];
      const double P = double_well(rho, cfg.clip_epsilon);
      out.value += P * len;
      out.weights[edge] = double_well_grad(rho, cfg.clip_epsilon) * len;
      const Vec<Dim> du = P * g.edges[edge] / len;
      gv[v] -= du;
      gv[v + 1] += du;
    }
    out.vertices.push_back(std::move(gv));
  }
  return out;
}

}  // namespace sge
