#pragma once

// The matching problem and its smoothed objective
//
//   E_gamma(z) = path energy + lambda * Var(c(1), rho0 + drho; target)
//              + beta * penalty(rho0 + drho) + sum_i huber_{alpha,gamma}((D drho)_i)
//
// with beta = alpha * beta_tilde, over z = (free control points, drho). The
// free controls come first, in PathSpline::free_view() order (slice-major,
// then slot, then coordinate); drho follows, component-major per edge.

#include "sge/core.hpp"
#include "sge/graphcore.hpp"
#include "sge/lbfgs.hpp"
#include "sge/metric.hpp"
#include "sge/regularizer.hpp"
#include "sge/spline.hpp"
#include "sge/varifold.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace sge {

struct SfistaSchedule {
  double gamma0 = 1.0;
  double growth = 5.0;  // kappa
  int stages = 6;

  double gamma(int stage) const { return gamma0 * std::pow(growth, stage); }
  void check() const {
    if (!(gamma0 > 0.0)) throw Error(ErrorCategory::input, "sfista gamma0 must be > 0");
    if (!(growth > 1.0)) throw Error(ErrorCategory::input, "sfista growth must be > 1");
    if (stages < 1) throw Error(ErrorCategory::input, "sfista needs at least one stage");
  }
};

/// Seed inverse Hessian for L-BFGS. `metric` uses the path-energy Hessian at
/// the constant initial path plus a lumped Gauss-Newton estimate of the
/// varifold term on the end slice for the controls, and a lumped diagonal of
/// the varifold term plus the Huber curvature gamma D^T D for the weights; `none` is the identity. The objective
/// is the same either way.
enum class PreconditionerKind { metric, none };

struct MatchParameters {
  MetricConfig metric;
  KernelConfig kernel;
  double lambda = 100.0;
  double alpha = 0.1;
  PenaltyConfig penalty;
  SplineConfig spline;
  std::vector<int> resample_counts;  // empty: the source's own edge counts
  SfistaSchedule sfista;
  LbfgsConfig lbfgs;
  PreconditionerKind preconditioner = PreconditionerKind::metric;

  double beta() const { return alpha * penalty.beta_tilde; }

  void check() const {
    metric.check();
    kernel.check();
    penalty.check();
    sfista.check();
    lbfgs.check();
    if (!(lambda > 0.0)) throw Error(ErrorCategory::input, "lambda must be > 0");
    if (!(alpha >= 0.0)) throw Error(ErrorCategory::input, "alpha must be >= 0");
  }
};

template <int Dim>
struct MatchProblem {
  ShapeGraphSpec<Dim> source;
  ShapeGraphSpec<Dim> target;
  MatchParameters params;
};

struct EnergyBreakdown {
  double path = 0.0;
  double varifold = 0.0;           // squared varifold distance
  double varifold_weighted = 0.0;  // lambda * varifold
  double penalty = 0.0;            // sum_i P(rho_i) |e_i|
  double penalty_weighted = 0.0;   // beta * penalty
  double tv = 0.0;                 // alpha * |D drho|_1
  double huber = 0.0;              // sum_i huber((D drho)_i)
  double smoothed_total = 0.0;     // E_gamma
  double varifold_roundoff = 0.0;  // negative part clamped away
};

/// Everything that stays fixed while optimizing: the fitted initial path,
/// sampling matrices for the end slice, rho0, the target varifold.
template <int Dim>
class PreparedMatch {
 public:
  /// With fixed_weights the variable is the free controls only and drho = 0.
  PreparedMatch(MatchProblem<Dim> problem, bool fixed_weights = false)
      : problem_(std::move(problem)),
        fixed_weights_(fixed_weights),
        basis_(problem_.params.spline) {
    const auto& p = problem_.params;
    p.check();
    const auto& src = problem_.source;
    if (src.num_components() == 0 || problem_.target.num_components() == 0)
      throw Error(ErrorCategory::input, "source and target need at least one component");

    counts_ = p.resample_counts;
    if (counts_.empty())
      for (const auto& c : src.components) counts_.push_back(static_cast<int>(c.vertices.size()) - 1);
    if (static_cast<int>(counts_.size()) != src.num_components())
      throw Error(ErrorCategory::input, "resample_counts needs one entry per source component");
    for (int n : counts_)
      if (n < 1) throw Error(ErrorCategory::input, "resample counts must be >= 1");

    initial_ = PathSpline<Dim>(p.spline, src.adjacency);
    fit_residual_ = fit_initial_slice(initial_, src);
    for (int k = 0; k < src.num_components(); ++k) {
      sampling_.push_back(initial_.uniform_sampling_matrix(counts_[k]));
      const auto params = polyline_parameters(src.components[k].vertices);
      for (int i = 0; i < counts_[k]; ++i)
        rho0_.push_back(weight_at(src, k, params, (i + 0.5) / counts_[k]));
    }
    D_ = DifferenceOperator(counts_);
    target_graph_ = to_polygonal(problem_.target);
    target_ = make_varifold(target_graph_);
    target_self_ = inner_product(target_, target_, p.kernel);
  }

  const MatchProblem<Dim>& problem() const { return problem_; }
  const MatchParameters& params() const { return problem_.params; }
  bool fixed_weights() const { return fixed_weights_; }
  const PathBasis& basis() const { return basis_; }
  const PathSpline<Dim>& initial_path() const { return initial_; }
  double fit_residual() const { return fit_residual_; }
  const std::vector<int>& resample_counts() const { return counts_; }
  const std::vector<double>& rho0() const { return rho0_; }
  const DifferenceOperator& difference_operator() const { return D_; }
  const PolygonalGraph<Dim>& target_graph() const { return target_graph_; }
  Eigen::Index num_edges() const { return static_cast<Eigen::Index>(rho0_.size()); }

  Eigen::Index size() const {
    return initial_.free_size() + (fixed_weights_ ? 0 : num_edges());
  }

  /// The matrices the metric preconditioner inverts. `weights` is empty with
  /// fixed weights.
  struct PreconditionerBlocks {
    Eigen::SparseMatrix<double> controls;
    Eigen::SparseMatrix<double> weights;
  };

  /// gamma = 0 leaves out the Huber curvature.
  PreconditionerBlocks preconditioner_blocks(double gamma = 0.0) const {
    const auto& p = problem_.params;
    PreconditionerBlocks out;
    Eigen::SparseMatrix<double> H = constant_path_hessian(initial_, p.metric, basis_);

    // Data term at the initial end graph, row-sum lumped: each edge gets
    // sum_j k_ij against all edges rather than its self term alone.
    const auto g = end_graph(initial_, Eigen::VectorXd::Zero(num_edges()));
    const auto E = static_cast<Eigen::Index>(g.size());
    Eigen::VectorXd len(E), mass(E);
    for (Eigen::Index i = 0; i < E; ++i) {
      len[i] = g.edges[static_cast<std::size_t>(i)].norm();
      mass[i] = std::max(0.0, g.weights[static_cast<std::size_t>(i)]) * len[i];
    }
    Eigen::VectorXd row_len = Eigen::VectorXd::Zero(E), row_mass = Eigen::VectorXd::Zero(E);
    for (Eigen::Index i = 0; i < E; ++i) {
      const auto si = static_cast<std::size_t>(i);
      if (len[i] == 0.0) continue;
      const Vec<Dim> ui = g.edges[si] / len[i];
      for (Eigen::Index j = 0; j < E; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (len[j] == 0.0) continue;
        const double kij = p.kernel.psi((g.centers[si] - g.centers[sj]).squaredNorm()) *
                           p.kernel.phi(ui.dot(g.edges[sj] / len[j]));
        row_len[i] += kij * len[j];
        row_mass[i] += kij * mass[j];
      }
    }

    // Controls: each vertex carries half of its edges' centre curvature,
    // 2 lambda (2 / sigma^2) m_i sum_j m_j k_ij, pulled back through sampling.
    const double c = 2.0 * p.lambda * 2.0 / (p.kernel.sigma * p.kernel.sigma);
    const int last = initial_.num_slices() - 1;
    const int nth = initial_.config().space_controls;
    const Eigen::Index base = static_cast<Eigen::Index>(initial_.slots_per_slice());
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::Index e = 0;
    for (int k = 0; k < initial_.num_components(); ++k) {
      const auto& S = sampling_[k];
      for (int v = 0; v <= counts_[k]; ++v) {
        double cv = 0.0;
        if (v > 0) cv += 0.5 * mass[e + v - 1] * row_mass[e + v - 1];
        if (v < counts_[k]) cv += 0.5 * mass[e + v] * row_mass[e + v];
        if (!(cv > 0.0)) continue;
        for (int a = 0; a < nth; ++a) {
          if (S(v, a) == 0.0) continue;
          const Eigen::Index ca = initial_.column(last, initial_.slot(k, a)) - base;
          for (int b = 0; b < nth; ++b) {
            if (S(v, b) == 0.0) continue;
            const Eigen::Index cb = initial_.column(last, initial_.slot(k, b)) - base;
            for (int d = 0; d < Dim; ++d)
              trip.emplace_back(ca * Dim + d, cb * Dim + d, c * cv * S(v, a) * S(v, b));
          }
        }
      }
      e += counts_[k];
    }
    Eigen::SparseMatrix<double> data(H.rows(), H.cols());
    data.setFromTriplets(trip.begin(), trip.end());
    H += data;

    // Tiny ridge for metrics without the a_0 term, which ignore translations.
    Eigen::SparseMatrix<double> ridge(H.rows(), H.cols());
    ridge.setIdentity();
    H += (1e-10 * H.diagonal().maxCoeff()) * ridge;
    out.controls = std::move(H);
    if (fixed_weights_) return out;

    // Weights: lumped varifold diagonal plus gamma D^T D, the Huber curvature
    // where differences sit in the quadratic zone.
    std::vector<Eigen::Triplet<double>> wt;
    for (Eigen::Index i = 0; i < E; ++i) {
      const double h = 2.0 * p.lambda * len[i] * row_len[i];
      wt.emplace_back(i, i, h > 0.0 ? h : 1.0);
    }
    if (p.alpha > 0.0 && gamma > 0.0) {
      Eigen::Index first = 0;
      for (int n : counts_) {
        for (Eigen::Index i = first; i + 1 < first + n; ++i) {
          wt.emplace_back(i, i, gamma);
          wt.emplace_back(i + 1, i + 1, gamma);
          wt.emplace_back(i, i + 1, -gamma);
          wt.emplace_back(i + 1, i, -gamma);
        }
        first += n;
      }
    }
    out.weights.resize(E, E);
    out.weights.setFromTriplets(wt.begin(), wt.end());
    return out;
  }

  /// Seed for the stage with Huber parameter gamma.
  Preconditioner preconditioner(double gamma = 0.0) const {
    if (problem_.params.preconditioner == PreconditionerKind::none) return {};
    auto blocks = preconditioner_blocks(gamma);
    using Solver = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;
    auto llt = std::make_shared<Solver>(blocks.controls);
    if (llt->info() != Eigen::Success)
      throw Error(ErrorCategory::numeric, "metric preconditioner is not positive definite");
    const Eigen::Index nc = initial_.free_size();
    if (fixed_weights_) return [llt](const Eigen::VectorXd& v) -> Eigen::VectorXd { return llt->solve(v); };
    auto wllt = std::make_shared<Solver>(blocks.weights);
    if (wllt->info() != Eigen::Success)
      throw Error(ErrorCategory::numeric, "weight preconditioner is not positive definite");
    return [llt, wllt, nc](const Eigen::VectorXd& v) {
      Eigen::VectorXd out(v.size());
      out.head(nc) = llt->solve(v.head(nc));
      out.tail(v.size() - nc) = wllt->solve(v.tail(v.size() - nc));
      return out;
    };
  }

  /// Constant path, drho = 0.
  Eigen::VectorXd initial_point() const {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(size());
    z.head(initial_.free_size()) = initial_.free_view();
    return z;
  }

  PathSpline<Dim> path(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    check_size(z);
    PathSpline<Dim> out = initial_;
    out.set_free(z.head(initial_.free_size()));
    return out;
  }

  Eigen::VectorXd delta_rho(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    check_size(z);
    if (fixed_weights_) return Eigen::VectorXd::Zero(num_edges());
    return z.tail(num_edges());
  }

  /// End-slice vertices of component k.
  Polyline<Dim> end_vertices(const PathSpline<Dim>& path, int k) const {
    const int last = path.num_slices() - 1;
    Polyline<Dim> v(counts_[k] + 1);
    for (int d = 0; d < Dim; ++d) {
      const Eigen::VectorXd row = path.net(k, d).row(last).transpose();
      const Eigen::VectorXd vals = sampling_[k] * row;
      for (int i = 0; i <= counts_[k]; ++i) v[i][d] = vals[i];
    }
    return v;
  }

  PolygonalGraph<Dim> end_graph(const PathSpline<Dim>& path, const Eigen::VectorXd& drho) const {
    std::vector<Polyline<Dim>> verts;
    for (int k = 0; k < path.num_components(); ++k) verts.push_back(end_vertices(path, k));
    std::vector<double> w(rho0_.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rho0_[i] + drho[static_cast<Eigen::Index>(i)];
    return make_polygonal_graph(std::move(verts), std::move(w));
  }

  /// E_gamma and optionally its gradient. gamma is ignored with fixed weights.
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& z, double gamma, Eigen::VectorXd* grad,
                  EnergyBreakdown* breakdown = nullptr) const {
    const auto& p = problem_.params;
    const PathSpline<Dim> path = this->path(z);
    const Eigen::VectorXd drho = delta_rho(z);
    EnergyBreakdown b;

    auto pe = grad ? path_energy_gradient(path, p.metric, basis_)
                   : PathEnergy<Dim>{path_energy(path, p.metric, basis_), {}};
    b.path = require_finite(pe.value, "path energy");

    const auto graph = end_graph(path, drho);
    const auto vg = distance_gradient(graph, target_, target_self_, p.kernel, grad != nullptr);
    b.varifold = require_finite(vg.distance.value, "varifold distance");
    b.varifold_roundoff = vg.distance.roundoff;
    b.varifold_weighted = p.lambda * b.varifold;

    const bool weighted = !fixed_weights_;
    const double beta = weighted ? p.beta() : 0.0;
    PenaltyValue<Dim> pen;
    if (beta > 0.0) {
      pen = zero_one_penalty(graph, p.penalty);
      b.penalty = require_finite(pen.value, "weight penalty");
      b.penalty_weighted = beta * b.penalty;
    }
    HuberTv ht;
    if (weighted && p.alpha > 0.0) {
      ht = huber_tv(drho, D_, HuberParams{p.alpha, gamma});
      b.huber = require_finite(ht.value, "huber tv");
      b.tv = p.alpha * tv_norm(drho, D_);
    }
    b.smoothed_total = b.path + b.varifold_weighted + b.penalty_weighted + b.huber;
    if (breakdown) *breakdown = b;
    if (!grad) return b.smoothed_total;

    // Controls: metric gradient plus the end-slice chain rule.
    auto G = std::move(pe.gradient);
    const int last = path.num_slices() - 1;
    const int nth = path.config().space_controls;
    for (int k = 0; k < path.num_components(); ++k) {
      const auto n = static_cast<Eigen::Index>(counts_[k]) + 1;
      Eigen::MatrixXd gv(n, Dim);
      for (Eigen::Index i = 0; i < n; ++i) {
        Vec<Dim> g = p.lambda * vg.vertices[k][i];
        if (beta > 0.0) g += beta * pen.vertices[k][i];
        gv.row(i) = g.transpose();
      }
      const Eigen::MatrixXd gc = sampling_[k].transpose() * gv;  // N_theta x Dim
      for (int j = 0; j < nth; ++j)
        G.col(path.column(last, path.slot(k, j))) += gc.row(j).transpose();
    }
    grad->resize(size());
    grad->head(initial_.free_size()) = free_part<Dim>(path, G);
    if (weighted) {
      Eigen::VectorXd gr(num_edges());
      for (Eigen::Index i = 0; i < num_edges(); ++i) {
        gr[i] = p.lambda * vg.weights[i];
        if (beta > 0.0) gr[i] += beta * pen.weights[i];
      }
      if (p.alpha > 0.0) gr += ht.gradient;
      grad->tail(num_edges()) = gr;
    }
    if (!grad->allFinite()) throw Error(ErrorCategory::numeric, "gradient is not finite");
    return b.smoothed_total;
  }

  EnergyBreakdown breakdown(const Eigen::Ref<const Eigen::VectorXd>& z, double gamma) const {
    EnergyBreakdown b;
    evaluate(z, gamma, nullptr, &b);
    return b;
  }

 private:
  void check_size(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    if (z.size() != size())
      throw Error(ErrorCategory::input, "variable has length " + std::to_string(z.size()) +
                                            ", expected " + std::to_string(size()));
  }

  static double require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw Error(ErrorCategory::numeric, std::string(what) + " is not finite");
    return v;
  }

  MatchProblem<Dim> problem_;
  bool fixed_weights_;
  PathBasis basis_;
  PathSpline<Dim> initial_;
  double fit_residual_ = 0.0;
  std::vector<int> counts_;
  std::vector<Eigen::MatrixXd> sampling_;
  std::vector<double> rho0_;
  DifferenceOperator D_;
  PolygonalGraph<Dim> target_graph_;
  Varifold<Dim> target_;
  double target_self_ = 0.0;
};

/// Callable view of E_gamma for the optimizer.
template <int Dim>
struct SmoothedEnergy {
  const PreparedMatch<Dim>* match;
  double gamma;

  double operator()(const Eigen::VectorXd& z, Eigen::VectorXd& grad) const {
    return match->evaluate(z, gamma, &grad);
  }
};

template <int Dim>
SmoothedEnergy<Dim> assemble_energy(const PreparedMatch<Dim>& match, double gamma) {
  if (!(gamma > 0.0)) throw Error(ErrorCategory::input, "gamma must be > 0");
  return {&match, gamma};
}

}  // namespace sge
