#pragma once

// Tensor-product B-spline paths of shape graphs.
//
// Each component k is c^k(t, theta) = sum_ij c_ij^k B_i(t) C_j(theta) on
// clamped, equidistant knot vectors. Control points are stored per "slot":
// the first and last spatial control points of a component are shared with
// every endpoint glued to them, so closedness and junctions hold exactly along
// the whole path. Slice 0 (t = 0) interpolates the source and is held fixed.

#include "sge/core.hpp"
#include "sge/graphcore.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace sge {

// ---------------------------------------------------------------------------
// Gauss-Legendre

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [-1, 1]; roots by Newton iteration.
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw Error(ErrorCategory::input, "quadrature needs at least one node");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const auto un = static_cast<unsigned>(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double p = std::legendre(un, x);
      const double pm = n > 1 ? std::legendre(un - 1, x) : 1.0;
      dp = n * (x * p - pm) / (x * x - 1.0);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      const double p = std::legendre(un, x);
      const double pm = n > 1 ? std::legendre(un - 1, x) : 1.0;
      dp = n * (x * p - pm) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

// ---------------------------------------------------------------------------
// Knots and basis functions

/// Clamped knot vector: degree+1 copies of 0 and 1, equidistant simple
/// interior knots.
class KnotVector {
 public:
  KnotVector() = default;
  KnotVector(int degree, int num_basis) : degree_(degree), num_basis_(num_basis) {
    if (degree < 0 || num_basis < degree + 1)
      throw Error(ErrorCategory::input, "a degree-" + std::to_string(degree) +
                                            " spline needs at least " +
                                            std::to_string(degree + 1) + " control points");
    const int spans = num_basis - degree;
    knots_.assign(degree + 1, 0.0);
    for (int i = 1; i < spans; ++i) knots_.push_back(double(i) / spans);
    knots_.insert(knots_.end(), degree + 1, 1.0);
  }

  int degree() const { return degree_; }
  int num_basis() const { return num_basis_; }
  int num_spans() const { return num_basis_ - degree_; }
  const std::vector<double>& knots() const { return knots_; }

  std::vector<double> breakpoints() const {
    std::vector<double> b;
    for (int i = 0; i <= num_spans(); ++i) b.push_back(double(i) / num_spans());
    return b;
  }

  /// Index i with knots[i] <= x < knots[i+1]; the last span owns x = 1.
  int find_span(double x) const {
    const int n = num_basis_ - 1;
    if (x >= knots_[n + 1]) return n;
    int lo = degree_, hi = n + 1;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      if (x < knots_[mid]) hi = mid;
      else lo = mid;
    }
    return lo;
  }

  /// Nonzero basis functions N_{span-degree..span} and their derivatives up
  /// to `derivs` at x: ders[k][j] is the k-th derivative of N_{span-degree+j}.
  std::vector<std::vector<double>> derivatives(int span, double x, int derivs) const {
    const int p = degree_;
    const auto& U = knots_;
    std::vector<std::vector<double>> ndu(p + 1, std::vector<double>(p + 1, 0.0));
    std::vector<double> left(p + 1), right(p + 1);
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
      left[j] = x - U[span + 1 - j];
      right[j] = U[span + j] - x;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        ndu[j][r] = right[r + 1] + left[j - r];
        const double temp = ndu[r][j - 1] / ndu[j][r];
        ndu[r][j] = saved + right[r + 1] * temp;
        saved = left[j - r] * temp;
      }
      ndu[j][j] = saved;
    }
    std::vector<std::vector<double>> ders(derivs + 1, std::vector<double>(p + 1, 0.0));
    for (int j = 0; j <= p; ++j) ders[0][j] = ndu[j][p];

    const int n = std::min(derivs, p);
    std::array<std::vector<double>, 2> a{std::vector<double>(p + 1), std::vector<double>(p + 1)};
    for (int r = 0; r <= p; ++r) {
      int s1 = 0, s2 = 1;
      a[0][0] = 1.0;
      for (int k = 1; k <= n; ++k) {
        double d = 0.0;
        const int rk = r - k, pk = p - k;
        if (r >= k) {
          a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
          d = a[s2][0] * ndu[rk][pk];
        }
        const int j1 = (rk >= -1) ? 1 : -rk;
        const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
        for (int j = j1; j <= j2; ++j) {
          a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
          d += a[s2][j] * ndu[rk + j][pk];
        }
        if (r <= pk) {
          a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
          d += a[s2][k] * ndu[r][pk];
        }
        ders[k][r] = d;
        std::swap(s1, s2);
      }
    }
    double factor = p;
    for (int k = 1; k <= n; ++k) {
      for (int j = 0; j <= p; ++j) ders[k][j] *= factor;
      factor *= (p - k);
    }
    return ders;
  }

 private:
  int degree_ = 0;
  int num_basis_ = 0;
  std::vector<double> knots_;
};

/// Row per point, column per basis function.
inline Eigen::MatrixXd basis_eval(const KnotVector& knots, std::span<const double> points,
                                  int derivative_order) {
  if (derivative_order < 0 || derivative_order > knots.degree())
    throw Error(ErrorCategory::input, "derivative order exceeds spline degree");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(points.size()),
                                              knots.num_basis());
  for (std::size_t r = 0; r < points.size(); ++r) {
    const double x = points[r];
    if (!(x >= 0.0 && x <= 1.0))
      throw Error(ErrorCategory::input, "spline parameter " + std::to_string(x) +
                                            " outside [0, 1]");
    const int span = knots.find_span(x);
    const auto ders = knots.derivatives(span, x, derivative_order);
    for (int j = 0; j <= knots.degree(); ++j)
      out(static_cast<Eigen::Index>(r), span - knots.degree() + j) = ders[derivative_order][j];
  }
  return out;
}

/// Gauss-Legendre nodes placed inside every knot span.
inline QuadratureRule make_quadrature(const KnotVector& knots, int nodes_per_span) {
  const auto ref = gauss_legendre(nodes_per_span);
  const auto b = knots.breakpoints();
  QuadratureRule rule;
  for (std::size_t s = 0; s + 1 < b.size(); ++s) {
    const double mid = 0.5 * (b[s] + b[s + 1]), half = 0.5 * (b[s + 1] - b[s]);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      rule.nodes.push_back(mid + half * ref.nodes[i]);
      rule.weights.push_back(half * ref.weights[i]);
    }
  }
  return rule;
}

// ---------------------------------------------------------------------------
// Path splines

struct SplineConfig {
  int time_order = 1;    // n_t
  int space_order = 2;   // n_theta
  int time_controls = 10;
  int space_controls = 100;
  int time_nodes = 2;    // Gauss nodes per time span
  int space_nodes = 3;   // Gauss nodes per space span
};

/// Quadrature tables and basis matrices at the quadrature nodes.
struct PathBasis {
  KnotVector time_knots, space_knots;
  QuadratureRule time, space;
  std::vector<Eigen::MatrixXd> time_basis;   // [derivative] nodes x N_t
  std::vector<Eigen::MatrixXd> space_basis;  // [derivative] nodes x N_theta

  static constexpr int max_time_derivative = 1;
  static constexpr int max_space_derivative = 2;

  explicit PathBasis(const SplineConfig& cfg)
      : time_knots(cfg.time_order, cfg.time_controls),
        space_knots(cfg.space_order, cfg.space_controls),
        time(make_quadrature(time_knots, cfg.time_nodes)),
        space(make_quadrature(space_knots, cfg.space_nodes)) {
    for (int d = 0; d <= max_time_derivative; ++d)
      time_basis.push_back(d <= time_knots.degree()
                               ? basis_eval(time_knots, time.nodes, d)
                               : Eigen::MatrixXd::Zero(time.size(), time_knots.num_basis()));
    for (int d = 0; d <= max_space_derivative; ++d)
      space_basis.push_back(d <= space_knots.degree()
                                ? basis_eval(space_knots, space.nodes, d)
                                : Eigen::MatrixXd::Zero(space.size(), space_knots.num_basis()));
  }
};

/// Per component, one (time nodes x space nodes) matrix per coordinate.
template <int Dim>
using SampledJet = std::vector<std::array<Eigen::MatrixXd, Dim>>;

template <int Dim>
SampledJet<Dim> zero_jet(int components, const PathBasis& basis) {
  SampledJet<Dim> jet(components);
  for (auto& c : jet)
    for (auto& m : c) m = Eigen::MatrixXd::Zero(basis.time.size(), basis.space.size());
  return jet;
}

/// Per component, one N_t x N_theta control net per coordinate.
template <int Dim>
using ControlNets = std::vector<std::array<Eigen::MatrixXd, Dim>>;

/// Basis values at theta_i = i / n, i = 0..n: (n+1) x N_theta.
inline Eigen::MatrixXd uniform_sampling_matrix(const KnotVector& space_knots, int n) {
  if (n < 1) throw Error(ErrorCategory::input, "sampling needs at least one edge");
  std::vector<double> theta(n + 1);
  for (int i = 0; i <= n; ++i) theta[i] = double(i) / n;
  theta.back() = 1.0;
  return basis_eval(space_knots, theta, 0);
}

/// Vertices of every component at time t and theta_i = i / counts[k].
template <int Dim>
std::vector<Polyline<Dim>> sample_nets(const ControlNets<Dim>& nets, const KnotVector& time_knots,
                                       const KnotVector& space_knots, double t,
                                       const std::vector<int>& counts) {
  if (counts.size() != nets.size())
    throw Error(ErrorCategory::input, "sampling needs one edge count per component");
  const double tp[1] = {t};
  const Eigen::RowVectorXd bt = basis_eval(time_knots, tp, 0);
  std::vector<Polyline<Dim>> out;
  for (std::size_t k = 0; k < nets.size(); ++k) {
    const Eigen::MatrixXd e = uniform_sampling_matrix(space_knots, counts[k]);
    Polyline<Dim> v(counts[k] + 1);
    for (int d = 0; d < Dim; ++d) {
      const Eigen::VectorXd vals = e * (bt * nets[k][d]).transpose();
      for (int i = 0; i <= counts[k]; ++i) v[i][d] = vals[i];
    }
    out.push_back(std::move(v));
  }
  return out;
}

template <int Dim>
class PathSpline {
 public:
  using ControlMatrix = Eigen::Matrix<double, Dim, Eigen::Dynamic>;

  PathSpline() = default;

  /// Slot layout from the adjacency: endpoints in one junction group share a
  /// slot, interior control points get their own. Slots are numbered
  /// component-major in order of first use.
  PathSpline(const SplineConfig& cfg, const AdjacencyMatrix& adjacency)
      : cfg_(cfg),
        time_knots_(cfg.time_order, cfg.time_controls),
        space_knots_(cfg.space_order, cfg.space_controls) {
    if (cfg.space_controls < cfg.space_order + 2)
      throw Error(ErrorCategory::input, "space_controls must exceed space_order + 1");
    if (cfg.time_controls < 2) throw Error(ErrorCategory::input, "time_controls must be >= 2");
    const int K = adjacency.components();
    const auto junction = adjacency.junction_ids();
    std::vector<int> junction_slot(junction.size(), -1);
    int next = 0;
    slots_.assign(K, std::vector<int>(cfg.space_controls));
    for (int k = 0; k < K; ++k) {
      for (int j = 0; j < cfg.space_controls; ++j) {
        const bool first = j == 0, last = j == cfg.space_controls - 1;
        if (first || last) {
          const int g = junction[first ? start_endpoint(k) : end_endpoint(k)];
          if (junction_slot[g] < 0) junction_slot[g] = next++;
          slots_[k][j] = junction_slot[g];
        } else {
          slots_[k][j] = next++;
        }
      }
    }
    slots_per_slice_ = next;
    controls_ = ControlMatrix::Zero(Dim, static_cast<Eigen::Index>(next) * cfg.time_controls);
  }

  const SplineConfig& config() const { return cfg_; }
  const KnotVector& time_knots() const { return time_knots_; }
  const KnotVector& space_knots() const { return space_knots_; }
  int num_components() const { return static_cast<int>(slots_.size()); }
  int num_slices() const { return cfg_.time_controls; }
  int slots_per_slice() const { return slots_per_slice_; }
  int slot(int k, int j) const { return slots_[k][j]; }
  Eigen::Index column(int slice, int slot) const {
    return static_cast<Eigen::Index>(slice) * slots_per_slice_ + slot;
  }

  auto control(int slice, int slot) { return controls_.col(column(slice, slot)); }
  auto control(int slice, int slot) const { return controls_.col(column(slice, slot)); }
  const ControlMatrix& controls() const { return controls_; }
  ControlMatrix& controls() { return controls_; }

  /// Number of optimized scalars: every slice after the first.
  Eigen::Index free_size() const {
    return static_cast<Eigen::Index>(num_slices() - 1) * slots_per_slice_ * Dim;
  }
  Eigen::Map<const Eigen::VectorXd> free_view() const {
    return {controls_.data() + static_cast<Eigen::Index>(slots_per_slice_) * Dim, free_size()};
  }
  void set_free(const Eigen::Ref<const Eigen::VectorXd>& z) {
    Eigen::Map<Eigen::VectorXd>(controls_.data() + static_cast<Eigen::Index>(slots_per_slice_) *
                                                       Dim,
                                free_size()) = z;
  }

  /// Copies slice 0 into every later slice (the constant path).
  void make_constant() {
    for (int i = 1; i < num_slices(); ++i)
      controls_.middleCols(column(i, 0), slots_per_slice_) =
          controls_.middleCols(0, slots_per_slice_);
  }

  /// Control net of component k, coordinate d: N_t x N_theta.
  Eigen::MatrixXd net(int k, int d) const {
    Eigen::MatrixXd m(num_slices(), cfg_.space_controls);
    for (int i = 0; i < num_slices(); ++i)
      for (int j = 0; j < cfg_.space_controls; ++j) m(i, j) = controls_(d, column(i, slots_[k][j]));
    return m;
  }

  /// Adds a per-component net gradient into a control-shaped accumulator,
  /// summing over tied occurrences.
  void scatter_net(int k, int d, const Eigen::MatrixXd& g, ControlMatrix& out) const {
    for (int i = 0; i < num_slices(); ++i)
      for (int j = 0; j < cfg_.space_controls; ++j) out(d, column(i, slots_[k][j])) += g(i, j);
  }

  Vec<Dim> evaluate(int k, double t, double theta, int t_deriv = 0, int theta_deriv = 0) const {
    const double tp[1] = {t}, sp[1] = {theta};
    const Eigen::MatrixXd bt = basis_eval(time_knots_, tp, t_deriv);
    const Eigen::MatrixXd bs = basis_eval(space_knots_, sp, theta_deriv);
    Vec<Dim> out;
    for (int d = 0; d < Dim; ++d) out[d] = (bt * net(k, d) * bs.transpose())(0, 0);
    return out;
  }

  /// Vertices of every component at time t and theta_i = i / counts[k].
  std::vector<Polyline<Dim>> sample(double t, const std::vector<int>& counts) const {
    ControlNets<Dim> nets(num_components());
    for (int k = 0; k < num_components(); ++k)
      for (int d = 0; d < Dim; ++d) nets[k][d] = net(k, d);
    return sample_nets<Dim>(nets, time_knots_, space_knots_, t, counts);
  }

  /// Basis values at theta_i = i / n, i = 0..n: (n+1) x N_theta.
  Eigen::MatrixXd uniform_sampling_matrix(int n) const {
    return sge::uniform_sampling_matrix(space_knots_, n);
  }

 private:
  SplineConfig cfg_;
  KnotVector time_knots_, space_knots_;
  std::vector<std::vector<int>> slots_;
  int slots_per_slice_ = 0;
  ControlMatrix controls_;
};

/// d^t_order/dt d^theta_order/dtheta of every component at every quadrature
/// node.
template <int Dim>
SampledJet<Dim> path_eval(const PathSpline<Dim>& path, int t_order, int theta_order,
                          const PathBasis& basis) {
  if (t_order > PathBasis::max_time_derivative || theta_order > PathBasis::max_space_derivative)
    throw Error(ErrorCategory::input, "requested derivative is not tabulated");
  const auto& bt = basis.time_basis[t_order];
  const auto& bs = basis.space_basis[theta_order];
  SampledJet<Dim> jet(path.num_components());
  for (int k = 0; k < path.num_components(); ++k)
    for (int d = 0; d < Dim; ++d) jet[k][d] = bt * path.net(k, d) * bs.transpose();
  return jet;
}

/// Adjoint of path_eval: accumulates sum over nodes of cotangent * basis into
/// `gradient` (control-shaped, all slices).
template <int Dim>
void backprop_to_controls(const PathSpline<Dim>& path, const SampledJet<Dim>& cotangent,
                          int t_order, int theta_order, const PathBasis& basis,
                          typename PathSpline<Dim>::ControlMatrix& gradient) {
  if (static_cast<int>(cotangent.size()) != path.num_components())
    throw Error(ErrorCategory::input, "cotangent has the wrong number of components");
  const auto& bt = basis.time_basis[t_order];
  const auto& bs = basis.space_basis[theta_order];
  if (gradient.cols() != path.controls().cols())
    gradient = PathSpline<Dim>::ControlMatrix::Zero(Dim, path.controls().cols());
  for (int k = 0; k < path.num_components(); ++k)
    for (int d = 0; d < Dim; ++d) {
      const auto& g = cotangent[k][d];
      if (g.rows() != bt.rows() || g.cols() != bs.rows())
        throw Error(ErrorCategory::input, "cotangent shape mismatch");
      path.scatter_net(k, d, bt.transpose() * g * bs, gradient);
    }
}

/// Free (t > 0) part of a control-shaped gradient, in the layout of
/// PathSpline::free_view().
template <int Dim>
Eigen::VectorXd free_part(const PathSpline<Dim>& path,
                          const typename PathSpline<Dim>::ControlMatrix& gradient) {
  return Eigen::Map<const Eigen::VectorXd>(
      gradient.data() + static_cast<Eigen::Index>(path.slots_per_slice()) * Dim, path.free_size());
}

/// Weighted least-squares fit of slice 0 to the source polylines, then copied
/// to all slices. Vertex i of an N-edge component is fitted at theta = i / N
/// with unit weight; points along the edges enter with a small weight so the
/// fit stays determined when there are more controls than vertices. Glued
/// endpoints are pinned to the average of their junction. Returns the RMS
/// distance between fitted curve and source vertices.
template <int Dim>
double fit_initial_slice(PathSpline<Dim>& path, const ShapeGraphSpec<Dim>& source,
                         double edge_weight = 0.001) {
  const int K = path.num_components();
  const int n = path.config().space_controls;
  if (source.num_components() != K)
    throw Error(ErrorCategory::input, "source and path disagree on component count");

  std::vector<Vec<Dim>> sum(path.slots_per_slice(), Vec<Dim>::Zero());
  std::vector<int> count(path.slots_per_slice(), 0);
  for (int k = 0; k < K; ++k) {
    for (int j : {0, n - 1}) {
      const int s = path.slot(k, j);
      sum[s] += j == 0 ? source.components[k].vertices.front()
                       : source.components[k].vertices.back();
      ++count[s];
    }
  }
  for (int s = 0; s < path.slots_per_slice(); ++s)
    if (count[s] > 0) path.control(0, s) = sum[s] / count[s];

  double sq = 0.0;
  std::size_t vertices_total = 0;
  for (int k = 0; k < K; ++k) {
    const auto& poly = source.components[k].vertices;
    const auto params = polyline_parameters(poly);
    const int dense = 4 * std::max<int>(n, static_cast<int>(poly.size()));
    std::vector<double> theta(params);
    std::vector<double> w(params.size(), 1.0);
    for (int s = 0; s < dense; ++s) {
      theta.push_back((s + 0.5) / dense);
      w.push_back(edge_weight);
    }
    const auto rows = static_cast<Eigen::Index>(theta.size());
    const Eigen::MatrixXd b = basis_eval(path.space_knots(), theta, 0);
    Eigen::MatrixXd target(rows, Dim);
    for (Eigen::Index r = 0; r < rows; ++r)
      target.row(r) = evaluate_polyline(poly, params, theta[r]).transpose();
    const Vec<Dim> first = path.control(0, path.slot(k, 0));
    const Vec<Dim> last = path.control(0, path.slot(k, n - 1));
    const Eigen::MatrixXd pinned = b.col(0) * first.transpose() + b.col(n - 1) * last.transpose();
    const Eigen::VectorXd sw = Eigen::Map<const Eigen::VectorXd>(w.data(), rows).cwiseSqrt();
    const Eigen::MatrixXd interior = sw.asDiagonal() * b.middleCols(1, n - 2);
    const Eigen::MatrixXd rhs = sw.asDiagonal() * (target - pinned);
    const Eigen::MatrixXd x = interior.colPivHouseholderQr().solve(rhs);
    for (int j = 1; j < n - 1; ++j) path.control(0, path.slot(k, j)) = x.row(j - 1).transpose();
    const auto nv = static_cast<Eigen::Index>(poly.size());
    const Eigen::MatrixXd fit = b.topRows(nv).middleCols(1, n - 2) * x + pinned.topRows(nv);
    sq += (fit - target.topRows(nv)).squaredNorm();
    vertices_total += poly.size();
  }
  path.make_constant();
  return std::sqrt(sq / static_cast<double>(vertices_total));
}

}  // namespace sge
