#pragma once

// Elastic Sobolev metrics of order <= 2 on immersed curves, with derivatives
// and integration taken with respect to arc length, and the Riemannian energy
// of a spline path of shape graphs (sum over components).
//
// With L = |c'|, m = <c', c''> (primes are theta-derivatives):
//   d_s h   = h' / L
//   d_s^2 h = h'' / L^2 - h' m / L^4
// and the integrand of term i is |d_s^i h|^2 L.

#include "sge/core.hpp"
#include "sge/parallel.hpp"
#include "sge/spline.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <sstream>
#include <vector>

namespace sge {

enum class MetricVariant { constant_coefficient, scale_invariant };

/// Length exponent of term i for the scale-invariant variant.
///  dimensional: 2i - 3, which makes G_{lc}(lh, lh) = G_c(h, h) exact;
///  printed:     2n - i.
enum class ScaleExponentRule { dimensional, printed };

struct MetricConfig {
  std::vector<double> coefficients{0.1, 1.0, 1e-5};  // a_0 .. a_n
  MetricVariant variant = MetricVariant::constant_coefficient;
  ScaleExponentRule exponent = ScaleExponentRule::dimensional;
  double immersion_epsilon = 1e-8;

  int order() const { return static_cast<int>(coefficients.size()) - 1; }

  double length_exponent(int i) const {
    return exponent == ScaleExponentRule::dimensional ? 2.0 * i - 3.0 : 2.0 * order() - i;
  }

  void check() const {
    if (coefficients.empty() || coefficients.size() > 3)
      throw Error(ErrorCategory::input, "metric order must be 0, 1 or 2");
    bool positive = false;
    for (double a : coefficients) {
      if (!(a >= 0.0)) throw Error(ErrorCategory::input, "metric coefficients must be >= 0");
      positive = positive || a > 0.0;
    }
    if (!positive) throw Error(ErrorCategory::input, "at least one metric coefficient must be > 0");
  }
};

/// Curve quantities at quadrature nodes. For the base curve only d1 and d2
/// are used; for a tangent field value, d1 and d2.
template <int Dim>
struct CurveJet {
  std::vector<Vec<Dim>> value, d1, d2;
};

namespace detail {

/// Per-node integrands |d_s^i h|^2 L, i = 0..2.
template <int Dim>
struct NodeIntegrand {
  double length;  // L
  double m;       // <c', c''>
  Vec<Dim> q;     // d_s^2 h
  std::array<double, 3> term;

  NodeIntegrand(const Vec<Dim>& c1, const Vec<Dim>& c2, const Vec<Dim>& h0, const Vec<Dim>& h1,
                const Vec<Dim>& h2) {
    length = c1.norm();
    m = c1.dot(c2);
    const double L = length, L2 = L * L;
    q = h2 / L2 - h1 * (m / (L2 * L2));
    term = {h0.squaredNorm() * L, h1.squaredNorm() / L, q.squaredNorm() * L};
  }

  /// Cotangents of sum_i mult[i] * term[i] + dlength * L with respect to the
  /// five node inputs.
  void backprop(const Vec<Dim>& c1, const Vec<Dim>& c2, const Vec<Dim>& h0, const Vec<Dim>& h1,
                const Vec<Dim>& h2, const std::array<double, 3>& mult, double dlength,
                Vec<Dim>& gc1, Vec<Dim>& gc2, Vec<Dim>& gh0, Vec<Dim>& gh1,
                Vec<Dim>& gh2) const {
    const double L = length, L2 = L * L, L3 = L2 * L, L5 = L3 * L2;
    gh0 = mult[0] * 2.0 * L * h0;
    gh1 = mult[1] * 2.0 / L * h1 - mult[2] * 2.0 * m / L3 * q;
    gh2 = mult[2] * 2.0 / L * q;
    const Vec<Dim> dq_dL = -2.0 / L3 * h2 + 4.0 * m / L5 * h1;
    const double dL = dlength + mult[0] * h0.squaredNorm() - mult[1] * h1.squaredNorm() / L2 +
                      mult[2] * (q.squaredNorm() + 2.0 * L * q.dot(dq_dL));
    const double dm = -mult[2] * 2.0 * q.dot(h1) / L3;
    gc1 = dL / L * c1 + dm * c2;
    gc2 = dm * c1;
  }
};

inline void immersion_failure(double speed, int component, double t, double theta) {
  std::ostringstream os;
  os << "immersion violated: |d_theta c| = " << speed << " in component " << component
     << " at t = " << t << ", theta = " << theta;
  throw Error(ErrorCategory::immersion, os.str());
}

/// s_i = a_i * l^{p_i} (or a_i) and d/dl of sum_i s_i * J_i.
inline std::array<double, 3> term_scales(const MetricConfig& cfg, double length) {
  std::array<double, 3> s{0.0, 0.0, 0.0};
  for (int i = 0; i <= cfg.order(); ++i) {
    s[i] = cfg.coefficients[i];
    if (cfg.variant == MetricVariant::scale_invariant)
      s[i] *= std::pow(length, cfg.length_exponent(i));
  }
  return s;
}

inline double scale_derivative(const MetricConfig& cfg, double length,
                               const std::array<double, 3>& integrals) {
  if (cfg.variant != MetricVariant::scale_invariant) return 0.0;
  double d = 0.0;
  for (int i = 0; i <= cfg.order(); ++i) {
    const double p = cfg.length_exponent(i);
    d += cfg.coefficients[i] * p * std::pow(length, p - 1.0) * integrals[i];
  }
  return d;
}

}  // namespace detail

/// G_c(h, h) by quadrature: c supplies d1/d2, h supplies value/d1/d2, all at
/// the same nodes with the given weights.
template <int Dim>
double metric_value(const CurveJet<Dim>& c, const CurveJet<Dim>& h, std::span<const double> weights,
                    const MetricConfig& cfg) {
  cfg.check();
  std::array<double, 3> integral{0.0, 0.0, 0.0};
  double length = 0.0;
  for (std::size_t b = 0; b < weights.size(); ++b) {
    const double speed = c.d1[b].norm();
    if (speed < cfg.immersion_epsilon) detail::immersion_failure(speed, 0, 0.0, double(b));
    const detail::NodeIntegrand<Dim> node(c.d1[b], c.d2[b], h.value[b], h.d1[b], h.d2[b]);
    for (int i = 0; i < 3; ++i) integral[i] += weights[b] * node.term[i];
    length += weights[b] * speed;
  }
  const auto s = detail::term_scales(cfg, length);
  return s[0] * integral[0] + s[1] * integral[1] + s[2] * integral[2];
}

template <int Dim>
struct PathEnergy {
  double value = 0.0;
  typename PathSpline<Dim>::ControlMatrix gradient;  // all slices; slice 0 is not optimized
};

namespace detail {

template <int Dim>
PathEnergy<Dim> path_energy_impl(const PathSpline<Dim>& path, const MetricConfig& cfg,
                                 const PathBasis& basis, bool with_gradient) {
  cfg.check();
  const auto c1 = path_eval(path, 0, 1, basis);
  const auto c2 = path_eval(path, 0, 2, basis);
  const auto h0 = path_eval(path, 1, 0, basis);
  const auto h1 = path_eval(path, 1, 1, basis);
  const auto h2 = path_eval(path, 1, 2, basis);

  const int K = path.num_components();
  const auto nt = static_cast<Eigen::Index>(basis.time.size());
  const auto ns = static_cast<Eigen::Index>(basis.space.size());
  auto at = [](const std::array<Eigen::MatrixXd, Dim>& m, Eigen::Index a, Eigen::Index b) {
    Vec<Dim> v;
    for (int d = 0; d < Dim; ++d) v[d] = m[d](a, b);
    return v;
  };

  SampledJet<Dim> g_c1, g_c2, g_h0, g_h1, g_h2;
  if (with_gradient) {
    g_c1 = zero_jet<Dim>(K, basis);
    g_c2 = g_c1;
    g_h0 = g_c1;
    g_h1 = g_c1;
    g_h2 = g_c1;
  }

  // One partial energy per (component, time node).
  std::vector<double> partial(static_cast<std::size_t>(K) * nt, 0.0);
  parallel_for(partial.size(), [&](std::size_t job) {
    const int k = static_cast<int>(job / nt);
    const auto a = static_cast<Eigen::Index>(job % nt);
    std::vector<NodeIntegrand<Dim>> nodes;
    nodes.reserve(ns);
    std::array<double, 3> integral{0.0, 0.0, 0.0};
    std::vector<double> lterms(ns);
    for (Eigen::Index b = 0; b < ns; ++b) {
      const Vec<Dim> v1 = at(c1[k], a, b);
      const double speed = v1.norm();
      if (speed < cfg.immersion_epsilon)
        immersion_failure(speed, k, basis.time.nodes[a], basis.space.nodes[b]);
      nodes.emplace_back(v1, at(c2[k], a, b), at(h0[k], a, b), at(h1[k], a, b), at(h2[k], a, b));
      lterms[b] = basis.space.weights[b] * speed;
    }
    std::vector<double> terms(ns);
    for (int i = 0; i < 3; ++i) {
      for (Eigen::Index b = 0; b < ns; ++b) terms[b] = basis.space.weights[b] * nodes[b].term[i];
      integral[i] = pairwise_sum(terms);
    }
    const double length = pairwise_sum(lterms);
    const auto s = term_scales(cfg, length);
    const double wa = basis.time.weights[a];
    partial[job] = wa * (s[0] * integral[0] + s[1] * integral[1] + s[2] * integral[2]);

    if (!with_gradient) return;
    const double dlength = wa * scale_derivative(cfg, length, integral);
    for (Eigen::Index b = 0; b < ns; ++b) {
      const double w = wa * basis.space.weights[b];
      const std::array<double, 3> mult{w * s[0], w * s[1], w * s[2]};
      Vec<Dim> gc1, gc2, gh0, gh1, gh2;
      nodes[b].backprop(at(c1[k], a, b), at(c2[k], a, b), at(h0[k], a, b), at(h1[k], a, b),
                        at(h2[k], a, b), mult, dlength * basis.space.weights[b], gc1, gc2, gh0,
                        gh1, gh2);
      for (int d = 0; d < Dim; ++d) {
        g_c1[k][d](a, b) = gc1[d];
        g_c2[k][d](a, b) = gc2[d];
        g_h0[k][d](a, b) = gh0[d];
        g_h1[k][d](a, b) = gh1[d];
        g_h2[k][d](a, b) = gh2[d];
      }
    }
  });

  PathEnergy<Dim> out;
  // Component totals are summed in sorted order so that relabelling
  // components leaves the value bit-identical.
  std::vector<double> totals(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k)
    totals[static_cast<std::size_t>(k)] =
        pairwise_sum(std::span<const double>(partial).subspan(static_cast<std::size_t>(k) * nt, nt));
  std::sort(totals.begin(), totals.end());
  out.value = pairwise_sum(totals);
  out.gradient = PathSpline<Dim>::ControlMatrix::Zero(Dim, path.controls().cols());
  if (with_gradient) {
    backprop_to_controls<Dim>(path, g_c1, 0, 1, basis, out.gradient);
    backprop_to_controls<Dim>(path, g_c2, 0, 2, basis, out.gradient);
    backprop_to_controls<Dim>(path, g_h0, 1, 0, basis, out.gradient);
    backprop_to_controls<Dim>(path, g_h1, 1, 1, basis, out.gradient);
    backprop_to_controls<Dim>(path, g_h2, 1, 2, basis, out.gradient);
  }
  return out;
}

}  // namespace detail

/// Integral over t of sum_k G_{c^k(t)}(d_t c^k, d_t c^k).
template <int Dim>
double path_energy(const PathSpline<Dim>& path, const MetricConfig& cfg, const PathBasis& basis) {
  return detail::path_energy_impl(path, cfg, basis, false).value;
}

/// Energy and its exact gradient with respect to every control slot.
template <int Dim>
PathEnergy<Dim> path_energy_gradient(const PathSpline<Dim>& path, const MetricConfig& cfg,
                                     const PathBasis& basis) {
  return detail::path_energy_impl(path, cfg, basis, true);
}

/// Hessian of the path energy at the constant path through slice 0 of
/// `path`, with respect to the free controls in free_view() order. There the
/// energy is exactly quadratic to second order: 2 K_t (x) G_{c0} (x) I_Dim,
/// with K_t the time stiffness matrix of the free slices and G_{c0} the
/// metric Gram matrix of the space basis at the initial curve.
template <int Dim>
Eigen::SparseMatrix<double> constant_path_hessian(const PathSpline<Dim>& path,
                                                  const MetricConfig& cfg, const PathBasis& basis) {
  cfg.check();
  const int nt = path.num_slices();
  const int nth = path.config().space_controls;
  const auto ns = static_cast<Eigen::Index>(basis.space.size());
  const Eigen::Map<const Eigen::VectorXd> ws(basis.space.weights.data(), ns);
  const Eigen::Map<const Eigen::VectorXd> wt(basis.time.weights.data(),
                                             static_cast<Eigen::Index>(basis.time.size()));
  const Eigen::MatrixXd Kt =
      basis.time_basis[1].transpose() * wt.asDiagonal() * basis.time_basis[1];

  const auto& B0 = basis.space_basis[0];
  const auto& B1 = basis.space_basis[1];
  const auto& B2 = basis.space_basis[2];
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < path.num_components(); ++k) {
    Eigen::MatrixXd c1(ns, Dim), c2(ns, Dim);
    for (int d = 0; d < Dim; ++d) {
      const Eigen::VectorXd row = path.net(k, d).row(0).transpose();
      c1.col(d) = B1 * row;
      c2.col(d) = B2 * row;
    }
    const Eigen::VectorXd L = c1.rowwise().norm();
    const Eigen::VectorXd m = (c1.array() * c2.array()).rowwise().sum();
    for (Eigen::Index b = 0; b < ns; ++b)
      if (L[b] < cfg.immersion_epsilon)
        detail::immersion_failure(L[b], k, 0.0, basis.space.nodes[static_cast<std::size_t>(b)]);
    const auto s = detail::term_scales(cfg, ws.dot(L));
    // d_s^2 of the basis: B''/L^2 - B' m/L^4.
    const Eigen::MatrixXd U2 = (L.array().square().inverse()).matrix().asDiagonal() * B2 -
                               (m.array() / L.array().pow(4)).matrix().asDiagonal() * B1;
    const Eigen::VectorXd w0 = s[0] * ws.cwiseProduct(L);
    const Eigen::VectorXd w1 = s[1] * ws.cwiseQuotient(L);
    const Eigen::MatrixXd G = B0.transpose() * w0.asDiagonal() * B0 +
                              B1.transpose() * w1.asDiagonal() * B1 +
                              s[2] * U2.transpose() * ws.cwiseProduct(L).asDiagonal() * U2;
    for (int i = 1; i < nt; ++i)
      for (int ip = 1; ip < nt; ++ip) {
        if (Kt(i, ip) == 0.0) continue;
        for (int j = 0; j < nth; ++j)
          for (int jp = 0; jp < nth; ++jp) {
            const double v = 2.0 * Kt(i, ip) * G(j, jp);
            if (v == 0.0) continue;
            const auto r = (path.column(i, path.slot(k, j)) - path.slots_per_slice()) * Dim;
            const auto c = (path.column(ip, path.slot(k, jp)) - path.slots_per_slice()) * Dim;
            for (int d = 0; d < Dim; ++d) trip.emplace_back(r + d, c + d, v);
          }
      }
  }
  Eigen::SparseMatrix<double> H(path.free_size(), path.free_size());
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

}  // namespace sge
