#pragma once

// Discrete varifolds of weighted polygonal graphs and their kernel inner
// products
//   <A, B> = sum_i sum_j Psi(|x_i - y_j|^2) Phi(u_i . v_j) rho_i rho~_j |e_i| |f_j|
// with Gaussian Psi(r^2) = exp(-r^2 / sigma^2).
//
// Edges are summed in a canonical order that ignores component order and
// edge orientation, one row at a time with pairwise reduction, so reordering
// components (or flipping edges under the squared Phi) reproduces every value
// bit for bit.

#include "sge/core.hpp"
#include "sge/graphcore.hpp"
#include "sge/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace sge {

enum class Orientation { squared, oriented_exponential };

struct KernelConfig {
  double sigma = 0.2;
  Orientation orientation = Orientation::squared;
  double tau = 1.0;

  void check() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw Error(ErrorCategory::input, "kernel sigma must be positive");
    if (orientation == Orientation::oriented_exponential && !(tau > 0.0 && std::isfinite(tau)))
      throw Error(ErrorCategory::input, "kernel tau must be positive");
  }

  double psi(double r2) const { return std::exp(-r2 / (sigma * sigma)); }

  double phi(double s) const {
    return orientation == Orientation::squared ? s * s : std::exp(-2.0 * (1.0 - s) / (tau * tau));
  }
  double phi_prime(double s) const {
    return orientation == Orientation::squared ? 2.0 * s
                                               : 2.0 / (tau * tau) * phi(s);
  }
};

/// Edge data in canonical order; `source_index` maps back to the graph's edge.
template <int Dim>
struct Varifold {
  std::vector<Vec<Dim>> centers;
  std::vector<Vec<Dim>> directions;  // unit
  std::vector<double> lengths;
  std::vector<double> weights;
  std::vector<double> masses;        // weight * length
  std::vector<std::size_t> source_index;

  std::size_t size() const { return centers.size(); }
};

namespace detail {

/// Lexicographic key on (center, direction up to sign, length, weight).
template <int Dim>
bool edge_key_less(const Vec<Dim>& ca, const Vec<Dim>& ua, double la, double wa,
                   const Vec<Dim>& cb, const Vec<Dim>& ub, double lb, double wb) {
  for (int d = 0; d < Dim; ++d)
    if (ca[d] != cb[d]) return ca[d] < cb[d];
  auto canon = [](const Vec<Dim>& u) {
    for (int d = 0; d < Dim; ++d)
      if (u[d] != 0.0) return u[d] < 0.0 ? Vec<Dim>(-u) : u;
    return u;
  };
  const Vec<Dim> a = canon(ua), b = canon(ub);
  for (int d = 0; d < Dim; ++d)
    if (a[d] != b[d]) return a[d] < b[d];
  if (la != lb) return la < lb;
  return wa < wb;
}

template <int Dim>
bool varifold_less(const Varifold<Dim>& a, const Varifold<Dim>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (edge_key_less<Dim>(a.centers[i], a.directions[i], a.lengths[i], a.weights[i],
                           b.centers[i], b.directions[i], b.lengths[i], b.weights[i]))
      return true;
    if (edge_key_less<Dim>(b.centers[i], b.directions[i], b.lengths[i], b.weights[i],
                           a.centers[i], a.directions[i], a.lengths[i], a.weights[i]))
      return false;
  }
  return a.size() < b.size();
}

/// Single kernel term, written so that swapping the two edges or negating
/// either direction under the squared Phi gives the same bits.
template <int Dim>
double pair_term(const Varifold<Dim>& a, std::size_t i, const Varifold<Dim>& b, std::size_t j,
                 const KernelConfig& k) {
  const double r2 = (a.centers[i] - b.centers[j]).squaredNorm();
  const double s = a.directions[i].dot(b.directions[j]);
  return k.psi(r2) * k.phi(s) * (a.masses[i] * b.masses[j]);
}

template <int Dim>
double ordered_inner_product(const Varifold<Dim>& a, const Varifold<Dim>& b,
                             const KernelConfig& k) {
  std::vector<double> rows(a.size());
  parallel_for(a.size(), [&](std::size_t i) {
    std::vector<double> terms(b.size());
    for (std::size_t j = 0; j < b.size(); ++j) terms[j] = pair_term(a, i, b, j, k);
    rows[i] = pairwise_sum(terms);
  });
  return pairwise_sum(rows);
}

}  // namespace detail

template <int Dim>
Varifold<Dim> make_varifold(const PolygonalGraph<Dim>& g) {
  const std::size_t n = g.size();
  if (n == 0) throw Error(ErrorCategory::input, "varifold of an empty graph");
  std::vector<double> len(n);
  std::vector<Vec<Dim>> dir(n);
  for (std::size_t i = 0; i < n; ++i) {
    len[i] = g.edges[i].norm();
    if (!(len[i] > 0.0))
      throw Error(ErrorCategory::immersion, "zero-length edge " + std::to_string(i));
    dir[i] = g.edges[i] / len[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detail::edge_key_less<Dim>(g.centers[a], dir[a], len[a], g.weights[a], g.centers[b],
                                      dir[b], len[b], g.weights[b]);
  });
  Varifold<Dim> v;
  for (std::size_t i : order) {
    v.centers.push_back(g.centers[i]);
    v.directions.push_back(dir[i]);
    v.lengths.push_back(len[i]);
    v.weights.push_back(g.weights[i]);
    v.masses.push_back(g.weights[i] * len[i]);
    v.source_index.push_back(i);
  }
  return v;
}

template <int Dim>
double inner_product(const Varifold<Dim>& a, const Varifold<Dim>& b, const KernelConfig& k) {
  k.check();
  return detail::varifold_less(b, a) ? detail::ordered_inner_product(b, a, k)
                                     : detail::ordered_inner_product(a, b, k);
}

template <int Dim>
double inner_product(const PolygonalGraph<Dim>& a, const PolygonalGraph<Dim>& b,
                     const KernelConfig& k) {
  return inner_product(make_varifold(a), make_varifold(b), k);
}

struct VarifoldDistance {
  double value = 0.0;     // clamped at 0
  double roundoff = 0.0;  // magnitude removed by the clamp
};

template <int Dim>
VarifoldDistance squared_distance(const Varifold<Dim>& a, const Varifold<Dim>& b,
                                  const KernelConfig& k) {
  const double raw = inner_product(a, a, k) + inner_product(b, b, k) - 2.0 * inner_product(a, b, k);
  VarifoldDistance d;
  if (raw < 0.0) {
    d.roundoff = -raw;
  } else {
    d.value = raw;
  }
  return d;
}

template <int Dim>
VarifoldDistance squared_distance(const PolygonalGraph<Dim>& a, const PolygonalGraph<Dim>& b,
                                  const KernelConfig& k) {
  return squared_distance(make_varifold(a), make_varifold(b), k);
}

template <int Dim>
struct VarifoldGradient {
  VarifoldDistance distance;
  std::vector<Polyline<Dim>> vertices;  // same shape as A.vertices
  std::vector<double> weights;          // per edge of A, graph order
};

/// Squared distance to a fixed varifold b with precomputed <b, b>, and
/// (unless with_gradient is false) its gradient with respect to A's vertices
/// and edge weights.
template <int Dim>
VarifoldGradient<Dim> distance_gradient(const PolygonalGraph<Dim>& A, const Varifold<Dim>& b,
                                        double b_self, const KernelConfig& k,
                                        bool with_gradient = true) {
  k.check();
  const auto a = make_varifold(A);
  const std::size_t n = a.size();

  VarifoldGradient<Dim> out;
  const double raw = inner_product(a, a, k) + b_self - 2.0 * inner_product(a, b, k);
  if (raw < 0.0) out.distance.roundoff = -raw;
  else out.distance.value = raw;
  if (!with_gradient) return out;

  std::vector<Vec<Dim>> gx(n), ge(n);
  std::vector<double> gw(n);
  const double inv_s2 = 1.0 / (k.sigma * k.sigma);
  // Row i collects 2 * (sum over A - sum over B) of the partials of the
  // kernel term with respect to edge i's center, edge vector and weight.
  parallel_for(n, [&](std::size_t i) {
    Vec<Dim> x = Vec<Dim>::Zero(), e = Vec<Dim>::Zero();
    double w = 0.0;
    auto accumulate = [&](const Varifold<Dim>& other, double sign) {
      for (std::size_t j = 0; j < other.size(); ++j) {
        const Vec<Dim> diff = a.centers[i] - other.centers[j];
        const double psi = k.psi(diff.squaredNorm());
        const double s = a.directions[i].dot(other.directions[j]);
        const double phi = k.phi(s);
        const double m = other.masses[j];
        x += sign * (-2.0 * inv_s2 * psi * phi * a.masses[i] * m) * diff;
        e += sign * (psi * a.weights[i] * m) *
             (phi * a.directions[i] + k.phi_prime(s) * (other.directions[j] - s * a.directions[i]));
        w += sign * psi * phi * a.lengths[i] * m;
      }
    };
    accumulate(a, 2.0);
    accumulate(b, -2.0);
    gx[i] = x;
    ge[i] = e;
    gw[i] = w;
  });

  out.weights.assign(n, 0.0);
  std::vector<Vec<Dim>> edge_x(n), edge_e(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = a.source_index[r];
    out.weights[i] = gw[r];
    edge_x[i] = gx[r];
    edge_e[i] = ge[r];
  }
  std::size_t edge = 0;
  for (const auto& comp : A.vertices) {
    Polyline<Dim> g(comp.size(), Vec<Dim>::Zero());
    for (std::size_t v = 0; v + 1 < comp.size(); ++v, ++edge) {
      g[v] += 0.5 * edge_x[edge] - edge_e[edge];
      g[v + 1] += 0.5 * edge_x[edge] + edge_e[edge];
    }
    out.vertices.push_back(std::move(g));
  }
  return out;
}

template <int Dim>
VarifoldGradient<Dim> distance_gradient(const PolygonalGraph<Dim>& A, const PolygonalGraph<Dim>& B,
                                        const KernelConfig& k) {
  const auto b = make_varifold(B);
  return distance_gradient(A, b, inner_product(b, b, k), k);
}

}  // namespace sge
