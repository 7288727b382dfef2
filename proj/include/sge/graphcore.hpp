#pragma once

// Shape-graph data model: component curves glued at their endpoints, the
// 2K x 2K endpoint adjacency matrix, per-edge weights, and the polygonal form
// used at matching time.
//
// Endpoint numbering is 0-based: endpoint 2k is the start of component k and
// endpoint 2k+1 its end.

#include "sge/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace sge {

inline int start_endpoint(int component) { return 2 * component; }
inline int end_endpoint(int component) { return 2 * component + 1; }

/// Symmetric 0/1 matrix over component endpoints. Stored row-wise without a
/// squareness requirement so malformed input can be reported by validate().
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;

  /// Identity matrix for `components` open, unconnected curves.
  explicit AdjacencyMatrix(int components)
      : rows_(2 * components, std::vector<int>(2 * components, 0)) {
    for (int p = 0; p < 2 * components; ++p) rows_[p][p] = 1;
  }

  explicit AdjacencyMatrix(std::vector<std::vector<int>> rows) : rows_(std::move(rows)) {}

  int rows() const { return static_cast<int>(rows_.size()); }
  bool is_square() const {
    return std::all_of(rows_.begin(), rows_.end(),
                       [&](const auto& r) { return static_cast<int>(r.size()) == rows(); });
  }
  int components() const { return rows() / 2; }

  int operator()(int p, int q) const { return rows_[p][q]; }
  void connect(int p, int q) {
    rows_[p][q] = 1;
    rows_[q][p] = 1;
  }
  bool connected(int p, int q) const { return rows_[p][q] != 0; }
  bool is_closed(int component) const {
    return connected(start_endpoint(component), end_endpoint(component));
  }

  const std::vector<std::vector<int>>& data() const { return rows_; }

  /// Equivalence classes of glued endpoints; assumes a validated matrix.
  /// Groups are numbered by first appearance in endpoint order.
  std::vector<int> junction_ids() const {
    std::vector<int> id(rows(), -1);
    int next = 0;
    for (int p = 0; p < rows(); ++p) {
      if (id[p] >= 0) continue;
      for (int q = p; q < rows(); ++q)
        if (q == p || (id[q] < 0 && connected(p, q))) id[q] = next;
      ++next;
    }
    return id;
  }

  /// Reorders components: new component i is old component order[i].
  AdjacencyMatrix permuted(const std::vector<int>& order) const {
    const int n = static_cast<int>(order.size());
    std::vector<int> endpoint_map(2 * n);
    for (int i = 0; i < n; ++i) {
      endpoint_map[2 * i] = 2 * order[i];
      endpoint_map[2 * i + 1] = 2 * order[i] + 1;
    }
    std::vector<std::vector<int>> out(2 * n, std::vector<int>(2 * n));
    for (int p = 0; p < 2 * n; ++p)
      for (int q = 0; q < 2 * n; ++q) out[p][q] = rows_[endpoint_map[p]][endpoint_map[q]];
    return AdjacencyMatrix(std::move(out));
  }

  friend bool operator==(const AdjacencyMatrix&, const AdjacencyMatrix&) = default;

 private:
  std::vector<std::vector<int>> rows_;
};

template <int Dim>
struct ComponentCurve {
  Polyline<Dim> vertices;
};

/// Per-component, per-edge nonnegative multiplicities.
using WeightField = std::vector<std::vector<double>>;

template <int Dim>
struct ShapeGraphSpec {
  std::vector<ComponentCurve<Dim>> components;
  AdjacencyMatrix adjacency;
  WeightField weights;  // empty means all ones

  int num_components() const { return static_cast<int>(components.size()); }

  const Vec<Dim>& endpoint(int p) const {
    const auto& v = components[p / 2].vertices;
    return (p % 2 == 0) ? v.front() : v.back();
  }

  /// Weight of edge i of component k, defaulting to 1.
  double weight(int k, int i) const { return weights.empty() ? 1.0 : weights[k][i]; }
};

template <int Dim>
WeightField unit_weights(const ShapeGraphSpec<Dim>& spec) {
  WeightField w;
  for (const auto& c : spec.components) w.emplace_back(c.vertices.size() - 1, 1.0);
  return w;
}

template <int Dim>
double diameter(const ShapeGraphSpec<Dim>& spec) {
  std::vector<const Vec<Dim>*> pts;
  for (const auto& c : spec.components)
    for (const auto& v : c.vertices) pts.push_back(&v);
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      best = std::max(best, (*pts[i] - *pts[j]).squaredNorm());
  return std::sqrt(best);
}

template <int Dim>
double default_junction_epsilon(const ShapeGraphSpec<Dim>& spec) {
  return 1e-6 * diameter(spec);
}

template <int Dim>
ShapeGraphSpec<Dim> scaled(ShapeGraphSpec<Dim> spec, double factor) {
  for (auto& c : spec.components)
    for (auto& v : c.vertices) v *= factor;
  return spec;
}

/// Reorders the components (and their weights and adjacency blocks).
template <int Dim>
ShapeGraphSpec<Dim> permuted(const ShapeGraphSpec<Dim>& spec, const std::vector<int>& order) {
  ShapeGraphSpec<Dim> out;
  for (int k : order) {
    out.components.push_back(spec.components[k]);
    if (!spec.weights.empty()) out.weights.push_back(spec.weights[k]);
  }
  out.adjacency = spec.adjacency.permuted(order);
  return out;
}

/// Reverses the vertex order of one component, swapping its endpoint rows.
template <int Dim>
ShapeGraphSpec<Dim> reversed_component(ShapeGraphSpec<Dim> spec, int k) {
  auto& v = spec.components[k].vertices;
  std::reverse(v.begin(), v.end());
  if (!spec.weights.empty()) std::reverse(spec.weights[k].begin(), spec.weights[k].end());
  auto rows = spec.adjacency.data();
  const int a = start_endpoint(k), b = end_endpoint(k);
  std::swap(rows[a], rows[b]);
  for (auto& r : rows) std::swap(r[a], r[b]);
  spec.adjacency = AdjacencyMatrix(std::move(rows));
  return spec;
}

// ---------------------------------------------------------------------------
// Polyline parametrization

/// Polyline parameter: vertex i of n + 1 sits at theta = i / n.
template <int Dim>
std::vector<double> polyline_parameters(const Polyline<Dim>& v) {
  const std::size_t n = v.size() - 1;
  std::vector<double> s(v.size());
  for (std::size_t i = 0; i <= n; ++i) s[i] = double(i) / double(n);
  s.back() = 1.0;
  return s;
}

/// Index of the polyline edge containing parameter theta.
inline std::size_t edge_at(const std::vector<double>& params, double theta) {
  auto it = std::upper_bound(params.begin(), params.end(), theta);
  std::size_t j = (it == params.begin()) ? 0 : static_cast<std::size_t>(it - params.begin()) - 1;
  return std::min(j, params.size() - 2);
}

template <int Dim>
Vec<Dim> evaluate_polyline(const Polyline<Dim>& v, const std::vector<double>& params, double theta) {
  if (theta <= 0.0) return v.front();
  if (theta >= 1.0) return v.back();
  const std::size_t j = edge_at(params, theta);
  const double span = params[j + 1] - params[j];
  const double u = span > 0.0 ? (theta - params[j]) / span : 0.0;
  return (1.0 - u) * v[j] + u * v[j + 1];
}

template <int Dim>
double polyline_length(const Polyline<Dim>& v) {
  double l = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) l += (v[i] - v[i - 1]).norm();
  return l;
}

// ---------------------------------------------------------------------------
// Validation

enum class IssueKind {
  adjacency_shape,
  adjacency_entry,
  diagonal,
  asymmetric,
  intransitive,
  marked_but_apart,
  coincident_but_unmarked,
  too_few_vertices,
  zero_length_edge,
  weight_count,
  negative_weight,
};

inline const char* to_string(IssueKind k) {
  switch (k) {
    case IssueKind::adjacency_shape: return "adjacency_shape";
    case IssueKind::adjacency_entry: return "adjacency_entry";
    case IssueKind::diagonal: return "diagonal";
    case IssueKind::asymmetric: return "asymmetric";
    case IssueKind::intransitive: return "intransitive";
    case IssueKind::marked_but_apart: return "marked_but_apart";
    case IssueKind::coincident_but_unmarked: return "coincident_but_unmarked";
    case IssueKind::too_few_vertices: return "too_few_vertices";
    case IssueKind::zero_length_edge: return "zero_length_edge";
    case IssueKind::weight_count: return "weight_count";
    case IssueKind::negative_weight: return "negative_weight";
  }
  return "unknown";
}

struct ValidationIssue {
  IssueKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
  bool has(IssueKind k) const {
    return std::any_of(issues.begin(), issues.end(), [&](const auto& i) { return i.kind == k; });
  }
  std::string summary() const {
    std::ostringstream os;
    for (const auto& i : issues) os << to_string(i.kind) << ": " << i.message << '\n';
    return os.str();
  }
};

template <int Dim>
ValidationReport validate(const ShapeGraphSpec<Dim>& spec, double junction_epsilon) {
  ValidationReport report;
  auto add = [&](IssueKind k, auto&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    report.issues.push_back({k, os.str()});
  };

  const int K = spec.num_components();
  bool geometry_ok = true;
  for (int k = 0; k < K; ++k) {
    const auto& v = spec.components[k].vertices;
    if (v.size() < 2) {
      add(IssueKind::too_few_vertices, "component ", k, " has ", v.size(), " vertices");
      geometry_ok = false;
      continue;
    }
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
      if ((v[i + 1] - v[i]).norm() == 0.0)
        add(IssueKind::zero_length_edge, "component ", k, " edge ", i, " has zero length");
  }

  if (!spec.weights.empty()) {
    if (static_cast<int>(spec.weights.size()) != K) {
      add(IssueKind::weight_count, "weights list has ", spec.weights.size(), " entries for ", K,
          " components");
    } else {
      for (int k = 0; k < K; ++k) {
        const auto expected = spec.components[k].vertices.size() - 1;
        if (spec.weights[k].size() != expected)
          add(IssueKind::weight_count, "component ", k, " has ", spec.weights[k].size(),
              " weights, expected ", expected);
        for (std::size_t i = 0; i < spec.weights[k].size(); ++i)
          if (!(spec.weights[k][i] >= 0.0))
            add(IssueKind::negative_weight, "component ", k, " edge ", i, " weight ",
                spec.weights[k][i]);
      }
    }
  }

  const auto& A = spec.adjacency;
  if (A.rows() != 2 * K || !A.is_square()) {
    std::ostringstream shape;
    shape << A.rows() << " rows";
    for (int p = 0; p < A.rows(); ++p)
      if (static_cast<int>(A.data()[p].size()) != A.rows()) {
        shape << " (row " << p << " has " << A.data()[p].size() << " entries)";
        break;
      }
    add(IssueKind::adjacency_shape, "adjacency has ", shape.str(), ", expected ", 2 * K, "x",
        2 * K);
    return report;
  }

  const int n = 2 * K;
  bool entries_ok = true;
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      if (A(p, q) != 0 && A(p, q) != 1) {
        add(IssueKind::adjacency_entry, "entry (", p, ",", q, ") = ", A(p, q));
        entries_ok = false;
      }
  if (!entries_ok) return report;

  for (int p = 0; p < n; ++p)
    if (A(p, p) != 1) add(IssueKind::diagonal, "diagonal entry ", p, " is not 1");
  for (int p = 0; p < n; ++p)
    for (int q = p + 1; q < n; ++q)
      if (A(p, q) != A(q, p)) add(IssueKind::asymmetric, "entries (", p, ",", q, ") differ");
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      if (p == q || !A.connected(p, q)) continue;
      for (int r = 0; r < n; ++r)
        if (r != p && r != q && A.connected(q, r) && !A.connected(p, r))
          add(IssueKind::intransitive, "endpoints ", p, "~", q, " and ", q, "~", r, " but not ", p,
              "~", r);
    }

  if (!geometry_ok) return report;
  for (int p = 0; p < n; ++p)
    for (int q = p + 1; q < n; ++q) {
      const double d = (spec.endpoint(p) - spec.endpoint(q)).norm();
      if (A.connected(p, q) && d > junction_epsilon)
        add(IssueKind::marked_but_apart, "endpoints ", p, " and ", q, " are marked glued but ", d,
            " apart");
      if (!A.connected(p, q) && d <= junction_epsilon)
        add(IssueKind::coincident_but_unmarked, "endpoints ", p, " and ", q,
            " coincide but are not marked");
    }
  return report;
}

// ---------------------------------------------------------------------------
// Splitting a polyline soup into a shape graph

namespace detail {
struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};
}  // namespace detail

/// Builds components and their adjacency by gluing endpoints closer than
/// junction_epsilon. Weights are set to one.
template <int Dim>
ShapeGraphSpec<Dim> split_components(const std::vector<Polyline<Dim>>& soup,
                                     double junction_epsilon) {
  ShapeGraphSpec<Dim> spec;
  const int K = static_cast<int>(soup.size());
  for (int k = 0; k < K; ++k) {
    const auto& v = soup[k];
    if (v.size() < 2)
      throw Error(ErrorCategory::validation,
                  "polyline " + std::to_string(k) + " has fewer than 2 vertices");
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
      if ((v[i + 1] - v[i]).norm() == 0.0)
        throw Error(ErrorCategory::validation, "polyline " + std::to_string(k) +
                                                   " repeats vertex " + std::to_string(i));
    spec.components.push_back({v});
  }

  detail::DisjointSets sets(2 * K);
  for (int p = 0; p < 2 * K; ++p)
    for (int q = p + 1; q < 2 * K; ++q)
      if ((spec.endpoint(p) - spec.endpoint(q)).norm() <= junction_epsilon) sets.unite(p, q);

  spec.adjacency = AdjacencyMatrix(K);
  for (int p = 0; p < 2 * K; ++p)
    for (int q = p + 1; q < 2 * K; ++q)
      if (sets.find(p) == sets.find(q)) spec.adjacency.connect(p, q);
  spec.weights = unit_weights(spec);
  return spec;
}

// ---------------------------------------------------------------------------
// Polygonal form

template <int Dim>
struct PolygonalGraph {
  std::vector<Polyline<Dim>> vertices;  // per component
  std::vector<Vec<Dim>> edges;          // e_i = v_{i+1} - v_i
  std::vector<Vec<Dim>> centers;        // midpoints
  std::vector<double> weights;
  std::vector<int> component;           // owning component per edge

  std::size_t size() const { return edges.size(); }
  int num_components() const { return static_cast<int>(vertices.size()); }
  std::vector<int> edge_counts() const {
    std::vector<int> n;
    for (const auto& v : vertices) n.push_back(static_cast<int>(v.size()) - 1);
    return n;
  }
  double total_length() const {
    double l = 0.0;
    for (const auto& e : edges) l += e.norm();
    return l;
  }
};

/// Assembles edges and centers from per-component vertex lists. Weights are
/// flat, ordered component-major.
template <int Dim>
PolygonalGraph<Dim> make_polygonal_graph(std::vector<Polyline<Dim>> vertices,
                                         std::vector<double> weights) {
  PolygonalGraph<Dim> g;
  for (std::size_t k = 0; k < vertices.size(); ++k) {
    const auto& v = vertices[k];
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      Vec<Dim> e = v[i + 1] - v[i];
      if (!(e.norm() > 0.0))
        throw Error(ErrorCategory::immersion, "component " + std::to_string(k) + " edge " +
                                                  std::to_string(i) + " has zero length");
      g.edges.push_back(e);
      g.centers.push_back(0.5 * (v[i] + v[i + 1]));
      g.component.push_back(static_cast<int>(k));
    }
  }
  if (weights.size() != g.edges.size())
    throw Error(ErrorCategory::input, "weight count does not match edge count");
  g.vertices = std::move(vertices);
  g.weights = std::move(weights);
  return g;
}

/// The input polylines and weights as they are, without resampling.
template <int Dim>
PolygonalGraph<Dim> to_polygonal(const ShapeGraphSpec<Dim>& spec) {
  std::vector<Polyline<Dim>> verts;
  std::vector<double> w;
  for (int k = 0; k < spec.num_components(); ++k) {
    verts.push_back(spec.components[k].vertices);
    for (std::size_t i = 0; i + 1 < verts.back().size(); ++i) w.push_back(spec.weight(k, i));
  }
  return make_polygonal_graph(std::move(verts), std::move(w));
}

/// Piecewise-constant weight of a component at parameter theta.
template <int Dim>
double weight_at(const ShapeGraphSpec<Dim>& spec, int k, const std::vector<double>& params,
                 double theta) {
  return spec.weight(k, static_cast<int>(edge_at(params, theta)));
}

/// Samples every component at theta_i = i / N_k and
/// transfers weights by lookup at each new edge's center parameter.
template <int Dim>
PolygonalGraph<Dim> resample(const ShapeGraphSpec<Dim>& spec, const std::vector<int>& counts) {
  if (static_cast<int>(counts.size()) != spec.num_components())
    throw Error(ErrorCategory::input, "resample needs one edge count per component");
  std::vector<Polyline<Dim>> verts;
  std::vector<double> w;
  for (int k = 0; k < spec.num_components(); ++k) {
    const int n = counts[k];
    if (n < 1) throw Error(ErrorCategory::input, "edge count must be at least 1");
    const auto& src = spec.components[k].vertices;
    const auto params = polyline_parameters(src);
    Polyline<Dim> v;
    for (int i = 0; i <= n; ++i) v.push_back(evaluate_polyline(src, params, double(i) / n));
    for (int i = 0; i < n; ++i) {
      if (!((v[i + 1] - v[i]).norm() > 0.0))
        throw Error(ErrorCategory::validation, "resampling component " + std::to_string(k) +
                                                   " produced zero-length edge " +
                                                   std::to_string(i));
      w.push_back(weight_at(spec, k, params, (i + 0.5) / n));
    }
    verts.push_back(std::move(v));
  }
  return make_polygonal_graph(std::move(verts), std::move(w));
}

}  // namespace sge
