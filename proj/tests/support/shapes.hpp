#pragma once

// Synthetic shape graphs for tests.

#include "sge/graphcore.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

namespace sge::testing {

template <int Dim>
Polyline<Dim> sample_curve(const std::function<Vec<Dim>(double)>& f, int edges) {
  Polyline<Dim> v;
  for (int i = 0; i <= edges; ++i) v.push_back(f(double(i) / edges));
  return v;
}

inline Vec<2> P(double x, double y) { return Vec<2>(x, y); }

/// Open arc of a circle.
inline ShapeGraphSpec<2> open_arc(int edges = 60, double radius = 0.5, double span = 2.0) {
  ShapeGraphSpec<2> s;
  s.components.push_back({sample_curve<2>(
      [&](double t) {
        const double a = -0.5 * span + span * t;
        return P(radius * std::cos(a), radius * std::sin(a));
      },
      edges)});
  s.adjacency = AdjacencyMatrix(1);
  return s;
}

/// Closed curve with a few bumps; the last vertex repeats the first.
inline ShapeGraphSpec<2> closed_blob(int edges = 80, double radius = 0.4) {
  ShapeGraphSpec<2> s;
  auto v = sample_curve<2>(
      [&](double t) {
        const double a = 2 * std::numbers::pi * t;
        const double r = radius * (1.0 + 0.15 * std::cos(3 * a));
        return P(r * std::cos(a), r * std::sin(a));
      },
      edges);
  v.back() = v.front();
  s.components.push_back({v});
  s.adjacency = AdjacencyMatrix(1);
  s.adjacency.connect(0, 1);
  return s;
}

/// Trunk with two branches glued at the trunk's end.
inline ShapeGraphSpec<2> two_branch(int edges = 30, double branch_angle = 0.6) {
  ShapeGraphSpec<2> s;
  const Vec<2> j = P(0.0, 0.0);
  s.components.push_back({sample_curve<2>([&](double t) { return P(0.0, -0.5 + 0.5 * t); }, edges)});
  for (double sgn : {-1.0, 1.0})
    s.components.push_back({sample_curve<2>(
        [&](double t) {
          const double a = std::numbers::pi / 2 + sgn * branch_angle * (0.3 + t);
          return Vec<2>(j + 0.45 * t * P(std::cos(a), std::sin(a)));
        },
        edges)});
  s.adjacency = AdjacencyMatrix(3);
  s.adjacency.connect(1, 2);
  s.adjacency.connect(1, 4);
  s.adjacency.connect(2, 4);
  return s;
}

}  // namespace sge::testing
