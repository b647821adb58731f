#pragma once

#include <vector>

#include "solgeo/metric.hpp"

namespace solgeo {

/// A discretized path in G: ordered node elements, linearly interpolated in
/// product coordinates. Lengths use the left-invariant metric with midpoint
/// quadrature per segment.
struct PiecewisePath {
  std::vector<GroupElement> nodes;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  bool empty() const { return nodes.empty(); }

  /// Coordinate-midpoint refinement (one doubling).
  PiecewisePath refined() const;
  PiecewisePath left_translated(const GroupElement& x, const SolTypeGroup& g) const;
  /// Base projection as a polyline in R^k.
  std::vector<Vector> base_polyline() const;
};

/// Left-invariant speed of the coordinate-linear segment [a, b] at its midpoint.
double segment_speed(const GroupElement& a, const GroupElement& b, const SolTypeGroup& g,
                     const SplittingData& split);

/// Midpoint-rule length at the path's own discretization.
double path_length_raw(const PiecewisePath& path, const SolTypeGroup& g,
                       const SplittingData& split);

/// Length with the refinement gate: node doubling until the relative change is
/// below 0.1%. Throws Error(EmptyPath) on an empty path.
double path_length(const PiecewisePath& path, const SolTypeGroup& g, const SplittingData& split);

/// Length of the base projection in the s*g metric (polyline, exact).
double base_projection_length(const PiecewisePath& path, const SplittingData& split);

/// Per-factor g-length of the nil-i component of the derivative, summed with
/// the same midpoint rule as path_length_raw (used by the slicing machinery).
double nil_component_length(const PiecewisePath& path, const SolTypeGroup& g,
                            const SplittingData& split, int factor);

/// Straight coordinate interpolation from a to b with segments nodes.
PiecewisePath straight_path(const GroupElement& a, const GroupElement& b, int segments);

}  // namespace solgeo
