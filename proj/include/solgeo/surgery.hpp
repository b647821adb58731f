#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "solgeo/linalg.hpp"

namespace solgeo {

/// Piecewise-linear curve in Euclidean R^k with strictly increasing parameters.
struct PiecewiseCurve {
  std::vector<double> params;
  std::vector<Vector> values;

  int num_nodes() const { return static_cast<int>(params.size()); }
  double param_start() const { return params.front(); }
  double param_end() const { return params.back(); }
  double length() const;
  Vector at(double t) const;  // linear interpolation, clamped
  /// Insert a node at parameter t (no-op when one exists within 1e-12).
  void insert_node(double t);

  static PiecewiseCurve line(const Vector& a, const Vector& b, int segments, double t0 = 0.0,
                             double t1 = 1.0);
};

/// (integral of ||gamma'|_v||, integral of ||gamma'|_{v perp}||) for unit v.
std::pair<double, double> directional_arclengths(const PiecewiseCurve& curve, const Vector& v);

/// v-coordinate replaced by level + |level - v(t)|; crossing nodes inserted so
/// the reflection preserves length exactly.
PiecewiseCurve reflect_below(const PiecewiseCurve& curve, const Vector& v, double level);

/// Replacement on an open interval; host and replacement agree outside (c, d).
struct PathSurgery {
  double c = 0.0, d = 0.0;
  PiecewiseCurve replacement;  // parameterized on [c, d], endpoint values match host
  double peak_value = 0.0;     // max v-coordinate reached (bookkeeping)
};

/// Loop of parameter length `loop_length` inserted at parameter `location`.
struct LoopSurgery {
  double location = 0.0;
  double loop_length = 0.0;
  PiecewiseCurve loop;  // parameterized on [0, loop_length], ends equal host(location)
};

struct SurgeryFamily {
  std::vector<PathSurgery> options;  // pairwise disjoint open intervals, ordered
  int num_options() const { return static_cast<int>(options.size()); }
  /// The m-1 interior gap components between consecutive option intervals.
  std::vector<std::pair<double, double>> interstices() const;
};

/// Composite curve: host outside the picked intervals (up to parameter shift
/// from the loops), replacements inside, loops stacked at their locations.
/// Throws Error(ConflictingSurgeries) on overlapping picks or a pick interval
/// containing a loop location.
PiecewiseCurve apply_surgeries(const PiecewiseCurve& host, const std::vector<LoopSurgery>& loops,
                               const std::vector<PathSurgery>& picks);

struct SelectionAudit {
  std::vector<int> survivor_counts;  // per step
  std::vector<int> picked_indices;   // option index per family
};

/// One option per family, pairwise disjoint and missing every loop location,
/// by the interstice-counting greedy: at step i discard options meeting
/// >= 2(n-i)+1 options of any later family or any loop location, then pick the
/// first survivor (or the best-scoring one when a scorer is given). Requires
/// m1 + m2 <= n and >= n^2 options per family; asserts >= 2(n-i) survivors.
std::vector<PathSurgery> select_simultaneous(
    const PiecewiseCurve& host, const std::vector<LoopSurgery>& loops,
    const std::vector<SurgeryFamily>& families, int n, SelectionAudit* audit = nullptr,
    const std::function<double(int step, const PathSurgery&)>& score = nullptr);

/// Tent construction: n^2 options on consecutive equal-perpendicular-arclength
/// windows of [a, b]; each option keeps the v-perp trace and replaces the
/// v-coordinate with a piecewise-linear tent peaking at d + sqrt(L/2), is at
/// most 1 longer than the host, and reaches that height. Hypotheses: the
/// perpendicular arclength over [a, b] is >= n^2 L and v(gamma) >= d there.
/// Options already reaching the peak pass through unmodified.
SurgeryFamily build_surgery_family(const PiecewiseCurve& curve, const Vector& v, double a,
                                   double b, double big_l, double d, int n);

}  // namespace solgeo
