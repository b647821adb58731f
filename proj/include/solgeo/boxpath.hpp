#pragma once

#include <optional>
#include <vector>

#include "solgeo/path.hpp"

namespace solgeo {

/// Convert product coordinates to splitting coordinates (h, v) with h read
/// against the lifted section; identical when the Gram is block diagonal.
GroupElement to_split_coords(const GroupElement& x, const SolTypeGroup& g,
                             const SplittingData& split);

/// Path distance inside a nil coset at a fixed alpha_i-value: exact Gram norm
/// for abelian factors, a realizable-word upper bound for step-2 factors.
struct CosetDistance {
  double value = 0.0;
  bool exact = true;
  /// Increments realizing the bound as one-parameter segments (exp coords at
  /// the given height); a single straight increment for abelian factors.
  std::vector<Vector> word;
};

CosetDistance nil_coset_distance(const SolTypeGroup& g, const SplittingData& split, int factor,
                                 const Vector& nil_increment, double alpha_value);

struct HalfSpace {
  bool finite = false;
  double alpha_threshold = 0.0;   // H with d_i(e^{-H D_i} h_i) = 1 (last crossing)
  double height_threshold = 0.0;  // alpha_threshold / a_i, s*g-arclength units
  Vector root;                    // alpha_i as a coefficient vector
  Vector gradient;                // grad(alpha_i) in split base coordinates
  double magnitude = 0.0;         // a_i

  double alpha_of(const Vector& v) const { return root.dot(v); }
  double height_of(const Vector& v) const { return root.dot(v) / magnitude; }
};

struct HalfSpaceSet {
  std::vector<HalfSpace> spaces;
  GroupElement displacement;  // p^{-1} q in splitting coordinates
};

/// Half-spaces associated to the pair (p, q). Throws Error(UnsupportedStep)
/// for factors beyond step 2.
HalfSpaceSet half_spaces(const GroupElement& p, const GroupElement& q, const SolTypeGroup& g,
                         const SplittingData& split);

/// True iff the polyline meets every finite half-space (within 1e-9 slack).
/// Violating index reported through `violator` when given.
bool is_hsv(const std::vector<Vector>& base_polyline, const HalfSpaceSet& hs,
            int* violator = nullptr);
bool is_hsv(const PiecewisePath& path, const HalfSpaceSet& hs, int* violator = nullptr);

struct BoxJump {
  int factor = 0;
  int vertex_index = 0;   // executed at this base vertex
  double alpha_value = 0.0;
  Vector increment;       // exp coords at that height (single straight jump)
  std::vector<Vector> word;  // realizing word for step-2 factors
  double cost = 0.0;
};

/// Alternating base polyline / nil jump structure starting at `start`.
struct BoxPath {
  GroupElement start;
  std::vector<Vector> base_vertices;  // in R^k, at least the two endpoints
  std::vector<BoxJump> jumps;         // ordered by vertex_index
  double base_length = 0.0;
  double jump_cost = 0.0;
  double length() const { return base_length + jump_cost; }
};

struct RhoResult {
  double length = 0.0;
  BoxPath path;
  HalfSpaceSet half_spaces;
  std::vector<int> ordering;  // visiting order of the active factors
  bool upper_bound_only = false;  // true when a step-2 bound entered the costs
};

struct RhoOptions {
  int max_exhaustive_factors = 6;
  int convex_sweeps = 200;
  double tol = 1e-8;
  bool deepening_polish = true;
  /// Per-factor alpha-threshold overrides (NaN = keep computed value). Lowering
  /// a threshold relaxes the visiting constraint and never increases rho.
  std::vector<double> alpha_threshold_override;
};

/// Box-geodesic distance: minimal length over orderings of the finite
/// half-spaces of (base polyline visiting each half-space) + (per-factor jump
/// executed at the polyline's maximal alpha_i point). Base polyline solved as
/// a convex touching problem per ordering, then polished jointly with the
/// jump costs.
RhoResult rho(const GroupElement& p, const GroupElement& q, const SolTypeGroup& g,
              const SplittingData& split, const RhoOptions& opts = {});

/// Dense PiecewisePath through the box path (nodes in product coordinates).
PiecewisePath materialize_box_path(const BoxPath& box, const SolTypeGroup& g,
                                   const SplittingData& split, int nodes_per_segment = 1);

}  // namespace solgeo
