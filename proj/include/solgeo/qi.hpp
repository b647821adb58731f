#pragma once

#include <string>
#include <vector>

#include "solgeo/harness.hpp"

namespace solgeo {

/// Product quasi-isometry L_x of (prod f_i) of sigma: a left translation, one
/// affine map per factor in exponential coordinates, and a symmetry that
/// simultaneously permutes the factors and acts linearly on R^k, permuting the
/// roots up to positive scalars (recorded).
struct ProductQI {
  GroupElement translation;
  std::vector<Matrix> factor_matrices;  // per factor, dim x dim
  std::vector<Vector> factor_offsets;   // per factor
  std::vector<int> permutation;         // sigma sends factor i to permutation[i]
  Matrix base_matrix;                   // k x k action on R^k
  std::vector<double> root_scalars;     // alpha_{pi(i)} o S = root_scalars[i] * alpha_i
  double declared_k = 1.0;              // declared QI constants of prod f_i
  double declared_c = 0.0;

  bool sigma_trivial() const;
};

/// Validates the root-permutation property (projective: alpha_{pi(i)} o S
/// proportional to alpha_i with positive scalar; exact scalars recorded) and
/// factor dimension compatibility. Throws Error(InvalidSymmetry).
ProductQI validate_qi(const SolTypeGroup& g, ProductQI qi);

static inline ProductQI identity_qi(const SolTypeGroup& g) {
  ProductQI qi;
  qi.translation = GroupElement::identity(g);
  for (const auto& f : g.factors) {
    qi.factor_matrices.push_back(Matrix::Identity(f.dim, f.dim));
    qi.factor_offsets.push_back(Vector::Zero(f.dim));
  }
  for (int i = 0; i < g.num_factors(); ++i) qi.permutation.push_back(i);
  qi.base_matrix = Matrix::Identity(g.rank, g.rank);
  qi.root_scalars.assign(g.num_factors(), 1.0);
  return qi;
}

/// Composition applied in the stated order (sigma first, then the factor maps,
/// then the left translation), in split coordinates.
GroupElement apply_qi(const ProductQI& qi, const GroupElement& x, const SolTypeGroup& g);

enum class RoughIsometryVerdict { kRoughIsometry, kNotRoughIsometry };

struct RoughIsometryReport {
  RoughIsometryVerdict verdict = RoughIsometryVerdict::kRoughIsometry;
  double overall_slope = 0.0;
  double max_relative_difference = 0.0;
  int witness_axis = -1;        // axis family with growing differences
  double witness_slope = 0.0;
  struct Row {
    int id = 0;
    double separation = 0.0;
    int axis = -1;  // -1: random pair
    double d = 0.0, d_image = 0.0, difference = 0.0;
  };
  std::vector<Row> rows;
};

struct RoughIsometryOptions {
  double growth_slope_threshold = 0.1;  // NOT verdict needs at least this slope
  int min_scales = 5;
};

/// Samples pairs at growing separations (random plus per-axis base families)
/// and regresses |d(qi p, qi q) - d(p, q)| against separation.
RoughIsometryReport test_rough_isometry(const ProductQI& qi, const SolTypeGroup& g,
                                        const SplittingData& split, const SampleSpec& spec,
                                        const EstimateOptions& eopts = {},
                                        const RoughIsometryOptions& ropts = {});

/// Image of a box path under a QI with trivial sigma: base segments map with
/// lengths preserved, nil jumps are reconnected with endpoint displacement at
/// most declared_k + declared_c. Throws Error(NontrivialSymmetry).
BoxPath boxpath_pushforward(const ProductQI& qi, const BoxPath& box, const SolTypeGroup& g,
                            const SplittingData& split);

}  // namespace solgeo
