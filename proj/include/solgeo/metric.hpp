#pragma once

#include <optional>
#include <vector>

#include "solgeo/group.hpp"

namespace solgeo {

/// Left-invariant metric on g = (+)n_i (+) R^k, given by its Gram matrix over
/// the standard basis (n_1, ..., n_n, e_1, ..., e_k).
struct SplitMetric {
  Matrix gram;           // SPD, total_dim x total_dim
  bool split_flag = false;  // true when the R^k block is Gram-orthogonal to the nil block

  static SplitMetric from_gram(const SolTypeGroup& g, Matrix gram);
  static SplitMetric identity(const SolTypeGroup& g);
};

/// The metric re-expressed in split coordinates: the perpendicular complement
/// of the nil block is the graph of lift_map over R^k, and on the basis
/// {nil, w_j = (lift_map e_j, e_j)} the Gram is blkdiag(nil_gram, base_gram).
struct SplittingData {
  Matrix nil_gram;   // N x N, the original nil block
  Matrix base_gram;  // k x k, the s*g metric on R^k
  Matrix lift_map;   // N x k graph map; zero for block-diagonal Grams
  Matrix base_gram_chol;      // L with base_gram = L L^T
  Matrix base_gram_chol_inv;  // L^{-1}
  std::vector<double> bracket_residuals;  // per checked pair, for reporting

  /// ||v|| in the s*g norm.
  double base_norm(const Vector& v) const;
  /// Coordinates y = L^T v in which base_norm is Euclidean.
  Vector to_euclidean(const Vector& v) const;
  Vector from_euclidean(const Vector& y) const;
};

/// Computes the Gram-orthogonal complement of the nil block and checks it is a
/// subalgebra (bracket residual tolerance 1e-10). Throws Error(NotASubalgebra)
/// with the largest offending residual otherwise.
SplittingData check_perpendicular_splitting(const SplitMetric& metric, const SolTypeGroup& g);

/// Change of metric between the induced R^k metrics: the matrix A^T A, its
/// eigenvalues (descending) and stretch factors (their square roots).
struct ChangeOfMetric {
  Matrix matrix;
  Vector eigenvalues;      // descending
  Vector stretch_factors;  // descending, sqrt of eigenvalues
  double top_stretch() const { return stretch_factors(0); }
  double bottom_stretch() const { return stretch_factors(stretch_factors.size() - 1); }
};

ChangeOfMetric change_of_metric(const SplittingData& m1, const SplittingData& m2);

/// Log-eccentricity distance between the induced R^k metrics; zero iff equal.
double delta_distance(const SplittingData& m1, const SplittingData& m2);

/// Gradient fields of the roots inside the R^k block: base_gram * grad_i = alpha_i.
struct GradientField {
  std::vector<Vector> gradients;   // in split base coordinates
  std::vector<double> magnitudes;  // a_i = ||grad alpha_i||
};

GradientField root_gradients(const SolTypeGroup& g, const SplittingData& split);

/// Heintze quotient for factor i: N_i x| R with the R-coordinate arclength
/// along grad(alpha_i)/a_i, action e^{u a_i D_i}, metric keeping lengths and
/// angles of grad(alpha_i) and n_i.
struct HeintzeQuotient {
  int factor = 0;
  double root_magnitude = 0.0;  // a_i
  Matrix derivation;            // D_i (normalized); arclength u acts by e^{u a_i D_i}
  Matrix nil_gram;              // Gram of n_i inside the quotient
  double lipschitz = 0.0;       // operator norm of the coordinate projection G -> H_i
};

HeintzeQuotient heintze_quotient(const SolTypeGroup& g, const SplitMetric& metric,
                                 const SplittingData& split, int factor);

/// Max over factors of the operator norm of the coordinate projection onto
/// n_i (g-norm to g|n_i-norm); the projection Lipschitz constant L_1.
double nil_projection_constant(const SolTypeGroup& g, const SplittingData& split);

/// Helper used by tests and configs: Gram whose perpendicular complement is
/// the graph of the rank-one maps u_i alpha_i^T (the general form of a
/// splitting lift), with prescribed SPD blocks on the nil block and the lift.
Matrix make_split_gram(const SolTypeGroup& g, const Matrix& nil_block, const Matrix& base_block,
                       const std::vector<Vector>& lift_vectors);

}  // namespace solgeo
