#pragma once

#include <string>
#include <vector>

#include "solgeo/linalg.hpp"

namespace solgeo {

/// One simply-connected nilpotent factor N_i, described on a fixed basis of its
/// Lie algebra by structure constants, together with the expanding derivation
/// D_i through which the abelian base acts. Exponential coordinates of the
/// first kind identify N_i with its Lie algebra; exact support stops at
/// nilpotency step 2, where the group product has the closed form
/// x*y = x + y + [x,y]/2.
struct NilpotentFactor {
  int dim = 0;
  Matrix derivation;                  // dim x dim
  Vector root;                        // functional on R^k, as a coefficient vector
  std::vector<Matrix> bracket_forms;  // bracket_forms[k](i,j) = c^k_{ij}; empty => abelian
  int nilpotency_step = 1;            // computed during validation

  bool abelian() const;
  /// [x, y] in the factor's Lie algebra.
  Vector bracket(const Vector& x, const Vector& y) const;
  /// Group product in exponential coordinates (step <= 2 exact).
  Vector bch(const Vector& x, const Vector& y) const;
  /// e^{s D} as a matrix (automorphism action on exponential coordinates).
  Matrix flow(double s) const;
};

/// The data of G = (prod_i N_i) rtimes R^k, rank k >= 2, with the base acting
/// on factor i by e^{alpha_i(v) D_i}. After validation the pairs (D_i, alpha_i)
/// are jointly rescaled so the smallest real part of each D_i-spectrum is 1.
struct SolTypeGroup {
  int rank = 0;
  std::vector<NilpotentFactor> factors;
  bool normalized = false;

  int num_factors() const { return static_cast<int>(factors.size()); }
  int nil_dim() const;
  int total_dim() const { return nil_dim() + rank; }
  /// Offset of factor i's coordinates inside the concatenated nil block.
  int nil_offset(int i) const;
  double root_value(int i, const Vector& v) const { return factors[i].root.dot(v); }
};

/// A point of G in product coordinates (h, v) = h * s0(v), h per factor in
/// exponential coordinates, v in R^k.
struct GroupElement {
  std::vector<Vector> nil;  // one vector per factor
  Vector base;              // R^k

  static GroupElement identity(const SolTypeGroup& g);
  bool finite() const;
};

struct ValidationIssue {
  std::string what;
  int factor = -1;
};

struct ValidationReport {
  SolTypeGroup group;  // normalized copy
  std::vector<std::string> notes;
  std::vector<double> scale_applied;  // per factor: 1/min-real-eigenvalue-part
};

/// Checks derivation identities, eigenvalue positivity and Jacobi, then
/// returns the normalized copy. Throws Error(NonDerivation |
/// NonPositiveEigenvalue | JacobiViolation) naming the offending factor.
ValidationReport validate(const SolTypeGroup& raw);

GroupElement multiply(const GroupElement& a, const GroupElement& b, const SolTypeGroup& g);
GroupElement inverse(const GroupElement& a, const SolTypeGroup& g);

/// Distance-ish residual between two elements, used by tests.
double element_distance(const GroupElement& a, const GroupElement& b);

/// D = basis * (delta + nu + sigma) * basis^{-1} with delta diagonal, nu
/// strictly upper triangular, sigma antisymmetric, all in the computed real
/// Jordan basis. absolute = delta + nu.
struct AbsoluteJordanForm {
  Matrix delta;
  Matrix nu;
  Matrix sigma;
  Matrix basis;       // columns: real Jordan basis
  Matrix basis_inv;
  std::vector<int> block_sizes;   // real dimensions of the Jordan blocks
  std::vector<int> block_starts;
  Matrix absolute() const { return delta + nu; }
  Matrix in_basis() const { return delta + nu + sigma; }
};

/// Real Jordan-type decomposition via eigenvalue clustering (tolerance 1e-8)
/// and nullspace chains. Throws Error(IllConditioned) when the basis is
/// numerically unstable or the block structure is ambiguous at tolerance.
AbsoluteJordanForm absolute_jordan_form(const Matrix& d);

}  // namespace solgeo
