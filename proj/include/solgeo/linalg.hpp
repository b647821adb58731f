#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace solgeo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// exp(A) by scaling-and-squaring (Pade). Dimension 1 short-circuits to std::exp.
Matrix expm(const Matrix& a);

bool is_symmetric(const Matrix& a, double tol = 1e-12);

/// Smallest eigenvalue of a symmetric matrix.
double min_symmetric_eigenvalue(const Matrix& a);

/// Generalized symmetric-definite eigenvalues of (A, B), ascending. B must be SPD.
Vector generalized_eigenvalues(const Matrix& a, const Matrix& b);

/// Operator norm sup ||Px||_T / ||x||_S for SPD Gram matrices S (domain) and T (range of P).
double projection_operator_norm(const Matrix& p, const Matrix& s, const Matrix& t);

/// Condition number estimate via singular values.
double condition_number(const Matrix& a);

/// Orthonormal basis of the null space of A with singular values below tol. Columns.
Matrix nullspace(const Matrix& a, double tol);

/// FNV-1a 64-bit over a byte string, as 16 lowercase hex chars.
std::string fnv1a_hex(const std::string& bytes);

/// Shortest decimal form of d that parses back to the identical double.
std::string format_double(double d);

/// Last t in [lo, hi] where f crosses from >0 to <=0, refined by bisection.
/// Scans with `steps` panels first; requires f(hi) <= 0.
double last_crossing(const std::function<double(double)>& f, double lo, double hi, int steps,
                     double tol);

}  // namespace solgeo
