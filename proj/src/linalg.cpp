#include "solgeo/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdio>
#include <cstring>

#include "solgeo/error.hpp"

namespace solgeo {

Matrix expm(const Matrix& a) {
  if (a.rows() == 1 && a.cols() == 1) {
    Matrix r(1, 1);
    r(0, 0) = std::exp(a(0, 0));
    return r;
  }
  return a.exp();
}

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol;
}

double min_symmetric_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Vector generalized_eigenvalues(const Matrix& a, const Matrix& b) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, b, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double projection_operator_norm(const Matrix& p, const Matrix& s, const Matrix& t) {
  // sup x^T P^T T P x / x^T S x over x != 0.
  Matrix num = p.transpose() * t * p;
  Vector ev = generalized_eigenvalues(num, s);
  return std::sqrt(std::max(0.0, ev.maxCoeff()));
}

double condition_number(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  double smin = svd.singularValues().minCoeff();
  double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

Matrix nullspace(const Matrix& a, double tol) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int n = static_cast<int>(a.cols());
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string format_double(double d) {
  // Shortest representation that round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, d);
    double back = std::strtod(buf, nullptr);
    if (back == d || (std::isnan(back) && std::isnan(d))) return std::string(buf);
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return std::string(buf);
}

double last_crossing(const std::function<double(double)>& f, double lo, double hi, int steps,
                     double tol) {
  if (f(hi) > 0.0) throw Error(ErrorCode::BadInput, "last_crossing: f(hi) must be <= 0");
  double a = lo, b = hi;
  bool found = false;
  double step = (hi - lo) / steps;
  double prev_t = lo, prev_v = f(lo);
  for (int i = 1; i <= steps; ++i) {
    double t = lo + i * step;
    double v = f(t);
    if (prev_v > 0.0 && v <= 0.0) {
      a = prev_t;
      b = t;
      found = true;  // keep the last such bracket
    }
    prev_t = t;
    prev_v = v;
  }
  if (!found) return lo;  // never positive on the grid
  while (b - a > tol) {
    double m = 0.5 * (a + b);
    if (f(m) > 0.0)
      a = m;
    else
      b = m;
  }
  return 0.5 * (a + b);
}

}  // namespace solgeo
