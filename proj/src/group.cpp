#include "solgeo/group.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>

#include "solgeo/error.hpp"

namespace solgeo {

namespace {

constexpr double kIdentityTol = 1e-12;
constexpr double kClusterTol = 1e-8;
constexpr double kCondLimit = 1e8;

}  // namespace

bool NilpotentFactor::abelian() const {
  if (bracket_forms.empty()) return true;
  for (const auto& f : bracket_forms)
    if (f.cwiseAbs().maxCoeff() > 0.0) return false;
  return true;
}

Vector NilpotentFactor::bracket(const Vector& x, const Vector& y) const {
  Vector out = Vector::Zero(dim);
  if (bracket_forms.empty()) return out;
  for (int k = 0; k < dim; ++k) out(k) = x.dot(bracket_forms[k] * y);
  return out;
}

Vector NilpotentFactor::bch(const Vector& x, const Vector& y) const {
  if (abelian()) return x + y;
  return x + y + 0.5 * bracket(x, y);
}

Matrix NilpotentFactor::flow(double s) const {
  if (dim == 1) {
    Matrix r(1, 1);
    r(0, 0) = std::exp(s * derivation(0, 0));
    return r;
  }
  return expm(s * derivation);
}

int SolTypeGroup::nil_dim() const {
  int n = 0;
  for (const auto& f : factors) n += f.dim;
  return n;
}

int SolTypeGroup::nil_offset(int i) const {
  int off = 0;
  for (int j = 0; j < i; ++j) off += factors[j].dim;
  return off;
}

GroupElement GroupElement::identity(const SolTypeGroup& g) {
  GroupElement e;
  e.base = Vector::Zero(g.rank);
  for (const auto& f : g.factors) e.nil.push_back(Vector::Zero(f.dim));
  return e;
}

bool GroupElement::finite() const {
  if (!base.allFinite()) return false;
  for (const auto& h : nil)
    if (!h.allFinite()) return false;
  return true;
}

namespace {

int compute_step(const NilpotentFactor& f) {
  if (f.abelian()) return 1;
  // Step 2 iff every bracket value is central.
  for (int i = 0; i < f.dim; ++i) {
    for (int j = 0; j < f.dim; ++j) {
      Vector w = f.bracket(Vector::Unit(f.dim, i), Vector::Unit(f.dim, j));
      for (int l = 0; l < f.dim; ++l) {
        Vector r = f.bracket(Vector::Unit(f.dim, l), w);
        if (r.cwiseAbs().maxCoeff() > kIdentityTol) return 3;
      }
    }
  }
  return 2;
}

void require_step2(const SolTypeGroup& g) {
  for (int i = 0; i < g.num_factors(); ++i) {
    if (g.factors[i].nilpotency_step > 2) {
      std::ostringstream os;
      os << "factor " << i << " has nilpotency step " << g.factors[i].nilpotency_step;
      throw Error(ErrorCode::UnsupportedStep, os.str());
    }
  }
}

}  // namespace

ValidationReport validate(const SolTypeGroup& raw) {
  ValidationReport report;
  report.group = raw;
  SolTypeGroup& g = report.group;

  if (g.rank < 2) throw Error(ErrorCode::BadInput, "rank must be >= 2 (higher rank)");

  for (int idx = 0; idx < g.num_factors(); ++idx) {
    NilpotentFactor& f = g.factors[idx];
    std::ostringstream tag;
    tag << "factor " << idx;
    if (f.derivation.rows() != f.dim || f.derivation.cols() != f.dim)
      throw Error(ErrorCode::BadInput, tag.str() + ": derivation shape mismatch");
    if (f.root.size() != g.rank)
      throw Error(ErrorCode::BadInput, tag.str() + ": root dimension mismatch");
    if (!f.bracket_forms.empty() && static_cast<int>(f.bracket_forms.size()) != f.dim)
      throw Error(ErrorCode::BadInput, tag.str() + ": need one bracket form per coordinate");

    // Antisymmetry and Jacobi.
    for (const auto& form : f.bracket_forms) {
      if ((form + form.transpose()).cwiseAbs().maxCoeff() > kIdentityTol)
        throw Error(ErrorCode::JacobiViolation, tag.str() + ": structure constants not antisymmetric");
    }
    for (int i = 0; i < f.dim && !f.bracket_forms.empty(); ++i) {
      Vector ei = Vector::Unit(f.dim, i);
      for (int j = 0; j < f.dim; ++j) {
        Vector ej = Vector::Unit(f.dim, j);
        for (int l = 0; l < f.dim; ++l) {
          Vector el = Vector::Unit(f.dim, l);
          Vector jac = f.bracket(f.bracket(ei, ej), el) + f.bracket(f.bracket(ej, el), ei) +
                       f.bracket(f.bracket(el, ei), ej);
          if (jac.cwiseAbs().maxCoeff() > kIdentityTol)
            throw Error(ErrorCode::JacobiViolation, tag.str() + ": Jacobi identity fails");
        }
      }
    }

    // Derivation identity on the basis.
    for (int i = 0; i < f.dim && !f.abelian(); ++i) {
      Vector ei = Vector::Unit(f.dim, i);
      for (int j = 0; j < f.dim; ++j) {
        Vector ej = Vector::Unit(f.dim, j);
        Vector lhs = f.derivation * f.bracket(ei, ej);
        Vector rhs = f.bracket(f.derivation * ei, ej) + f.bracket(ei, f.derivation * ej);
        if ((lhs - rhs).cwiseAbs().maxCoeff() > kIdentityTol)
          throw Error(ErrorCode::NonDerivation, tag.str() + ": D[X,Y] != [DX,Y]+[X,DY]");
      }
    }

    // Spectrum must sit strictly in the right half plane.
    Eigen::EigenSolver<Matrix> es(f.derivation);
    double min_re = es.eigenvalues().real().minCoeff();
    if (min_re <= kIdentityTol)
      throw Error(ErrorCode::NonPositiveEigenvalue,
                  tag.str() + ": eigenvalue with real part " + format_double(min_re));

    // Joint rescaling: e^{alpha(v) D} is unchanged.
    f.derivation /= min_re;
    f.root *= min_re;
    report.scale_applied.push_back(min_re);

    f.nilpotency_step = compute_step(f);
    if (f.nilpotency_step > 2)
      report.notes.push_back(tag.str() + ": nilpotency step > 2, group operations unsupported");
  }

  g.normalized = true;
  return report;
}

GroupElement multiply(const GroupElement& a, const GroupElement& b, const SolTypeGroup& g) {
  require_step2(g);
  GroupElement out;
  out.base = a.base + b.base;
  out.nil.resize(g.num_factors());
  for (int i = 0; i < g.num_factors(); ++i) {
    const NilpotentFactor& f = g.factors[i];
    Vector shifted = f.flow(g.root_value(i, a.base)) * b.nil[i];
    out.nil[i] = f.bch(a.nil[i], shifted);
  }
  return out;
}

GroupElement inverse(const GroupElement& a, const SolTypeGroup& g) {
  require_step2(g);
  GroupElement out;
  out.base = -a.base;
  out.nil.resize(g.num_factors());
  for (int i = 0; i < g.num_factors(); ++i) {
    const NilpotentFactor& f = g.factors[i];
    out.nil[i] = f.flow(-g.root_value(i, a.base)) * (-a.nil[i]);
  }
  return out;
}

double element_distance(const GroupElement& a, const GroupElement& b) {
  double m = (a.base - b.base).cwiseAbs().maxCoeff();
  for (size_t i = 0; i < a.nil.size(); ++i)
    m = std::max(m, (a.nil[i] - b.nil[i]).cwiseAbs().maxCoeff());
  return m;
}

// ---------------------------------------------------------------------------
// Absolute Jordan form
// ---------------------------------------------------------------------------

namespace {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

ComplexMatrix complex_nullspace(const ComplexMatrix& a, double tol) {
  Eigen::JacobiSVD<ComplexMatrix> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int n = static_cast<int>(a.cols());
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol * 10.0)
      ++rank;
    else if (sv(i) > tol / 10.0)
      throw Error(ErrorCode::IllConditioned, "rank decision ambiguous at tolerance");
  }
  return svd.matrixV().rightCols(n - rank);
}

// Component of v orthogonal to colspace(W).
ComplexVector residual_against(const ComplexVector& v, const ComplexMatrix& w) {
  if (w.cols() == 0) return v;
  Eigen::HouseholderQR<ComplexMatrix> qr(w);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(w.rows(), w.cols());
  return v - q * (q.adjoint() * v);
}

struct Chain {
  std::vector<ComplexVector> members;  // eigenvector first
};

// Jordan chains for the eigenvalue cluster centered at lambda with algebraic
// multiplicity mult, via nullspaces of shifted powers.
std::vector<Chain> jordan_chains(const ComplexMatrix& a, Complex lambda, int mult) {
  const int n = static_cast<int>(a.rows());
  ComplexMatrix shifted = a - lambda * ComplexMatrix::Identity(n, n);
  double scale = std::max(1.0, shifted.norm());

  std::vector<ComplexMatrix> null_bases;  // null_bases[j-1] = basis of ker(shifted^j)
  ComplexMatrix power = ComplexMatrix::Identity(n, n);
  int jmax = 0;
  for (int j = 1; j <= mult; ++j) {
    power = power * shifted;
    ComplexMatrix nb = complex_nullspace(power, 1e-9 * std::max(scale, power.norm()));
    null_bases.push_back(nb);
    jmax = j;
    if (nb.cols() >= mult) break;
  }
  if (null_bases.back().cols() != mult)
    throw Error(ErrorCode::IllConditioned, "generalized eigenspace dimension mismatch");

  auto dim_at = [&](int j) -> int {
    if (j <= 0) return 0;
    if (j > jmax) return mult;
    return static_cast<int>(null_bases[j - 1].cols());
  };

  std::vector<Chain> chains;
  std::vector<ComplexVector> tops;
  std::vector<int> heights;

  for (int j = jmax; j >= 1; --j) {
    int blocks_ge_j = dim_at(j) - dim_at(j - 1);
    int blocks_ge_j1 = dim_at(j + 1) - dim_at(j);
    int needed = blocks_ge_j - blocks_ge_j1;
    if (needed <= 0) continue;

    // Span to avoid: ker(shifted^{j-1}) plus the height-j members of taller chains
    // plus tops already chosen at this height.
    std::vector<ComplexVector> avoid_cols;
    if (j >= 2) {
      const ComplexMatrix& lower = null_bases[j - 2];
      for (int c = 0; c < lower.cols(); ++c) avoid_cols.push_back(lower.col(c));
    }
    for (size_t t = 0; t < tops.size(); ++t) {
      ComplexVector member = tops[t];
      for (int s = 0; s < heights[t] - j; ++s) member = shifted * member;
      avoid_cols.push_back(member);
    }

    const ComplexMatrix& candidates = null_bases[j - 1];
    for (int pick = 0; pick < needed; ++pick) {
      ComplexMatrix avoid(n, static_cast<int>(avoid_cols.size()));
      for (size_t c = 0; c < avoid_cols.size(); ++c) avoid.col(static_cast<int>(c)) = avoid_cols[c];
      int best = -1;
      double best_res = 0.0;
      for (int c = 0; c < candidates.cols(); ++c) {
        double res = residual_against(candidates.col(c), avoid).norm();
        if (res > best_res) {
          best_res = res;
          best = c;
        }
      }
      if (best < 0 || best_res < 1e-7)
        throw Error(ErrorCode::IllConditioned, "could not extend Jordan chain independently");
      ComplexVector top = residual_against(candidates.col(best), avoid);
      top /= top.norm();
      tops.push_back(top);
      heights.push_back(j);
      avoid_cols.push_back(top);
    }
  }

  for (size_t t = 0; t < tops.size(); ++t) {
    Chain ch;
    std::vector<ComplexVector> rev;
    ComplexVector cur = tops[t];
    rev.push_back(cur);
    for (int s = 1; s < heights[t]; ++s) {
      cur = shifted * cur;
      rev.push_back(cur);
    }
    // Eigenvector first; unit-normalize each member (real positive scalars keep
    // the block shapes intact).
    for (auto it = rev.rbegin(); it != rev.rend(); ++it) ch.members.push_back(*it / it->norm());
    chains.push_back(std::move(ch));
  }
  // Longer blocks first, deterministic.
  std::stable_sort(chains.begin(), chains.end(),
                   [](const Chain& a, const Chain& b) { return a.members.size() > b.members.size(); });
  return chains;
}

}  // namespace

AbsoluteJordanForm absolute_jordan_form(const Matrix& d) {
  const int n = static_cast<int>(d.rows());
  if (d.rows() != d.cols()) throw Error(ErrorCode::BadInput, "matrix must be square");

  Eigen::EigenSolver<Matrix> es(d);
  if (es.info() != Eigen::Success)
    throw Error(ErrorCode::IllConditioned, "eigenvalue computation failed");
  ComplexVector eigs = es.eigenvalues();
  double scale = std::max(1.0, d.norm());
  double ctol = kClusterTol * scale;

  // Greedy transitive clustering.
  std::vector<int> cluster(n, -1);
  std::vector<Complex> centers;
  std::vector<int> counts;
  for (int i = 0; i < n; ++i) {
    bool placed = false;
    for (size_t c = 0; c < centers.size() && !placed; ++c) {
      if (std::abs(eigs(i) - centers[c]) <= ctol) {
        cluster[i] = static_cast<int>(c);
        centers[c] = (centers[c] * double(counts[c]) + eigs(i)) / double(counts[c] + 1);
        counts[c] += 1;
        placed = true;
      }
    }
    if (!placed) {
      cluster[i] = static_cast<int>(centers.size());
      centers.push_back(eigs(i));
      counts.push_back(1);
    }
  }
  for (size_t a = 0; a < centers.size(); ++a)
    for (size_t b = a + 1; b < centers.size(); ++b)
      if (std::abs(centers[a] - centers[b]) < 10.0 * ctol)
        throw Error(ErrorCode::IllConditioned, "eigenvalue clusters ambiguous at tolerance");

  // Deterministic cluster order; conjugate clusters handled via their im>0 twin.
  std::vector<int> order(centers.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (centers[a].real() != centers[b].real()) return centers[a].real() < centers[b].real();
    return std::abs(centers[a].imag()) < std::abs(centers[b].imag());
  });

  ComplexMatrix ac = d.cast<Complex>();
  Matrix basis(n, n);
  int col = 0;
  AbsoluteJordanForm out;

  for (int ci : order) {
    Complex lambda = centers[ci];
    if (lambda.imag() < -ctol) continue;  // conjugate of an already-processed cluster
    bool complex_pair = lambda.imag() > ctol;
    if (std::abs(lambda.imag()) <= ctol) lambda = Complex(lambda.real(), 0.0);

    auto chains = jordan_chains(ac, lambda, counts[ci]);
    for (const auto& ch : chains) {
      out.block_starts.push_back(col);
      if (!complex_pair) {
        for (const auto& m : ch.members) {
          if (col >= n) throw Error(ErrorCode::IllConditioned, "basis overflow");
          Vector re = m.real();
          double imn = m.imag().norm();
          if (imn > 1e-7 * m.norm())
            throw Error(ErrorCode::IllConditioned, "real eigenvalue produced complex chain");
          basis.col(col++) = re / re.norm();
        }
        out.block_sizes.push_back(static_cast<int>(ch.members.size()));
      } else {
        for (const auto& m : ch.members) {
          if (col + 2 > n) throw Error(ErrorCode::IllConditioned, "basis overflow");
          basis.col(col++) = m.real();
          basis.col(col++) = m.imag();
        }
        out.block_sizes.push_back(2 * static_cast<int>(ch.members.size()));
      }
    }
  }
  if (col != n) throw Error(ErrorCode::IllConditioned, "Jordan basis incomplete");

  if (condition_number(basis) > kCondLimit)
    throw Error(ErrorCode::IllConditioned, "Jordan basis condition number exceeds limit");

  Matrix basis_inv = basis.inverse();
  Matrix m = basis_inv * d * basis;

  // Split m into diagonal + antisymmetric (from the lower triangle) + strictly upper.
  Matrix delta = Matrix::Zero(n, n);
  Matrix sigma = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) delta(i, i) = m(i, i);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      sigma(i, j) = m(i, j);
      sigma(j, i) = -m(i, j);
    }
  }
  Matrix nu = m - delta - sigma;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) nu(i, j) = 0.0;
  // Snap numerically tiny entries so the parts have their declared shapes exactly.
  auto snap = [&](Matrix& x) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (std::abs(x(i, j)) < 1e-10 * scale) x(i, j) = 0.0;
  };
  snap(nu);
  snap(sigma);

  Matrix recon = basis * (delta + nu + sigma) * basis_inv;
  if ((recon - d).norm() > 1e-7 * scale)
    throw Error(ErrorCode::IllConditioned, "decomposition residual too large");

  out.delta = delta;
  out.nu = nu;
  out.sigma = sigma;
  out.basis = basis;
  out.basis_inv = basis_inv;
  return out;
}

}  // namespace solgeo
