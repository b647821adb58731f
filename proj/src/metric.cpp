#include "solgeo/metric.hpp"

#include <cmath>
#include <sstream>

#include "solgeo/error.hpp"

namespace solgeo {

namespace {
constexpr double kSpdTol = 1e-12;
constexpr double kBracketTol = 1e-10;
}  // namespace

SplitMetric SplitMetric::from_gram(const SolTypeGroup& g, Matrix gram) {
  if (gram.rows() != g.total_dim() || gram.cols() != g.total_dim())
    throw Error(ErrorCode::BadInput, "Gram matrix dimension mismatch");
  if (!is_symmetric(gram, 1e-12)) throw Error(ErrorCode::BadInput, "Gram matrix not symmetric");
  if (min_symmetric_eigenvalue(gram) <= kSpdTol)
    throw Error(ErrorCode::BadInput, "Gram matrix not positive definite");
  SplitMetric m;
  m.gram = std::move(gram);
  const int nn = g.nil_dim();
  m.split_flag = m.gram.block(0, nn, nn, g.rank).cwiseAbs().maxCoeff() == 0.0;
  return m;
}

SplitMetric SplitMetric::identity(const SolTypeGroup& g) {
  return from_gram(g, Matrix::Identity(g.total_dim(), g.total_dim()));
}

double SplittingData::base_norm(const Vector& v) const {
  return std::sqrt(v.dot(base_gram * v));
}

Vector SplittingData::to_euclidean(const Vector& v) const {
  return base_gram_chol.transpose() * v;
}

Vector SplittingData::from_euclidean(const Vector& y) const {
  return base_gram_chol.transpose().triangularView<Eigen::Upper>().solve(y);
}

namespace {

// Bracket of two lifted base vectors (M a1, a1), (M a2, a2); lands in the nil block.
Vector lift_bracket(const SolTypeGroup& g, const Matrix& lift, const Vector& a1,
                    const Vector& a2) {
  Vector out = Vector::Zero(g.nil_dim());
  for (int i = 0; i < g.num_factors(); ++i) {
    const NilpotentFactor& f = g.factors[i];
    int off = g.nil_offset(i);
    Vector m1 = lift.block(off, 0, f.dim, g.rank) * a1;
    Vector m2 = lift.block(off, 0, f.dim, g.rank) * a2;
    Vector term = f.bracket(m1, m2);
    term += g.root_value(i, a1) * (f.derivation * m2);
    term -= g.root_value(i, a2) * (f.derivation * m1);
    out.segment(off, f.dim) = term;
  }
  return out;
}

}  // namespace

SplittingData check_perpendicular_splitting(const SplitMetric& metric, const SolTypeGroup& g) {
  const int nn = g.nil_dim();
  const int k = g.rank;
  Matrix g_nil = metric.gram.topLeftCorner(nn, nn);
  Matrix g_cross = metric.gram.block(0, nn, nn, k);

  // Perpendicular complement of the nil block is the graph of M = -G_nn^{-1} G_nk.
  Matrix lift = -g_nil.llt().solve(g_cross);

  // Closed under the bracket iff all pairwise lift brackets vanish (the bracket
  // of two complement vectors always lands in the nil block, which meets the
  // complement only at zero).
  SplittingData data;
  double worst = 0.0;
  int worst_i = 0, worst_j = 0;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      Vector res = lift_bracket(g, lift, Vector::Unit(k, i), Vector::Unit(k, j));
      double r = res.norm();
      data.bracket_residuals.push_back(r);
      if (r > worst) {
        worst = r;
        worst_i = i;
        worst_j = j;
      }
    }
  }
  if (worst > kBracketTol) {
    std::ostringstream os;
    os << "complement bracket [w_" << worst_i << ", w_" << worst_j << "] has residual "
       << format_double(worst);
    throw Error(ErrorCode::NotASubalgebra, os.str());
  }

  data.nil_gram = g_nil;
  data.lift_map = lift;
  // Gram of the lifted basis w_j = (M e_j, e_j).
  Matrix t(nn + k, k);
  t.topRows(nn) = lift;
  t.bottomRows(k) = Matrix::Identity(k, k);
  data.base_gram = t.transpose() * metric.gram * t;
  data.base_gram = 0.5 * (data.base_gram + data.base_gram.transpose());
  Eigen::LLT<Matrix> llt(data.base_gram);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::BadInput, "induced base metric not positive definite");
  data.base_gram_chol = llt.matrixL();
  data.base_gram_chol_inv =
      data.base_gram_chol.triangularView<Eigen::Lower>().solve(Matrix::Identity(k, k));
  return data;
}

ChangeOfMetric change_of_metric(const SplittingData& m1, const SplittingData& m2) {
  // A^T A = B1^{-1/2} B2 B1^{-1/2}; eigenvalues equal the generalized
  // eigenvalues of (B2, B1).
  Matrix l_inv = m1.base_gram_chol_inv;
  Matrix ata = l_inv * m2.base_gram * l_inv.transpose();
  ata = 0.5 * (ata + ata.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(ata);
  ChangeOfMetric out;
  out.matrix = ata;
  out.eigenvalues = es.eigenvalues().reverse();
  out.stretch_factors = out.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  return out;
}

double delta_distance(const SplittingData& m1, const SplittingData& m2) {
  ChangeOfMetric cm = change_of_metric(m1, m2);
  // Top stretch one way times top stretch back: log-eccentricity.
  return std::log(cm.top_stretch() / cm.bottom_stretch());
}

GradientField root_gradients(const SolTypeGroup& g, const SplittingData& split) {
  GradientField out;
  for (int i = 0; i < g.num_factors(); ++i) {
    Vector grad = split.base_gram.llt().solve(g.factors[i].root);
    out.gradients.push_back(grad);
    out.magnitudes.push_back(std::sqrt(std::max(0.0, grad.dot(g.factors[i].root))));
  }
  return out;
}

HeintzeQuotient heintze_quotient(const SolTypeGroup& g, const SplitMetric& metric,
                                 const SplittingData& split, int factor) {
  const int nn = g.nil_dim();
  const int k = g.rank;
  const NilpotentFactor& f = g.factors[factor];
  const int off = g.nil_offset(factor);

  GradientField grads = root_gradients(g, split);
  HeintzeQuotient out;
  out.factor = factor;
  out.root_magnitude = grads.magnitudes[factor];
  out.derivation = f.derivation;
  out.nil_gram = split.nil_gram.block(off, off, f.dim, f.dim);

  // Coordinate projection G -> n_i (+) R grad(alpha_i): kernel is every other
  // factor plus the grad-orthogonal part of the base block. Lipschitz constant
  // is its operator norm, g-norm to quotient-norm.
  Matrix p = Matrix::Zero(f.dim + 1, nn + k);
  p.block(0, off, f.dim, f.dim) = Matrix::Identity(f.dim, f.dim);
  // Base part: v |-> alpha_i(v)/a_i (arclength coordinate along grad alpha_i).
  for (int c = 0; c < k; ++c) p(f.dim, nn + c) = g.factors[factor].root(c) / out.root_magnitude;

  Matrix quotient_gram = Matrix::Zero(f.dim + 1, f.dim + 1);
  quotient_gram.topLeftCorner(f.dim, f.dim) = out.nil_gram;
  quotient_gram(f.dim, f.dim) = 1.0;  // arclength coordinate

  // Express g in split coordinates: blkdiag(nil_gram, base_gram); the
  // projection above is written in split coordinates as well.
  Matrix split_gram = Matrix::Zero(nn + k, nn + k);
  split_gram.topLeftCorner(nn, nn) = split.nil_gram;
  split_gram.bottomRightCorner(k, k) = split.base_gram;
  out.lipschitz = projection_operator_norm(p, split_gram, quotient_gram);
  return out;
}

double nil_projection_constant(const SolTypeGroup& g, const SplittingData& split) {
  const int nn = g.nil_dim();
  const int k = g.rank;
  Matrix split_gram = Matrix::Zero(nn + k, nn + k);
  split_gram.topLeftCorner(nn, nn) = split.nil_gram;
  split_gram.bottomRightCorner(k, k) = split.base_gram;

  double worst = 0.0;
  for (int i = 0; i < g.num_factors(); ++i) {
    const int off = g.nil_offset(i);
    const int d = g.factors[i].dim;
    Matrix p = Matrix::Zero(d, nn + k);
    p.block(0, off, d, d) = Matrix::Identity(d, d);
    Matrix target = split.nil_gram.block(off, off, d, d);
    worst = std::max(worst, projection_operator_norm(p, split_gram, target));
  }
  return worst;
}

Matrix make_split_gram(const SolTypeGroup& g, const Matrix& nil_block, const Matrix& base_block,
                       const std::vector<Vector>& lift_vectors) {
  const int nn = g.nil_dim();
  const int k = g.rank;
  Matrix lift = Matrix::Zero(nn, k);
  for (int i = 0; i < g.num_factors(); ++i) {
    const NilpotentFactor& f = g.factors[i];
    if (static_cast<int>(lift_vectors.size()) != g.num_factors())
      throw Error(ErrorCode::BadInput, "one lift vector per factor required");
    if (lift_vectors[i].size() != f.dim)
      throw Error(ErrorCode::BadInput, "lift vector dimension mismatch");
    lift.block(g.nil_offset(i), 0, f.dim, k) = lift_vectors[i] * f.root.transpose();
  }
  // Metric making the graph basis {(lift e_j, e_j)} orthogonal to the nil
  // block with prescribed blocks: G = T^{-T} blkdiag(nil, base) T^{-1},
  // T = [[I, lift], [0, I]], T^{-1} = [[I, -lift], [0, I]].
  Matrix t_inv = Matrix::Identity(nn + k, nn + k);
  t_inv.block(0, nn, nn, k) = -lift;
  Matrix blocks = Matrix::Zero(nn + k, nn + k);
  blocks.topLeftCorner(nn, nn) = nil_block;
  blocks.bottomRightCorner(k, k) = base_block;
  Matrix gram = t_inv.transpose() * blocks * t_inv;
  return 0.5 * (gram + gram.transpose());
}

}  // namespace solgeo
