#include "solgeo/distortion.hpp"

#include <cmath>

#include "solgeo/error.hpp"

namespace solgeo {

namespace {

Matrix factor_gram(const SolTypeGroup& g, const SplittingData& split, int factor) {
  const int off = g.nil_offset(factor);
  const int d = g.factors[factor].dim;
  return split.nil_gram.block(off, off, d, d);
}

// Bi-Lipschitz constant between ||.||_gram and the l^1 norm on R^m:
// L = max( sup |y|_1/||y||, sup ||y||/|y|_1 ). Both sups are exact: the first
// is attained at a sign pattern, the second at a vertex of the l^1 ball.
double l1_bilipschitz(const Matrix& gram) {
  const int m = static_cast<int>(gram.rows());
  Matrix gram_inv = gram.llt().solve(Matrix::Identity(m, m));
  double up = 0.0;  // sup |y|_1 / ||y||_gram = max_s sqrt(s^T G^{-1} s)
  for (int mask = 0; mask < (1 << m); ++mask) {
    Vector s(m);
    for (int i = 0; i < m; ++i) s(i) = (mask >> i) & 1 ? 1.0 : -1.0;
    up = std::max(up, std::sqrt(s.dot(gram_inv * s)));
  }
  double down = 0.0;  // sup ||y||_gram / |y|_1 = max_j sqrt(G_jj)
  for (int j = 0; j < m; ++j) down = std::max(down, std::sqrt(gram(j, j)));
  return std::max(up, down);
}

}  // namespace

FactorDistortion diagonalizable_constants(const SolTypeGroup& g, const SplittingData& split,
                                          int factor) {
  const NilpotentFactor& f = g.factors[factor];
  Eigen::EigenSolver<Matrix> es(f.derivation);
  for (int i = 0; i < f.dim; ++i)
    if (std::abs(es.eigenvalues()(i).imag()) > 1e-10)
      throw Error(ErrorCode::NotDiagonalizable, "derivation has complex eigenvalues");
  Matrix v = es.eigenvectors().real();
  for (int c = 0; c < f.dim; ++c) v.col(c) /= v.col(c).norm();
  if (condition_number(v) > 1e8)
    throw Error(ErrorCode::NotDiagonalizable, "derivation is defective");

  // Metric making the eigenbasis orthonormal.
  Matrix v_inv = v.inverse();
  Matrix eig_gram = v_inv.transpose() * v_inv;
  eig_gram = 0.5 * (eig_gram + eig_gram.transpose());

  Matrix gram = factor_gram(g, split, factor);
  Vector ev = generalized_eigenvalues(eig_gram, gram);  // squared stretch factors
  double s_min = std::sqrt(std::max(0.0, ev.minCoeff()));
  double s_max = std::sqrt(ev.maxCoeff());

  FactorDistortion out;
  out.factor = factor;
  out.diagonalizable = true;
  out.basis_change_ratio = s_min / s_max;
  out.c = out.basis_change_ratio;
  out.a = std::exp(1.0);
  out.t = 0.0;
  out.block_dim = f.dim;
  return out;
}

FactorDistortion jordan_constants(const SolTypeGroup& g, const SplittingData& split, int factor) {
  const NilpotentFactor& f = g.factors[factor];
  AbsoluteJordanForm jf = absolute_jordan_form(f.derivation);
  const int m = f.dim;

  // |delta| = min diagonal rate over Jordan blocks (1 after normalization).
  double abs_delta = jf.delta.diagonal().minCoeff();

  // Row sums of |e^{-t |D|}| per block: row p of a size-s block (per-block
  // rates d = |delta|_V, nu entries read off the block) has entries
  // e^{-d t} (nu t)^q / q! for q = 0..s-1-p.
  struct BlockData {
    double rate;
    double nu;
    int size;
  };
  std::vector<BlockData> blocks;
  for (size_t b = 0; b < jf.block_sizes.size(); ++b) {
    int start = jf.block_starts[b];
    int size = jf.block_sizes[b];
    double rate = jf.delta(start, start);
    double nu = 0.0;
    for (int i = start; i < start + size; ++i)
      for (int j = start; j < start + size; ++j) nu = std::max(nu, std::abs(jf.nu(i, j)));
    blocks.push_back({rate, nu, size});
  }

  auto worst_margin = [&](double t) {
    // max over blocks/rows of rowsum(t) - e^{-|delta| t / 2}; positive means the
    // bound fails at t.
    double target = std::exp(-0.5 * abs_delta * t);
    double worst = -1e300;
    for (const auto& b : blocks) {
      double term = 1.0;
      double sum = 1.0;  // q = 0
      for (int q = 1; q < b.size; ++q) {
        term *= b.nu * t / q;
        sum += term;
      }
      worst = std::max(worst, std::exp(-b.rate * t) * sum - target);
    }
    return worst;
  };

  // The row-sum ratio is t^p e^{-(rate - |delta|/2) t}-shaped: a final crossing
  // exists. Bracket far to the right and take the last crossing.
  double hi = 1.0;
  while (worst_margin(hi) > 0.0 && hi < 1e6) hi *= 2.0;
  if (worst_margin(hi) > 0.0)
    throw Error(ErrorCode::IllConditioned, "distortion bound never satisfied");
  double t_val =
      last_crossing([&](double t) { return worst_margin(t); }, 0.0, hi, 4096, 1e-10);

  // Verification sweep with the 1.01 safety margin.
  for (int i = 0; i <= 200; ++i) {
    double t = t_val + (1.01 * t_val + 10.0 - t_val) * i / 200.0;
    if (worst_margin(t) > 1e-9)
      throw Error(ErrorCode::IllConditioned, "distortion bound fails beyond T");
  }

  // C composed per the proof chain: l^1 comparison in the Jordan basis, the
  // m-factor for the orthogonal sigma flow, and the basis-change constant,
  // reported separately and combined as 1/(m^2 L1^2).
  const int off = g.nil_offset(factor);
  Matrix gram = split.nil_gram.block(off, off, m, m);
  Matrix jordan_gram = jf.basis.transpose() * gram * jf.basis;
  jordan_gram = 0.5 * (jordan_gram + jordan_gram.transpose());
  double l1 = l1_bilipschitz(jordan_gram);

  FactorDistortion out;
  out.factor = factor;
  out.diagonalizable = false;
  out.l1_constant = l1;
  out.sigma_flow_constant = static_cast<double>(m);
  out.c = 1.0 / (static_cast<double>(m) * static_cast<double>(m) * l1 * l1);
  out.a = std::exp(0.5 * abs_delta);
  out.t = t_val;
  out.block_dim = m;
  return out;
}

DistortionCertificate uniform_certificate(const SolTypeGroup& g, const SplittingData& split) {
  DistortionCertificate cert;
  GradientField grads = root_gradients(g, split);
  double c = 1e300, t = 0.0, a = 1e300;
  for (int i = 0; i < g.num_factors(); ++i) {
    FactorDistortion fd;
    try {
      fd = diagonalizable_constants(g, split, i);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotDiagonalizable) throw;
      fd = jordan_constants(g, split, i);
    }
    double mag = grads.magnitudes[i];
    c = std::min(c, fd.c);
    t = std::max(t, fd.t / mag);
    a = std::min(a, std::pow(fd.a, mag));
    cert.factors.push_back(fd);
  }
  cert.c = c;
  cert.t = t;
  cert.a = a;
  return cert;
}

}  // namespace solgeo
