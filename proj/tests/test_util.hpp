#pragma once

#include "solgeo/boxpath.hpp"
#include "solgeo/group.hpp"
#include "solgeo/metric.hpp"
#include "solgeo/rng.hpp"

namespace solgeo::testutil {

inline NilpotentFactor line_factor(const Vector& root, double rate = 1.0) {
  NilpotentFactor f;
  f.dim = 1;
  f.derivation = Matrix::Constant(1, 1, rate);
  f.root = root;
  return f;
}

inline Vector rvec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

/// Rank-2 group with two 1-dim abelian factors, roots e1* and e2*.
inline SolTypeGroup rank2_group() {
  SolTypeGroup g;
  g.rank = 2;
  g.factors.push_back(line_factor(rvec2(1, 0)));
  g.factors.push_back(line_factor(rvec2(0, 1)));
  return validate(g).group;
}

/// R^4 x| R^2 with roots e1*, 2e2*, -e1*, -2e2* and unit derivations.
inline SolTypeGroup example_r4_group() {
  SolTypeGroup g;
  g.rank = 2;
  g.factors.push_back(line_factor(rvec2(1, 0)));
  g.factors.push_back(line_factor(rvec2(0, 2)));
  g.factors.push_back(line_factor(rvec2(-1, 0)));
  g.factors.push_back(line_factor(rvec2(0, -2)));
  return validate(g).group;
}

/// Rank-2 group with one 2-dim factor carrying the Jordan block [[1,1],[0,1]]
/// and a second 1-dim factor.
inline SolTypeGroup jordan_group() {
  SolTypeGroup g;
  g.rank = 2;
  NilpotentFactor f;
  f.dim = 2;
  f.derivation = Matrix(2, 2);
  f.derivation << 1, 1, 0, 1;
  f.root = rvec2(1, 0);
  g.factors.push_back(f);
  g.factors.push_back(line_factor(rvec2(0, 1)));
  return validate(g).group;
}

/// Rank-2 group with a 3-dim Heisenberg factor ([X,Y] = Z, D = diag(1,1,2)).
inline SolTypeGroup heisenberg_group() {
  SolTypeGroup g;
  g.rank = 2;
  NilpotentFactor f;
  f.dim = 3;
  f.derivation = Matrix::Zero(3, 3);
  f.derivation.diagonal() << 1, 1, 2;
  f.root = rvec2(1, 0);
  f.bracket_forms.assign(3, Matrix::Zero(3, 3));
  f.bracket_forms[2](0, 1) = 1.0;
  f.bracket_forms[2](1, 0) = -1.0;
  g.factors.push_back(f);
  g.factors.push_back(line_factor(rvec2(0, 1)));
  return validate(g).group;
}

/// Single-factor higher-rank group (used by the pipeline's far branch).
inline SolTypeGroup single_factor_group() {
  SolTypeGroup g;
  g.rank = 2;
  g.factors.push_back(line_factor(rvec2(1, 0)));
  return validate(g).group;
}

inline GroupElement random_element(const SolTypeGroup& g, Rng& rng, double scale = 2.0) {
  GroupElement e = GroupElement::identity(g);
  for (int i = 0; i < g.rank; ++i) e.base(i) = scale * (rng.uniform() - 0.5);
  for (int f = 0; f < g.num_factors(); ++f)
    for (int c = 0; c < g.factors[f].dim; ++c) e.nil[f](c) = scale * (rng.uniform() - 0.5);
  return e;
}

inline SplittingData identity_split(const SolTypeGroup& g) {
  return check_perpendicular_splitting(SplitMetric::identity(g), g);
}

/// Gram with the given diagonal base block, identity nil block.
inline SplitMetric diag_base_metric(const SolTypeGroup& g, const Vector& base_diag) {
  Matrix gram = Matrix::Identity(g.total_dim(), g.total_dim());
  for (int i = 0; i < g.rank; ++i) gram(g.nil_dim() + i, g.nil_dim() + i) = base_diag(i);
  return SplitMetric::from_gram(g, gram);
}

}  // namespace solgeo::testutil
