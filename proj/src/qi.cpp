#include "solgeo/qi.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "solgeo/error.hpp"

namespace solgeo {

bool ProductQI::sigma_trivial() const {
  for (size_t i = 0; i < permutation.size(); ++i)
    if (permutation[i] != static_cast<int>(i)) return false;
  return (base_matrix - Matrix::Identity(base_matrix.rows(), base_matrix.cols()))
             .cwiseAbs()
             .maxCoeff() <= 1e-12;
}

ProductQI validate_qi(const SolTypeGroup& g, ProductQI qi) {
  const int n = g.num_factors();
  if (static_cast<int>(qi.permutation.size()) != n)
    throw Error(ErrorCode::InvalidSymmetry, "permutation size mismatch");
  std::vector<int> seen(n, 0);
  for (int v : qi.permutation) {
    if (v < 0 || v >= n || seen[v]++)
      throw Error(ErrorCode::InvalidSymmetry, "not a permutation of the factors");
  }
  if (qi.base_matrix.rows() != g.rank || qi.base_matrix.cols() != g.rank)
    throw Error(ErrorCode::InvalidSymmetry, "base matrix shape mismatch");
  if (static_cast<int>(qi.factor_matrices.size()) != n ||
      static_cast<int>(qi.factor_offsets.size()) != n)
    throw Error(ErrorCode::InvalidSymmetry, "factor map count mismatch");

  qi.root_scalars.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    int j = qi.permutation[i];
    const NilpotentFactor& fi = g.factors[i];
    const NilpotentFactor& fj = g.factors[j];
    if (fi.dim != fj.dim)
      throw Error(ErrorCode::InvalidSymmetry, "permutation pairs factors of different dimension");
    // Spectra must match for (N_i, D_i) ~ (N_j, D_j) at desk scale.
    Eigen::EigenSolver<Matrix> ei(fi.derivation), ej(fj.derivation);
    std::vector<double> si, sj;
    for (int c = 0; c < fi.dim; ++c) {
      si.push_back(ei.eigenvalues()(c).real());
      sj.push_back(ej.eigenvalues()(c).real());
    }
    std::sort(si.begin(), si.end());
    std::sort(sj.begin(), sj.end());
    for (int c = 0; c < fi.dim; ++c)
      if (std::abs(si[c] - sj[c]) > 1e-9)
        throw Error(ErrorCode::InvalidSymmetry, "paired factors have different derivation spectra");

    // alpha_{pi(i)} o S must be a positive multiple of alpha_i.
    Vector pulled = qi.base_matrix.transpose() * fj.root;
    double denom = fi.root.squaredNorm();
    if (denom <= 0.0) throw Error(ErrorCode::InvalidSymmetry, "zero root");
    double scalar = pulled.dot(fi.root) / denom;
    if (scalar <= 0.0 || (pulled - scalar * fi.root).norm() > 1e-12 * std::max(1.0, pulled.norm())) {
      std::ostringstream os;
      os << "sigma does not permute the roots: factor " << i << " -> " << j;
      throw Error(ErrorCode::InvalidSymmetry, os.str());
    }
    qi.root_scalars[i] = scalar;

    if (static_cast<int>(qi.factor_matrices[i].rows()) != fj.dim ||
        static_cast<int>(qi.factor_offsets[i].size()) != fj.dim)
      throw Error(ErrorCode::InvalidSymmetry, "factor map dimension mismatch");
  }
  return qi;
}

GroupElement apply_qi(const ProductQI& qi, const GroupElement& x, const SolTypeGroup& g) {
  // sigma first: permute factor contents, act on the base.
  GroupElement y = GroupElement::identity(g);
  y.base = qi.base_matrix * x.base;
  for (int i = 0; i < g.num_factors(); ++i) y.nil[qi.permutation[i]] = x.nil[i];
  // factor maps.
  for (int i = 0; i < g.num_factors(); ++i)
    y.nil[i] = qi.factor_matrices[i] * y.nil[i] + qi.factor_offsets[i];
  // left translation.
  return multiply(qi.translation, y, g);
}

RoughIsometryReport test_rough_isometry(const ProductQI& qi, const SolTypeGroup& g,
                                        const SplittingData& split, const SampleSpec& spec,
                                        const EstimateOptions& eopts,
                                        const RoughIsometryOptions& ropts) {
  RoughIsometryReport rep;

  // Random pairs plus one pure-base family per axis.
  std::vector<PairSample> samples = sample_pairs(g, split, spec);
  std::vector<int> axes(samples.size(), -1);
  for (int axis = 0; axis < g.rank; ++axis) {
    SampleSpec dir = spec;
    dir.pairs_per_separation = 1;
    dir.direction_axis = axis;
    std::vector<PairSample> fam = sample_pairs(g, split, dir);
    for (auto& ps : fam) {
      ps.id = static_cast<int>(samples.size());
      samples.push_back(ps);
      axes.push_back(axis);
    }
  }

  rep.rows.resize(samples.size());
  parallel_for_indexed(static_cast<int>(samples.size()), spec.threads, [&](int i) {
    const PairSample& ps = samples[i];
    RoughIsometryReport::Row row;
    row.id = ps.id;
    row.separation = ps.separation;
    row.axis = axes[i];
    GroupElement ip = apply_qi(qi, ps.p, g);
    GroupElement iq = apply_qi(qi, ps.q, g);
    row.d = estimate_distance(ps.p, ps.q, g, split, eopts).upper;
    row.d_image = estimate_distance(ip, iq, g, split, eopts).upper;
    row.difference = std::abs(row.d_image - row.d);
    rep.rows[i] = row;
  });

  // Overall regression plus per-axis families.
  std::vector<double> xs, ys;
  for (const auto& row : rep.rows) {
    xs.push_back(row.separation);
    ys.push_back(row.difference);
    if (row.d > 1e-9)
      rep.max_relative_difference =
          std::max(rep.max_relative_difference, row.difference / row.d);
  }
  rep.overall_slope = regression_slope(xs, ys);

  double worst_slope = 0.0;
  int worst_axis = -1;
  for (int axis = 0; axis < g.rank; ++axis) {
    std::vector<double> ax, ay;
    for (const auto& row : rep.rows) {
      if (row.axis == axis) {
        ax.push_back(row.separation);
        ay.push_back(row.difference);
      }
    }
    if (static_cast<int>(ax.size()) < ropts.min_scales) continue;
    double slope = regression_slope(ax, ay);
    if (slope > worst_slope) {
      worst_slope = slope;
      worst_axis = axis;
    }
  }
  double random_slope = rep.overall_slope;
  if (worst_slope >= ropts.growth_slope_threshold ||
      random_slope >= ropts.growth_slope_threshold) {
    rep.verdict = RoughIsometryVerdict::kNotRoughIsometry;
    rep.witness_axis = worst_axis;
    rep.witness_slope = worst_slope;
  } else {
    rep.verdict = RoughIsometryVerdict::kRoughIsometry;
    rep.witness_axis = -1;
    rep.witness_slope = worst_slope;
  }
  return rep;
}

BoxPath boxpath_pushforward(const ProductQI& qi, const BoxPath& box, const SolTypeGroup& g,
                            const SplittingData& split) {
  if (!qi.sigma_trivial())
    throw Error(ErrorCode::NontrivialSymmetry, "pushforward requires trivial sigma");

  BoxPath out;
  out.start = apply_qi(qi, box.start, g);
  out.base_vertices = box.base_vertices;  // relative base trace is preserved exactly
  out.base_length = box.base_length;

  // Reconnect each jump: the image endpoints of the original jump determine
  // the new increment inside the same factor coset.
  GroupElement rel_state = GroupElement::identity(g);
  // Walk vertices, tracking the absolute element just before each jump.
  size_t jidx = 0;
  for (int v = 0; v < static_cast<int>(box.base_vertices.size()); ++v) {
    // Move the base to vertex v (nil frozen in split coordinates; for the
    // block-diagonal metrics this is a plain base change).
    rel_state.base = box.base_vertices[v];
    while (jidx < box.jumps.size() && box.jumps[jidx].vertex_index == v) {
      const BoxJump& j = box.jumps[jidx];
      GroupElement before = multiply(box.start, rel_state, g);
      GroupElement jump_el = GroupElement::identity(g);
      jump_el.nil[j.factor] = j.increment;
      GroupElement rel_after = multiply(rel_state, jump_el, g);
      GroupElement after = multiply(box.start, rel_after, g);

      GroupElement ib = apply_qi(qi, before, g);
      GroupElement ia = apply_qi(qi, after, g);
      GroupElement gap = multiply(inverse(ib, g), ia, g);

      BoxJump nj;
      nj.factor = j.factor;
      nj.vertex_index = j.vertex_index;
      nj.alpha_value = j.alpha_value;
      nj.increment = gap.nil[j.factor];
      Vector disp0 = g.factors[j.factor].flow(j.alpha_value) * nj.increment;
      CosetDistance cd = nil_coset_distance(g, split, j.factor, disp0, j.alpha_value);
      nj.cost = cd.value;
      nj.word = cd.word;
      out.jump_cost += nj.cost;
      out.jumps.push_back(nj);

      rel_state = rel_after;
      ++jidx;
    }
  }
  return out;
}

}  // namespace solgeo
