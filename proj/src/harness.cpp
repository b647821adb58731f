#include "solgeo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "solgeo/error.hpp"

namespace solgeo {

namespace {

// Resample to `segments` segments, nodes equally spaced in accumulated
// coordinate arclength (falls back to index spacing on degenerate paths).
PiecewisePath resample(const PiecewisePath& path, int segments, const SolTypeGroup& g,
                       const SplittingData& split) {
  std::vector<double> cum(path.nodes.size(), 0.0);
  for (size_t i = 0; i + 1 < path.nodes.size(); ++i)
    cum[i + 1] = cum[i] + segment_speed(path.nodes[i], path.nodes[i + 1], g, split);
  double total = cum.back();
  PiecewisePath out;
  for (int s = 0; s <= segments; ++s) {
    double target = total * s / segments;
    if (total <= 0.0) {
      double idx = static_cast<double>(s) * (path.nodes.size() - 1) / segments;
      int i = std::min(static_cast<int>(idx), static_cast<int>(path.nodes.size()) - 2);
      double t = idx - i;
      GroupElement e;
      e.base = (1.0 - t) * path.nodes[i].base + t * path.nodes[i + 1].base;
      for (size_t f = 0; f < path.nodes[i].nil.size(); ++f)
        e.nil.push_back((1.0 - t) * path.nodes[i].nil[f] + t * path.nodes[i + 1].nil[f]);
      out.nodes.push_back(e);
      continue;
    }
    auto it = std::lower_bound(cum.begin(), cum.end(), target);
    size_t hi = std::min(static_cast<size_t>(it - cum.begin()), cum.size() - 1);
    size_t lo = hi > 0 ? hi - 1 : 0;
    double span = cum[hi] - cum[lo];
    double t = span > 0.0 ? (target - cum[lo]) / span : 0.0;
    if (hi == lo) t = 0.0;
    GroupElement e;
    e.base = (1.0 - t) * path.nodes[lo].base + t * path.nodes[hi].base;
    for (size_t f = 0; f < path.nodes[lo].nil.size(); ++f)
      e.nil.push_back((1.0 - t) * path.nodes[lo].nil[f] + t * path.nodes[hi].nil[f]);
    out.nodes.push_back(e);
  }
  return out;
}

struct FlatPath {
  // Interior nodes flattened; endpoints pinned.
  int dim = 0;  // coords per node
  int segments = 0;
  GroupElement front, back;
  std::vector<GroupElement> nodes;  // full node list

  double length(const SolTypeGroup& g, const SplittingData& split) const {
    double len = 0.0;
    for (size_t i = 0; i + 1 < nodes.size(); ++i)
      len += segment_speed(nodes[i], nodes[i + 1], g, split);
    return len;
  }
};

void perturb_coord(GroupElement& e, int coord, double delta, const SolTypeGroup& g) {
  int c = coord;
  for (int f = 0; f < g.num_factors(); ++f) {
    if (c < g.factors[f].dim) {
      e.nil[f](c) += delta;
      return;
    }
    c -= g.factors[f].dim;
  }
  e.base(c) += delta;
}

// Descent on interior nodes with local finite-difference gradients and
// backtracking line search. Returns iterations spent.
int descend(FlatPath& fp, const SolTypeGroup& g, const SplittingData& split,
            const EstimateOptions& opts, int iteration_cap) {
  const int total_dim = g.total_dim();
  const int interior = static_cast<int>(fp.nodes.size()) - 2;
  if (interior <= 0) return 0;

  auto local_len = [&](int node_idx) {
    double len = 0.0;
    if (node_idx > 0)
      len += segment_speed(fp.nodes[node_idx - 1], fp.nodes[node_idx], g, split);
    if (node_idx + 1 < static_cast<int>(fp.nodes.size()))
      len += segment_speed(fp.nodes[node_idx], fp.nodes[node_idx + 1], g, split);
    return len;
  };

  double cur_len = fp.length(g, split);
  double step = 0.1;
  int stall = 0;
  int it = 0;
  for (; it < iteration_cap; ++it) {
    // Local finite-difference gradient.
    std::vector<Vector> grad(interior, Vector::Zero(total_dim));
    const double h = 1e-6 * std::max(1.0, cur_len / fp.segments);
    for (int j = 0; j < interior; ++j) {
      for (int c = 0; c < total_dim; ++c) {
        GroupElement saved = fp.nodes[j + 1];
        perturb_coord(fp.nodes[j + 1], c, h, g);
        double fp_plus = local_len(j + 1);
        fp.nodes[j + 1] = saved;
        perturb_coord(fp.nodes[j + 1], c, -h, g);
        double fp_minus = local_len(j + 1);
        fp.nodes[j + 1] = saved;
        grad[j](c) = (fp_plus - fp_minus) / (2.0 * h);
      }
    }
    double gnorm = 0.0;
    for (const auto& gv : grad) gnorm += gv.squaredNorm();
    gnorm = std::sqrt(gnorm);
    if (gnorm < 1e-14) break;

    // Backtracking on strict decrease.
    bool accepted = false;
    double alpha = step;
    for (int bt = 0; bt < 30; ++bt) {
      std::vector<GroupElement> saved = fp.nodes;
      for (int j = 0; j < interior; ++j) {
        Vector d = -alpha / gnorm * grad[j] * cur_len;
        for (int c = 0; c < total_dim; ++c) perturb_coord(fp.nodes[j + 1], c, d(c), g);
      }
      double new_len = fp.length(g, split);
      if (new_len < cur_len - 1e-15) {
        double rel = (cur_len - new_len) / std::max(cur_len, 1e-300);
        cur_len = new_len;
        accepted = true;
        step = std::min(alpha * 2.0, 0.5);
        stall = rel < opts.descent_tol ? stall + 1 : 0;
        break;
      }
      fp.nodes = saved;
      alpha *= 0.5;
    }
    if (!accepted) {
      ++stall;
      step = std::max(step * 0.5, 1e-9);
    }
    if (stall >= 50) break;
  }
  return it;
}

}  // namespace

PiecewisePath optimize_path(const GroupElement& p, const GroupElement& q, const SolTypeGroup& g,
                            const SplittingData& split, const EstimateOptions& opts,
                            DistanceEstimate* estimate) {
  DistanceEstimate est;
  est.lower = split.base_norm(q.base - p.base);

  if (element_distance(p, q) == 0.0) {
    PiecewisePath trivial;
    trivial.nodes = {p, q};
    est.upper = 0.0;
    est.method = "trivial";
    est.final_segments = 1;
    if (estimate) *estimate = est;
    return trivial;
  }

  int budget_left = opts.budget;

  // Candidate initializations at the starting resolution.
  struct Init {
    PiecewisePath path;
    std::string name;
  };
  std::vector<Init> inits;
  inits.push_back({straight_path(p, q, opts.initial_segments), "straight"});
  if (opts.use_rho_init) {
    RhoResult rr = rho(p, q, g, split);
    PiecewisePath boxed = materialize_box_path(rr.path, g, split, 4);
    inits.push_back({resample(boxed, opts.initial_segments, g, split), "box"});
  }

  FlatPath best;
  double best_len = 1e300;
  std::string best_name;
  for (auto& init : inits) {
    FlatPath fp;
    fp.segments = opts.initial_segments;
    fp.nodes = init.path.nodes;
    int spent = descend(fp, g, split, opts,
                        std::min(opts.max_iterations_per_level, budget_left));
    budget_left -= spent;
    est.iterations += spent;
    double len = fp.length(g, split);
    if (len < best_len) {
      best_len = len;
      best = fp;
      best_name = init.name;
    }
  }

  // Node doubling until the converged length settles.
  int segments = opts.initial_segments;
  while (segments < opts.max_segments) {
    if (budget_left <= 0) {
      est.budget_exceeded = true;
      break;
    }
    int next_segments = segments * 2;
    PiecewisePath refined;
    refined.nodes = best.nodes;
    refined = refined.refined();
    FlatPath fp;
    fp.segments = next_segments;
    fp.nodes = refined.nodes;
    int spent = descend(fp, g, split, opts,
                        std::min(opts.max_iterations_per_level, budget_left));
    budget_left -= spent;
    est.iterations += spent;
    double len = fp.length(g, split);
    double rel = std::abs(best_len - len) / std::max(len, 1e-300);
    best = fp;
    best_len = len;
    segments = next_segments;
    if (rel < opts.level_tol) break;
  }

  est.upper = best_len;
  est.final_segments = segments;
  est.method = best_name;
  if (estimate) *estimate = est;

  PiecewisePath out;
  out.nodes = best.nodes;
  return out;
}

DistanceEstimate estimate_distance(const GroupElement& p, const GroupElement& q,
                                   const SolTypeGroup& g, const SplittingData& split,
                                   const EstimateOptions& opts) {
  DistanceEstimate est;
  optimize_path(p, q, g, split, opts, &est);
  return est;
}

std::vector<PairSample> sample_pairs(const SolTypeGroup& g, const SplittingData& split,
                                     const SampleSpec& spec) {
  std::vector<PairSample> out;
  Rng root(spec.seed);
  int id = 0;
  for (double s : spec.separations) {
    for (int i = 0; i < spec.pairs_per_separation; ++i) {
      Rng rng = root.fork(static_cast<std::uint64_t>(id) + 1);
      PairSample ps;
      ps.id = id++;
      ps.separation = s;
      ps.p = GroupElement::identity(g);
      GroupElement q = GroupElement::identity(g);
      if (spec.direction_axis >= 0) {
        Vector y = Vector::Zero(g.rank);
        y(spec.direction_axis) = s;
        q.base = split.from_euclidean(y);
      } else {
        q.base = split.from_euclidean(s * rng.sphere_vector(g.rank));
      }
      if (!spec.base_only && spec.direction_axis < 0) {
        for (int f = 0; f < g.num_factors(); ++f) {
          const int d = g.factors[f].dim;
          const int off = g.nil_offset(f);
          Matrix gram = split.nil_gram.block(off, off, d, d);
          Vector dir = rng.sphere_vector(d);
          double nrm = std::sqrt(std::max(1e-300, dir.dot(gram * dir)));
          double dist = std::exp(rng.uniform(s - 1.0, s));
          q.nil[f] = dist / nrm * dir;
        }
      }
      ps.q = q;
      out.push_back(ps);
    }
  }
  return out;
}

double regression_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n < 2) return 0.0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) return 0.0;
  return (n * sxy - sx * sy) / denom;
}

void parallel_for_indexed(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, threads);
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

ComparisonReport compare_metrics(const SolTypeGroup& g, const SplittingData& split1,
                                 const SplittingData& split2, const SampleSpec& spec,
                                 const EstimateOptions& eopts) {
  ChangeOfMetric cm = change_of_metric(split1, split2);
  ComparisonReport rep;
  rep.lambda_top_eig = cm.eigenvalues(0);
  rep.lambda_bottom_eig = cm.eigenvalues(cm.eigenvalues.size() - 1);
  rep.lambda_top_stretch = cm.top_stretch();
  rep.lambda_bottom_stretch = cm.bottom_stretch();

  std::vector<PairSample> pairs = sample_pairs(g, split1, spec);
  rep.rows.resize(pairs.size());
  parallel_for_indexed(static_cast<int>(pairs.size()), spec.threads, [&](int i) {
    const PairSample& ps = pairs[i];
    ComparisonRow row;
    row.id = ps.id;
    row.separation = ps.separation;
    DistanceEstimate e1 = estimate_distance(ps.p, ps.q, g, split1, eopts);
    DistanceEstimate e2 = estimate_distance(ps.p, ps.q, g, split2, eopts);
    RhoResult r1 = rho(ps.p, ps.q, g, split1);
    RhoResult r2 = rho(ps.p, ps.q, g, split2);
    row.d1_lower = e1.lower;
    row.d1_upper = e1.upper;
    row.d2_lower = e2.lower;
    row.d2_upper = e2.upper;
    row.rho1 = r1.length;
    row.rho2 = r2.length;
    row.upper_residual_eig = std::max(0.0, row.d2_upper - rep.lambda_top_eig * row.d1_upper);
    row.lower_residual_eig = std::max(0.0, rep.lambda_bottom_eig * row.d1_upper - row.d2_upper);
    row.upper_residual_stretch =
        std::max(0.0, row.d2_upper - rep.lambda_top_stretch * row.d1_upper);
    row.lower_residual_stretch =
        std::max(0.0, rep.lambda_bottom_stretch * row.d1_upper - row.d2_upper);
    rep.rows[i] = row;
  });

  std::vector<double> xs, y_ue, y_le, y_us, y_ls;
  for (const auto& row : rep.rows) {
    xs.push_back(row.separation);
    y_ue.push_back(row.upper_residual_eig);
    y_le.push_back(row.lower_residual_eig);
    y_us.push_back(row.upper_residual_stretch);
    y_ls.push_back(row.lower_residual_stretch);
    rep.fitted_c_upper_eig = std::max(rep.fitted_c_upper_eig, row.upper_residual_eig);
    rep.fitted_c_lower_eig = std::max(rep.fitted_c_lower_eig, row.lower_residual_eig);
    rep.fitted_c_upper_stretch = std::max(rep.fitted_c_upper_stretch, row.upper_residual_stretch);
    rep.fitted_c_lower_stretch = std::max(rep.fitted_c_lower_stretch, row.lower_residual_stretch);
    rep.max_separation = std::max(rep.max_separation, row.separation);
  }
  rep.slope_upper_eig = regression_slope(xs, y_ue);
  rep.slope_lower_eig = regression_slope(xs, y_le);
  rep.slope_upper_stretch = regression_slope(xs, y_us);
  rep.slope_lower_stretch = regression_slope(xs, y_ls);
  return rep;
}

RhoDistanceReport rho_vs_distance(const SolTypeGroup& g, const SplittingData& split,
                                  const SampleSpec& spec, const EstimateOptions& eopts) {
  std::vector<PairSample> pairs = sample_pairs(g, split, spec);
  RhoDistanceReport rep;
  rep.rows.resize(pairs.size());
  parallel_for_indexed(static_cast<int>(pairs.size()), spec.threads, [&](int i) {
    const PairSample& ps = pairs[i];
    RhoDistanceRow row;
    row.id = ps.id;
    row.separation = ps.separation;
    DistanceEstimate e = estimate_distance(ps.p, ps.q, g, split, eopts);
    RhoResult r = rho(ps.p, ps.q, g, split);
    row.rho = r.length;
    row.d_lower = e.lower;
    row.d_upper = e.upper;
    row.gap_upper = row.rho - row.d_upper;
    row.gap_lower = row.rho - row.d_lower;
    rep.rows[i] = row;
  });
  std::vector<double> xs, ys;
  for (const auto& row : rep.rows) {
    xs.push_back(row.separation);
    ys.push_back(row.gap_upper);
    if (row.rho < row.d_lower - 1e-12) rep.lower_bound_respected = false;
  }
  rep.slope_gap_upper = regression_slope(xs, ys);
  return rep;
}

DeltaReport delta_vs_empirical(const SolTypeGroup& g, const SplittingData& split1,
                               const SplittingData& split2, const SampleSpec& spec,
                               const EstimateOptions& eopts) {
  DeltaReport rep;
  rep.delta_closed_form = delta_distance(split1, split2);

  // Directional base pairs probe the ratio extremes exactly; random nil pairs
  // add texture. Ratios taken at the largest separations only.
  std::vector<PairSample> pairs;
  Rng root(spec.seed);
  int id = 0;
  double sep = spec.separations.empty() ? 30.0 : spec.separations.back();
  for (int i = 0; i < std::max(8, spec.pairs_per_separation); ++i) {
    Rng rng = root.fork(static_cast<std::uint64_t>(id) + 7001);
    PairSample ps;
    ps.id = id++;
    ps.separation = sep;
    ps.p = GroupElement::identity(g);
    GroupElement q = GroupElement::identity(g);
    q.base = split1.from_euclidean(sep * rng.sphere_vector(g.rank));
    ps.q = q;
    pairs.push_back(ps);
  }
  for (int axis = 0; axis < g.rank; ++axis) {
    for (double sign : {1.0, -1.0}) {
      PairSample ps;
      ps.id = id++;
      ps.separation = sep;
      ps.p = GroupElement::identity(g);
      GroupElement q = GroupElement::identity(g);
      Vector y = Vector::Zero(g.rank);
      y(axis) = sign * sep;
      q.base = split1.from_euclidean(y);
      ps.q = q;
      pairs.push_back(ps);
    }
  }

  rep.rows.resize(pairs.size());
  parallel_for_indexed(static_cast<int>(pairs.size()), spec.threads, [&](int i) {
    const PairSample& ps = pairs[i];
    DeltaRow row;
    row.id = ps.id;
    row.separation = ps.separation;
    DistanceEstimate e1 = estimate_distance(ps.p, ps.q, g, split1, eopts);
    DistanceEstimate e2 = estimate_distance(ps.p, ps.q, g, split2, eopts);
    row.d1 = e1.upper;
    row.d2 = e2.upper;
    row.ratio = e1.upper > 0.0 ? e2.upper / e1.upper : 1.0;
    rep.rows[i] = row;
  });

  double max_ratio = 0.0, max_inverse = 0.0;
  for (const auto& row : rep.rows) {
    if (row.d1 <= 0.0 || row.d2 <= 0.0) continue;
    max_ratio = std::max(max_ratio, row.d2 / row.d1);
    max_inverse = std::max(max_inverse, row.d1 / row.d2);
  }
  rep.log_lambda_empirical = std::log(std::max(1e-300, max_ratio * max_inverse));
  double denom = std::abs(rep.delta_closed_form) > 1e-9 ? std::abs(rep.delta_closed_form) : 1.0;
  rep.relative_discrepancy =
      std::abs(rep.log_lambda_empirical - rep.delta_closed_form) / denom;
  return rep;
}

}  // namespace solgeo
