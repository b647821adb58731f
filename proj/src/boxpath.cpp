#include "solgeo/boxpath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "solgeo/error.hpp"

namespace solgeo {

namespace {

constexpr double kHsvSlack = 1e-9;

// phi(A) = sum_k A^k/(k+1)!  (= (e^A - I) A^{-1} for invertible A).
Matrix phi_series(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  Matrix term = Matrix::Identity(n, n);
  Matrix sum = Matrix::Identity(n, n);
  for (int k = 1; k < 200; ++k) {
    term = term * a / static_cast<double>(k + 1);
    sum += term;
    if (term.norm() < 1e-18 * std::max(1.0, sum.norm())) break;
  }
  return sum;
}

// Nil drift of the lifted section at v: s_g(v) = (drift(v), v) in product coords.
Vector lift_drift(const SolTypeGroup& g, const SplittingData& split, int factor, const Vector& v) {
  const NilpotentFactor& f = g.factors[factor];
  Vector mv = split.lift_map.block(g.nil_offset(factor), 0, f.dim, g.rank) * v;
  if (mv.cwiseAbs().maxCoeff() == 0.0) return mv;
  double s = g.root_value(factor, v);
  if (f.abelian()) return phi_series(s * f.derivation) * mv;
  // Step-2: integrate hdot = (I + ad_h/2) e^{t s D} (M v) over t in [0, 1].
  Vector h = Vector::Zero(f.dim);
  const int steps = 256;
  double dt = 1.0 / steps;
  auto rhs = [&](double t, const Vector& hh) {
    Vector base = f.flow(t * s) * mv;
    return Vector(base + 0.5 * f.bracket(hh, base));
  };
  for (int i = 0; i < steps; ++i) {
    double t = i * dt;
    Vector k1 = rhs(t, h);
    Vector k2 = rhs(t + 0.5 * dt, h + 0.5 * dt * k1);
    Vector k3 = rhs(t + 0.5 * dt, h + 0.5 * dt * k2);
    Vector k4 = rhs(t + dt, h + dt * k3);
    h += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return h;
}

}  // namespace

GroupElement to_split_coords(const GroupElement& x, const SolTypeGroup& g,
                             const SplittingData& split) {
  if (split.lift_map.cwiseAbs().maxCoeff() == 0.0) return x;
  GroupElement out = x;
  for (int i = 0; i < g.num_factors(); ++i) {
    Vector drift = lift_drift(g, split, i, x.base);
    out.nil[i] = g.factors[i].bch(x.nil[i], -drift);
  }
  return out;
}

CosetDistance nil_coset_distance(const SolTypeGroup& g, const SplittingData& split, int factor,
                                 const Vector& nil_increment, double alpha_value) {
  const NilpotentFactor& f = g.factors[factor];
  if (f.nilpotency_step > 2)
    throw Error(ErrorCode::UnsupportedStep, "coset distance requires step <= 2");
  const int off = g.nil_offset(factor);
  Matrix gram = split.nil_gram.block(off, off, f.dim, f.dim);
  auto gnorm = [&](const Vector& x) { return std::sqrt(std::max(0.0, x.dot(gram * x))); };

  Vector y = f.flow(-alpha_value) * nil_increment;
  CosetDistance straight;
  straight.value = gnorm(y);
  straight.exact = f.abelian();
  straight.word = {y};
  if (f.abelian()) return straight;

  // Step-2 alternative: split y into a derived-algebra part realized by
  // commutator loops and a complement part realized by a straight segment.
  std::vector<std::pair<int, int>> pairs;
  std::vector<Vector> images;
  for (int i = 0; i < f.dim; ++i)
    for (int j = i + 1; j < f.dim; ++j) {
      Vector b = f.bracket(Vector::Unit(f.dim, i), Vector::Unit(f.dim, j));
      if (b.cwiseAbs().maxCoeff() > 0.0) {
        pairs.emplace_back(i, j);
        images.push_back(b);
      }
    }
  if (pairs.empty()) return straight;

  // Derived part: project y onto span(images) in Euclidean coordinates.
  Matrix span(f.dim, static_cast<int>(images.size()));
  for (size_t c = 0; c < images.size(); ++c) span.col(static_cast<int>(c)) = images[c];
  Vector coeffs = span.colPivHouseholderQr().solve(y);
  Vector derived = span * coeffs;
  Vector rest = y - derived;
  // Only valid when the remainder is bracket-independent of itself (route
  // correctness needs [rest, rest] trivially zero; cross terms are central).
  double cost = gnorm(rest);
  CosetDistance loops;
  loops.word.push_back(rest);
  for (size_t l = 0; l < pairs.size(); ++l) {
    double c = coeffs(static_cast<int>(l));
    if (c == 0.0) continue;
    double s = std::sqrt(std::abs(c));
    Vector u = s * Vector::Unit(f.dim, pairs[l].first);
    Vector w = (c >= 0.0 ? s : -s) * Vector::Unit(f.dim, pairs[l].second);
    cost += 2.0 * (gnorm(u) + gnorm(w));
    loops.word.push_back(u);
    loops.word.push_back(w);
    loops.word.push_back(-u);
    loops.word.push_back(-w);
  }
  loops.value = cost;
  loops.exact = false;
  if (loops.value < straight.value) return loops;
  straight.exact = false;
  return straight;
}

namespace {

double coset_distance_at(const SolTypeGroup& g, const SplittingData& split, int factor,
                         const Vector& h, double alpha_value) {
  return nil_coset_distance(g, split, factor, h, alpha_value).value;
}

double solve_half_space_threshold(const SolTypeGroup& g, const SplittingData& split, int factor,
                                  const Vector& h) {
  auto d = [&](double hh) { return coset_distance_at(g, split, factor, h, hh); };
  // Bracket: expand up until the distance stays below 1 on a trailing window,
  // down until clearly above 1.
  double hi = std::max(1.0, std::log(std::max(1.0, h.cwiseAbs().maxCoeff()))) + 2.0;
  for (int guard = 0; guard < 200; ++guard) {
    bool ok = true;
    for (int i = 0; i <= 40; ++i)
      if (d(hi + 0.5 * i) >= 0.75) {
        ok = false;
        break;
      }
    if (ok) break;
    hi += 10.0;
  }
  double lo = hi;
  while (d(lo) <= 2.0 && lo > -1e6) lo -= 5.0;
  return last_crossing([&](double x) { return d(x) - 1.0; }, lo, hi, 8192, 1e-10);
}

}  // namespace

HalfSpaceSet half_spaces(const GroupElement& p, const GroupElement& q, const SolTypeGroup& g,
                         const SplittingData& split) {
  GroupElement rel = to_split_coords(multiply(inverse(p, g), q, g), g, split);
  GradientField grads = root_gradients(g, split);

  HalfSpaceSet out;
  out.displacement = rel;
  for (int i = 0; i < g.num_factors(); ++i) {
    HalfSpace hs;
    hs.root = g.factors[i].root;
    hs.gradient = grads.gradients[i];
    hs.magnitude = grads.magnitudes[i];
    if (rel.nil[i].cwiseAbs().maxCoeff() == 0.0) {
      hs.finite = false;  // threshold -inf, half-space is everything
    } else {
      hs.finite = true;
      hs.alpha_threshold = solve_half_space_threshold(g, split, i, rel.nil[i]);
      hs.height_threshold = hs.alpha_threshold / hs.magnitude;
    }
    out.spaces.push_back(hs);
  }
  return out;
}

bool is_hsv(const std::vector<Vector>& base_polyline, const HalfSpaceSet& hs, int* violator) {
  for (size_t i = 0; i < hs.spaces.size(); ++i) {
    const HalfSpace& s = hs.spaces[i];
    if (!s.finite) continue;
    double best = -1e300;
    for (const auto& v : base_polyline) best = std::max(best, s.alpha_of(v));
    if (best < s.alpha_threshold - kHsvSlack) {
      if (violator) *violator = static_cast<int>(i);
      return false;
    }
  }
  return true;
}

bool is_hsv(const PiecewisePath& path, const HalfSpaceSet& hs, int* violator) {
  return is_hsv(path.base_polyline(), hs, violator);
}

// ---------------------------------------------------------------------------
// rho
// ---------------------------------------------------------------------------

namespace {

struct TouchProblem {
  // Everything in Euclidean coordinates y = L^T v of the base metric.
  Vector start;
  Vector goal;
  std::vector<Vector> normals;     // alpha_i in y-coordinates, one per visit in order
  std::vector<double> thresholds;  // required alpha-values
};

double polyline_length(const Vector& a, const std::vector<Vector>& xs, const Vector& b) {
  double len = 0.0;
  const Vector* prev = &a;
  for (const auto& x : xs) {
    len += (x - *prev).norm();
    prev = &x;
  }
  len += (b - *prev).norm();
  return len;
}

// Exact single-point solve: min |x-u| + |w-x| subject to n.x >= c.
Vector touch_point(const Vector& u, const Vector& w, const Vector& n, double c) {
  double nu = n.dot(u), nw = n.dot(w);
  if (nu >= c) return u;
  if (nw >= c) {
    // Segment crosses the boundary; the crossing adds no length.
    double t = (c - nu) / (nw - nu);
    return u + t * (w - u);
  }
  // Both below: reflect w across the hyperplane, cut the segment.
  double n2 = n.squaredNorm();
  Vector wr = w + (2.0 * (c - nw) / n2) * n;
  double denom = n.dot(wr - u);
  if (std::abs(denom) < 1e-300) return u + (c - nu) / n2 * n;
  double t = (c - nu) / denom;
  t = std::clamp(t, 0.0, 1.0);
  return u + t * (wr - u);
}

// Alternating exact sweeps on the convex touching problem.
std::vector<Vector> solve_touch_problem(const TouchProblem& tp, int sweeps, double tol) {
  const int m = static_cast<int>(tp.normals.size());
  std::vector<Vector> xs;
  xs.reserve(m);
  for (int j = 0; j < m; ++j) {
    double t = static_cast<double>(j + 1) / (m + 1);
    Vector x = (1.0 - t) * tp.start + t * tp.goal;
    xs.push_back(touch_point(x, x, tp.normals[j], tp.thresholds[j]));
  }
  double prev_len = polyline_length(tp.start, xs, tp.goal);
  for (int s = 0; s < sweeps; ++s) {
    for (int j = 0; j < m; ++j) {
      const Vector& u = (j == 0) ? tp.start : xs[j - 1];
      const Vector& w = (j == m - 1) ? tp.goal : xs[j + 1];
      xs[j] = touch_point(u, w, tp.normals[j], tp.thresholds[j]);
    }
    double len = polyline_length(tp.start, xs, tp.goal);
    if (std::abs(prev_len - len) <= tol * std::max(1.0, len)) break;
    prev_len = len;
  }
  return xs;
}

}  // namespace

RhoResult rho(const GroupElement& p, const GroupElement& q, const SolTypeGroup& g,
              const SplittingData& split, const RhoOptions& opts) {
  HalfSpaceSet hs = half_spaces(p, q, g, split);
  const GroupElement& rel = hs.displacement;
  const int k = g.rank;

  std::vector<int> active;
  for (int i = 0; i < g.num_factors(); ++i)
    if (hs.spaces[i].finite) active.push_back(i);
  const int m = static_cast<int>(active.size());

  // Visiting constraints: computed thresholds, possibly overridden. When a
  // threshold is lowered, keep the unrelaxed depth as an explicit candidate so
  // relaxation can only shorten the result.
  std::vector<double> effective(g.num_factors()), relax_slack(g.num_factors(), 0.0);
  for (int i = 0; i < g.num_factors(); ++i) {
    effective[i] = hs.spaces[i].alpha_threshold;
    if (i < static_cast<int>(opts.alpha_threshold_override.size()) &&
        std::isfinite(opts.alpha_threshold_override[i])) {
      effective[i] = opts.alpha_threshold_override[i];
      relax_slack[i] = std::max(0.0, hs.spaces[i].alpha_threshold - effective[i]);
    }
  }

  // Euclidean coordinates for the base metric.
  Vector y0 = Vector::Zero(k);
  Vector y1 = split.to_euclidean(rel.base);
  std::vector<Vector> normals_all(g.num_factors());
  for (int i = 0; i < g.num_factors(); ++i)
    normals_all[i] = split.base_gram_chol_inv * g.factors[i].root;

  // Jump cost for factor i given the polyline's max alpha_i value.
  auto jump_cost = [&](int i, double alpha_max) {
    return nil_coset_distance(g, split, i, rel.nil[i], alpha_max);
  };

  struct Candidate {
    double total = 1e300;
    std::vector<Vector> xs;
    std::vector<int> ordering;
  };

  auto evaluate = [&](const std::vector<int>& ordering, const std::vector<double>& overshoot,
                      Candidate& cand) {
    TouchProblem tp;
    tp.start = y0;
    tp.goal = y1;
    for (size_t j = 0; j < ordering.size(); ++j) {
      int f = ordering[j];
      tp.normals.push_back(normals_all[f]);
      tp.thresholds.push_back(effective[f] + overshoot[j]);
    }
    std::vector<Vector> xs = solve_touch_problem(tp, opts.convex_sweeps, opts.tol);
    double base_len = polyline_length(y0, xs, y1);
    double jumps = 0.0;
    for (int i : active) {
      double amax = std::max(normals_all[i].dot(y0), normals_all[i].dot(y1));
      for (const auto& x : xs) amax = std::max(amax, normals_all[i].dot(x));
      jumps += jump_cost(i, amax).value;
    }
    double total = base_len + jumps;
    if (total < cand.total) {
      cand.total = total;
      cand.xs = xs;
      cand.ordering = ordering;
    }
    return total;
  };

  Candidate best;
  if (m == 0) {
    best.total = (y1 - y0).norm();
    best.xs.clear();
    best.ordering.clear();
  } else {
    std::vector<std::vector<int>> orderings;
    if (m <= opts.max_exhaustive_factors) {
      std::vector<int> perm = active;
      std::sort(perm.begin(), perm.end());
      do {
        orderings.push_back(perm);
      } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
      // Nearest-boundary greedy from the start point.
      std::vector<int> remaining = active, order;
      Vector cur = y0;
      while (!remaining.empty()) {
        int pick = 0;
        double best_gap = 1e300;
        for (size_t r = 0; r < remaining.size(); ++r) {
          int f = remaining[r];
          double gap = (hs.spaces[f].alpha_threshold - normals_all[f].dot(cur)) /
                       normals_all[f].norm();
          if (gap < best_gap) {
            best_gap = gap;
            pick = static_cast<int>(r);
          }
        }
        order.push_back(remaining[pick]);
        remaining.erase(remaining.begin() + pick);
      }
      orderings.push_back(order);
    }

    // Coordinate descent over per-visit overshoot depths; jump costs can make
    // a slightly deeper touch cheaper overall. Descents with an additive
    // offset replay the unrelaxed search exactly, so lowering a threshold
    // never increases the minimum.
    static const double kDepthGrid[] = {0.0, 0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0,
                                        1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0};
    auto descend = [&](const std::vector<int>& ordering,
                       const std::vector<double>& offsets) -> Candidate {
      Candidate cand;
      std::vector<double> overshoot = offsets;
      evaluate(ordering, overshoot, cand);
      if (!opts.deepening_polish) return cand;
      for (int sweep = 0; sweep < 4; ++sweep) {
        bool improved = false;
        for (size_t j = 0; j < ordering.size(); ++j) {
          double best_s = overshoot[j];
          double best_total = cand.total;
          for (double depth : kDepthGrid) {
            std::vector<double> trial = overshoot;
            trial[j] = offsets[j] + depth;
            Candidate tmp;
            double tot = evaluate(ordering, trial, tmp);
            if (tot < best_total - 1e-12) {
              best_total = tot;
              best_s = trial[j];
            }
          }
          if (best_s != overshoot[j]) {
            overshoot[j] = best_s;
            improved = true;
          }
        }
        if (!improved) break;
      }
      evaluate(ordering, overshoot, cand);
      return cand;
    };

    for (const auto& ordering : orderings) {
      std::vector<double> zeros(ordering.size(), 0.0);
      Candidate cand = descend(ordering, zeros);
      std::vector<double> slack(ordering.size());
      bool any_slack = false;
      for (size_t j = 0; j < ordering.size(); ++j) {
        slack[j] = relax_slack[ordering[j]];
        any_slack = any_slack || slack[j] > 0.0;
      }
      if (any_slack) {
        Candidate shadow = descend(ordering, slack);
        if (shadow.total < cand.total) cand = shadow;
      }
      if (cand.total < best.total) best = cand;
    }
  }

  // Assemble the box path: vertices in base coordinates, jumps at max-alpha vertices.
  RhoResult out;
  out.half_spaces = hs;
  out.ordering = best.ordering;

  std::vector<Vector> vertices;
  vertices.push_back(rel.base * 0.0);
  for (const auto& x : best.xs) vertices.push_back(split.from_euclidean(x));
  vertices.push_back(rel.base);

  BoxPath box;
  box.start = p;
  box.base_vertices = vertices;
  box.base_length = 0.0;
  for (size_t j = 0; j + 1 < vertices.size(); ++j)
    box.base_length += split.base_norm(vertices[j + 1] - vertices[j]);

  for (int i : active) {
    BoxJump jump;
    jump.factor = i;
    double amax = -1e300;
    int arg = 0;
    for (size_t j = 0; j < vertices.size(); ++j) {
      double a = hs.spaces[i].alpha_of(vertices[j]);
      if (a > amax + 1e-15) {
        amax = a;
        arg = static_cast<int>(j);
      }
    }
    jump.vertex_index = arg;
    jump.alpha_value = amax;
    CosetDistance cd = jump_cost(i, amax);
    jump.cost = cd.value;
    jump.word = cd.word;
    jump.increment = g.factors[i].flow(-amax) * rel.nil[i];
    if (!cd.exact) out.upper_bound_only = true;
    box.jump_cost += jump.cost;
    box.jumps.push_back(jump);
  }
  std::stable_sort(box.jumps.begin(), box.jumps.end(),
                   [](const BoxJump& a, const BoxJump& b) { return a.vertex_index < b.vertex_index; });

  out.path = box;
  out.length = box.length();
  return out;
}

PiecewisePath materialize_box_path(const BoxPath& box, const SolTypeGroup& g,
                                   const SplittingData& split, int nodes_per_segment) {
  const bool trivial_lift = split.lift_map.cwiseAbs().maxCoeff() == 0.0;

  // Walk the vertices in splitting coordinates relative to the start: base
  // moves freeze the nil coordinates (tangent to lifted-base cosets), jumps
  // execute factor words. Conjugation by the section is flow(alpha) plus a
  // drift correction for non-abelian factors with a nontrivial lift.
  auto conj_by_section = [&](int factor, const Vector& u, const Vector& v) {
    const NilpotentFactor& f = g.factors[factor];
    Vector flowed = f.flow(g.root_value(factor, v)) * u;
    if (trivial_lift || f.abelian()) return flowed;
    Vector drift = lift_drift(g, split, factor, v);
    return f.bch(drift, f.bch(flowed, Vector(-drift)));
  };

  std::vector<GroupElement> rel_nodes;
  GroupElement state = GroupElement::identity(g);
  state.base = box.base_vertices.front();
  rel_nodes.push_back(state);
  size_t jump_idx = 0;
  for (size_t v = 0; v < box.base_vertices.size(); ++v) {
    if (v > 0) {
      for (int s = 1; s <= nodes_per_segment; ++s) {
        double t = static_cast<double>(s) / nodes_per_segment;
        GroupElement n = state;
        n.base = (1.0 - t) * box.base_vertices[v - 1] + t * box.base_vertices[v];
        rel_nodes.push_back(n);
      }
      state.base = box.base_vertices[v];
    }
    while (jump_idx < box.jumps.size() &&
           box.jumps[jump_idx].vertex_index == static_cast<int>(v)) {
      const BoxJump& j = box.jumps[jump_idx];
      const NilpotentFactor& f = g.factors[j.factor];
      std::vector<Vector> word = j.word;
      if (word.empty()) word.push_back(j.increment);
      for (const Vector& u : word) {
        if (u.cwiseAbs().maxCoeff() == 0.0) continue;
        Vector h0 = state.nil[j.factor];
        int samples = f.abelian() ? nodes_per_segment : std::max(nodes_per_segment, 16);
        for (int s = 1; s <= samples; ++s) {
          double t = static_cast<double>(s) / samples;
          GroupElement n = state;
          n.nil[j.factor] = f.bch(h0, conj_by_section(j.factor, t * u, state.base));
          rel_nodes.push_back(n);
        }
        state.nil[j.factor] = f.bch(h0, conj_by_section(j.factor, u, state.base));
      }
      ++jump_idx;
    }
  }

  // Convert each relative node to product coordinates and left-translate by
  // the start element.
  PiecewisePath out;
  out.nodes.reserve(rel_nodes.size());
  for (const auto& rn : rel_nodes) {
    GroupElement rel_std = rn;
    if (!trivial_lift) {
      for (int i = 0; i < g.num_factors(); ++i) {
        Vector drift = lift_drift(g, split, i, rn.base);
        rel_std.nil[i] = g.factors[i].bch(rn.nil[i], drift);
      }
    }
    out.nodes.push_back(multiply(box.start, rel_std, g));
  }
  return out;
}

}  // namespace solgeo
