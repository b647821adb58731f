#include "solgeo/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "solgeo/error.hpp"

namespace solgeo {

namespace {

double double_factorial(int m) {
  if (m <= 0) return 1.0;  // (-1)!! = 0!! = 1
  double p = 1.0;
  for (int v = m; v >= 1; v -= 2) p *= v;
  return p;
}

}  // namespace

ConditionCheck check_conditions(const PipelineConstants& pc, int num_factors, double r_prime) {
  const int n = num_factors;
  const double c = pc.cert.c, a = pc.cert.a;
  const double ratio = double_factorial(2 * n - 3) / double_factorial(2 * n - 2);
  const double c_prime = n * (2.0 * r_prime + 1.0);

  ConditionCheck out;
  out.r_prime = r_prime;
  out.lhs1 = c * std::pow(a, r_prime) / pc.big_n * ratio;
  out.rhs1 = std::sqrt(2.0) * c_prime;
  out.ok1 = out.lhs1 >= out.rhs1;

  out.lhs2 = c * c * std::pow(a, 2.0 * r_prime);
  out.rhs2 = (1.0 / (ratio * ratio)) * 4.0 * c_prime * pc.big_n * pc.big_n * pc.l1 * pc.l1 *
             (32.0 * n * n * r_prime * r_prime * (n * n + 1.0) + c_prime + (n + 1.0) * r_prime);
  out.ok2 = out.lhs2 >= out.rhs2;

  // Condition (3): (a(1-eps))^{2(j-1)r'} >= j^2 for all j >= 1; checked to
  // j = 64 with a dominance argument beyond.
  const double b = a * (1.0 - pc.epsilon);
  out.ok3 = b > 1.0;
  for (int j = 1; j <= 64 && out.ok3; ++j) {
    if (2.0 * (j - 1) * r_prime * std::log(b) < 2.0 * std::log(static_cast<double>(j)))
      out.ok3 = false;
  }
  if (out.ok3 && 64.0 < 1.0 / (r_prime * std::log(b))) out.ok3 = false;
  return out;
}

PipelineConstants compute_constants(const SolTypeGroup& g, const SplittingData& split,
                                    const DistortionCertificate& cert) {
  PipelineConstants pc;
  pc.cert = cert;
  pc.l1 = nil_projection_constant(g, split);
  if (cert.a <= 1.0 + 1e-12)
    throw Error(ErrorCode::NoValidConstants, "certificate growth base must exceed 1");

  // Largest eps in the descending scan with a(1 - eps) > 1.
  static const double kEps[] = {0.5,   0.25,   0.1,   0.05,   0.025,
                                0.01,  0.005,  0.0025, 0.001, 0.0005};
  bool found = false;
  for (double e : kEps) {
    if (cert.a * (1.0 - e) > 1.0) {
      pc.epsilon = e;
      found = true;
      break;
    }
  }
  if (!found) throw Error(ErrorCode::NoValidConstants, "no epsilon with a(1-eps) > 1");
  pc.big_n = 1.0 / pc.epsilon;

  const double base = std::max(1.0, cert.t);
  const int n = g.num_factors();
  bool ok = false;
  for (int k = 0; k <= 48; ++k) {
    double r = base * std::pow(2.0, k);
    ConditionCheck cc = check_conditions(pc, n, r);
    // The three conditions must hold for every r' >= r; the left sides grow
    // exponentially and the right sides polynomially, so checking a geometric
    // ladder plus the ratio monotonicity suffices.
    bool beyond = cc.all_ok();
    for (double mult : {1.5, 2.0, 4.0, 8.0})
      beyond = beyond && check_conditions(pc, n, r * mult).all_ok();
    beyond = beyond && r * std::log(cert.a) >= 1.0;  // lhs/rhs ratios increasing
    if (beyond) {
      pc.r = r;
      ok = true;
      break;
    }
  }
  if (!ok) throw Error(ErrorCode::NoValidConstants, "no r satisfies the conditions");
  pc.k_bound = (n + 1.0) * (2.0 * pc.r + 1.0);
  return pc;
}

namespace {

// Heights of the base polyline along grad(alpha_i)/a_i, per node.
std::vector<double> node_heights(const PiecewisePath& path, const HalfSpace& hs) {
  std::vector<double> out;
  out.reserve(path.nodes.size());
  for (const auto& n : path.nodes) out.push_back(hs.height_of(n.base));
  return out;
}

GroupElement interpolate(const GroupElement& a, const GroupElement& b, double t) {
  GroupElement out;
  out.base = (1.0 - t) * a.base + t * b.base;
  for (size_t f = 0; f < a.nil.size(); ++f)
    out.nil.push_back((1.0 - t) * a.nil[f] + t * b.nil[f]);
  return out;
}

// Maximal parameter intervals (node-index parameterization) where the height
// lies in [lo, hi]. Heights are piecewise linear in the parameter.
std::vector<std::pair<double, double>> band_intervals(const std::vector<double>& h, double lo,
                                                      double hi) {
  std::vector<std::pair<double, double>> out;
  const double tol = 1e-12;
  auto inside = [&](double v) { return v >= lo - tol && v <= hi + tol; };
  const int m = static_cast<int>(h.size());
  double start = -1.0;
  bool open = false;
  for (int i = 0; i + 1 < m; ++i) {
    double a = h[i], b = h[i + 1];
    // Entry/exit points of [lo, hi] on the segment [i, i+1].
    double t0 = 0.0, t1 = 1.0;
    if (std::abs(b - a) > 0.0) {
      double tlo = (lo - a) / (b - a);
      double thi = (hi - a) / (b - a);
      double u0 = std::min(tlo, thi), u1 = std::max(tlo, thi);
      t0 = std::max(0.0, u0);
      t1 = std::min(1.0, u1);
    } else if (!inside(a)) {
      t0 = 1.0;
      t1 = 0.0;
    }
    bool seg_has = t0 <= t1 && inside(a + (b - a) * std::clamp(0.5 * (t0 + t1), 0.0, 1.0));
    if (seg_has) {
      double pa = i + t0, pb = i + t1;
      if (!open) {
        start = pa;
        open = true;
      }
      if (t1 < 1.0 - 1e-15) {
        out.emplace_back(start, pb);
        open = false;
      }
    } else if (open) {
      out.emplace_back(start, static_cast<double>(i));
      open = false;
    }
  }
  if (open) out.emplace_back(start, static_cast<double>(m - 1));
  // Merge touching intervals.
  std::vector<std::pair<double, double>> merged;
  for (const auto& iv : out) {
    if (!merged.empty() && iv.first <= merged.back().second + 1e-12)
      merged.back().second = std::max(merged.back().second, iv.second);
    else
      merged.push_back(iv);
  }
  return merged;
}

// L-mass of the parameter set: additive integral form, nil-i coordinate
// derivative transported to the half-space height (exact per segment for the
// reference flow; certified upper bound for step-2 factors).
double l_mass(const PiecewisePath& path, const SolTypeGroup& g, const SplittingData& split,
              int factor, double alpha_ref,
              const std::vector<std::pair<double, double>>& intervals) {
  const NilpotentFactor& f = g.factors[factor];
  const int off = g.nil_offset(factor);
  Matrix gram = split.nil_gram.block(off, off, f.dim, f.dim);
  Matrix ref_flow = f.flow(-alpha_ref);
  double total = 0.0;
  for (const auto& iv : intervals) {
    int i0 = static_cast<int>(std::floor(iv.first));
    int i1 = static_cast<int>(std::ceil(iv.second));
    for (int i = i0; i < i1 && i + 1 < path.num_nodes(); ++i) {
      double lo = std::max(iv.first, static_cast<double>(i));
      double hi = std::min(iv.second, static_cast<double>(i + 1));
      if (hi <= lo) continue;
      Vector dh = path.nodes[i + 1].nil[factor] - path.nodes[i].nil[factor];
      Vector y = ref_flow * dh;
      total += std::sqrt(std::max(0.0, y.dot(gram * y))) * (hi - lo);
    }
  }
  return total;
}

// g-length of the nil-i derivative component over the parameter set (midpoint
// rule on each clipped segment).
double nil_length_over(const PiecewisePath& path, const SolTypeGroup& g,
                       const SplittingData& split, int factor,
                       const std::vector<std::pair<double, double>>& intervals) {
  double total = 0.0;
  for (const auto& iv : intervals) {
    int i0 = static_cast<int>(std::floor(iv.first));
    int i1 = static_cast<int>(std::ceil(iv.second));
    for (int i = i0; i < i1 && i + 1 < path.num_nodes(); ++i) {
      double lo = std::max(iv.first, static_cast<double>(i));
      double hi = std::min(iv.second, static_cast<double>(i + 1));
      if (hi <= lo) continue;
      GroupElement a = interpolate(path.nodes[i], path.nodes[i + 1], lo - i);
      GroupElement b = interpolate(path.nodes[i], path.nodes[i + 1], hi - i);
      PiecewisePath seg;
      seg.nodes = {a, b};
      total += nil_component_length(seg, g, split, factor);
    }
  }
  return total;
}

// Euclidean perpendicular (to the unit direction) arclength of the base
// projection over the parameter set.
double perp_length_over(const PiecewiseCurve& host, const Vector& unit,
                        const std::vector<std::pair<double, double>>& intervals) {
  double total = 0.0;
  for (const auto& iv : intervals) {
    int i0 = static_cast<int>(std::floor(iv.first));
    int i1 = static_cast<int>(std::ceil(iv.second));
    for (int i = i0; i < i1 && i + 1 < host.num_nodes(); ++i) {
      double lo = std::max(iv.first, static_cast<double>(i));
      double hi = std::min(iv.second, static_cast<double>(i + 1));
      if (hi <= lo) continue;
      Vector d = host.values[i + 1] - host.values[i];
      total += (d - d.dot(unit) * unit).norm() * (hi - lo);
    }
  }
  return total;
}

std::vector<std::pair<double, double>> subtract_intervals(
    std::vector<std::pair<double, double>> base,
    const std::vector<std::pair<double, double>>& cuts) {
  for (const auto& cut : cuts) {
    std::vector<std::pair<double, double>> next;
    for (const auto& iv : base) {
      if (cut.second <= iv.first || cut.first >= iv.second) {
        next.push_back(iv);
        continue;
      }
      if (cut.first > iv.first) next.emplace_back(iv.first, std::max(iv.first, cut.first));
      if (cut.second < iv.second) next.emplace_back(std::min(iv.second, cut.second), iv.second);
    }
    base = std::move(next);
  }
  return base;
}

}  // namespace

SliceDecomposition slice_curve(const PiecewisePath& gamma_rel, const HalfSpaceSet& hs,
                               const PipelineConstants& pc, int factor, const SolTypeGroup& g,
                               const SplittingData& split) {
  const HalfSpace& space = hs.spaces[factor];
  if (!space.finite) throw Error(ErrorCode::BadInput, "slice_curve needs a finite half-space");

  std::vector<double> heights = node_heights(gamma_rel, space);
  double max_h = *std::max_element(heights.begin(), heights.end());
  double min_h = *std::min_element(heights.begin(), heights.end());
  double deficit = space.height_threshold - max_h;
  if (deficit <= pc.r)
    throw Error(ErrorCode::BadInput, "slice_curve expects a factor missed by more than r");

  SliceDecomposition out;
  out.factor = factor;
  out.deficit = deficit;

  const double h_thr = space.height_threshold;
  for (int j = 1;; ++j) {
    double top = h_thr - j * deficit;
    double bottom = h_thr - (j + 1) * deficit;
    auto intervals = band_intervals(heights, bottom, top);
    double mass =
        l_mass(gamma_rel, g, split, factor, space.alpha_threshold, intervals);
    out.masses.push_back(mass);
    double required = std::pow(1.0 - pc.epsilon, (j - 1) * deficit) / pc.big_n;
    if (mass >= required) {
      out.slice_index = j;
      out.band_top = top;
      out.band_bottom = bottom;
      out.intervals = intervals;
      out.mass_required = required;
      out.mass_measured = mass;
      return out;
    }
    if (bottom < min_h - deficit) break;  // below the whole curve
  }
  throw Error(ErrorCode::NoQualifyingSlice,
              "no slice meets the geometric-series mass share (input not near-geodesic "
              "or sampling too coarse)");
}

namespace {

std::string format_failure(const std::string& inequality, double measured, double required) {
  std::ostringstream os;
  os << "CertificationFailure: " << inequality << " (measured " << format_double(measured)
     << ", required " << format_double(required) << ")";
  return os.str();
}

}  // namespace

HsvOutcome make_hsv(const PiecewisePath& gamma, const GroupElement& p, const GroupElement& q,
                    const SolTypeGroup& g, const SplittingData& split,
                    const PipelineConstants& pc) {
  HsvOutcome out;
  AuditTrail& trail = out.audit;
  trail.constants = pc;

  if (gamma.num_nodes() < 2) throw Error(ErrorCode::EmptyPath, "need a path with segments");
  if (element_distance(gamma.nodes.front(), p) > 1e-6 ||
      element_distance(gamma.nodes.back(), q) > 1e-6)
    throw Error(ErrorCode::BadInput, "path endpoints do not match the pair");

  const int n = g.num_factors();

  // Relative frame.
  GroupElement p_inv = inverse(p, g);
  PiecewisePath rel = gamma.left_translated(p_inv, g);
  for (auto& node : rel.nodes) node = to_split_coords(node, g, split);
  HalfSpaceSet hs = half_spaces(p, q, g, split);

  trail.input_length = path_length_raw(gamma, g, split);

  // Host curve: base projection in Euclidean coordinates, node-index params.
  PiecewiseCurve host;
  for (int i = 0; i < rel.num_nodes(); ++i) {
    host.params.push_back(static_cast<double>(i));
    host.values.push_back(split.to_euclidean(rel.nodes[i].base));
  }
  trail.host = host;

  // Unit directions and deficits per factor.
  std::vector<Vector> units(n);
  std::vector<double> deficits(n, 0.0);
  std::vector<double> max_alpha_param(n, 0.0);
  for (int i = 0; i < n; ++i) {
    Vector nv = split.base_gram_chol_inv * g.factors[i].root;
    units[i] = nv / nv.norm();
    double best = -1e300;
    int arg = 0;
    for (int v = 0; v < host.num_nodes(); ++v) {
      double a = nv.dot(host.values[v]);
      if (a > best + 1e-15) {
        best = a;
        arg = v;
      }
    }
    max_alpha_param[i] = static_cast<double>(arg);
    if (hs.spaces[i].finite)
      deficits[i] = hs.spaces[i].height_threshold - hs.spaces[i].height_of(
                        split.from_euclidean(host.values[arg]));
  }

  // Loop surgeries for factors missed by at most r (possibly degenerate).
  std::vector<LoopSurgery> loops;
  std::vector<int> far_factors;
  for (int i = 0; i < n; ++i) {
    if (!hs.spaces[i].finite) continue;
    if (deficits[i] > pc.r) {
      far_factors.push_back(i);
      continue;
    }
    LoopRecord lr;
    lr.factor = i;
    lr.deficit = std::max(0.0, deficits[i]);
    lr.location = max_alpha_param[i];
    trail.loop_records.push_back(lr);
    if (deficits[i] > 0.0) {
      LoopSurgery loop;
      loop.location = max_alpha_param[i];
      loop.loop_length = 2.0 * deficits[i];
      Vector at = host.values[static_cast<int>(max_alpha_param[i])];
      loop.loop.params = {0.0, deficits[i], 2.0 * deficits[i]};
      loop.loop.values = {at, at + deficits[i] * units[i], at};
      loops.push_back(loop);
    }
  }
  std::sort(far_factors.begin(), far_factors.end(),
            [&](int a, int b) { return deficits[a] > deficits[b]; });

  // Per-factor surgery families via slicing and the distortion bound.
  std::vector<SurgeryFamily> families;
  const double fact_ratio = double_factorial(2 * n - 3) / double_factorial(2 * n - 2);
  for (size_t step = 0; step < far_factors.size(); ++step) {
    const int factor = far_factors[step];
    const HalfSpace& space = hs.spaces[factor];
    FarFactorRecord rec;
    rec.factor = factor;
    rec.deficit = deficits[factor];
    rec.c_rough = n * (2.0 * deficits[factor] + 1.0);
    rec.conditions = check_conditions(pc, n, deficits[factor]);
    if (!rec.conditions.all_ok()) {
      out.failure = format_failure("pipeline conditions at r' = r_i", deficits[factor], pc.r);
      trail.far_records.push_back(rec);
      return out;
    }

    SliceDecomposition slice;
    try {
      slice = slice_curve(rel, hs, pc, factor, g, split);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoQualifyingSlice) throw;
      out.failure = std::string("CertificationFailure: ") + e.what();
      trail.far_records.push_back(rec);
      return out;
    }
    rec.slice_index = slice.slice_index;
    rec.mass_required = slice.mass_required;
    rec.mass_measured = slice.mass_measured;

    // Carve out earlier families' options, choosing options that cover the
    // least mass of the current slice.
    std::vector<std::pair<double, double>> carved = slice.intervals;
    double retention = 1.0;
    if (step > 0) {
      std::vector<SurgeryFamily> prior(families.begin(), families.begin() + step);
      SelectionAudit carve_audit;
      auto mass_of = [&](int, const PathSurgery& opt) {
        std::vector<std::pair<double, double>> clipped =
            subtract_intervals(slice.intervals, {{opt.c, opt.d}});
        return slice.mass_measured -
               l_mass(rel, g, split, factor, space.alpha_threshold, clipped);
      };
      std::vector<PathSurgery> carve;
      try {
        carve = select_simultaneous(host, loops, prior, n, &carve_audit, mass_of);
      } catch (const Error& e) {
        out.failure = std::string("CertificationFailure: carve selection: ") + e.what();
        trail.far_records.push_back(rec);
        return out;
      }
      rec.carve_survivors = carve_audit.survivor_counts;
      std::vector<std::pair<double, double>> cuts;
      for (const auto& c : carve) cuts.emplace_back(c.c, c.d);
      carved = subtract_intervals(carved, cuts);
      double remaining = l_mass(rel, g, split, factor, space.alpha_threshold, carved);
      retention = slice.mass_measured > 0.0 ? remaining / slice.mass_measured : 0.0;
      if (remaining < slice.mass_required * fact_ratio * (1.0 - 1e-9)) {
        out.failure = format_failure("mass retention after carving", remaining,
                                     slice.mass_required * fact_ratio);
        trail.far_records.push_back(rec);
        return out;
      }
    }
    rec.retention = retention;

    // Distortion lower bound on the nil-i length over the carved multicurve.
    const double r_i = deficits[factor];
    const int j_i = slice.slice_index;
    double growth = pc.cert.c * std::pow(pc.cert.a, r_i) *
                    std::pow(pc.cert.a * (1.0 - pc.epsilon), (j_i - 1) * r_i) / pc.big_n;
    rec.nil_required = growth * (step > 0 ? fact_ratio : 1.0);
    rec.nil_measured = nil_length_over(rel, g, split, factor, carved);
    if (rec.nil_measured < rec.nil_required * (1.0 - 1e-9)) {
      out.failure =
          format_failure("distortion lower bound on nil length", rec.nil_measured,
                         rec.nil_required);
      trail.far_records.push_back(rec);
      return out;
    }
    double r_cap = rec.nil_measured / pc.l1;
    if (std::sqrt(2.0) * rec.c_rough > r_cap) {
      out.failure = format_failure("sqrt(2) C' <= R applicability", r_cap,
                                   std::sqrt(2.0) * rec.c_rough);
      trail.far_records.push_back(rec);
      return out;
    }

    rec.r_lemma = (j_i + 1.0) * r_i;
    rec.perp_required = (n * n + 1.0) * 8.0 * n * n * rec.r_lemma * rec.r_lemma;
    rec.perp_measured = perp_length_over(host, units[factor], carved);
    if (rec.perp_measured < rec.perp_required * (1.0 - 1e-9)) {
      out.failure = format_failure("perpendicular arclength for the surgery family",
                                   rec.perp_measured, rec.perp_required);
      trail.far_records.push_back(rec);
      return out;
    }

    // Build the family: tent construction on a connected high window when one
    // exists, otherwise reflections of deep excursions.
    const double tent_l = 8.0 * rec.r_lemma * rec.r_lemma;  // 2 (2 r_lemma)^2
    const double level1 = space.height_threshold - rec.r_lemma;
    const double level2 = space.height_threshold - 2.0 * rec.r_lemma;
    std::vector<double> heights;
    for (const auto& y : host.values) heights.push_back(units[factor].dot(y));
    auto high_intervals = band_intervals(heights, level2, 1e300);
    bool tent_done = false;
    SurgeryFamily family;
    for (const auto& iv : high_intervals) {
      double perp = perp_length_over(host, units[factor], {iv});
      if (perp >= n * n * tent_l + 1e-12) {
        family = build_surgery_family(host, units[factor], iv.first, iv.second, tent_l, level2,
                                      n);
        tent_done = true;
        break;
      }
    }
    if (!tent_done) {
      // Reflection construction: cut >= n^2 disjoint excursions, each carrying
      // 8 n^2 r_lemma^2 of perpendicular arclength within the multicurve.
      const double quota = 8.0 * n * n * rec.r_lemma * rec.r_lemma;
      std::vector<std::pair<double, double>> cuts;
      double acc = 0.0;
      double cut_start = carved.empty() ? 0.0 : carved.front().first;
      for (const auto& iv : carved) {
        int i0 = static_cast<int>(std::floor(iv.first));
        int i1 = static_cast<int>(std::ceil(iv.second));
        for (int i = i0; i < i1 && i + 1 < host.num_nodes(); ++i) {
          double lo = std::max(iv.first, static_cast<double>(i));
          double hi = std::min(iv.second, static_cast<double>(i + 1));
          if (hi <= lo) continue;
          Vector d = host.values[i + 1] - host.values[i];
          double seg = (d - d.dot(units[factor]) * units[factor]).norm();
          while (static_cast<int>(cuts.size()) < n * n && acc + seg * (hi - lo) >= quota) {
            double t_cut = seg > 0.0 ? lo + (quota - acc) / seg : lo;
            t_cut = std::clamp(t_cut, lo, hi);
            cuts.emplace_back(cut_start, t_cut);
            cut_start = t_cut;
            lo = t_cut;
            acc = 0.0;
          }
          acc += seg * (hi - lo);
        }
      }
      if (static_cast<int>(cuts.size()) < n * n) {
        out.failure = format_failure("excursion count for reflections",
                                     static_cast<double>(cuts.size()),
                                     static_cast<double>(n * n));
        trail.far_records.push_back(rec);
        return out;
      }
      for (int c = 0; c < n * n; ++c) {
        auto [s, e] = cuts[c];
        // The excursion must dip to level2 so the reflection reaches the
        // half-space.
        PiecewiseCurve piece;
        PiecewiseCurve hostc = host;
        hostc.insert_node(s);
        hostc.insert_node(e);
        for (size_t i = 0; i < hostc.params.size(); ++i) {
          if (hostc.params[i] >= s - 1e-12 && hostc.params[i] <= e + 1e-12) {
            piece.params.push_back(hostc.params[i]);
            piece.values.push_back(hostc.values[i]);
          }
        }
        double dip = 1e300;
        for (const auto& y : piece.values) dip = std::min(dip, units[factor].dot(y));
        if (dip > level2 + 1e-9) {
          out.failure = format_failure("reflection excursion depth", dip, level2);
          trail.far_records.push_back(rec);
          return out;
        }
        PathSurgery ps;
        ps.c = s;
        ps.d = e;
        ps.replacement = reflect_below(piece, units[factor], level1);
        double peak = -1e300;
        for (const auto& y : ps.replacement.values)
          peak = std::max(peak, units[factor].dot(y));
        ps.peak_value = peak;
        family.options.push_back(std::move(ps));
      }
    }
    rec.tent_case = tent_done;
    families.push_back(std::move(family));
    trail.far_records.push_back(rec);
  }

  // Final conflict-free selection and composition.
  std::vector<PathSurgery> picks;
  if (!families.empty()) {
    try {
      picks = select_simultaneous(host, loops, families, n, &trail.final_selection);
    } catch (const Error& e) {
      out.failure = std::string("CertificationFailure: final selection: ") + e.what();
      return out;
    }
  }
  trail.loops = loops;
  trail.picks = picks;
  PiecewiseCurve result = apply_surgeries(host, loops, picks);
  trail.result = result;

  // Assemble the box path: composite base polyline plus one jump per factor at
  // its max-alpha vertex.
  BoxPath box;
  box.start = p;
  for (const auto& y : result.values) box.base_vertices.push_back(split.from_euclidean(y));
  for (size_t j = 0; j + 1 < box.base_vertices.size(); ++j)
    box.base_length += split.base_norm(box.base_vertices[j + 1] - box.base_vertices[j]);

  const GroupElement& relq = hs.displacement;
  for (int i = 0; i < n; ++i) {
    if (relq.nil[i].cwiseAbs().maxCoeff() == 0.0) continue;
    BoxJump jump;
    jump.factor = i;
    double amax = -1e300;
    int arg = 0;
    for (size_t v = 0; v < box.base_vertices.size(); ++v) {
      double a = hs.spaces[i].alpha_of(box.base_vertices[v]);
      if (a > amax + 1e-15) {
        amax = a;
        arg = static_cast<int>(v);
      }
    }
    jump.vertex_index = arg;
    jump.alpha_value = amax;
    CosetDistance cd = nil_coset_distance(g, split, i, relq.nil[i], amax);
    jump.cost = cd.value;
    jump.word = cd.word;
    jump.increment = g.factors[i].flow(-amax) * relq.nil[i];
    box.jump_cost += jump.cost;
    box.jumps.push_back(jump);
  }
  std::stable_sort(box.jumps.begin(), box.jumps.end(),
                   [](const BoxJump& a, const BoxJump& b) { return a.vertex_index < b.vertex_index; });
  trail.jumps = box.jumps;

  int violator = -1;
  if (!is_hsv(box.base_vertices, hs, &violator)) {
    std::ostringstream os;
    os << "composite curve misses half-space " << violator;
    out.failure = std::string("CertificationFailure: ") + os.str();
    return out;
  }

  trail.output_length = box.length();
  if (trail.output_length > trail.input_length + pc.k_bound + 1e-6) {
    out.failure = format_failure("output length within input + K", trail.output_length,
                                 trail.input_length + pc.k_bound);
    return out;
  }

  out.certified = true;
  out.path = box;
  return out;
}

bool replay_audit(const AuditTrail& trail) {
  PiecewiseCurve replayed = apply_surgeries(trail.host, trail.loops, trail.picks);
  if (replayed.params.size() != trail.result.params.size()) return false;
  for (size_t i = 0; i < replayed.params.size(); ++i) {
    if (replayed.params[i] != trail.result.params[i]) return false;
    if (replayed.values[i].size() != trail.result.values[i].size()) return false;
    for (int c = 0; c < replayed.values[i].size(); ++c)
      if (replayed.values[i](c) != trail.result.values[i](c)) return false;
  }
  return true;
}

}  // namespace solgeo
