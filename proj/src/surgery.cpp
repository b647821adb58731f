#include "solgeo/surgery.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "solgeo/error.hpp"

namespace solgeo {

namespace {
constexpr double kNodeTol = 1e-12;
}

double PiecewiseCurve::length() const {
  double len = 0.0;
  for (size_t i = 0; i + 1 < values.size(); ++i) len += (values[i + 1] - values[i]).norm();
  return len;
}

Vector PiecewiseCurve::at(double t) const {
  if (t <= params.front()) return values.front();
  if (t >= params.back()) return values.back();
  auto it = std::upper_bound(params.begin(), params.end(), t);
  size_t hi = static_cast<size_t>(it - params.begin());
  size_t lo = hi - 1;
  double span = params[hi] - params[lo];
  double u = span > 0.0 ? (t - params[lo]) / span : 0.0;
  return (1.0 - u) * values[lo] + u * values[hi];
}

void PiecewiseCurve::insert_node(double t) {
  if (t < params.front() - kNodeTol || t > params.back() + kNodeTol)
    throw Error(ErrorCode::BadInput, "node parameter outside curve domain");
  auto it = std::lower_bound(params.begin(), params.end(), t - kNodeTol);
  if (it != params.end() && std::abs(*it - t) <= kNodeTol) return;
  size_t pos = static_cast<size_t>(it - params.begin());
  Vector v = at(t);
  params.insert(params.begin() + pos, t);
  values.insert(values.begin() + pos, v);
}

PiecewiseCurve PiecewiseCurve::line(const Vector& a, const Vector& b, int segments, double t0,
                                    double t1) {
  PiecewiseCurve c;
  for (int s = 0; s <= segments; ++s) {
    double u = static_cast<double>(s) / segments;
    c.params.push_back(t0 + u * (t1 - t0));
    c.values.push_back((1.0 - u) * a + u * b);
  }
  return c;
}

std::pair<double, double> directional_arclengths(const PiecewiseCurve& curve, const Vector& v) {
  if (std::abs(v.norm() - 1.0) > 1e-9)
    throw Error(ErrorCode::BadInput, "direction must be a unit vector");
  double along = 0.0, perp = 0.0;
  for (size_t i = 0; i + 1 < curve.values.size(); ++i) {
    Vector d = curve.values[i + 1] - curve.values[i];
    double a = d.dot(v);
    along += std::abs(a);
    perp += (d - a * v).norm();
  }
  return {along, perp};
}

PiecewiseCurve reflect_below(const PiecewiseCurve& curve, const Vector& v, double level) {
  PiecewiseCurve out = curve;
  // Insert exact crossing nodes so each segment stays on one side.
  std::vector<double> crossings;
  for (size_t i = 0; i + 1 < curve.values.size(); ++i) {
    double a = curve.values[i].dot(v) - level;
    double b = curve.values[i + 1].dot(v) - level;
    if ((a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)) {
      double u = a / (a - b);
      crossings.push_back(curve.params[i] + u * (curve.params[i + 1] - curve.params[i]));
    }
  }
  for (double t : crossings) out.insert_node(t);
  for (auto& x : out.values) {
    double h = x.dot(v);
    x += (level + std::abs(level - h) - h) * v;
  }
  return out;
}

std::vector<std::pair<double, double>> SurgeryFamily::interstices() const {
  std::vector<std::pair<double, double>> out;
  for (size_t i = 0; i + 1 < options.size(); ++i)
    out.emplace_back(options[i].d, options[i + 1].c);
  return out;
}

PiecewiseCurve apply_surgeries(const PiecewiseCurve& host, const std::vector<LoopSurgery>& loops,
                               const std::vector<PathSurgery>& picks) {
  // Validate disjointness and loop-location avoidance.
  std::vector<const PathSurgery*> sorted;
  for (const auto& p : picks) sorted.push_back(&p);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const PathSurgery* a, const PathSurgery* b) { return a->c < b->c; });
  for (size_t i = 0; i + 1 < sorted.size(); ++i) {
    if (sorted[i + 1]->c < sorted[i]->d - kNodeTol) {
      std::ostringstream os;
      os << "pick intervals (" << sorted[i]->c << ", " << sorted[i]->d << ") and ("
         << sorted[i + 1]->c << ", " << sorted[i + 1]->d << ") overlap";
      throw Error(ErrorCode::ConflictingSurgeries, os.str());
    }
  }
  for (size_t li = 0; li < loops.size(); ++li) {
    for (size_t pi = 0; pi < sorted.size(); ++pi) {
      if (loops[li].location > sorted[pi]->c + kNodeTol &&
          loops[li].location < sorted[pi]->d - kNodeTol) {
        std::ostringstream os;
        os << "loop " << li << " at " << loops[li].location << " lies inside pick interval "
           << pi;
        throw Error(ErrorCode::ConflictingSurgeries, os.str());
      }
    }
  }
  for (const auto* p : sorted) {
    if ((p->replacement.values.front() - host.at(p->c)).norm() > 1e-9 ||
        (p->replacement.values.back() - host.at(p->d)).norm() > 1e-9)
      throw Error(ErrorCode::BadInput, "replacement does not match host at its endpoints");
  }
  for (const auto& l : loops) {
    if ((l.loop.values.front() - host.at(l.location)).norm() > 1e-9 ||
        (l.loop.values.back() - host.at(l.location)).norm() > 1e-9)
      throw Error(ErrorCode::BadInput, "loop does not close at the host value");
  }

  // Prepare the host with nodes at all event parameters.
  PiecewiseCurve base = host;
  for (const auto* p : sorted) {
    base.insert_node(p->c);
    base.insert_node(p->d);
  }
  for (const auto& l : loops) base.insert_node(l.location);

  // Loop indices ordered by location, stable in the given order.
  std::vector<size_t> loop_order(loops.size());
  for (size_t i = 0; i < loops.size(); ++i) loop_order[i] = i;
  std::stable_sort(loop_order.begin(), loop_order.end(), [&](size_t a, size_t b) {
    return loops[a].location < loops[b].location;
  });

  PiecewiseCurve out;
  double shift = 0.0;
  size_t loop_cursor = 0;
  size_t pick_cursor = 0;

  auto emit = [&](double t, const Vector& x) {
    if (!out.params.empty() && t <= out.params.back() + kNodeTol) return;
    out.params.push_back(t);
    out.values.push_back(x);
  };

  for (size_t i = 0; i < base.params.size(); ++i) {
    double t = base.params[i];
    // Skip host nodes strictly inside a pick interval; splice the replacement.
    if (pick_cursor < sorted.size() && t > sorted[pick_cursor]->c + kNodeTol &&
        t < sorted[pick_cursor]->d - kNodeTol)
      continue;
    if (pick_cursor < sorted.size() && std::abs(t - sorted[pick_cursor]->d) <= kNodeTol) {
      const auto& rep = sorted[pick_cursor]->replacement;
      for (size_t r = 0; r < rep.params.size(); ++r) emit(rep.params[r] + shift, rep.values[r]);
      ++pick_cursor;
    }
    emit(t + shift, base.values[i]);
    // Loops at this location, in the given order.
    while (loop_cursor < loop_order.size() &&
           std::abs(loops[loop_order[loop_cursor]].location - t) <= kNodeTol) {
      const LoopSurgery& l = loops[loop_order[loop_cursor]];
      if (l.loop_length > 0.0) {
        for (size_t r = 0; r < l.loop.params.size(); ++r)
          emit(t + shift + l.loop.params[r], l.loop.values[r]);
        shift += l.loop_length;
        emit(t + shift, base.values[i]);
      }
      ++loop_cursor;
    }
  }
  return out;
}

namespace {

bool intervals_meet(double c1, double d1, double c2, double d2) {
  return c1 < d2 - kNodeTol && c2 < d1 - kNodeTol;
}

}  // namespace

std::vector<PathSurgery> select_simultaneous(
    const PiecewiseCurve& host, const std::vector<LoopSurgery>& loops,
    const std::vector<SurgeryFamily>& families, int n, SelectionAudit* audit,
    const std::function<double(int step, const PathSurgery&)>& score) {
  (void)host;
  const int m1 = static_cast<int>(loops.size());
  const int m2 = static_cast<int>(families.size());
  if (m1 + m2 > n) {
    std::ostringstream os;
    os << "m1 + m2 = " << (m1 + m2) << " exceeds n = " << n;
    throw Error(ErrorCode::SelectionImpossible, os.str());
  }
  for (int f = 0; f < m2; ++f) {
    if (families[f].num_options() < n * n) {
      std::ostringstream os;
      os << "family " << f << " has " << families[f].num_options() << " options, needs "
         << n * n;
      throw Error(ErrorCode::SelectionImpossible, os.str());
    }
  }

  // Working copies trimmed to exactly (n - step)^2 options, per the counting.
  std::vector<std::vector<PathSurgery>> pool(m2);
  for (int f = 0; f < m2; ++f) {
    pool[f].assign(families[f].options.begin(), families[f].options.begin() + n * n);
  }

  std::vector<PathSurgery> picked;
  std::vector<std::pair<double, double>> picked_intervals;

  for (int step = 0; step < m2; ++step) {
    const int n_cur = n - step;
    std::vector<int> survivors;
    for (size_t o = 0; o < pool[step].size(); ++o) {
      const PathSurgery& opt = pool[step][o];
      bool ok = true;
      for (const auto& l : loops) {
        if (l.location > opt.c + kNodeTol && l.location < opt.d - kNodeTol) {
          ok = false;
          break;
        }
      }
      for (const auto& iv : picked_intervals) {
        if (!ok) break;
        if (intervals_meet(opt.c, opt.d, iv.first, iv.second)) ok = false;
      }
      for (int later = step + 1; later < m2 && ok; ++later) {
        int meets = 0;
        for (const auto& other : pool[later])
          if (intervals_meet(opt.c, opt.d, other.c, other.d)) ++meets;
        if (meets >= 2 * (n_cur - 1) + 1) ok = false;
      }
      if (ok) survivors.push_back(static_cast<int>(o));
    }
    if (audit) audit->survivor_counts.push_back(static_cast<int>(survivors.size()));
    if (survivors.empty()) {
      std::ostringstream os;
      os << "no surviving option for family " << step;
      throw Error(ErrorCode::SelectionImpossible, os.str());
    }
    if (static_cast<int>(survivors.size()) < 2 * (n_cur - 1)) {
      std::ostringstream os;
      os << "survivor count " << survivors.size() << " below guarantee " << 2 * (n_cur - 1)
         << " at step " << step;
      throw Error(ErrorCode::SelectionImpossible, os.str());
    }

    int chosen = survivors.front();
    if (score) {
      double best = score(step, pool[step][chosen]);
      for (int s : survivors) {
        double v = score(step, pool[step][s]);
        if (v < best - 1e-15) {
          best = v;
          chosen = s;
        }
      }
    }
    const PathSurgery& pick = pool[step][chosen];
    if (audit) audit->picked_indices.push_back(chosen);
    picked.push_back(pick);
    picked_intervals.emplace_back(pick.c, pick.d);

    // Later families: drop options meeting the pick, then trim to (n_cur-1)^2.
    for (int later = step + 1; later < m2; ++later) {
      std::vector<PathSurgery> keep;
      for (const auto& other : pool[later])
        if (!intervals_meet(pick.c, pick.d, other.c, other.d)) keep.push_back(other);
      int quota = (n_cur - 1) * (n_cur - 1);
      if (static_cast<int>(keep.size()) > quota) keep.resize(quota);
      pool[later] = std::move(keep);
    }
  }
  return picked;
}

SurgeryFamily build_surgery_family(const PiecewiseCurve& curve, const Vector& v, double a,
                                   double b, double big_l, double d, int n) {
  if (std::abs(v.norm() - 1.0) > 1e-9)
    throw Error(ErrorCode::BadInput, "direction must be a unit vector");
  if (a < curve.param_start() - kNodeTol || b > curve.param_end() + kNodeTol || a >= b)
    throw Error(ErrorCode::BadInput, "window outside curve domain");

  PiecewiseCurve host = curve;
  host.insert_node(a);
  host.insert_node(b);

  // Window node range.
  size_t ia = 0, ib = 0;
  for (size_t i = 0; i < host.params.size(); ++i) {
    if (std::abs(host.params[i] - a) <= kNodeTol) ia = i;
    if (std::abs(host.params[i] - b) <= kNodeTol) ib = i;
  }

  double min_height = 1e300;
  double perp_total = 0.0;
  for (size_t i = ia; i <= ib; ++i) {
    min_height = std::min(min_height, host.values[i].dot(v));
    if (i < ib) {
      Vector dseg = host.values[i + 1] - host.values[i];
      perp_total += (dseg - dseg.dot(v) * v).norm();
    }
  }
  const int options = n * n;
  if (min_height < d - 1e-9) {
    std::ostringstream os;
    os << "v-coordinate drops to " << format_double(min_height) << " below d = "
       << format_double(d) << " on the window";
    throw Error(ErrorCode::InsufficientPerpendicularLength, os.str());
  }
  if (perp_total < options * big_l - 1e-9) {
    std::ostringstream os;
    os << "perpendicular arclength " << format_double(perp_total) << " below required "
       << format_double(options * big_l);
    throw Error(ErrorCode::InsufficientPerpendicularLength, os.str());
  }

  const double peak = d + std::sqrt(big_l / 2.0);

  // Breakpoints t_i: smallest parameter with perpendicular arclength i*L.
  std::vector<double> breakpoints;
  breakpoints.push_back(a);
  {
    double acc = 0.0;
    int next = 1;
    for (size_t i = ia; i < ib && next <= options; ++i) {
      Vector dseg = host.values[i + 1] - host.values[i];
      double seg = (dseg - dseg.dot(v) * v).norm();
      while (next <= options && acc + seg >= next * big_l - 1e-15) {
        double u = seg > 0.0 ? (next * big_l - acc) / seg : 0.0;
        u = std::clamp(u, 0.0, 1.0);
        breakpoints.push_back(host.params[i] + u * (host.params[i + 1] - host.params[i]));
        ++next;
      }
      acc += seg;
    }
    while (static_cast<int>(breakpoints.size()) <= options) breakpoints.push_back(b);
  }

  SurgeryFamily family;
  for (int o = 0; o < options; ++o) {
    double t0 = breakpoints[o];
    double t1 = breakpoints[o + 1];
    PiecewiseCurve window = host;
    window.insert_node(t0);
    window.insert_node(t1);
    size_t w0 = 0, w1 = 0;
    for (size_t i = 0; i < window.params.size(); ++i) {
      if (std::abs(window.params[i] - t0) <= kNodeTol) w0 = i;
      if (std::abs(window.params[i] - t1) <= kNodeTol) w1 = i;
    }

    double window_max = -1e300;
    for (size_t i = w0; i <= w1; ++i)
      window_max = std::max(window_max, window.values[i].dot(v));

    PathSurgery ps;
    ps.c = t0;
    ps.d = t1;
    if (window_max >= peak - 1e-12) {
      // Already high enough; keep the host as the option.
      PiecewiseCurve rep;
      for (size_t i = w0; i <= w1; ++i) {
        rep.params.push_back(window.params[i]);
        rep.values.push_back(window.values[i]);
      }
      ps.replacement = rep;
      ps.peak_value = window_max;
    } else {
      // Tent in perpendicular arclength: up to the peak at sigma = L/2, down to
      // the host's end value at sigma = L.
      double f0 = window.values[w0].dot(v);
      double f1 = window.values[w1].dot(v);
      // Cumulative perpendicular arclength per node; insert the mid node.
      std::vector<double> sig(w1 - w0 + 1, 0.0);
      for (size_t i = w0; i < w1; ++i) {
        Vector dseg = window.values[i + 1] - window.values[i];
        sig[i - w0 + 1] = sig[i - w0] + (dseg - dseg.dot(v) * v).norm();
      }
      double total = sig.back();
      double half = 0.5 * total;
      // Smallest parameter reaching half the perpendicular arclength.
      double t_mid = t1;
      for (size_t i = w0; i < w1; ++i) {
        double s0 = sig[i - w0], s1 = sig[i - w0 + 1];
        if (s1 >= half - 1e-15) {
          double u = (s1 > s0) ? (half - s0) / (s1 - s0) : 0.0;
          u = std::clamp(u, 0.0, 1.0);
          t_mid = window.params[i] + u * (window.params[i + 1] - window.params[i]);
          break;
        }
      }
      PiecewiseCurve wcopy = window;
      wcopy.insert_node(t_mid);
      size_t c0 = 0, c1 = 0;
      for (size_t i = 0; i < wcopy.params.size(); ++i) {
        if (std::abs(wcopy.params[i] - t0) <= kNodeTol) c0 = i;
        if (std::abs(wcopy.params[i] - t1) <= kNodeTol) c1 = i;
      }
      PiecewiseCurve rep;
      double acc = 0.0;
      for (size_t i = c0; i <= c1; ++i) {
        if (i > c0) {
          Vector dseg = wcopy.values[i] - wcopy.values[i - 1];
          acc += (dseg - dseg.dot(v) * v).norm();
        }
        double f;
        if (total <= 0.0) {
          f = peak;  // degenerate window, tent collapses
        } else if (acc <= half) {
          double u = half > 0.0 ? acc / half : 1.0;
          f = (1.0 - u) * f0 + u * peak;
        } else {
          double u = (acc - half) / (total - half);
          f = (1.0 - u) * peak + u * f1;
        }
        Vector x = wcopy.values[i];
        x += (f - x.dot(v)) * v;
        rep.params.push_back(wcopy.params[i]);
        rep.values.push_back(x);
      }
      // Endpoint values must match the host exactly.
      rep.values.front() = window.values[w0];
      rep.values.back() = window.values[w1];
      ps.replacement = rep;
      ps.peak_value = peak;
    }
    family.options.push_back(std::move(ps));
  }
  return family;
}

}  // namespace solgeo
