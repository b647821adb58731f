#include "solgeo/path.hpp"

#include <cmath>

#include "solgeo/error.hpp"

namespace solgeo {

PiecewisePath PiecewisePath::refined() const {
  PiecewisePath out;
  if (nodes.size() < 2) return *this;
  out.nodes.reserve(2 * nodes.size() - 1);
  for (size_t i = 0; i + 1 < nodes.size(); ++i) {
    const GroupElement& a = nodes[i];
    const GroupElement& b = nodes[i + 1];
    out.nodes.push_back(a);
    GroupElement mid;
    mid.base = 0.5 * (a.base + b.base);
    for (size_t f = 0; f < a.nil.size(); ++f) mid.nil.push_back(0.5 * (a.nil[f] + b.nil[f]));
    out.nodes.push_back(mid);
  }
  out.nodes.push_back(nodes.back());
  return out;
}

PiecewisePath PiecewisePath::left_translated(const GroupElement& x, const SolTypeGroup& g) const {
  PiecewisePath out;
  out.nodes.reserve(nodes.size());
  for (const auto& n : nodes) out.nodes.push_back(multiply(x, n, g));
  return out;
}

std::vector<Vector> PiecewisePath::base_polyline() const {
  std::vector<Vector> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(n.base);
  return out;
}

namespace {

// Left log-derivative of the coordinate-linear segment at its midpoint:
// nil part  e^{-alpha_i(v) D_i}(hdot_i - [h, hdot]_i / 2) per factor,
// base part vdot; measured against blkdiag(nil_gram, base_gram) after
// subtracting the graph-lift contribution of vdot.
void segment_log_derivative(const GroupElement& a, const GroupElement& b, const SolTypeGroup& g,
                            const SplittingData& split, Vector& nil_part, Vector& base_part) {
  base_part = b.base - a.base;
  Vector v_mid = 0.5 * (a.base + b.base);
  nil_part.resize(g.nil_dim());
  for (int i = 0; i < g.num_factors(); ++i) {
    const NilpotentFactor& f = g.factors[i];
    Vector hdot = b.nil[i] - a.nil[i];
    if (!f.abelian()) {
      Vector h_mid = 0.5 * (a.nil[i] + b.nil[i]);
      hdot -= 0.5 * f.bracket(h_mid, hdot);
    }
    nil_part.segment(g.nil_offset(i), f.dim) = f.flow(-g.root_value(i, v_mid)) * hdot;
  }
  if (split.lift_map.cwiseAbs().maxCoeff() != 0.0) nil_part -= split.lift_map * base_part;
}

}  // namespace

double segment_speed(const GroupElement& a, const GroupElement& b, const SolTypeGroup& g,
                     const SplittingData& split) {
  Vector nil_part, base_part;
  segment_log_derivative(a, b, g, split, nil_part, base_part);
  double nil_sq = nil_part.dot(split.nil_gram * nil_part);
  double base_sq = base_part.dot(split.base_gram * base_part);
  return std::sqrt(nil_sq + base_sq);
}

double path_length_raw(const PiecewisePath& path, const SolTypeGroup& g,
                       const SplittingData& split) {
  if (path.empty()) throw Error(ErrorCode::EmptyPath, "path has no nodes");
  double len = 0.0;
  for (size_t i = 0; i + 1 < path.nodes.size(); ++i)
    len += segment_speed(path.nodes[i], path.nodes[i + 1], g, split);
  return len;
}

double path_length(const PiecewisePath& path, const SolTypeGroup& g, const SplittingData& split) {
  if (path.empty()) throw Error(ErrorCode::EmptyPath, "path has no nodes");
  PiecewisePath cur = path;
  double len = path_length_raw(cur, g, split);
  for (int level = 0; level < 12; ++level) {
    PiecewisePath next = cur.refined();
    double next_len = path_length_raw(next, g, split);
    double denom = std::max(next_len, 1e-300);
    if (std::abs(next_len - len) / denom < 1e-3) return next_len;
    cur = std::move(next);
    len = next_len;
  }
  return len;
}

double base_projection_length(const PiecewisePath& path, const SplittingData& split) {
  if (path.empty()) throw Error(ErrorCode::EmptyPath, "path has no nodes");
  double len = 0.0;
  for (size_t i = 0; i + 1 < path.nodes.size(); ++i)
    len += split.base_norm(path.nodes[i + 1].base - path.nodes[i].base);
  return len;
}

double nil_component_length(const PiecewisePath& path, const SolTypeGroup& g,
                            const SplittingData& split, int factor) {
  if (path.empty()) throw Error(ErrorCode::EmptyPath, "path has no nodes");
  const NilpotentFactor& f = g.factors[factor];
  const int off = g.nil_offset(factor);
  Matrix block = split.nil_gram.block(off, off, f.dim, f.dim);
  double len = 0.0;
  for (size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    Vector nil_part, base_part;
    segment_log_derivative(path.nodes[i], path.nodes[i + 1], g, split, nil_part, base_part);
    Vector u = nil_part.segment(off, f.dim);
    len += std::sqrt(u.dot(block * u));
  }
  return len;
}

PiecewisePath straight_path(const GroupElement& a, const GroupElement& b, int segments) {
  PiecewisePath out;
  for (int s = 0; s <= segments; ++s) {
    double t = static_cast<double>(s) / segments;
    GroupElement n;
    n.base = (1.0 - t) * a.base + t * b.base;
    for (size_t f = 0; f < a.nil.size(); ++f)
      n.nil.push_back((1.0 - t) * a.nil[f] + t * b.nil[f]);
    out.nodes.push_back(n);
  }
  return out;
}

}  // namespace solgeo
