#include "solgeo/io.hpp"

#include <fstream>
#include <sstream>

#include "solgeo/error.hpp"

namespace solgeo {

namespace {

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  int rows = static_cast<int>(j.size());
  int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  return m;
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const Json& j) {
  Vector v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

Json curve_to_json(const PiecewiseCurve& c) {
  Json out;
  out["params"] = Json::array();
  for (double t : c.params) out["params"].push_back(t);
  out["values"] = Json::array();
  for (const auto& v : c.values) out["values"].push_back(vector_to_json(v));
  return out;
}

PiecewiseCurve curve_from_json(const Json& j) {
  PiecewiseCurve c;
  for (const auto& t : j.at("params")) c.params.push_back(t.get<double>());
  for (const auto& v : j.at("values")) c.values.push_back(vector_from_json(v));
  return c;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::BadInput, "cannot open for writing: " + path.string());
  out << content;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::BadInput, "cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Json group_to_json(const SolTypeGroup& g) {
  Json j;
  j["rank"] = g.rank;
  j["factors"] = Json::array();
  for (const auto& f : g.factors) {
    Json jf;
    jf["dim"] = f.dim;
    Json derivation = Json::array();
    for (int r = 0; r < f.dim; ++r)
      for (int c = 0; c < f.dim; ++c) derivation.push_back(f.derivation(r, c));
    jf["derivation"] = derivation;
    jf["root"] = vector_to_json(f.root);
    if (!f.abelian()) {
      Json triples = Json::array();
      for (int k = 0; k < f.dim; ++k) {
        for (int a = 0; a < f.dim; ++a) {
          for (int b = a + 1; b < f.dim; ++b) {
            double v = f.bracket_forms[k](a, b);
            if (v != 0.0) {
              Json t;
              t["i"] = a;
              t["j"] = b;
              t["k"] = k;
              t["c"] = v;
              triples.push_back(t);
            }
          }
        }
      }
      jf["structure_constants"] = triples;
    }
    j["factors"].push_back(jf);
  }
  return j;
}

SolTypeGroup group_from_json(const Json& j) {
  SolTypeGroup g;
  g.rank = j.at("rank").get<int>();
  for (const auto& jf : j.at("factors")) {
    NilpotentFactor f;
    f.dim = jf.at("dim").get<int>();
    const auto& d = jf.at("derivation");
    if (static_cast<int>(d.size()) != f.dim * f.dim)
      throw Error(ErrorCode::BadInput, "derivation must be a row-major dim*dim array");
    f.derivation = Matrix(f.dim, f.dim);
    for (int r = 0; r < f.dim; ++r)
      for (int c = 0; c < f.dim; ++c) f.derivation(r, c) = d[r * f.dim + c].get<double>();
    f.root = vector_from_json(jf.at("root"));
    if (jf.contains("structure_constants")) {
      f.bracket_forms.assign(f.dim, Matrix::Zero(f.dim, f.dim));
      for (const auto& t : jf.at("structure_constants")) {
        int a = t.at("i").get<int>();
        int b = t.at("j").get<int>();
        int k = t.at("k").get<int>();
        double v = t.at("c").get<double>();
        f.bracket_forms[k](a, b) = v;
        f.bracket_forms[k](b, a) = -v;
      }
    }
    g.factors.push_back(f);
  }
  return g;
}

void save_group(const SolTypeGroup& g, const std::filesystem::path& path) {
  write_text(path, group_to_json(g).dump(2) + "\n");
}

SolTypeGroup load_group(const std::filesystem::path& path) {
  return group_from_json(Json::parse(read_text(path)));
}

Json metric_to_json(const SplitMetric& m) {
  Json j;
  j["dim"] = static_cast<int>(m.gram.rows());
  Json gram = Json::array();
  for (int r = 0; r < m.gram.rows(); ++r)
    for (int c = 0; c < m.gram.cols(); ++c) gram.push_back(m.gram(r, c));
  j["gram"] = gram;
  return j;
}

SplitMetric metric_from_json(const SolTypeGroup& g, const Json& j) {
  int dim = j.at("dim").get<int>();
  if (dim != g.total_dim())
    throw Error(ErrorCode::BadInput, "metric dimension does not match the group");
  const auto& gram = j.at("gram");
  if (static_cast<int>(gram.size()) != dim * dim)
    throw Error(ErrorCode::BadInput, "gram must be a row-major dim*dim array");
  Matrix m(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) m(r, c) = gram[r * dim + c].get<double>();
  return SplitMetric::from_gram(g, m);
}

void save_metric(const SplitMetric& m, const std::filesystem::path& path) {
  write_text(path, metric_to_json(m).dump(2) + "\n");
}

SplitMetric load_metric(const SolTypeGroup& g, const std::filesystem::path& path) {
  return metric_from_json(g, Json::parse(read_text(path)));
}

Json element_to_json(const GroupElement& e) {
  Json j;
  j["nil"] = Json::array();
  for (const auto& h : e.nil) j["nil"].push_back(vector_to_json(h));
  j["base"] = vector_to_json(e.base);
  return j;
}

GroupElement element_from_json(const SolTypeGroup& g, const Json& j) {
  GroupElement e;
  for (const auto& h : j.at("nil")) e.nil.push_back(vector_from_json(h));
  e.base = vector_from_json(j.at("base"));
  if (static_cast<int>(e.nil.size()) != g.num_factors() || e.base.size() != g.rank)
    throw Error(ErrorCode::BadInput, "element shape does not match the group");
  for (int i = 0; i < g.num_factors(); ++i)
    if (e.nil[i].size() != g.factors[i].dim)
      throw Error(ErrorCode::BadInput, "element factor dimension mismatch");
  if (!e.finite()) throw Error(ErrorCode::BadInput, "element has non-finite coordinates");
  return e;
}

Json qi_to_json(const ProductQI& qi) {
  Json j;
  j["translation"] = element_to_json(qi.translation);
  j["factor_maps"] = Json::array();
  for (size_t i = 0; i < qi.factor_matrices.size(); ++i) {
    Json fm;
    fm["matrix"] = matrix_to_json(qi.factor_matrices[i]);
    fm["offset"] = vector_to_json(qi.factor_offsets[i]);
    j["factor_maps"].push_back(fm);
  }
  Json sigma;
  sigma["permutation"] = qi.permutation;
  sigma["base_matrix"] = matrix_to_json(qi.base_matrix);
  j["sigma"] = sigma;
  j["declared_k"] = qi.declared_k;
  j["declared_c"] = qi.declared_c;
  return j;
}

ProductQI qi_from_json(const SolTypeGroup& g, const Json& j) {
  ProductQI qi;
  qi.translation = element_from_json(g, j.at("translation"));
  for (const auto& fm : j.at("factor_maps")) {
    qi.factor_matrices.push_back(matrix_from_json(fm.at("matrix")));
    qi.factor_offsets.push_back(vector_from_json(fm.at("offset")));
  }
  qi.permutation = j.at("sigma").at("permutation").get<std::vector<int>>();
  qi.base_matrix = matrix_from_json(j.at("sigma").at("base_matrix"));
  if (j.contains("declared_k")) qi.declared_k = j.at("declared_k").get<double>();
  if (j.contains("declared_c")) qi.declared_c = j.at("declared_c").get<double>();
  return validate_qi(g, qi);
}

void save_qi(const ProductQI& qi, const std::filesystem::path& path) {
  write_text(path, qi_to_json(qi).dump(2) + "\n");
}

ProductQI load_qi(const SolTypeGroup& g, const std::filesystem::path& path) {
  return qi_from_json(g, Json::parse(read_text(path)));
}

Json box_path_to_json(const BoxPath& b) {
  Json j;
  j["start"] = element_to_json(b.start);
  Json segs = Json::array();
  for (size_t v = 0; v + 1 < b.base_vertices.size(); ++v) {
    size_t jump_at = v + 1;
    Json seg;
    seg["type"] = "base";
    seg["from"] = vector_to_json(b.base_vertices[v]);
    seg["to"] = vector_to_json(b.base_vertices[v + 1]);
    segs.push_back(seg);
    for (const auto& jump : b.jumps) {
      if (jump.vertex_index == static_cast<int>(jump_at)) {
        Json js;
        js["type"] = "nil_jump";
        js["factor"] = jump.factor;
        js["at"] = vector_to_json(b.base_vertices[jump_at]);
        js["increment"] = vector_to_json(jump.increment);
        js["cost"] = jump.cost;
        segs.push_back(js);
      }
    }
  }
  for (const auto& jump : b.jumps) {
    if (jump.vertex_index == 0) {
      Json js;
      js["type"] = "nil_jump";
      js["factor"] = jump.factor;
      js["at"] = vector_to_json(b.base_vertices[0]);
      js["increment"] = vector_to_json(jump.increment);
      js["cost"] = jump.cost;
      segs.insert(segs.begin(), js);
    }
  }
  j["segments"] = segs;
  j["base_length"] = b.base_length;
  j["jump_cost"] = b.jump_cost;
  j["length"] = b.length();
  return j;
}

namespace {

Json jump_to_json(const BoxJump& j) {
  Json out;
  out["factor"] = j.factor;
  out["vertex_index"] = j.vertex_index;
  out["alpha_value"] = j.alpha_value;
  out["increment"] = vector_to_json(j.increment);
  out["cost"] = j.cost;
  Json word = Json::array();
  for (const auto& w : j.word) word.push_back(vector_to_json(w));
  out["word"] = word;
  return out;
}

BoxJump jump_from_json(const Json& j) {
  BoxJump out;
  out.factor = j.at("factor").get<int>();
  out.vertex_index = j.at("vertex_index").get<int>();
  out.alpha_value = j.at("alpha_value").get<double>();
  out.increment = vector_from_json(j.at("increment"));
  out.cost = j.at("cost").get<double>();
  for (const auto& w : j.at("word")) out.word.push_back(vector_from_json(w));
  return out;
}

}  // namespace

Json audit_to_json(const AuditTrail& t) {
  Json j;
  j["constants"] = {{"epsilon", t.constants.epsilon}, {"N", t.constants.big_n},
                    {"r", t.constants.r},             {"K", t.constants.k_bound},
                    {"L1", t.constants.l1},           {"C", t.constants.cert.c},
                    {"T", t.constants.cert.t},        {"a", t.constants.cert.a}};
  j["host"] = curve_to_json(t.host);
  j["loops"] = Json::array();
  for (const auto& l : t.loops) {
    Json jl;
    jl["location"] = l.location;
    jl["loop_length"] = l.loop_length;
    jl["loop"] = curve_to_json(l.loop);
    j["loops"].push_back(jl);
  }
  j["picks"] = Json::array();
  for (const auto& p : t.picks) {
    Json jp;
    jp["c"] = p.c;
    jp["d"] = p.d;
    jp["peak_value"] = p.peak_value;
    jp["replacement"] = curve_to_json(p.replacement);
    j["picks"].push_back(jp);
  }
  j["result"] = curve_to_json(t.result);
  j["jumps"] = Json::array();
  for (const auto& jj : t.jumps) j["jumps"].push_back(jump_to_json(jj));
  j["input_length"] = t.input_length;
  j["output_length"] = t.output_length;

  Json records = Json::array();
  for (const auto& r : t.far_records) {
    Json jr;
    jr["factor"] = r.factor;
    jr["deficit"] = r.deficit;
    jr["slice_index"] = r.slice_index;
    jr["retention"] = r.retention;
    jr["mass_required"] = r.mass_required;
    jr["mass_measured"] = r.mass_measured;
    jr["nil_required"] = r.nil_required;
    jr["nil_measured"] = r.nil_measured;
    jr["r_lemma"] = r.r_lemma;
    jr["perp_required"] = r.perp_required;
    jr["perp_measured"] = r.perp_measured;
    jr["c_rough"] = r.c_rough;
    jr["tent_case"] = r.tent_case;
    jr["carve_survivors"] = r.carve_survivors;
    records.push_back(jr);
  }
  j["far_records"] = records;
  Json loops_rec = Json::array();
  for (const auto& r : t.loop_records) {
    Json jr;
    jr["factor"] = r.factor;
    jr["deficit"] = r.deficit;
    jr["location"] = r.location;
    loops_rec.push_back(jr);
  }
  j["loop_records"] = loops_rec;
  j["final_selection"] = {{"survivor_counts", t.final_selection.survivor_counts},
                          {"picked_indices", t.final_selection.picked_indices}};
  return j;
}

AuditTrail audit_from_json(const Json& j) {
  AuditTrail t;
  const auto& c = j.at("constants");
  t.constants.epsilon = c.at("epsilon").get<double>();
  t.constants.big_n = c.at("N").get<double>();
  t.constants.r = c.at("r").get<double>();
  t.constants.k_bound = c.at("K").get<double>();
  t.constants.l1 = c.at("L1").get<double>();
  t.constants.cert.c = c.at("C").get<double>();
  t.constants.cert.t = c.at("T").get<double>();
  t.constants.cert.a = c.at("a").get<double>();
  t.host = curve_from_json(j.at("host"));
  for (const auto& jl : j.at("loops")) {
    LoopSurgery l;
    l.location = jl.at("location").get<double>();
    l.loop_length = jl.at("loop_length").get<double>();
    l.loop = curve_from_json(jl.at("loop"));
    t.loops.push_back(l);
  }
  for (const auto& jp : j.at("picks")) {
    PathSurgery p;
    p.c = jp.at("c").get<double>();
    p.d = jp.at("d").get<double>();
    p.peak_value = jp.at("peak_value").get<double>();
    p.replacement = curve_from_json(jp.at("replacement"));
    t.picks.push_back(p);
  }
  t.result = curve_from_json(j.at("result"));
  for (const auto& jj : j.at("jumps")) t.jumps.push_back(jump_from_json(jj));
  t.input_length = j.at("input_length").get<double>();
  t.output_length = j.at("output_length").get<double>();
  return t;
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvWriter::add_row(const std::vector<std::string>& cells) { rows_.push_back(cells); }

void CsvWriter::add_row(const std::vector<double>& cells) {
  std::vector<std::string> out;
  out.reserve(cells.size());
  for (double d : cells) out.push_back(format_double(d));
  rows_.push_back(out);
}

std::string CsvWriter::str() const {
  std::ostringstream os;
  for (size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
  os << "\n";
  for (const auto& row : rows_) {
    for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
  return os.str();
}

std::string svg_scatter(const std::string& title, const std::string& x_label,
                        const std::string& y_label, const std::vector<SvgSeries>& series) {
  const int width = 640, height = 480, margin = 56;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      xmin = std::min(xmin, p.first);
      xmax = std::max(xmax, p.first);
      ymin = std::min(ymin, p.second);
      ymax = std::max(ymax, p.second);
    }
  }
  if (xmin > xmax) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
  auto px = [&](double x) {
    return margin + (x - xmin) / (xmax - xmin) * (width - 2 * margin);
  };
  auto py = [&](double y) {
    return height - margin - (y - ymin) / (ymax - ymin) * (height - 2 * margin);
  };
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << title << "</text>\n";
  // Axes.
  os << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
     << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
     << height - margin << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
     << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";
  os << "<text x=\"14\" y=\"" << height / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
     << "transform=\"rotate(-90 14 " << height / 2 << ")\">" << y_label << "</text>\n";
  os << "<text x=\"" << margin << "\" y=\"" << height - margin + 16
     << "\" font-size=\"10\">" << fmt(xmin) << "</text>\n";
  os << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 16
     << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(xmax) << "</text>\n";
  os << "<text x=\"" << margin - 4 << "\" y=\"" << height - margin
     << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(ymin) << "</text>\n";
  os << "<text x=\"" << margin - 4 << "\" y=\"" << margin + 4
     << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(ymax) << "</text>\n";

  int legend_y = margin + 4;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      os << "<circle cx=\"" << fmt(px(p.first)) << "\" cy=\"" << fmt(py(p.second))
         << "\" r=\"2.5\" fill=\"" << s.color << "\" fill-opacity=\"0.7\"/>\n";
    }
    if (s.fit_line && s.points.size() >= 2) {
      std::vector<double> xs, ys;
      for (const auto& p : s.points) {
        xs.push_back(p.first);
        ys.push_back(p.second);
      }
      double sx = 0, sy = 0;
      for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
      }
      double mx = sx / xs.size(), my = sy / ys.size();
      double num = 0, den = 0;
      for (size_t i = 0; i < xs.size(); ++i) {
        num += (xs[i] - mx) * (ys[i] - my);
        den += (xs[i] - mx) * (xs[i] - mx);
      }
      double slope = den > 0 ? num / den : 0.0;
      double y0 = my + slope * (xmin - mx);
      double y1 = my + slope * (xmax - mx);
      os << "<line x1=\"" << fmt(px(xmin)) << "\" y1=\"" << fmt(py(y0)) << "\" x2=\""
         << fmt(px(xmax)) << "\" y2=\"" << fmt(py(y1)) << "\" stroke=\"" << s.color
         << "\" stroke-dasharray=\"4 3\"/>\n";
    }
    os << "<text x=\"" << width - margin - 4 << "\" y=\"" << legend_y
       << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << s.color << "\">" << s.label
       << "</text>\n";
    legend_y += 14;
  }
  os << "</svg>\n";
  return os.str();
}

std::string emit_file(const std::filesystem::path& dir, const std::string& command,
                      std::uint64_t seed, const std::string& stem, const std::string& ext,
                      const std::string& content) {
  std::filesystem::create_directories(dir);
  std::ostringstream name;
  name << command << "_s" << seed;
  if (!stem.empty()) name << "_" << stem;
  name << "_" << fnv1a_hex(content) << "." << ext;
  write_text(dir / name.str(), content);
  return name.str();
}

}  // namespace solgeo
