#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "solgeo/metric.hpp"
#include "solgeo/pipeline.hpp"
#include "solgeo/qi.hpp"

namespace solgeo {

using Json = nlohmann::ordered_json;

// Group definition files: {rank, factors: [{dim, derivation (row-major),
// root, structure_constants (sparse triples, optional)}]}.
Json group_to_json(const SolTypeGroup& g);
SolTypeGroup group_from_json(const Json& j);
void save_group(const SolTypeGroup& g, const std::filesystem::path& path);
SolTypeGroup load_group(const std::filesystem::path& path);

// Metric files: the full Gram matrix (row-major) over (n_1, ..., n_n, e_1, ..., e_k).
Json metric_to_json(const SplitMetric& m);
SplitMetric metric_from_json(const SolTypeGroup& g, const Json& j);
void save_metric(const SplitMetric& m, const std::filesystem::path& path);
SplitMetric load_metric(const SolTypeGroup& g, const std::filesystem::path& path);

// QI files: translation coordinates, per-factor affine maps, sigma.
Json qi_to_json(const ProductQI& qi);
ProductQI qi_from_json(const SolTypeGroup& g, const Json& j);
void save_qi(const ProductQI& qi, const std::filesystem::path& path);
ProductQI load_qi(const SolTypeGroup& g, const std::filesystem::path& path);

Json element_to_json(const GroupElement& e);
GroupElement element_from_json(const SolTypeGroup& g, const Json& j);

Json box_path_to_json(const BoxPath& b);

Json audit_to_json(const AuditTrail& t);
AuditTrail audit_from_json(const Json& j);

/// CSV with a fixed header; numbers printed with round-trip precision.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns);
  void add_row(const std::vector<std::string>& cells);
  void add_row(const std::vector<double>& cells);
  std::string str() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

struct SvgSeries {
  std::string label;
  std::string color = "#1f77b4";
  std::vector<std::pair<double, double>> points;
  bool fit_line = false;
};

/// Scatter plot with optional least-squares fit lines; no external dependency.
std::string svg_scatter(const std::string& title, const std::string& x_label,
                        const std::string& y_label, const std::vector<SvgSeries>& series);

/// Writes content to <dir>/<command>_s<seed>_<stem>_<hash16>.<ext>, returns the
/// filename. The hash is FNV-1a of the content.
std::string emit_file(const std::filesystem::path& dir, const std::string& command,
                      std::uint64_t seed, const std::string& stem, const std::string& ext,
                      const std::string& content);

}  // namespace solgeo
