#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "solgeo/error.hpp"
#include "solgeo/io.hpp"

namespace fs = std::filesystem;
using namespace solgeo;

namespace {

struct CommonArgs {
  std::string group_file;
  std::string metric_file;
  std::string metric2_file;
  std::string qi_file;
  std::string p_json;
  std::string q_json;
  std::string audit_file;
  std::string out_dir = "out";
  std::string separations = "5,10,15,20,25,30,35,40,45,50";
  int pairs = 10;
  std::uint64_t seed = 1;
  int budget = 100000;
  int threads = 1;
};

std::vector<double> parse_separations(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

struct Loaded {
  SolTypeGroup group;
  SplitMetric metric;
  SplittingData split;
};

Loaded load_inputs(const CommonArgs& args, bool need_metric = true) {
  Loaded l;
  if (args.group_file.empty()) throw Error(ErrorCode::BadInput, "--group is required");
  SolTypeGroup raw = load_group(args.group_file);
  l.group = validate(raw).group;
  if (need_metric) {
    if (args.metric_file.empty())
      l.metric = SplitMetric::identity(l.group);
    else
      l.metric = load_metric(l.group, args.metric_file);
    l.split = check_perpendicular_splitting(l.metric, l.group);
  }
  return l;
}

GroupElement parse_element(const SolTypeGroup& g, const std::string& text) {
  return element_from_json(g, Json::parse(text));
}

std::pair<GroupElement, GroupElement> resolve_pair(const Loaded& l, const CommonArgs& args) {
  if (!args.p_json.empty() && !args.q_json.empty())
    return {parse_element(l.group, args.p_json), parse_element(l.group, args.q_json)};
  // Sample one pair deterministically from the seed.
  SampleSpec spec;
  spec.seed = args.seed;
  spec.pairs_per_separation = 1;
  spec.separations = parse_separations(args.separations);
  if (spec.separations.empty()) spec.separations = {10.0};
  spec.separations = {spec.separations.back()};
  auto pairs = sample_pairs(l.group, l.split, spec);
  return {pairs[0].p, pairs[0].q};
}

Json summary_base(const std::string& command, const CommonArgs& args) {
  Json j;
  j["command"] = command;
  j["seed"] = args.seed;
  j["files"] = Json::array();
  return j;
}

void finish(const std::string& command, const CommonArgs& args, Json& summary) {
  std::string content = summary.dump(2) + "\n";
  std::string name = emit_file(args.out_dir, command, args.seed, "summary", "json", content);
  std::cout << "summary: " << (fs::path(args.out_dir) / name).string() << "\n";
}

EstimateOptions estimate_options(const CommonArgs& args) {
  EstimateOptions eo;
  eo.budget = args.budget;
  return eo;
}

int cmd_validate(const CommonArgs& args) {
  if (args.group_file.empty()) throw Error(ErrorCode::BadInput, "--group is required");
  SolTypeGroup raw = load_group(args.group_file);
  ValidationReport rep = validate(raw);
  std::cout << "group OK: rank " << rep.group.rank << ", " << rep.group.num_factors()
            << " factors\n";
  for (int i = 0; i < rep.group.num_factors(); ++i) {
    const auto& f = rep.group.factors[i];
    std::cout << "  factor " << i << ": dim " << f.dim << ", step " << f.nilpotency_step
              << ", scale " << format_double(rep.scale_applied[i]) << ", root [";
    for (int c = 0; c < f.root.size(); ++c)
      std::cout << (c ? ", " : "") << format_double(f.root(c));
    std::cout << "]\n";
  }
  for (const auto& note : rep.notes) std::cout << "  note: " << note << "\n";
  if (!args.metric_file.empty()) {
    SplitMetric m = load_metric(rep.group, args.metric_file);
    SplittingData split = check_perpendicular_splitting(m, rep.group);
    GradientField gf = root_gradients(rep.group, split);
    std::cout << "metric OK: splits perpendicularly; root gradient magnitudes:";
    for (double a : gf.magnitudes) std::cout << " " << format_double(a);
    std::cout << "\n";
  }
  return 0;
}

int cmd_halfspaces(const CommonArgs& args) {
  Loaded l = load_inputs(args);
  auto [p, q] = resolve_pair(l, args);
  HalfSpaceSet hs = half_spaces(p, q, l.group, l.split);
  CsvWriter csv({"factor", "finite", "alpha_threshold", "height_threshold", "magnitude"});
  for (size_t i = 0; i < hs.spaces.size(); ++i) {
    const auto& s = hs.spaces[i];
    csv.add_row(std::vector<double>{static_cast<double>(i), s.finite ? 1.0 : 0.0,
                                    s.finite ? s.alpha_threshold : -1e300,
                                    s.finite ? s.height_threshold : -1e300, s.magnitude});
    if (s.finite)
      std::cout << "half-space " << i << ": alpha >= " << format_double(s.alpha_threshold)
                << " (height " << format_double(s.height_threshold) << ")\n";
    else
      std::cout << "half-space " << i << ": all of R^k (trivial factor displacement)\n";
  }
  Json summary = summary_base("halfspaces", args);
  summary["files"].push_back(
      emit_file(args.out_dir, "halfspaces", args.seed, "table", "csv", csv.str()));
  finish("halfspaces", args, summary);
  return 0;
}

int cmd_rho(const CommonArgs& args) {
  Loaded l = load_inputs(args);
  auto [p, q] = resolve_pair(l, args);
  RhoResult rr = rho(p, q, l.group, l.split);
  RhoResult rr_back = rho(q, p, l.group, l.split);
  std::cout << "rho(p, q) = " << format_double(rr.length)
            << (rr.upper_bound_only ? " (upper bound: step-2 jump costs)" : "") << "\n";
  std::cout << "rho(q, p) = " << format_double(rr_back.length) << "\n";

  CsvWriter csv({"direction", "length", "base_length", "jump_cost", "num_jumps"});
  csv.add_row(std::vector<double>{0.0, rr.length, rr.path.base_length, rr.path.jump_cost,
                                  static_cast<double>(rr.path.jumps.size())});
  csv.add_row(std::vector<double>{1.0, rr_back.length, rr_back.path.base_length,
                                  rr_back.path.jump_cost,
                                  static_cast<double>(rr_back.path.jumps.size())});
  Json summary = summary_base("rho", args);
  summary["rho_pq"] = rr.length;
  summary["rho_qp"] = rr_back.length;
  summary["files"].push_back(emit_file(args.out_dir, "rho", args.seed, "table", "csv", csv.str()));
  summary["files"].push_back(emit_file(args.out_dir, "rho", args.seed, "boxpath", "json",
                                       box_path_to_json(rr.path).dump(2) + "\n"));
  finish("rho", args, summary);
  return 0;
}

int cmd_geodesic(const CommonArgs& args) {
  Loaded l = load_inputs(args);
  auto [p, q] = resolve_pair(l, args);
  DistanceEstimate est = estimate_distance(p, q, l.group, l.split, estimate_options(args));
  std::cout << "distance in [" << format_double(est.lower) << ", " << format_double(est.upper)
            << "] (" << est.method << ", " << est.final_segments << " segments, "
            << est.iterations << " iterations" << (est.budget_exceeded ? ", budget exceeded" : "")
            << ")\n";
  CsvWriter csv({"lower", "upper", "iterations", "segments", "budget_exceeded"});
  csv.add_row(std::vector<double>{est.lower, est.upper, static_cast<double>(est.iterations),
                                  static_cast<double>(est.final_segments),
                                  est.budget_exceeded ? 1.0 : 0.0});
  Json summary = summary_base("geodesic", args);
  summary["lower"] = est.lower;
  summary["upper"] = est.upper;
  summary["files"].push_back(
      emit_file(args.out_dir, "geodesic", args.seed, "table", "csv", csv.str()));
  finish("geodesic", args, summary);
  return 0;
}

int cmd_compare_metrics(const CommonArgs& args) {
  Loaded l = load_inputs(args);
  if (args.metric2_file.empty()) throw Error(ErrorCode::BadInput, "--metric2 is required");
  SplitMetric m2 = load_metric(l.group, args.metric2_file);
  SplittingData split2 = check_perpendicular_splitting(m2, l.group);

  SampleSpec spec;
  spec.seed = args.seed;
  spec.pairs_per_separation = args.pairs;
  spec.separations = parse_separations(args.separations);
  spec.threads = args.threads;
  ComparisonReport rep = compare_metrics(l.group, l.split, split2, spec, estimate_options(args));

  std::cout << "stretch factors: top " << format_double(rep.lambda_top_stretch) << ", bottom "
            << format_double(rep.lambda_bottom_stretch) << "\n";
  std::cout << "fitted C (stretch convention): upper " << format_double(rep.fitted_c_upper_stretch)
            << ", lower " << format_double(rep.fitted_c_lower_stretch) << "\n";
  std::cout << "residual slopes (stretch): upper " << format_double(rep.slope_upper_stretch)
            << ", lower " << format_double(rep.slope_lower_stretch) << "\n";
  std::cout << "residual slopes (eigenvalue): upper " << format_double(rep.slope_upper_eig)
            << ", lower " << format_double(rep.slope_lower_eig) << "\n";

  CsvWriter csv({"pair_id", "separation", "d1_lower", "d1_upper", "rho1", "d2_lower", "d2_upper",
                 "rho2", "upper_residual_stretch", "lower_residual_stretch",
                 "upper_residual_eig", "lower_residual_eig"});
  for (const auto& r : rep.rows)
    csv.add_row(std::vector<double>{static_cast<double>(r.id), r.separation, r.d1_lower,
                                    r.d1_upper, r.rho1, r.d2_lower, r.d2_upper, r.rho2,
                                    r.upper_residual_stretch, r.lower_residual_stretch,
                                    r.upper_residual_eig, r.lower_residual_eig});
  SvgSeries s1{"upper residual (stretch)", "#1f77b4", {}, true};
  SvgSeries s2{"lower residual (stretch)", "#d62728", {}, true};
  for (const auto& r : rep.rows) {
    s1.points.emplace_back(r.separation, r.upper_residual_stretch);
    s2.points.emplace_back(r.separation, r.lower_residual_stretch);
  }
  Json summary = summary_base("compare-metrics", args);
  summary["lambda_top_stretch"] = rep.lambda_top_stretch;
  summary["lambda_bottom_stretch"] = rep.lambda_bottom_stretch;
  summary["slope_upper_stretch"] = rep.slope_upper_stretch;
  summary["slope_lower_stretch"] = rep.slope_lower_stretch;
  summary["fitted_c_upper_stretch"] = rep.fitted_c_upper_stretch;
  summary["fitted_c_lower_stretch"] = rep.fitted_c_lower_stretch;
  summary["files"].push_back(
      emit_file(args.out_dir, "compare-metrics", args.seed, "pairs", "csv", csv.str()));
  summary["files"].push_back(emit_file(
      args.out_dir, "compare-metrics", args.seed, "residuals", "svg",
      svg_scatter("metric comparison residuals", "separation", "residual", {s1, s2})));
  finish("compare-metrics", args, summary);
  return 0;
}

int cmd_rho_vs_d(const CommonArgs& args) {
  Loaded l = load_inputs(args);
  SampleSpec spec;
  spec.seed = args.seed;
  spec.pairs_per_separation = args.pairs;
  spec.separations = parse_separations(args.separations);
  spec.threads = args.threads;
  RhoDistanceReport rep = rho_vs_distance(l.group, l.split, spec, estimate_options(args));
  std::cout << "rho >= lower bound on every pair: " << (rep.lower_bound_respected ? "yes" : "NO")
            << "\n";
  std::cout << "slope of (rho - d_upper) vs separation: " << format_double(rep.slope_gap_upper)
            << "\n";
  CsvWriter csv({"pair_id", "separation", "rho", "d_lower", "d_upper", "gap_upper", "gap_lower"});
  SvgSeries s1{"rho - d_upper", "#1f77b4", {}, true};
  for (const auto& r : rep.rows) {
    csv.add_row(std::vector<double>{static_cast<double>(r.id), r.separation, r.rho, r.d_lower,
                                    r.d_upper, r.gap_upper, r.gap_lower});
    s1.points.emplace_back(r.separation, r.gap_upper);
  }
  Json summary = summary_base("rho-vs-d", args);
  summary["slope_gap_upper"] = rep.slope_gap_upper;
  summary["lower_bound_respected"] = rep.lower_bound_respected;
  summary["files"].push_back(
      emit_file(args.out_dir, "rho-vs-d", args.seed, "pairs", "csv", csv.str()));
  summary["files"].push_back(emit_file(args.out_dir, "rho-vs-d", args.seed, "gap", "svg",
                                       svg_scatter("box geodesic vs distance", "separation",
                                                   "rho - d_upper", {s1})));
  finish("rho-vs-d", args, summary);
  return 0;
}

int cmd_delta(const CommonArgs& args) {
  Loaded l = load_inputs(args);
  if (args.metric2_file.empty()) throw Error(ErrorCode::BadInput, "--metric2 is required");
  SplitMetric m2 = load_metric(l.group, args.metric2_file);
  SplittingData split2 = check_perpendicular_splitting(m2, l.group);
  SampleSpec spec;
  spec.seed = args.seed;
  spec.pairs_per_separation = args.pairs;
  spec.separations = parse_separations(args.separations);
  spec.threads = args.threads;
  DeltaReport rep = delta_vs_empirical(l.group, l.split, split2, spec, estimate_options(args));
  std::cout << "Delta closed form: " << format_double(rep.delta_closed_form) << "\n";
  std::cout << "log Lambda empirical: " << format_double(rep.log_lambda_empirical) << "\n";
  std::cout << "relative discrepancy: " << format_double(rep.relative_discrepancy) << "\n";
  CsvWriter csv({"pair_id", "separation", "d1", "d2", "ratio"});
  for (const auto& r : rep.rows)
    csv.add_row(std::vector<double>{static_cast<double>(r.id), r.separation, r.d1, r.d2, r.ratio});
  Json summary = summary_base("delta", args);
  summary["delta_closed_form"] = rep.delta_closed_form;
  summary["log_lambda_empirical"] = rep.log_lambda_empirical;
  summary["relative_discrepancy"] = rep.relative_discrepancy;
  summary["files"].push_back(
      emit_file(args.out_dir, "delta", args.seed, "pairs", "csv", csv.str()));
  finish("delta", args, summary);
  return 0;
}

int cmd_qi_test(const CommonArgs& args) {
  Loaded l = load_inputs(args);
  if (args.qi_file.empty()) throw Error(ErrorCode::BadInput, "--qi is required");
  ProductQI qi = load_qi(l.group, args.qi_file);
  SampleSpec spec;
  spec.seed = args.seed;
  spec.pairs_per_separation = args.pairs;
  spec.separations = parse_separations(args.separations);
  spec.threads = args.threads;
  RoughIsometryReport rep = test_rough_isometry(qi, l.group, l.split, spec,
                                                estimate_options(args));
  bool ri = rep.verdict == RoughIsometryVerdict::kRoughIsometry;
  std::cout << "verdict: " << (ri ? "ROUGH_ISOMETRY" : "NOT_ROUGH_ISOMETRY") << "\n";
  std::cout << "overall slope: " << format_double(rep.overall_slope) << "\n";
  if (!ri && rep.witness_axis >= 0)
    std::cout << "witness: base axis e" << rep.witness_axis + 1 << " with slope "
              << format_double(rep.witness_slope) << "\n";
  CsvWriter csv({"pair_id", "separation", "axis", "d", "d_image", "difference"});
  SvgSeries s1{"|d(qi p, qi q) - d(p,q)|", "#1f77b4", {}, true};
  for (const auto& r : rep.rows) {
    csv.add_row(std::vector<double>{static_cast<double>(r.id), r.separation,
                                    static_cast<double>(r.axis), r.d, r.d_image, r.difference});
    s1.points.emplace_back(r.separation, r.difference);
  }
  Json summary = summary_base("qi-test", args);
  summary["verdict"] = ri ? "ROUGH_ISOMETRY" : "NOT_ROUGH_ISOMETRY";
  summary["overall_slope"] = rep.overall_slope;
  summary["witness_axis"] = rep.witness_axis;
  summary["witness_slope"] = rep.witness_slope;
  summary["max_relative_difference"] = rep.max_relative_difference;
  summary["files"].push_back(
      emit_file(args.out_dir, "qi-test", args.seed, "pairs", "csv", csv.str()));
  summary["files"].push_back(emit_file(args.out_dir, "qi-test", args.seed, "differences", "svg",
                                       svg_scatter("distance differences under the map",
                                                   "separation", "difference", {s1})));
  finish("qi-test", args, summary);
  return 0;
}

int cmd_surgery_demo(const CommonArgs& args) {
  Loaded l = load_inputs(args);
  auto [p, q] = resolve_pair(l, args);
  DistortionCertificate cert = uniform_certificate(l.group, l.split);
  PipelineConstants pc = compute_constants(l.group, l.split, cert);
  DistanceEstimate est;
  PiecewisePath gamma = optimize_path(p, q, l.group, l.split, estimate_options(args), &est);
  HsvOutcome outcome = make_hsv(gamma, p, q, l.group, l.split, pc);
  std::cout << "constants: eps " << format_double(pc.epsilon) << ", r " << format_double(pc.r)
            << ", K " << format_double(pc.k_bound) << "\n";
  if (outcome.certified) {
    std::cout << "certified HSV box path: length " << format_double(outcome.path.length())
              << " (input " << format_double(outcome.audit.input_length) << ", K "
              << format_double(pc.k_bound) << ")\n";
  } else {
    std::cout << outcome.failure << "\n";
  }
  Json summary = summary_base("surgery-demo", args);
  summary["certified"] = outcome.certified;
  summary["failure"] = outcome.failure;
  summary["input_length"] = outcome.audit.input_length;
  summary["output_length"] = outcome.audit.output_length;
  summary["files"].push_back(emit_file(args.out_dir, "surgery-demo", args.seed, "audit", "json",
                                       audit_to_json(outcome.audit).dump() + "\n"));
  CsvWriter csv({"certified", "input_length", "output_length", "K"});
  csv.add_row(std::vector<double>{outcome.certified ? 1.0 : 0.0, outcome.audit.input_length,
                                  outcome.audit.output_length, pc.k_bound});
  summary["files"].push_back(
      emit_file(args.out_dir, "surgery-demo", args.seed, "table", "csv", csv.str()));
  finish("surgery-demo", args, summary);
  return outcome.certified ? 0 : 3;
}

int cmd_replay(const CommonArgs& args) {
  if (args.audit_file.empty()) throw Error(ErrorCode::BadInput, "--audit is required");
  std::ifstream in(args.audit_file);
  if (!in) throw Error(ErrorCode::BadInput, "cannot open audit file");
  Json j = Json::parse(in);
  AuditTrail trail = audit_from_json(j);
  bool ok = replay_audit(trail);
  std::cout << (ok ? "replay bit-identical" : "replay MISMATCH") << "\n";
  return ok ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical geometry of split metrics on higher-rank Sol-type groups"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* cmd, bool metric2 = false, bool qi = false) {
    cmd->add_option("--group", args.group_file, "group definition file (JSON)");
    cmd->add_option("--metric", args.metric_file, "metric file (JSON); identity Gram if omitted");
    if (metric2) cmd->add_option("--metric2", args.metric2_file, "second metric file");
    if (qi) cmd->add_option("--qi", args.qi_file, "quasi-isometry file (JSON)");
    cmd->add_option("--p", args.p_json, "first point (JSON element)");
    cmd->add_option("--q", args.q_json, "second point (JSON element)");
    cmd->add_option("--pairs", args.pairs, "samples per separation");
    cmd->add_option("--separations", args.separations, "comma-separated separations");
    cmd->add_option("--seed", args.seed, "RNG seed (recorded in outputs)");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--budget", args.budget, "descent iteration budget");
    cmd->add_option("--threads", args.threads, "worker threads over sample pairs");
  };

  auto* validate_cmd = app.add_subcommand("validate", "validate a group (and metric) file");
  add_common(validate_cmd);
  auto* halfspaces_cmd = app.add_subcommand("halfspaces", "half-spaces of a point pair");
  add_common(halfspaces_cmd);
  auto* rho_cmd = app.add_subcommand("rho", "box-geodesic distance and path");
  add_common(rho_cmd);
  auto* geodesic_cmd = app.add_subcommand("geodesic", "distance estimate for a pair");
  add_common(geodesic_cmd);
  auto* compare_cmd = app.add_subcommand("compare-metrics", "two-metric comparison experiment");
  add_common(compare_cmd, true);
  auto* rhovsd_cmd = app.add_subcommand("rho-vs-d", "box geodesics against distance estimates");
  add_common(rhovsd_cmd);
  auto* delta_cmd = app.add_subcommand("delta", "Delta distance, closed form vs empirical");
  add_common(delta_cmd, true);
  auto* qi_cmd = app.add_subcommand("qi-test", "rough-isometry test for a product map");
  add_common(qi_cmd, false, true);
  auto* demo_cmd = app.add_subcommand("surgery-demo", "HSV pipeline with audit trail");
  add_common(demo_cmd);
  auto* replay_cmd = app.add_subcommand("replay", "re-apply a recorded audit trail");
  replay_cmd->add_option("--audit", args.audit_file, "audit JSON file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate_cmd->parsed()) return cmd_validate(args);
    if (halfspaces_cmd->parsed()) return cmd_halfspaces(args);
    if (rho_cmd->parsed()) return cmd_rho(args);
    if (geodesic_cmd->parsed()) return cmd_geodesic(args);
    if (compare_cmd->parsed()) return cmd_compare_metrics(args);
    if (rhovsd_cmd->parsed()) return cmd_rho_vs_d(args);
    if (delta_cmd->parsed()) return cmd_delta(args);
    if (qi_cmd->parsed()) return cmd_qi_test(args);
    if (demo_cmd->parsed()) return cmd_surgery_demo(args);
    if (replay_cmd->parsed()) return cmd_replay(args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
