#pragma once

#include <functional>
#include <string>
#include <vector>

#include "solgeo/boxpath.hpp"
#include "solgeo/rng.hpp"

namespace solgeo {

struct DistanceEstimate {
  double upper = 0.0;
  double lower = 0.0;
  int iterations = 0;
  int final_segments = 0;
  bool budget_exceeded = false;
  std::string method;

  bool consistent() const { return lower <= upper + 1e-9; }
};

struct EstimateOptions {
  int initial_segments = 16;
  int max_segments = 512;
  int max_iterations_per_level = 250;
  int budget = 100000;        // total descent iterations across levels
  double level_tol = 5e-3;    // node doubling stops below this relative change
  double descent_tol = 1e-6;  // declared convergence of the line search loop
  bool use_rho_init = true;
};

/// Upper bound by first-order descent on the discretized length over interior
/// node positions (straight and box-geodesic initializations, best kept);
/// lower bound from the 1-Lipschitz base projection.
DistanceEstimate estimate_distance(const GroupElement& p, const GroupElement& q,
                                   const SolTypeGroup& g, const SplittingData& split,
                                   const EstimateOptions& opts = {});

/// Descent-optimized path itself (the estimator's witness).
PiecewisePath optimize_path(const GroupElement& p, const GroupElement& q, const SolTypeGroup& g,
                            const SplittingData& split, const EstimateOptions& opts,
                            DistanceEstimate* estimate = nullptr);

struct SampleSpec {
  int pairs_per_separation = 10;
  std::vector<double> separations = {5, 10, 15, 20, 25, 30, 35, 40, 45, 50};
  std::uint64_t seed = 1;
  bool base_only = false;        // pure base displacements
  int direction_axis = -1;       // >= 0: base displacement along that axis
  int threads = 1;
};

struct PairSample {
  int id = 0;
  double separation = 0.0;
  GroupElement p, q;
};

/// p = identity, q = (h, v): v uniform on the s*g-sphere of the prescribed
/// radius, h log-uniform in coset distance within [e^{s-1}, e^s] per factor.
std::vector<PairSample> sample_pairs(const SolTypeGroup& g, const SplittingData& split,
                                     const SampleSpec& spec);

double regression_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Deterministic indexed parallel map; results ordered by index.
void parallel_for_indexed(int count, int threads, const std::function<void(int)>& fn);

struct ComparisonRow {
  int id = 0;
  double separation = 0.0;
  double d1_lower = 0.0, d1_upper = 0.0, rho1 = 0.0;
  double d2_lower = 0.0, d2_upper = 0.0, rho2 = 0.0;
  double upper_residual_eig = 0.0, lower_residual_eig = 0.0;
  double upper_residual_stretch = 0.0, lower_residual_stretch = 0.0;
};

struct ComparisonReport {
  double lambda_top_eig = 0.0, lambda_bottom_eig = 0.0;
  double lambda_top_stretch = 0.0, lambda_bottom_stretch = 0.0;
  double fitted_c_upper_eig = 0.0, fitted_c_lower_eig = 0.0;
  double fitted_c_upper_stretch = 0.0, fitted_c_lower_stretch = 0.0;
  double slope_upper_eig = 0.0, slope_lower_eig = 0.0;
  double slope_upper_stretch = 0.0, slope_lower_stretch = 0.0;
  double max_separation = 0.0;
  std::vector<ComparisonRow> rows;
};

ComparisonReport compare_metrics(const SolTypeGroup& g, const SplittingData& split1,
                                 const SplittingData& split2, const SampleSpec& spec,
                                 const EstimateOptions& eopts = {});

struct RhoDistanceRow {
  int id = 0;
  double separation = 0.0;
  double rho = 0.0;
  double d_lower = 0.0, d_upper = 0.0;
  double gap_upper = 0.0;  // rho - d_upper
  double gap_lower = 0.0;  // rho - d_lower
};

struct RhoDistanceReport {
  std::vector<RhoDistanceRow> rows;
  double slope_gap_upper = 0.0;
  bool lower_bound_respected = true;  // rho >= d_lower on every pair
};

RhoDistanceReport rho_vs_distance(const SolTypeGroup& g, const SplittingData& split,
                                  const SampleSpec& spec, const EstimateOptions& eopts = {});

struct DeltaRow {
  int id = 0;
  double separation = 0.0;
  double d1 = 0.0, d2 = 0.0, ratio = 0.0;
};

struct DeltaReport {
  double delta_closed_form = 0.0;
  double log_lambda_empirical = 0.0;
  double relative_discrepancy = 0.0;
  std::vector<DeltaRow> rows;
};

/// Closed-form Delta vs the empirical log Lambda from sampled distance ratios
/// at large separations (sphere directions, pure base pairs plus nil pairs).
DeltaReport delta_vs_empirical(const SolTypeGroup& g, const SplittingData& split1,
                               const SplittingData& split2, const SampleSpec& spec,
                               const EstimateOptions& eopts = {});

}  // namespace solgeo
