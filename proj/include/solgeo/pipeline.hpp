#pragma once

#include <string>
#include <vector>

#include "solgeo/boxpath.hpp"
#include "solgeo/distortion.hpp"
#include "solgeo/surgery.hpp"

namespace solgeo {

/// Constants of the surgery pipeline: eps with a(1-eps) > 1, N = 1/eps, the
/// slicing radius r (power-of-two multiple of max{1, T} satisfying the three
/// certification conditions), K = (n+1)(2r+1), and the projection constant L1.
struct PipelineConstants {
  double epsilon = 0.0;
  double big_n = 0.0;  // 1/epsilon
  double r = 0.0;
  double k_bound = 0.0;
  double l1 = 0.0;
  DistortionCertificate cert;
};

struct ConditionCheck {
  double r_prime = 0.0;
  double lhs1 = 0.0, rhs1 = 0.0;
  double lhs2 = 0.0, rhs2 = 0.0;
  bool ok1 = false, ok2 = false, ok3 = false;
  bool all_ok() const { return ok1 && ok2 && ok3; }
};

/// Evaluate the three pipeline conditions at r'.
ConditionCheck check_conditions(const PipelineConstants& pc, int num_factors, double r_prime);

/// Throws Error(NoValidConstants) when the certificate's growth base is <= 1.
PipelineConstants compute_constants(const SolTypeGroup& g, const SplittingData& split,
                                    const DistortionCertificate& cert);

/// Slice data for one factor missed by more than r.
struct SliceDecomposition {
  int factor = 0;
  double deficit = 0.0;      // r_i, height units
  int slice_index = 0;       // j_i, 1-based
  double band_top = 0.0;     // H_i - j_i r_i, height units
  double band_bottom = 0.0;  // H_i - (j_i + 1) r_i
  std::vector<std::pair<double, double>> intervals;  // parameter ranges of the multicurve
  std::vector<double> masses;  // L-mass per slice up to the selected one
  double mass_required = 0.0;
  double mass_measured = 0.0;
};

/// Finds the smallest slice index whose L-mass meets the geometric-series
/// share. Throws Error(NoQualifyingSlice) when sampling is too coarse to
/// realize the pigeonhole.
SliceDecomposition slice_curve(const PiecewisePath& gamma_rel, const HalfSpaceSet& hs,
                               const PipelineConstants& pc, int factor, const SolTypeGroup& g,
                               const SplittingData& split);

struct FarFactorRecord {
  int factor = 0;
  double deficit = 0.0;
  int slice_index = 0;
  double retention = 1.0;          // measured mass fraction kept after carving
  double mass_required = 0.0;
  double mass_measured = 0.0;
  double nil_required = 0.0;
  double nil_measured = 0.0;
  double r_lemma = 0.0;            // (j_i + 1) r_i
  double perp_required = 0.0;
  double perp_measured = 0.0;
  double c_rough = 0.0;            // n (2 r_i + 1)
  bool tent_case = true;           // tent construction vs reflection construction
  ConditionCheck conditions;       // re-checked at r' = r_i
  std::vector<int> carve_survivors;
};

struct LoopRecord {
  int factor = 0;
  double deficit = 0.0;  // 0 when the curve already visits
  double location = 0.0;
};

/// Full audit of one pipeline run; replaying the recorded surgeries on the
/// recorded host reproduces the recorded result bit-for-bit.
struct AuditTrail {
  // Inputs (relative frame, Euclidean base coordinates).
  PiecewiseCurve host;
  std::vector<LoopSurgery> loops;
  std::vector<PathSurgery> picks;
  PiecewiseCurve result;
  // Reporting.
  PipelineConstants constants;
  std::vector<FarFactorRecord> far_records;
  std::vector<LoopRecord> loop_records;
  SelectionAudit final_selection;
  std::vector<BoxJump> jumps;
  double input_length = 0.0;
  double output_length = 0.0;
};

struct HsvOutcome {
  bool certified = false;
  std::string failure;  // CertificationFailure reason when not certified
  BoxPath path;         // valid when certified
  AuditTrail audit;
};

/// The proof loop: per-factor loop surgeries at the alpha_i maxima, slicing
/// plus surgery families for factors missed by more than r, conflict-free
/// selection, and the final HSV box path. Never fabricates a path: every gate
/// is checked on measured values and failures are reported.
HsvOutcome make_hsv(const PiecewisePath& gamma, const GroupElement& p, const GroupElement& q,
                    const SolTypeGroup& g, const SplittingData& split,
                    const PipelineConstants& pc);

/// Re-applies the recorded surgeries; true iff the composite reproduces the
/// recorded result bit-for-bit.
bool replay_audit(const AuditTrail& trail);

}  // namespace solgeo
