#pragma once

#include <vector>

#include "solgeo/metric.hpp"

namespace solgeo {

/// Per-factor distortion data: C a^{alpha_i(v)} ||h|| <= ||e^{alpha_i(v) D_i} h||
/// once alpha_i(v) >= T.
struct FactorDistortion {
  int factor = 0;
  bool diagonalizable = true;
  double c = 1.0;
  double t = 0.0;    // in alpha_i-value units
  double a = 0.0;    // growth base (e for diagonalizable, e^{|delta|/2} otherwise)
  // Composed intermediates, reported for audit.
  double basis_change_ratio = 1.0;  // diagonalizable case: s_min/s_max
  double l1_constant = 1.0;         // Jordan case: g vs l^1 bi-Lipschitz constant
  double sigma_flow_constant = 1.0; // Jordan case: l^1 bound on the sigma flow
  int block_dim = 1;
};

/// Uniform constants in half-space distance units (Cor-style): T = max T_i/a_i,
/// C = min C_i, a = min a_i^{||alpha_i||}.
struct DistortionCertificate {
  std::vector<FactorDistortion> factors;
  double c = 0.0;
  double t = 0.0;
  double a = 0.0;
};

/// Diagonalizable case: C = s_min/s_max of the stretch factors between g|n_i
/// and the metric making the (Euclidean-normalized) eigenbasis orthonormal;
/// a = e, T = 0. Throws Error(NotDiagonalizable) for complex or defective spectra.
FactorDistortion diagonalizable_constants(const SolTypeGroup& g, const SplittingData& split,
                                          int factor);

/// General case via the absolute Jordan form: a = e^{|delta|/2}; T is the last
/// crossing of the per-row-sum bound of |e^{-t|D|}| against e^{-|delta| t/2},
/// bisected to 1e-10; C = 1/(m^2 L_1^2) with the intermediates reported.
FactorDistortion jordan_constants(const SolTypeGroup& g, const SplittingData& split, int factor);

/// Per-factor constants (diagonalizable route when possible) plus the uniform
/// combination.
DistortionCertificate uniform_certificate(const SolTypeGroup& g, const SplittingData& split);

}  // namespace solgeo
