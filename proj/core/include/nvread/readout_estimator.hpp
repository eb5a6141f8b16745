#pragma once

// Population estimators for the four-state readout basis.
//
// Direct readout fits a measured photon time trace M as a combination of the
// calibrated basis traces L:  min ||L c - M||_2 over c, with either the
// probability-simplex constraint (c >= 0, sum c = 1; the default) or the
// unit-norm constraint c^T c = 1.
//
// Traditional readout inverts the 4x4 system that maps populations onto the
// total counts of four pulse-sequence experiments.

#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "nvread/types.hpp"

namespace nvread {

enum class Constraint { simplex, unit_norm };

Constraint parse_constraint(std::string_view text);
std::string_view to_string(Constraint c);

struct Estimate {
  PopulationVector c;
  double residual = 0.0;
  Constraint constraint = Constraint::simplex;
};

/// Precomputes a thin QR factorisation of the basis so repeated fits cost
/// O(n) each. Construction throws RankDeficientBasis when the basis has
/// rank < 4.
class PopulationEstimator {
 public:
  explicit PopulationEstimator(const BasisSet& basis);

  std::size_t bins() const { return static_cast<std::size_t>(basis_.rows()); }

  /// `m` must be in the same units as the basis columns.
  Estimate solve(std::span<const double> m, Constraint constraint = Constraint::simplex) const;

 private:
  Eigen::Vector4d solve_simplex(const Eigen::Vector4d& y) const;
  Eigen::Vector4d solve_unit_norm(const Eigen::Vector4d& y) const;

  BasisSet::Matrix basis_;
  Eigen::Matrix<double, Eigen::Dynamic, 4> q_;
  Eigen::Matrix4d r_;
};

/// Both inputs are brought to per-sweep units (divided by the basis
/// sweeps_calibration and by `trace_sweeps`) before solving.
Estimate estimate_populations(const BasisSet& basis, const PhotonTimeTrace& m,
                              Constraint constraint = Constraint::simplex,
                              double trace_sweeps = 1.0);

/// Rows: counts of the four traditional readout sequences
///   (none, pi_MW2, pi_RF1, pi_MW2 pi_RF2 pi_MW2)
/// as linear functions of the populations, given the four levels.
Eigen::Matrix4d readout_matrix(const Eigen::Vector4d& levels);

/// measured = readout_matrix(levels) * c.
FourLevelCounts forward_counts(const Eigen::Vector4d& levels, const PopulationVector& c);

struct InversionResult {
  PopulationVector c;
  /// Sum of the raw solution before any renormalisation.
  double raw_sum = 0.0;
  /// True when |raw_sum - 1| exceeded 1e-6 and no renormalisation was done.
  bool sum_flagged = false;
};

/// Solves readout_matrix(levels) c = measured. Throws SingularSystem when
/// |det| < 1e-12 * max(levels)^4.
InversionResult traditional_invert(const FourLevelCounts& counts);

/// Cosine similarity (c_th, c_exp) / sqrt((c_th, c_th)(c_exp, c_exp)),
/// clamped to [0, 1]. Throws ZeroVector if either argument vanishes.
double population_fidelity(const PopulationVector& c_th, const PopulationVector& c_exp);

/// Worst-case noise magnification: the 2-norm condition number of the basis
/// matrix after scaling every column to unit length.
double noise_magnification(const BasisSet& basis);

}  // namespace nvread
