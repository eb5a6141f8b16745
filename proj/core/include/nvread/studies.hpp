#pragma once

// Monte-Carlo fidelity studies for direct and traditional readout, the
// fidelity-curve fits F = 1 - exp(a x^2 + b x + c), time-cost comparison,
// and magnetic-field scans.

#include <cstdint>
#include <string_view>
#include <vector>

#include "nvread/photodynamics.hpp"
#include "nvread/readout_estimator.hpp"
#include "nvread/spin_hamiltonian.hpp"
#include "nvread/types.hpp"

namespace nvread {

enum class ReadoutMethod { direct, traditional };

ReadoutMethod parse_readout_method(std::string_view text);
std::string_view to_string(ReadoutMethod m);

/// Durations of one experiment's building blocks.
struct Timing {
  double laser_ns = 2500.0;
  double mw_pi_ns = 2785.0;
  double rf1_pi_ns = 156169.0;
  double rf2_pi_ns = 167389.0;
};

/// Log-spaced sweep counts 10^lo, 10^(lo+1), ..., 10^hi.
std::vector<double> decade_grid(int lo_exp, int hi_exp);

struct SweepStudyConfig {
  /// S1: sweeps behind the (error-free) calibration basis.
  double calibration_sweeps = 1e9;
  /// S2 values, strictly increasing.
  std::vector<double> test_sweeps = decade_grid(3, 9);
  std::size_t trials = 100;
  NoiseModel noise = NoiseModel::poisson;
  ReadoutMethod method = ReadoutMethod::direct;
  Constraint constraint = Constraint::simplex;
  Timing timing;
  std::uint64_t seed = 1;
  /// Gate for the scalar levels of the traditional method.
  double gate_ns = 300.0;
  /// Worker threads for the trials; 0 picks the hardware concurrency.
  unsigned threads = 0;
};

/// Throws ValidationError on an unusable configuration.
void validate(const SweepStudyConfig& config);

struct CurvePoint {
  double sweeps = 0.0;
  double time_ns = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t trials = 0;
};

struct FidelityCurve {
  ReadoutMethod method = ReadoutMethod::direct;
  double per_shot_ns = 0.0;
  std::vector<CurvePoint> points;
};

/// For each S2 and trial: draw c ~ Dirichlet(1,1,1,1), form the expected
/// signal for S2 sweeps, add noise, estimate, and score with
/// population_fidelity. `basis` counts are for basis.sweeps_calibration()
/// sweeps. Trial k of point j uses its own generator seeded from
/// (seed, j, k), so results do not depend on the thread count.
FidelityCurve run_sweep_study(const SweepStudyConfig& config, const BasisSet& basis);

enum class FitModel { sweeps, time };

std::string_view to_string(FitModel m);
FitModel parse_fit_model(std::string_view text);

struct FitParams {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  /// log10 of the single-experiment duration (time model); 0 for sweeps.
  double delta = 0.0;
  FitModel model = FitModel::sweeps;
  /// RMS residual of ln(1 - F).
  double residual = 0.0;
  std::size_t points_used = 0;
};

/// Linear least squares of ln(1 - F) on (x^2, x, 1) with x = log10(sweeps),
/// or x = log10(t) - delta for the time model. Points with F >= 1 are
/// skipped; throws DegenerateFit with fewer than four usable points.
FitParams fit_fidelity_curve(const FidelityCurve& curve, FitModel model = FitModel::sweeps);

/// Duration of a single experiment. Direct: the laser pulse. Traditional:
/// the laser pulse plus the mean operation time of the four population
/// readout sequences.
double per_shot_duration_ns(ReadoutMethod method, const Timing& timing = {});
double time_axis(double sweeps, ReadoutMethod method, const Timing& timing = {});
double delta_for(ReadoutMethod method, const Timing& timing = {});

/// Evaluates 1 - exp(q(x)) at abscissa x (already offset by delta).
double fitted_fidelity(const FitParams& fit, double x);

/// Smallest x >= 0 at which the fitted fidelity rises through `target`, or
/// 0 when it already holds for every x >= 0. Throws TargetUnreachable.
double abscissa_for_fidelity(const FitParams& fit, double target);
/// 10^(x + delta): nanoseconds for a time fit, sweeps for a sweeps fit.
double time_to_fidelity(const FitParams& fit, double target);
/// 10^x.
double sweeps_to_fidelity(const FitParams& fit, double target);
double speedup(const FitParams& direct, const FitParams& traditional, double target);

struct FieldStudyConfig {
  SpinSystemParams spin;
  RateModelConfig rates;
  SweepStudyConfig study;
  /// eslac_rate = eslac_coupling * flip-flop mixing at the field.
  double eslac_coupling = 1.0;
  double target_fidelity = 0.9;
};

struct FieldStudyRow {
  double field_g = 0.0;
  double mixing = 0.0;
  double eslac_rate = 0.0;
  double kappa = 0.0;
  FitParams fit;
  /// From the fit; NaN when the target is out of reach.
  double sweeps_to_target = 0.0;
  FidelityCurve curve;
};

/// Requires at least two fields. Every field reuses the study seed.
std::vector<FieldStudyRow> field_dependence_study(const std::vector<double>& fields_g,
                                                  const FieldStudyConfig& config);

/// Least-squares quadratic y = p2 x^2 + p1 x + p0; returns (p2, p1, p0).
Eigen::Vector3d quadratic_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace nvread
