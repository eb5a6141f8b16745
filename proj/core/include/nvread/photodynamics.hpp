#pragma once

// Classical rate-equation model of the NV optical cycle with the nitrogen
// nuclear spin carried as a label on every level.
//
//   ground  |0,up> |0,down> |1,up> |1,down>     (indices 0-3)
//   excited |0,up> |0,down> |1,up> |1,down>     (indices 4-7)
//   singlet |up> |down>                          (indices 8-9)
//
// Transitions (all nuclear-spin conserving except the ESLAC exchange):
//   pump        ground k   -> excited k          pump_rate
//   radiative   excited k  -> ground k           rad_rate_ms0 / rad_rate_ms1
//   ISC         excited k  -> singlet(nuc k)     isc_rate_ms0 / isc_rate_ms1
//   singlet     singlet x  -> ground |0,x>       singlet_rate * (1 - b)
//               singlet x  -> ground |1,x>       singlet_rate * b
//   ESLAC       excited |0,up> <-> |1,down>      eslac_rate * pump_rate
//
// While the laser is on the generator is constant, so each step is an exact
// matrix exponential. Photon counts per bin are the detection efficiency
// times the time integral of the radiative flux, accumulated exactly by an
// extra row in the augmented generator.

#include <array>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nvread/types.hpp"

namespace nvread {

struct RateModelConfig {
  double pump_rate = 0.03;             // 1/ns
  double rad_rate_ms0 = 1.0 / 12.0;    // 1/ns
  double rad_rate_ms1 = 1.0 / 7.8;     // 1/ns
  double isc_rate_ms0 = 0.01;          // 1/ns
  double isc_rate_ms1 = 0.0394295;     // 1/ns, from `nvreadout calibrate`
  double singlet_rate = 1.0 / 250.0;   // 1/ns
  /// Fraction of singlet decay that lands in mS = 1 instead of mS = 0.
  double singlet_branching_ms1 = 0.0;
  double eslac_rate = 0.08;            // per pump cycle
  double detection_efficiency = 0.015;
  double bin_width_ns = 2.0;
  double window_ns = 2500.0;
  /// Integration gate for the scalar fluorescence levels L.
  double gate_ns = 300.0;
  /// Background added to every bin of a simulated trace.
  double dark_counts_per_bin = 0.0;

  std::size_t bins() const;
};

/// Throws NonPhysicalConfig with the first violated invariant.
void validate(const RateModelConfig& config);

constexpr std::size_t kLevelCount = 10;

enum class Level : std::size_t {
  ground_0up, ground_0down, ground_1up, ground_1down,
  excited_0up, excited_0down, excited_1up, excited_1down,
  singlet_up, singlet_down,
};

using LevelVector = Eigen::Matrix<double, 10, 1>;
using RateMatrix = Eigen::Matrix<double, 10, 10>;

struct LevelPopulation {
  LevelVector p = LevelVector::Zero();

  double operator[](Level l) const { return p(static_cast<Eigen::Index>(l)); }
  double total() const { return p.sum(); }

  /// All population in the ground level of a readout state.
  static LevelPopulation ground(ReadoutState s);
  /// Ground-state mixture with the given readout populations.
  static LevelPopulation ground_mixture(const PopulationVector& c);
};

/// Generator Q of dp/dt = Q p. Columns sum to zero.
RateMatrix rate_matrix(const RateModelConfig& config);

struct Propagation {
  /// Populations at t = 0, dt, 2 dt, ... up to the window end.
  std::vector<LevelPopulation> trajectory;
  /// Expected detected photons per bin (per sweep).
  PhotonTimeTrace trace;
};

/// Requires dt <= bin_width/4 with bin_width an integer multiple of dt.
/// dt_ns <= 0 selects bin_width/4.
Propagation propagate(const RateModelConfig& config, const LevelPopulation& initial,
                      double dt_ns = 0.0);

/// Expected per-sweep traces of the four readout states, in kReadoutStates
/// order.
BasisSet simulate_basis_traces(const RateModelConfig& config, double field_g = 0.0);

/// m_i = sum_k c_k L_ik, bin by bin.
PhotonTimeTrace superpose_trace(const BasisSet& basis, const PopulationVector& c);

enum class NoiseModel { none, poisson, truncated_gaussian };

NoiseModel parse_noise_model(std::string_view text);
std::string_view to_string(NoiseModel model);

/// Counts drawn around each bin's mean. `truncated_gaussian` adds
/// N(0, m) restricted to [-sqrt(m), sqrt(m)] and clamps at zero.
PhotonTimeTrace add_shot_noise(const PhotonTimeTrace& trace, NoiseModel model,
                               std::uint64_t seed);
PhotonTimeTrace add_shot_noise(const PhotonTimeTrace& trace, NoiseModel model,
                               std::mt19937_64& rng);
double sample_count(double mean, NoiseModel model, std::mt19937_64& rng);

/// Ratio of gated totals L(|0,down>) / L(|1,down>) for a config.
double electron_contrast(const RateModelConfig& config);

/// Adjusts isc_rate_ms1 by bisection in (isc_rate_ms0, upper] so that
/// electron_contrast hits `target`. Returns the calibrated config.
RateModelConfig calibrate_isc_for_contrast(RateModelConfig config, double target,
                                           double upper = 1.0);

}  // namespace nvread
