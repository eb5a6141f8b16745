#pragma once

// Two-qubit (electron x nitrogen) state tomography by pulse sequences and
// fluorescence readout.
//
// Density matrices are 4x4 in the readout basis (|0,up>, |0,down>, |1,up>,
// |1,down>). Four channels address the transitions
//   MW1: |0,up>   <-> |1,up>      MW2: |0,down> <-> |1,down>
//   RF1: |0,up>   <-> |0,down>    RF2: |1,up>   <-> |1,down>
// An off-diagonal element is read by moving it onto a readout pair with pi
// pulses, converting it to a population difference with a pi/2 pulse at four
// phases (X, -X, Y, -Y), and recording the fluorescence of each variant.

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nvread/photodynamics.hpp"
#include "nvread/types.hpp"

namespace nvread {

using DensityMatrix = Eigen::Matrix4cd;
using Unitary4 = Eigen::Matrix4cd;

enum class Channel { mw1, mw2, rf1, rf2 };
enum class Phase { x, minus_x, y, minus_y };

std::string_view to_string(Channel c);
std::string_view to_string(Phase p);

/// Basis indices (first, second) of the addressed transition. The rotation
/// acts with sigma_x = |first><second| + |second><first|.
std::pair<std::size_t, std::size_t> channel_levels(Channel c);

struct PulseTiming {
  double mw_pi_ns = 2785.0;
  double rf1_pi_ns = 156169.0;
  double rf2_pi_ns = 167389.0;

  double pi_duration(Channel c) const;
};

struct Pulse {
  Channel channel = Channel::mw2;
  double angle_rad = 0.0;
  Phase phase = Phase::x;
  double duration_ns = 0.0;
};

using PulseSequence = std::vector<Pulse>;

Pulse pi_pulse(Channel c, Phase phase = Phase::x, const PulseTiming& timing = {});
/// pi/2 pulses last half the pi duration.
Pulse half_pi_pulse(Channel c, Phase phase, const PulseTiming& timing = {});

double duration_ns(const PulseSequence& seq);

/// exp(-i theta (cos phi sigma_x + sin phi sigma_y) / 2) on the addressed
/// pair, identity elsewhere.
Unitary4 pulse_unitary(const Pulse& pulse);

/// rho -> U_k ... U_1 rho U_1^dag ... U_k^dag, pulses in time order.
DensityMatrix apply_sequence(const DensityMatrix& rho, const PulseSequence& seq);

/// Dot product of diag(rho) with the four fluorescence levels.
double expected_counts(const DensityMatrix& rho, const Eigen::Vector4d& levels);

/// Hermitian, unit trace and eigenvalues >= -tol.
bool is_physical(const DensityMatrix& rho, double tol = 1e-9);

DensityMatrix pure_state(const Eigen::Vector4cd& psi);

/// The six upper-triangular coherences |i><j|, i < j.
enum class Coherence { up0_down0, up0_up1, up0_down1, down0_up1, down0_down1, up1_down1 };

inline constexpr std::array<Coherence, 6> kCoherences{
    Coherence::up0_down0, Coherence::up0_up1,     Coherence::up0_down1,
    Coherence::down0_up1, Coherence::down0_down1, Coherence::up1_down1};

/// "0up-0down", "0up-1up", ...
std::string_view label(Coherence e);
Coherence parse_coherence(std::string_view text);
/// Matrix indices (i, j) of the element, i < j.
std::pair<std::size_t, std::size_t> element_indices(Coherence e);

/// Measurement recipe for one coherence.
struct CoherenceProtocol {
  Coherence element;
  /// Sequences producing X1, X2, Y1, Y2 (final pi/2 at phase X, -X, Y, -Y).
  std::array<PulseSequence, 4> sequences;
  /// Levels whose difference sets the signal: the pair the coherence is
  /// converted onto after the last pulse.
  std::pair<std::size_t, std::size_t> readout_levels;
};

CoherenceProtocol coherence_protocol(Coherence e, const PulseTiming& timing = {});

/// The four traditional population-readout sequences (none, pi_MW2, pi_RF1,
/// pi_MW2 pi_RF2 pi_MW2).
std::array<PulseSequence, 4> diagonal_sequences(const PulseTiming& timing = {});

struct CoherenceRecord {
  Coherence element = Coherence::up0_down0;
  double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
  double sweeps = 1.0;
};

struct DiagonalRecord {
  /// Totals L0..L3 of the diagonal sequences.
  Eigen::Vector4d counts = Eigen::Vector4d::Zero();
  double sweeps = 1.0;
};

struct TomographyRecord {
  std::optional<DiagonalRecord> diagonal;
  std::vector<CoherenceRecord> coherences;
};

/// Real and imaginary part of rho_ij for an element |i><j|.
struct OffDiagonal {
  double a = 0.0;
  double b = 0.0;
};

CoherenceRecord simulate_coherence_record(const DensityMatrix& rho, Coherence e,
                                          const Eigen::Vector4d& levels, double sweeps,
                                          NoiseModel noise, std::mt19937_64& rng);
DiagonalRecord simulate_diagonal_record(const DensityMatrix& rho, const Eigen::Vector4d& levels,
                                        double sweeps, NoiseModel noise, std::mt19937_64& rng);
/// Full record set (diagonal plus all six coherences).
TomographyRecord simulate_tomography(const DensityMatrix& rho, const Eigen::Vector4d& levels,
                                     double sweeps, NoiseModel noise, std::uint64_t seed);

/// Recovers (a, b) from the X1 - X2 and Y1 - Y2 contrasts. For |0,up><1,down|
/// this is a = (X2 - X1) / (2 dL), b = (Y1 - Y2) / (2 dL) with
/// dL = L_0up - L_0down. Throws DegenerateLevels when the readout-pair levels
/// are too close to resolve.
OffDiagonal reconstruct_offdiagonal(const CoherenceRecord& record, const Eigen::Vector4d& levels);

struct Reconstruction {
  /// Linear-inversion result, Hermitian but not necessarily positive.
  DensityMatrix raw;
  /// raw, or its projection onto the physical states when requested.
  DensityMatrix rho;
  bool psd_projected = false;
  std::array<OffDiagonal, 6> elements{};
  Eigen::Vector4d populations = Eigen::Vector4d::Zero();
};

/// Throws MissingRecord before doing any work if a record is absent.
Reconstruction full_tomography(const TomographyRecord& record, const Eigen::Vector4d& levels,
                               bool project_to_physical = true);

/// Nearest physical state in Frobenius norm: the spectrum is projected onto
/// the probability simplex.
DensityMatrix project_to_physical(const DensityMatrix& rho);

/// <psi| rho |psi> for normalised psi.
double state_fidelity(const DensityMatrix& rho, const Eigen::Vector4cd& psi);

/// Ginibre-distributed random state G G^dag / tr(G G^dag); deterministic in
/// the generator.
DensityMatrix random_density_matrix(std::mt19937_64& rng);

}  // namespace nvread
