#pragma once

// Value types shared by the simulator, estimators, and file I/O.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace nvread {

/// The four two-qubit readout states, in the column order used everywhere:
/// |0,up>, |0,down>, |1,up>, |1,down>. Electron 0 = mS 0, 1 = mS -1;
/// nuclear up = mI 0, down = mI +1.
enum class ReadoutState : std::size_t { zero_up = 0, zero_down = 1, one_up = 2, one_down = 3 };

inline constexpr std::array<ReadoutState, 4> kReadoutStates{
    ReadoutState::zero_up, ReadoutState::zero_down, ReadoutState::one_up,
    ReadoutState::one_down};

constexpr std::size_t index(ReadoutState s) { return static_cast<std::size_t>(s); }

/// "0up", "0down", "1up", "1down".
std::string_view label(ReadoutState s);
ReadoutState parse_readout_state(std::string_view text);

/// Populations (c_0up, c_0down, c_1up, c_1down). Not forced onto the simplex:
/// raw linear inversions may leave it, so validity is a query.
class PopulationVector {
 public:
  PopulationVector() : c_(Eigen::Vector4d::Zero()) {}
  explicit PopulationVector(const Eigen::Vector4d& c) : c_(c) {}
  PopulationVector(double c0u, double c0d, double c1u, double c1d) : c_(c0u, c0d, c1u, c1d) {}

  static PopulationVector pure(ReadoutState s) {
    PopulationVector p;
    p.c_(static_cast<Eigen::Index>(index(s))) = 1.0;
    return p;
  }

  double operator[](ReadoutState s) const { return c_(static_cast<Eigen::Index>(index(s))); }
  double operator[](std::size_t i) const { return c_(static_cast<Eigen::Index>(i)); }
  const Eigen::Vector4d& values() const { return c_; }
  double sum() const { return c_.sum(); }

  /// Entries >= -tol and sum within tol of one.
  bool on_simplex(double tol = 1e-9) const;

 private:
  Eigen::Vector4d c_;
};

/// Photon counts per time bin over a readout window.
struct PhotonTimeTrace {
  double bin_width_ns = 2.0;
  std::vector<double> counts;

  std::size_t bins() const { return counts.size(); }
  double window_ns() const { return bin_width_ns * static_cast<double>(counts.size()); }
  double total() const;
  /// Sum over the first gate_ns of the window.
  double gated_total(double gate_ns) const;
};

/// Calibrated basis traces as the columns of an n x 4 matrix, in
/// kReadoutStates order. Immutable after construction.
class BasisSet {
 public:
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, 4>;

  BasisSet() = default;
  BasisSet(Matrix columns, double bin_width_ns, double sweeps_calibration = 1.0,
           double field_g = 0.0);
  /// Builds from four traces; throws DimensionMismatch on unequal grids.
  static BasisSet from_traces(std::span<const PhotonTimeTrace, 4> traces,
                              double sweeps_calibration = 1.0, double field_g = 0.0);

  const Matrix& matrix() const { return columns_; }
  std::size_t bins() const { return static_cast<std::size_t>(columns_.rows()); }
  double bin_width_ns() const { return bin_width_ns_; }
  double window_ns() const { return bin_width_ns_ * static_cast<double>(bins()); }
  double sweeps_calibration() const { return sweeps_calibration_; }
  double field_g() const { return field_g_; }

  PhotonTimeTrace column(ReadoutState s) const;
  /// Column totals over the first gate_ns: the scalar fluorescence levels
  /// (L_0up, L_0down, L_1up, L_1down) used by pulse-sequence readout.
  Eigen::Vector4d gated_levels(double gate_ns) const;

  /// Same basis with every count divided by `sweeps`.
  BasisSet per_sweep() const;

 private:
  Matrix columns_;
  double bin_width_ns_ = 2.0;
  double sweeps_calibration_ = 1.0;
  double field_g_ = 0.0;
};

/// Scalar fluorescence levels of the four readout states plus the four
/// totals measured after the pulse sequences of the traditional protocol.
struct FourLevelCounts {
  Eigen::Vector4d levels = Eigen::Vector4d::Zero();
  Eigen::Vector4d measured = Eigen::Vector4d::Zero();
};

}  // namespace nvread
