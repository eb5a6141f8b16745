#pragma once

// Electron (S=1) x nitrogen-14 (I=1) spin Hamiltonian of the NV centre.
//
//   H = D Sz^2 + gamma_e B Sz + gamma_n B Iz + A S.I + Q Iz^2
//
// in the product basis |mS> (x) |mI>, mS, mI in {-1, 0, +1}. Energies are in
// MHz, fields in gauss. All functions are pure.

#include <array>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

namespace nvread {

enum class Manifold { ground, excited };

struct SpinSystemParams {
  double d_gs_mhz = 2870.0;
  double d_es_mhz = 1400.0;
  double gamma_e_mhz_per_g = 2.8025;
  double gamma_n_mhz_per_g = -3.077e-4;
  double a_gs_mhz = -2.16;
  double a_es_mhz = -40.0;
  double quadrupole_mhz = 0.0;

  double zero_field_splitting(Manifold m) const {
    return m == Manifold::ground ? d_gs_mhz : d_es_mhz;
  }
  double hyperfine(Manifold m) const {
    return m == Manifold::ground ? a_gs_mhz : a_es_mhz;
  }
};

/// A product-basis label |mS, mI>.
struct SpinLabel {
  int ms = 0;
  int mi = 0;

  constexpr std::size_t index() const {
    return static_cast<std::size_t>((ms + 1) * 3 + (mi + 1));
  }
  static constexpr SpinLabel from_index(std::size_t i) {
    return {static_cast<int>(i / 3) - 1, static_cast<int>(i % 3) - 1};
  }
  friend constexpr bool operator==(SpinLabel, SpinLabel) = default;
};

std::string to_string(SpinLabel label);

constexpr std::size_t kSpinDim = 9;
using SpinMatrix = Eigen::Matrix<double, 9, 9>;
using SpinVector = Eigen::Matrix<double, 9, 1>;

/// Two product states whose eigenstates meet at an anti-crossing.
struct AntiCrossingPair {
  SpinLabel first;
  SpinLabel second;
};

/// |0, mI=-1> <-> |-1, mI=0>. The hyperfine term shifts neither diagonal
/// entry, so this anti-crossing is centred on the bare electron level
/// crossing D = (gamma_e - gamma_n) B. Used as the ESLAC marker.
inline constexpr AntiCrossingPair kEslacMarkerPair{{0, -1}, {-1, 0}};

/// |0, up> <-> |1, down> in readout notation, i.e. |0, 0> <-> |-1, +1>.
/// This is the flip-flop that distinguishes the nuclear readout states.
inline constexpr AntiCrossingPair kReadoutFlipFlopPair{{0, 0}, {-1, +1}};

struct SpinEigensystem {
  double field_g = 0.0;
  /// Ascending.
  SpinVector energies;
  /// Column k is the eigenvector of energies[k].
  SpinMatrix states;
};

SpinMatrix build_hamiltonian(const SpinSystemParams& params, Manifold manifold,
                             double field_g);

SpinEigensystem eigensystem(const SpinSystemParams& params, Manifold manifold,
                            double field_g);

/// Energy splitting of the two eigenstates that carry the most weight on the
/// pair's product states.
double anticrossing_gap(const SpinEigensystem& eig, AntiCrossingPair pair);
double anticrossing_gap(const SpinSystemParams& params, Manifold manifold,
                        double field_g, AntiCrossingPair pair);

/// Locates the excited-state level anti-crossing by a grid scan over
/// [lo_g, hi_g] followed by golden-section refinement inside the bracketing
/// grid cell. Throws EslacNotInRange when the minimum sits on the scan edge.
double find_eslac(const SpinSystemParams& params, double lo_g, double hi_g,
                  double resolution_g,
                  AntiCrossingPair pair = kEslacMarkerPair,
                  Manifold manifold = Manifold::excited);

/// |<bra|psi>|^2 for the eigenstate psi with the largest overlap onto ket.
double mixing_fraction(const SpinEigensystem& eig, SpinLabel bra, SpinLabel ket);

/// Probability that the excited |0,up> state is found in |1,down> at this
/// field: the flip-flop admixture that drives nuclear-state-dependent
/// fluorescence.
double readout_flip_flop_mixing(const SpinSystemParams& params, double field_g);

}  // namespace nvread
