#include "nvread/spin_hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nvread/errors.hpp"

namespace nvread {
namespace {

// <m+1| J+ |m> for a spin-1 operator.
double raising(int m) { return std::sqrt(2.0 - m * (m + 1.0)); }

void fix_phase(SpinMatrix& states) {
  for (Eigen::Index k = 0; k < states.cols(); ++k) {
    Eigen::Index imax = 0;
    states.col(k).cwiseAbs().maxCoeff(&imax);
    if (states(imax, k) < 0.0) states.col(k) *= -1.0;
  }
}

}  // namespace

std::string to_string(SpinLabel label) {
  std::ostringstream os;
  os << "|mS=" << label.ms << ",mI=" << label.mi << ">";
  return os.str();
}

SpinMatrix build_hamiltonian(const SpinSystemParams& params, Manifold manifold,
                             double field_g) {
  if (!(field_g >= 0.0)) {
    throw ValidationError("build_hamiltonian: field must be >= 0 G");
  }
  const double d = params.zero_field_splitting(manifold);
  const double a = params.hyperfine(manifold);
  const double ze = params.gamma_e_mhz_per_g * field_g;
  const double zn = params.gamma_n_mhz_per_g * field_g;
  const double q = params.quadrupole_mhz;

  SpinMatrix h = SpinMatrix::Zero();
  for (int ms = -1; ms <= 1; ++ms) {
    for (int mi = -1; mi <= 1; ++mi) {
      const auto i = SpinLabel{ms, mi}.index();
      h(i, i) = d * ms * ms + ze * ms + zn * mi + a * ms * mi + q * mi * mi;
      // (A/2)(S+ I- + S- I+): couples |ms, mi> with |ms+1, mi-1>.
      if (ms < 1 && mi > -1) {
        const auto j = SpinLabel{ms + 1, mi - 1}.index();
        const double v = 0.5 * a * raising(ms) * raising(mi - 1);
        h(j, i) = v;
        h(i, j) = v;
      }
    }
  }
  return h;
}

SpinEigensystem eigensystem(const SpinSystemParams& params, Manifold manifold,
                            double field_g) {
  const SpinMatrix h = build_hamiltonian(params, manifold, field_g);
  Eigen::SelfAdjointEigenSolver<SpinMatrix> solver(h);
  SpinEigensystem out;
  out.field_g = field_g;
  out.energies = solver.eigenvalues();
  out.states = solver.eigenvectors();
  fix_phase(out.states);
  return out;
}

double anticrossing_gap(const SpinEigensystem& eig, AntiCrossingPair pair) {
  const auto a = static_cast<Eigen::Index>(pair.first.index());
  const auto b = static_cast<Eigen::Index>(pair.second.index());
  std::array<std::pair<double, Eigen::Index>, kSpinDim> weight{};
  for (Eigen::Index k = 0; k < 9; ++k) {
    const double w = eig.states(a, k) * eig.states(a, k) +
                     eig.states(b, k) * eig.states(b, k);
    weight[static_cast<std::size_t>(k)] = {w, k};
  }
  std::partial_sort(weight.begin(), weight.begin() + 2, weight.end(),
                    [](const auto& x, const auto& y) { return x.first > y.first; });
  return std::abs(eig.energies(weight[0].second) - eig.energies(weight[1].second));
}

double anticrossing_gap(const SpinSystemParams& params, Manifold manifold,
                        double field_g, AntiCrossingPair pair) {
  return anticrossing_gap(eigensystem(params, manifold, field_g), pair);
}

double find_eslac(const SpinSystemParams& params, double lo_g, double hi_g,
                  double resolution_g, AntiCrossingPair pair, Manifold manifold) {
  if (!(lo_g > 0.0) || !(hi_g > lo_g) || !(resolution_g > 0.0)) {
    throw ValidationError("find_eslac: need 0 < lo < hi and resolution > 0");
  }
  const auto gap = [&](double b) { return anticrossing_gap(params, manifold, b, pair); };

  const auto n = static_cast<std::size_t>(std::floor((hi_g - lo_g) / resolution_g)) + 1;
  std::size_t best = 0;
  double best_gap = gap(lo_g);
  for (std::size_t i = 1; i < n; ++i) {
    const double g = gap(lo_g + static_cast<double>(i) * resolution_g);
    if (g < best_gap) {
      best_gap = g;
      best = i;
    }
  }
  if (best == 0 || best + 1 == n) {
    throw EslacNotInRange("find_eslac: gap is monotone over [" + std::to_string(lo_g) +
                          ", " + std::to_string(hi_g) + "] G");
  }

  // Golden-section search in the bracketing cell.
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double left = lo_g + static_cast<double>(best - 1) * resolution_g;
  double right = lo_g + static_cast<double>(best + 1) * resolution_g;
  double x1 = right - phi * (right - left);
  double x2 = left + phi * (right - left);
  double f1 = gap(x1);
  double f2 = gap(x2);
  while (right - left > 1e-7 * resolution_g) {
    if (f1 < f2) {
      right = x2;
      x2 = x1;
      f2 = f1;
      x1 = right - phi * (right - left);
      f1 = gap(x1);
    } else {
      left = x1;
      x1 = x2;
      f1 = f2;
      x2 = left + phi * (right - left);
      f2 = gap(x2);
    }
  }
  const double refined = 0.5 * (left + right);
  const double best_field = lo_g + static_cast<double>(best) * resolution_g;
  return gap(refined) <= best_gap ? refined : best_field;
}

double mixing_fraction(const SpinEigensystem& eig, SpinLabel bra, SpinLabel ket) {
  const auto k = static_cast<Eigen::Index>(ket.index());
  Eigen::Index col = 0;
  eig.states.row(k).cwiseAbs().maxCoeff(&col);
  const double amp = eig.states(static_cast<Eigen::Index>(bra.index()), col);
  return amp * amp;
}

double readout_flip_flop_mixing(const SpinSystemParams& params, double field_g) {
  const auto eig = eigensystem(params, Manifold::excited, field_g);
  return mixing_fraction(eig, kReadoutFlipFlopPair.second, kReadoutFlipFlopPair.first);
}

}  // namespace nvread
