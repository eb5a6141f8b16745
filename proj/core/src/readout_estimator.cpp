#include "nvread/readout_estimator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "nvread/errors.hpp"

namespace nvread {
namespace {

constexpr double kRankTolerance = 1e-12;

// Non-empty subsets of {0,1,2,3} as bit masks, smallest support first so
// that face solutions win ties against interior solutions of larger faces.
constexpr std::array<unsigned, 15> kSupports{1, 2, 4, 8, 3, 5, 6, 9, 10, 12, 7, 11, 13, 14, 15};

Eigen::Matrix<double, Eigen::Dynamic, 4> normalized_columns(const BasisSet::Matrix& m) {
  Eigen::Matrix<double, Eigen::Dynamic, 4> out = m;
  for (Eigen::Index j = 0; j < 4; ++j) {
    const double norm = out.col(j).norm();
    if (!(norm > 0.0)) throw RankDeficientBasis("basis column " + std::to_string(j) + " is zero");
    out.col(j) /= norm;
  }
  return out;
}

double condition_number(const Eigen::Matrix<double, Eigen::Dynamic, 4>& m) {
  Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 4>> svd(m);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  if (!(smin > kRankTolerance * smax)) {
    throw RankDeficientBasis("basis matrix has rank < 4 (sigma_min/sigma_max = " +
                             std::to_string(smin / smax) + ")");
  }
  return smax / smin;
}

}  // namespace

Constraint parse_constraint(std::string_view text) {
  if (text == "simplex") return Constraint::simplex;
  if (text == "unit-norm" || text == "unit_norm") return Constraint::unit_norm;
  throw ParseError("unknown constraint '" + std::string(text) + "'");
}

std::string_view to_string(Constraint c) {
  return c == Constraint::simplex ? "simplex" : "unit-norm";
}

PopulationEstimator::PopulationEstimator(const BasisSet& basis) : basis_(basis.matrix()) {
  if (basis_.rows() < 4) throw RankDeficientBasis("basis needs at least 4 bins");
  condition_number(normalized_columns(basis_));
  Eigen::HouseholderQR<BasisSet::Matrix> qr(basis_);
  q_ = qr.householderQ() * Eigen::MatrixXd::Identity(basis_.rows(), 4);
  r_ = qr.matrixQR().topRows<4>().triangularView<Eigen::Upper>();
}

Estimate PopulationEstimator::solve(std::span<const double> m, Constraint constraint) const {
  if (m.size() != bins()) {
    throw DimensionMismatch("trace has " + std::to_string(m.size()) + " bins, basis has " +
                            std::to_string(bins()));
  }
  const Eigen::Map<const Eigen::VectorXd> mv(m.data(), static_cast<Eigen::Index>(m.size()));
  const Eigen::Vector4d y = q_.transpose() * mv;
  const Eigen::Vector4d c =
      constraint == Constraint::simplex ? solve_simplex(y) : solve_unit_norm(y);
  return {PopulationVector(c), (basis_ * c - mv).norm(), constraint};
}

// Exact active-set enumeration: the global optimum of the convex program lies
// in the relative interior of exactly one face, where it coincides with the
// equality-constrained least-squares solution on that face's affine hull.
Eigen::Vector4d PopulationEstimator::solve_simplex(const Eigen::Vector4d& y) const {
  Eigen::Vector4d best = Eigen::Vector4d::Zero();
  double best_obj = std::numeric_limits<double>::infinity();
  for (unsigned mask : kSupports) {
    std::vector<Eigen::Index> support;
    for (Eigen::Index j = 0; j < 4; ++j) {
      if (mask & (1u << j)) support.push_back(j);
    }
    const auto k = static_cast<Eigen::Index>(support.size());
    Eigen::Vector4d c = Eigen::Vector4d::Zero();
    if (k == 1) {
      c(support[0]) = 1.0;
    } else {
      // Eliminate the last coordinate: c_last = 1 - sum(z).
      const Eigen::Vector4d r_last = r_.col(support.back());
      Eigen::MatrixXd a(4, k - 1);
      for (Eigen::Index i = 0; i + 1 < k; ++i) a.col(i) = r_.col(support[i]) - r_last;
      const Eigen::VectorXd z = a.colPivHouseholderQr().solve(y - r_last);
      for (Eigen::Index i = 0; i + 1 < k; ++i) c(support[i]) = z(i);
      c(support.back()) = 1.0 - z.sum();
      if (c.minCoeff() < -1e-13) continue;
      c = c.cwiseMax(0.0);
    }
    const double obj = (r_ * c - y).squaredNorm();
    if (obj < best_obj * (1.0 - 1e-12)) {
      best_obj = obj;
      best = c;
    }
  }
  return best;
}

// min ||R c - y|| s.t. |c| = 1. With G = R^T R = V diag(g) V^T and
// beta = V^T R^T y, the global minimiser is c = V diag(1/(g - lambda)) beta
// with lambda <= g_min chosen on the secular equation sum beta^2/(g-lambda)^2 = 1.
Eigen::Vector4d PopulationEstimator::solve_unit_norm(const Eigen::Vector4d& y) const {
  const Eigen::Matrix4d gram = r_.transpose() * r_;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(gram);
  const Eigen::Vector4d g = eig.eigenvalues();
  const Eigen::Matrix4d v = eig.eigenvectors();
  const Eigen::Vector4d beta = v.transpose() * (r_.transpose() * y);
  const double beta_norm = beta.norm();

  const auto orient = [](Eigen::Vector4d c) { return c.sum() < 0.0 ? Eigen::Vector4d(-c) : c; };
  if (!(beta_norm > 0.0)) return orient(v.col(0));

  const auto secular = [&](double mu) {
    double f = 0.0;
    for (Eigen::Index i = 0; i < 4; ++i) {
      const double d = g(i) - g(0) + mu;
      f += beta(i) * beta(i) / (d * d);
    }
    return f;
  };
  const auto solution = [&](double mu) {
    Eigen::Vector4d w;
    for (Eigen::Index i = 0; i < 4; ++i) w(i) = beta(i) / (g(i) - g(0) + mu);
    return Eigen::Vector4d(v * w);
  };

  if (std::abs(beta(0)) <= 1e-14 * beta_norm) {
    // Possible hard case: the minimiser may need a component along v_0.
    Eigen::Vector4d w = Eigen::Vector4d::Zero();
    for (Eigen::Index i = 1; i < 4; ++i) {
      const double d = g(i) - g(0);
      w(i) = d > 0.0 ? beta(i) / d : 0.0;
    }
    if (w.squaredNorm() <= 1.0) {
      w(0) = std::sqrt(1.0 - w.squaredNorm());
      const Eigen::Vector4d c = v * w;
      w(0) = -w(0);
      const Eigen::Vector4d c2 = v * w;
      return c.sum() >= c2.sum() ? c : c2;
    }
  }

  double lo = std::max(std::abs(beta(0)), 1e-300);
  double hi = beta_norm;
  if (secular(lo) < 1.0) lo = std::numeric_limits<double>::min();
  for (int it = 0; it < 400 && hi > lo * (1.0 + 1e-15); ++it) {
    const double mid = std::sqrt(lo * hi);
    (secular(mid) > 1.0 ? lo : hi) = mid;
  }
  return solution(std::sqrt(lo * hi));
}

Estimate estimate_populations(const BasisSet& basis, const PhotonTimeTrace& m,
                              Constraint constraint, double trace_sweeps) {
  if (m.bins() != basis.bins()) {
    throw DimensionMismatch("trace has " + std::to_string(m.bins()) + " bins, basis has " +
                            std::to_string(basis.bins()));
  }
  if (std::abs(m.bin_width_ns - basis.bin_width_ns()) > 1e-9 * basis.bin_width_ns()) {
    throw DimensionMismatch("trace and basis bin widths differ");
  }
  if (!(trace_sweeps > 0.0)) throw ValidationError("trace sweeps must be > 0");
  const PopulationEstimator estimator(basis.per_sweep());
  std::vector<double> scaled(m.counts);
  for (auto& x : scaled) x /= trace_sweeps;
  return estimator.solve(scaled, constraint);
}

Eigen::Matrix4d readout_matrix(const Eigen::Vector4d& l) {
  // Columns act on (c_0up, c_0down, c_1up, c_1down); each sequence permutes
  // which level a population emits at.
  Eigen::Matrix4d m;
  m << l(0), l(1), l(2), l(3),   // no operation
       l(0), l(3), l(2), l(1),   // pi_MW2: |0,down> <-> |1,down>
       l(1), l(0), l(2), l(3),   // pi_RF1: |0,down> <-> |0,up>
       l(0), l(2), l(1), l(3);   // pi_MW2 pi_RF2 pi_MW2: |0,down> <-> |1,up>
  return m;
}

FourLevelCounts forward_counts(const Eigen::Vector4d& levels, const PopulationVector& c) {
  return {levels, readout_matrix(levels) * c.values()};
}

InversionResult traditional_invert(const FourLevelCounts& counts) {
  const Eigen::Matrix4d m = readout_matrix(counts.levels);
  const double scale = std::pow(counts.levels.cwiseAbs().maxCoeff(), 4);
  const double det = m.determinant();
  if (!(std::abs(det) >= 1e-12 * scale) || scale == 0.0) {
    throw SingularSystem("traditional readout matrix is singular (det = " +
                         std::to_string(det) + ")");
  }
  Eigen::Vector4d c = m.fullPivLu().solve(counts.measured);
  InversionResult out;
  out.raw_sum = c.sum();
  if (std::abs(out.raw_sum - 1.0) <= 1e-6) {
    c /= out.raw_sum;
  } else {
    out.sum_flagged = true;
  }
  out.c = PopulationVector(c);
  return out;
}

double population_fidelity(const PopulationVector& c_th, const PopulationVector& c_exp) {
  const double nth = c_th.values().squaredNorm();
  const double nexp = c_exp.values().squaredNorm();
  if (!(nth > 0.0) || !(nexp > 0.0)) throw ZeroVector("population_fidelity: zero vector");
  const double f = c_th.values().dot(c_exp.values()) / std::sqrt(nth * nexp);
  return std::clamp(f, 0.0, 1.0);
}

double noise_magnification(const BasisSet& basis) {
  if (basis.bins() < 4) throw RankDeficientBasis("basis needs at least 4 bins");
  return condition_number(normalized_columns(basis.matrix()));
}

}  // namespace nvread
