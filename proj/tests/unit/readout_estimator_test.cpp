#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nvread/errors.hpp"
#include "nvread/photodynamics.hpp"
#include "nvread/readout_estimator.hpp"

namespace nvread {
namespace {

const BasisSet& default_basis() {
  static const BasisSet basis = simulate_basis_traces({});
  return basis;
}

PopulationVector random_simplex(std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  Eigen::Vector4d c(e(rng), e(rng), e(rng), e(rng));
  return PopulationVector(c / c.sum());
}

// Objective ||L c - m||^2 through the 4x4 normal-equation pieces, so a grid
// search stays cheap.
struct Quadratic {
  Eigen::Matrix4d g;
  Eigen::Vector4d h;
  double k;
  double operator()(const Eigen::Vector4d& c) const { return c.dot(g * c) - 2.0 * c.dot(h) + k; }
};

Eigen::Vector4d simplex_grid_search(const Quadratic& f, double step, const Eigen::Vector4d& centre,
                                    double radius) {
  Eigen::Vector4d best = centre;
  double best_val = f(centre);
  const auto lo = [&](int i) { return std::max(0.0, centre(i) - radius); };
  const auto hi = [&](int i) { return std::min(1.0, centre(i) + radius); };
  for (double a = lo(0); a <= hi(0) + 1e-12; a += step) {
    for (double b = lo(1); b <= hi(1) + 1e-12 && a + b <= 1.0 + 1e-12; b += step) {
      for (double c = lo(2); c <= hi(2) + 1e-12 && a + b + c <= 1.0 + 1e-12; c += step) {
        const Eigen::Vector4d v(a, b, c, std::max(0.0, 1.0 - a - b - c));
        const double val = f(v);
        if (val < best_val) {
          best_val = val;
          best = v;
        }
      }
    }
  }
  return best;
}

TEST(EstimatePopulations, ReproducesBasisColumn) {
  const auto& basis = default_basis();
  const auto est = estimate_populations(basis, basis.column(ReadoutState::zero_down));
  EXPECT_NEAR(est.c[ReadoutState::zero_down], 1.0, 1e-12);
  EXPECT_NEAR(est.c.values().cwiseAbs().sum(), 1.0, 1e-12);
  EXPECT_LT(est.residual, 1e-12);
}

TEST(EstimatePopulations, EqualMixture) {
  const auto& basis = default_basis();
  const auto m = superpose_trace(basis, PopulationVector(0.5, 0.5, 0, 0));
  const auto est = estimate_populations(basis, m);
  EXPECT_LT((est.c.values() - Eigen::Vector4d(0.5, 0.5, 0, 0)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(EstimatePopulations, RoundTripRandomSimplex) {
  const auto& basis = default_basis();
  const PopulationEstimator est(basis);
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    const auto c = random_simplex(rng);
    const auto m = superpose_trace(basis, c);
    const auto got = est.solve(m.counts);
    EXPECT_LT((got.c.values() - c.values()).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_TRUE(got.c.on_simplex());
  }
}

TEST(EstimatePopulations, FaceSolutionHasExactZeros) {
  const auto& basis = default_basis();
  const auto m = superpose_trace(basis, PopulationVector(0.3, 0.0, 0.7, 0.0));
  const auto est = estimate_populations(basis, m);
  EXPECT_EQ(est.c[ReadoutState::zero_down], 0.0);
  EXPECT_EQ(est.c[ReadoutState::one_down], 0.0);
}

TEST(EstimatePopulations, AgreesWithSimplexGridSearchOnNoisyData) {
  const auto& basis = default_basis();
  const double sweeps = 1e4;
  std::mt19937_64 rng(21);
  for (int t = 0; t < 5; ++t) {
    const auto c = random_simplex(rng);
    PhotonTimeTrace m = superpose_trace(basis, c);
    for (auto& x : m.counts) x *= sweeps;
    m = add_shot_noise(m, NoiseModel::poisson, rng);
    const auto est = estimate_populations(basis, m, Constraint::simplex, sweeps);

    Eigen::VectorXd mv = Eigen::Map<const Eigen::VectorXd>(m.counts.data(), m.counts.size()) / sweeps;
    const auto& l = basis.matrix();
    const Quadratic f{l.transpose() * l, l.transpose() * mv, mv.squaredNorm()};
    const Eigen::Vector4d coarse = simplex_grid_search(f, 1e-2, Eigen::Vector4d::Constant(0.5), 1.0);
    const Eigen::Vector4d fine = simplex_grid_search(f, 1e-3, coarse, 0.02);
    EXPECT_LE(f(est.c.values()), f(fine) + 1e-15);
    EXPECT_LT((est.c.values() - fine).cwiseAbs().maxCoeff(), 5e-3);
  }
}

TEST(EstimatePopulations, UnitNormModeRecoversUnitVector) {
  const auto& basis = default_basis();
  const Eigen::Vector4d c = Eigen::Vector4d(0.2, 0.7, 0.1, 0.4).normalized();
  const auto m = superpose_trace(basis, PopulationVector(c));
  const auto est = estimate_populations(basis, m, Constraint::unit_norm);
  EXPECT_NEAR(est.c.values().norm(), 1.0, 1e-10);
  EXPECT_LT((est.c.values() - c).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(est.constraint, Constraint::unit_norm);
}

TEST(EstimatePopulations, UnitNormModeIsStationaryAndBeatsSamples) {
  const auto& basis = default_basis();
  PhotonTimeTrace m = superpose_trace(basis, PopulationVector(0.25, 0.25, 0.25, 0.25));
  m = add_shot_noise([&] {
    auto s = m;
    for (auto& x : s.counts) x *= 1e3;
    return s;
  }(), NoiseModel::poisson, 4);
  for (auto& x : m.counts) x /= 1e3;
  const auto est = estimate_populations(basis, m, Constraint::unit_norm);
  const auto& l = basis.matrix();
  const Eigen::VectorXd mv = Eigen::Map<const Eigen::VectorXd>(m.counts.data(), m.counts.size());
  const Eigen::Vector4d c = est.c.values();
  // Lagrange condition: L^T (L c - m) is parallel to c.
  const Eigen::Vector4d grad = l.transpose() * (l * c - mv);
  const double lambda = grad.dot(c);
  EXPECT_LT((grad - lambda * c).norm(), 1e-6 * std::max(1.0, grad.norm()));
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  for (int t = 0; t < 2000; ++t) {
    const Eigen::Vector4d v = Eigen::Vector4d(n(rng), n(rng), n(rng), n(rng)).normalized();
    EXPECT_LE(est.residual, (l * v - mv).norm() + 1e-12);
  }
}

TEST(EstimatePopulations, DimensionChecks) {
  const auto& basis = default_basis();
  PhotonTimeTrace short_trace{2.0, std::vector<double>(10, 1.0)};
  EXPECT_THROW(estimate_populations(basis, short_trace), DimensionMismatch);
  PhotonTimeTrace wrong_width = basis.column(ReadoutState::zero_up);
  wrong_width.bin_width_ns = 4.0;
  EXPECT_THROW(estimate_populations(basis, wrong_width), DimensionMismatch);
}

TEST(EstimatePopulations, RankDeficientBasis) {
  BasisSet::Matrix m = default_basis().matrix();
  m.col(3) = m.col(2);
  EXPECT_THROW(PopulationEstimator(BasisSet(m, 2.0)), RankDeficientBasis);
  EXPECT_THROW(noise_magnification(BasisSet(m, 2.0)), RankDeficientBasis);
}

TEST(EstimatePopulations, SweepScalingIsConsistent) {
  const auto& basis = default_basis();
  BasisSet scaled(basis.matrix() * 1e9, basis.bin_width_ns(), 1e9);
  PhotonTimeTrace m = superpose_trace(basis, PopulationVector(0.1, 0.2, 0.3, 0.4));
  for (auto& x : m.counts) x *= 1e5;
  const auto est = estimate_populations(scaled, m, Constraint::simplex, 1e5);
  EXPECT_LT((est.c.values() - Eigen::Vector4d(0.1, 0.2, 0.3, 0.4)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(EstimatePopulations, FidelityDropsAsCountsShrink) {
  const auto& basis = default_basis();
  const PopulationEstimator est(basis);
  double previous = 1.0;
  for (double sweeps : {1e7, 1e6, 1e5, 1e4, 1e3}) {
    std::mt19937_64 rng(5);
    double sum = 0.0;
    for (int t = 0; t < 100; ++t) {
      const auto c = random_simplex(rng);
      PhotonTimeTrace m = superpose_trace(basis, c);
      for (auto& x : m.counts) x = sample_count(x * sweeps, NoiseModel::poisson, rng) / sweeps;
      sum += population_fidelity(c, est.solve(m.counts).c);
    }
    const double mean = sum / 100.0;
    EXPECT_LE(mean, previous + 1e-3) << sweeps;
    previous = mean;
  }
}

TEST(TraditionalInvert, RecoversPureStates) {
  const Eigen::Vector4d levels = default_basis().gated_levels(300.0);
  for (auto s : kReadoutStates) {
    const auto c = PopulationVector::pure(s);
    const auto inv = traditional_invert(forward_counts(levels, c));
    EXPECT_LT((inv.c.values() - c.values()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_FALSE(inv.sum_flagged);
  }
}

TEST(TraditionalInvert, RoundTripRandomSimplex) {
  const Eigen::Vector4d levels = default_basis().gated_levels(300.0);
  std::mt19937_64 rng(13);
  for (int t = 0; t < 500; ++t) {
    const auto c = random_simplex(rng);
    // Forward multiply written out from the sequence permutations.
    const Eigen::Vector4d l = levels;
    const Eigen::Vector4d v = c.values();
    FourLevelCounts counts{l, Eigen::Vector4d(l.dot(v), l(0) * v(0) + l(3) * v(1) + l(2) * v(2) + l(1) * v(3),
                                              l(1) * v(0) + l(0) * v(1) + l(2) * v(2) + l(3) * v(3),
                                              l(0) * v(0) + l(2) * v(1) + l(1) * v(2) + l(3) * v(3))};
    const auto inv = traditional_invert(counts);
    EXPECT_LT((inv.c.values() - v).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(TraditionalInvert, SingularAndFlagged) {
  EXPECT_THROW(traditional_invert({Eigen::Vector4d::Constant(3.0), Eigen::Vector4d::Constant(3.0)}),
               SingularSystem);
  const Eigen::Vector4d levels(1.0, 1.2, 0.8, 0.9);
  FourLevelCounts counts = forward_counts(levels, PopulationVector(0.2, 0.2, 0.3, 0.3));
  counts.measured *= 1.1;
  const auto inv = traditional_invert(counts);
  EXPECT_TRUE(inv.sum_flagged);
  EXPECT_NEAR(inv.raw_sum, 1.1, 1e-9);
}

TEST(PopulationFidelity, PaperSuperpositionFixtures) {
  EXPECT_NEAR(population_fidelity({0.5, 0.5, 0, 0}, {0.42180, 0.51137, 0.05892, 0.00791}), 0.99145,
              1e-4);
  EXPECT_NEAR(population_fidelity({0, 0.5, 0, 0.5}, {0.04460, 0.52938, 0.00000, 0.42602}), 0.99206,
              1e-4);
  EXPECT_NEAR(population_fidelity({0, 0, 0.5, 0.5}, {0.09760, 0.00000, 0.44625, 0.45616}), 0.98845,
              1e-4);
}

TEST(PopulationFidelity, BasicProperties) {
  const PopulationVector u(0.25, 0.25, 0.25, 0.25);
  EXPECT_DOUBLE_EQ(population_fidelity(u, u), 1.0);
  EXPECT_EQ(population_fidelity({1, 0, 0, 0}, {0, 1, 0, 0}), 0.0);
  const PopulationVector a(0.1, 0.6, 0.2, 0.1);
  const PopulationVector b(0.3, 0.3, 0.3, 0.1);
  EXPECT_DOUBLE_EQ(population_fidelity(a, b), population_fidelity(b, a));
  EXPECT_NEAR(population_fidelity(PopulationVector(3.0 * a.values()), PopulationVector(0.2 * b.values())),
              population_fidelity(a, b), 1e-15);
  EXPECT_THROW(population_fidelity({0, 0, 0, 0}, a), ZeroVector);
  // Negative raw inversions clamp at zero.
  EXPECT_EQ(population_fidelity({1, 0, 0, 0}, {-1, 0, 0, 0}), 0.0);
}

TEST(NoiseMagnification, OrthonormalColumnsGiveOne) {
  BasisSet::Matrix m = BasisSet::Matrix::Zero(8, 4);
  for (int k = 0; k < 4; ++k) m(2 * k, k) = 1.0;
  EXPECT_NEAR(noise_magnification(BasisSet(m, 2.0)), 1.0, 1e-12);
}

TEST(NoiseMagnification, ScaleInvariantAndAtLeastOne) {
  const auto& basis = default_basis();
  const double k1 = noise_magnification(basis);
  const double k2 = noise_magnification(BasisSet(basis.matrix() * 1e6, 2.0));
  EXPECT_GE(k1, 1.0);
  EXPECT_NEAR(k1, k2, 1e-8 * k1);
}

TEST(NoiseMagnification, MatchesSingularValueOracle) {
  const auto& basis = default_basis();
  BasisSet::Matrix m = basis.matrix();
  for (int k = 0; k < 4; ++k) m.col(k).normalize();
  // Eigenvalues of the 4x4 Gram matrix give the squared singular values.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(m.transpose() * m);
  const double ref = std::sqrt(eig.eigenvalues()(3) / eig.eigenvalues()(0));
  EXPECT_NEAR(noise_magnification(basis), ref, 1e-4 * ref);
}

TEST(Constraint, ParseRoundTrip) {
  EXPECT_EQ(parse_constraint(to_string(Constraint::simplex)), Constraint::simplex);
  EXPECT_EQ(parse_constraint(to_string(Constraint::unit_norm)), Constraint::unit_norm);
  EXPECT_THROW(parse_constraint("l1"), ParseError);
}

}  // namespace
}  // namespace nvread
