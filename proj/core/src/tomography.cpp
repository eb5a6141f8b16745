#include "nvread/tomography.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "nvread/errors.hpp"
#include "nvread/readout_estimator.hpp"

namespace nvread {
namespace {

using namespace std::complex_literals;

double phase_angle(Phase p) {
  switch (p) {
    case Phase::x: return 0.0;
    case Phase::minus_x: return std::numbers::pi;
    case Phase::y: return 0.5 * std::numbers::pi;
    case Phase::minus_y: return -0.5 * std::numbers::pi;
  }
  return 0.0;
}

constexpr std::array<Phase, 4> kReadoutPhases{Phase::x, Phase::minus_x, Phase::y, Phase::minus_y};

// Hermitian matrices carrying unit real / imaginary part on element (i, j).
std::pair<DensityMatrix, DensityMatrix> coherence_generators(Coherence e) {
  const auto [i, j] = element_indices(e);
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  DensityMatrix re = DensityMatrix::Zero();
  DensityMatrix im = DensityMatrix::Zero();
  re(ii, jj) = 1.0;
  re(jj, ii) = 1.0;
  im(ii, jj) = 1.0i;
  im(jj, ii) = -1.0i;
  return {re, im};
}

}  // namespace

std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::mw1: return "MW1";
    case Channel::mw2: return "MW2";
    case Channel::rf1: return "RF1";
    case Channel::rf2: return "RF2";
  }
  return "?";
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::x: return "X";
    case Phase::minus_x: return "-X";
    case Phase::y: return "Y";
    case Phase::minus_y: return "-Y";
  }
  return "?";
}

std::pair<std::size_t, std::size_t> channel_levels(Channel c) {
  switch (c) {
    case Channel::mw1: return {0, 2};
    case Channel::mw2: return {1, 3};
    case Channel::rf1: return {0, 1};
    case Channel::rf2: return {2, 3};
  }
  return {0, 0};
}

double PulseTiming::pi_duration(Channel c) const {
  switch (c) {
    case Channel::mw1:
    case Channel::mw2: return mw_pi_ns;
    case Channel::rf1: return rf1_pi_ns;
    case Channel::rf2: return rf2_pi_ns;
  }
  return 0.0;
}

Pulse pi_pulse(Channel c, Phase phase, const PulseTiming& timing) {
  return {c, std::numbers::pi, phase, timing.pi_duration(c)};
}

Pulse half_pi_pulse(Channel c, Phase phase, const PulseTiming& timing) {
  return {c, 0.5 * std::numbers::pi, phase, 0.5 * timing.pi_duration(c)};
}

double duration_ns(const PulseSequence& seq) {
  double t = 0.0;
  for (const auto& p : seq) t += p.duration_ns;
  return t;
}

Unitary4 pulse_unitary(const Pulse& pulse) {
  const auto [p, q] = channel_levels(pulse.channel);
  const auto a = static_cast<Eigen::Index>(p);
  const auto b = static_cast<Eigen::Index>(q);
  const double half = 0.5 * pulse.angle_rad;
  const double phi = phase_angle(pulse.phase);
  const std::complex<double> off = -1.0i * std::sin(half);
  Unitary4 u = Unitary4::Identity();
  u(a, a) = std::cos(half);
  u(b, b) = std::cos(half);
  // -i sin(theta/2) (cos phi sigma_x + sin phi sigma_y)
  u(a, b) = off * std::polar(1.0, -phi);
  u(b, a) = off * std::polar(1.0, phi);
  return u;
}

DensityMatrix apply_sequence(const DensityMatrix& rho, const PulseSequence& seq) {
  DensityMatrix out = rho;
  for (const auto& pulse : seq) {
    const Unitary4 u = pulse_unitary(pulse);
    out = u * out * u.adjoint();
  }
  return out;
}

double expected_counts(const DensityMatrix& rho, const Eigen::Vector4d& levels) {
  return rho.diagonal().real().dot(levels);
}

bool is_physical(const DensityMatrix& rho, double tol) {
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(rho.trace() - 1.0) > tol) return false;
  Eigen::SelfAdjointEigenSolver<DensityMatrix> eig(rho);
  return eig.eigenvalues().minCoeff() >= -tol;
}

DensityMatrix pure_state(const Eigen::Vector4cd& psi) {
  const Eigen::Vector4cd n = psi.normalized();
  return n * n.adjoint();
}

std::string_view label(Coherence e) {
  switch (e) {
    case Coherence::up0_down0: return "0up-0down";
    case Coherence::up0_up1: return "0up-1up";
    case Coherence::up0_down1: return "0up-1down";
    case Coherence::down0_up1: return "0down-1up";
    case Coherence::down0_down1: return "0down-1down";
    case Coherence::up1_down1: return "1up-1down";
  }
  return "?";
}

Coherence parse_coherence(std::string_view text) {
  for (auto e : kCoherences) {
    if (label(e) == text) return e;
  }
  throw ParseError("unknown off-diagonal element '" + std::string(text) + "'");
}

std::pair<std::size_t, std::size_t> element_indices(Coherence e) {
  switch (e) {
    case Coherence::up0_down0: return {0, 1};
    case Coherence::up0_up1: return {0, 2};
    case Coherence::up0_down1: return {0, 3};
    case Coherence::down0_up1: return {1, 2};
    case Coherence::down0_down1: return {1, 3};
    case Coherence::up1_down1: return {2, 3};
  }
  return {0, 0};
}

CoherenceProtocol coherence_protocol(Coherence e, const PulseTiming& t) {
  CoherenceProtocol out{e, {}, {0, 1}};
  for (std::size_t k = 0; k < 4; ++k) {
    const Phase ph = kReadoutPhases[k];
    PulseSequence& s = out.sequences[k];
    switch (e) {
      case Coherence::up0_down0:
        s = {half_pi_pulse(Channel::rf1, ph, t)};
        out.readout_levels = {0, 1};
        break;
      case Coherence::up0_up1:
        s = {pi_pulse(Channel::rf2, Phase::x, t), pi_pulse(Channel::mw2, Phase::x, t),
             half_pi_pulse(Channel::rf1, ph, t)};
        out.readout_levels = {0, 1};
        break;
      case Coherence::up0_down1:
        s = {pi_pulse(Channel::mw2, Phase::x, t), half_pi_pulse(Channel::rf1, ph, t)};
        out.readout_levels = {0, 1};
        break;
      case Coherence::down0_up1:
        s = {pi_pulse(Channel::rf2, Phase::x, t), half_pi_pulse(Channel::mw2, ph, t)};
        out.readout_levels = {1, 3};
        break;
      case Coherence::down0_down1:
        s = {half_pi_pulse(Channel::mw2, ph, t)};
        out.readout_levels = {1, 3};
        break;
      case Coherence::up1_down1:
        // RF2 pi/2 converts the coherence, then MW2 pi parks |1,down> on
        // |0,down> so the difference is read at L_1up - L_0down.
        s = {half_pi_pulse(Channel::rf2, ph, t), pi_pulse(Channel::mw2, Phase::x, t)};
        out.readout_levels = {2, 1};
        break;
    }
  }
  return out;
}

std::array<PulseSequence, 4> diagonal_sequences(const PulseTiming& t) {
  return {PulseSequence{},
          PulseSequence{pi_pulse(Channel::mw2, Phase::x, t)},
          PulseSequence{pi_pulse(Channel::rf1, Phase::x, t)},
          PulseSequence{pi_pulse(Channel::mw2, Phase::x, t), pi_pulse(Channel::rf2, Phase::x, t),
                        pi_pulse(Channel::mw2, Phase::x, t)}};
}

CoherenceRecord simulate_coherence_record(const DensityMatrix& rho, Coherence e,
                                          const Eigen::Vector4d& levels, double sweeps,
                                          NoiseModel noise, std::mt19937_64& rng) {
  const auto protocol = coherence_protocol(e);
  std::array<double, 4> counts{};
  for (std::size_t k = 0; k < 4; ++k) {
    const double mean = sweeps * expected_counts(apply_sequence(rho, protocol.sequences[k]), levels);
    counts[k] = sample_count(mean, noise, rng);
  }
  return {e, counts[0], counts[1], counts[2], counts[3], sweeps};
}

DiagonalRecord simulate_diagonal_record(const DensityMatrix& rho, const Eigen::Vector4d& levels,
                                        double sweeps, NoiseModel noise, std::mt19937_64& rng) {
  DiagonalRecord out;
  out.sweeps = sweeps;
  const auto seqs = diagonal_sequences();
  for (std::size_t k = 0; k < 4; ++k) {
    const double mean = sweeps * expected_counts(apply_sequence(rho, seqs[k]), levels);
    out.counts(static_cast<Eigen::Index>(k)) = sample_count(mean, noise, rng);
  }
  return out;
}

TomographyRecord simulate_tomography(const DensityMatrix& rho, const Eigen::Vector4d& levels,
                                     double sweeps, NoiseModel noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TomographyRecord out;
  out.diagonal = simulate_diagonal_record(rho, levels, sweeps, noise, rng);
  for (auto e : kCoherences) {
    out.coherences.push_back(simulate_coherence_record(rho, e, levels, sweeps, noise, rng));
  }
  return out;
}

OffDiagonal reconstruct_offdiagonal(const CoherenceRecord& record, const Eigen::Vector4d& levels) {
  const auto protocol = coherence_protocol(record.element);
  const auto [p, q] = protocol.readout_levels;
  const double dl = levels(static_cast<Eigen::Index>(p)) - levels(static_cast<Eigen::Index>(q));
  if (!(std::abs(dl) > 1e-9 * levels.cwiseAbs().maxCoeff())) {
    throw DegenerateLevels(std::string("levels of the readout pair for ") +
                           std::string(label(record.element)) + " are degenerate");
  }
  if (!(record.sweeps > 0.0)) throw ValidationError("record sweeps must be > 0");

  // Response of (X2 - X1, Y1 - Y2) to unit real and imaginary parts. The
  // population terms cancel in both differences.
  const auto [gen_re, gen_im] = coherence_generators(record.element);
  Eigen::Matrix2d response;
  for (int col = 0; col < 2; ++col) {
    const DensityMatrix& g = col == 0 ? gen_re : gen_im;
    std::array<double, 4> r{};
    for (std::size_t k = 0; k < 4; ++k) {
      r[k] = expected_counts(apply_sequence(g, protocol.sequences[k]), levels);
    }
    response(0, col) = r[1] - r[0];
    response(1, col) = r[2] - r[3];
  }
  const Eigen::Vector2d signal((record.x2 - record.x1) / record.sweeps,
                               (record.y1 - record.y2) / record.sweeps);
  const Eigen::Vector2d ab = response.fullPivLu().solve(signal);
  return {ab(0), ab(1)};
}

DensityMatrix project_to_physical(const DensityMatrix& rho) {
  const DensityMatrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<DensityMatrix> eig(herm);
  const Eigen::Vector4d lambda = eig.eigenvalues();

  // Euclidean projection of the spectrum onto the probability simplex.
  std::array<double, 4> sorted{lambda(0), lambda(1), lambda(2), lambda(3)};
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double shift = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - t > 0.0) shift = t;
  }
  const Eigen::Vector4d w = (lambda.array() - shift).cwiseMax(0.0);
  return eig.eigenvectors() * w.cast<std::complex<double>>().asDiagonal() *
         eig.eigenvectors().adjoint();
}

Reconstruction full_tomography(const TomographyRecord& record, const Eigen::Vector4d& levels,
                               bool project) {
  if (!record.diagonal) throw MissingRecord("tomography: diagonal record missing");
  std::array<const CoherenceRecord*, 6> found{};
  for (const auto& r : record.coherences) {
    found[static_cast<std::size_t>(r.element)] = &r;
  }
  for (auto e : kCoherences) {
    if (found[static_cast<std::size_t>(e)] == nullptr) {
      throw MissingRecord("tomography: record for " + std::string(label(e)) + " missing");
    }
  }

  Reconstruction out;
  FourLevelCounts diag{levels, record.diagonal->counts / record.diagonal->sweeps};
  out.populations = traditional_invert(diag).c.values();

  out.raw = DensityMatrix::Zero();
  for (Eigen::Index k = 0; k < 4; ++k) out.raw(k, k) = out.populations(k);
  for (auto e : kCoherences) {
    const auto slot = static_cast<std::size_t>(e);
    const OffDiagonal od = reconstruct_offdiagonal(*found[slot], levels);
    out.elements[slot] = od;
    const auto [i, j] = element_indices(e);
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);
    out.raw(ii, jj) = {od.a, od.b};
    out.raw(jj, ii) = {od.a, -od.b};
  }

  out.rho = out.raw;
  if (project) {
    Eigen::SelfAdjointEigenSolver<DensityMatrix> eig(out.raw);
    const bool needs = eig.eigenvalues().minCoeff() < 0.0 ||
                       std::abs(out.raw.trace().real() - 1.0) > 1e-12;
    if (needs) {
      out.rho = project_to_physical(out.raw);
      out.psd_projected = true;
    }
  }
  return out;
}

double state_fidelity(const DensityMatrix& rho, const Eigen::Vector4cd& psi) {
  const Eigen::Vector4cd n = psi.normalized();
  return (n.adjoint() * rho * n)(0, 0).real();
}

DensityMatrix random_density_matrix(std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::Matrix4cd g;
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) g(i, j) = {normal(rng), normal(rng)};
  }
  DensityMatrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

}  // namespace nvread
