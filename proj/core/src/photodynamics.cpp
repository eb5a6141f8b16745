#include "nvread/photodynamics.hpp"

#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "nvread/errors.hpp"

namespace nvread {
namespace {

constexpr Eigen::Index idx(Level l) { return static_cast<Eigen::Index>(l); }

bool is_integer_ratio(double num, double den) {
  const double r = num / den;
  return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r);
}

using AugmentedMatrix = Eigen::Matrix<double, 11, 11>;

AugmentedMatrix augmented_generator(const RateModelConfig& config) {
  AugmentedMatrix g = AugmentedMatrix::Zero();
  g.topLeftCorner<10, 10>() = rate_matrix(config);
  const double eta = config.detection_efficiency;
  g(10, idx(Level::excited_0up)) = eta * config.rad_rate_ms0;
  g(10, idx(Level::excited_0down)) = eta * config.rad_rate_ms0;
  g(10, idx(Level::excited_1up)) = eta * config.rad_rate_ms1;
  g(10, idx(Level::excited_1down)) = eta * config.rad_rate_ms1;
  return g;
}

}  // namespace

std::size_t RateModelConfig::bins() const {
  return static_cast<std::size_t>(std::llround(window_ns / bin_width_ns));
}

void validate(const RateModelConfig& c) {
  const auto fail = [](const std::string& what) { throw NonPhysicalConfig("rate model: " + what); };
  const std::pair<const char*, double> rates[] = {
      {"pump_rate", c.pump_rate},       {"rad_rate_ms0", c.rad_rate_ms0},
      {"rad_rate_ms1", c.rad_rate_ms1}, {"isc_rate_ms0", c.isc_rate_ms0},
      {"isc_rate_ms1", c.isc_rate_ms1}, {"singlet_rate", c.singlet_rate},
      {"eslac_rate", c.eslac_rate},     {"dark_counts_per_bin", c.dark_counts_per_bin}};
  for (const auto& [name, v] : rates) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail(std::string(name) + " must be finite and >= 0");
  }
  if (!(c.detection_efficiency > 0.0 && c.detection_efficiency <= 1.0)) {
    fail("detection_efficiency must lie in (0, 1]");
  }
  if (!(c.singlet_branching_ms1 >= 0.0 && c.singlet_branching_ms1 < 1.0)) {
    fail("singlet_branching_ms1 must lie in [0, 1)");
  }
  if (!(c.isc_rate_ms1 > c.isc_rate_ms0)) fail("isc_rate_ms1 must exceed isc_rate_ms0");
  if (!(c.bin_width_ns > 0.0) || !(c.window_ns >= c.bin_width_ns)) {
    fail("need bin_width_ns > 0 and window_ns >= bin_width_ns");
  }
  if (!is_integer_ratio(c.window_ns, c.bin_width_ns)) {
    fail("window_ns must be an integer multiple of bin_width_ns");
  }
  if (!(c.gate_ns > 0.0)) fail("gate_ns must be > 0");
}

LevelPopulation LevelPopulation::ground(ReadoutState s) {
  LevelPopulation out;
  out.p(static_cast<Eigen::Index>(index(s))) = 1.0;
  return out;
}

LevelPopulation LevelPopulation::ground_mixture(const PopulationVector& c) {
  LevelPopulation out;
  out.p.head<4>() = c.values();
  return out;
}

RateMatrix rate_matrix(const RateModelConfig& c) {
  RateMatrix q = RateMatrix::Zero();
  const auto add = [&q](Level from, Level to, double rate) {
    q(idx(to), idx(from)) += rate;
    q(idx(from), idx(from)) -= rate;
  };
  for (std::size_t k = 0; k < 4; ++k) {
    add(static_cast<Level>(k), static_cast<Level>(k + 4), c.pump_rate);
  }
  for (std::size_t nuc = 0; nuc < 2; ++nuc) {
    const auto g0 = static_cast<Level>(nuc);
    const auto g1 = static_cast<Level>(nuc + 2);
    const auto e0 = static_cast<Level>(nuc + 4);
    const auto e1 = static_cast<Level>(nuc + 6);
    const auto s = static_cast<Level>(nuc + 8);
    add(e0, g0, c.rad_rate_ms0);
    add(e1, g1, c.rad_rate_ms1);
    add(e0, s, c.isc_rate_ms0);
    add(e1, s, c.isc_rate_ms1);
    add(s, g0, c.singlet_rate * (1.0 - c.singlet_branching_ms1));
    add(s, g1, c.singlet_rate * c.singlet_branching_ms1);
  }
  const double mix = c.eslac_rate * c.pump_rate;
  add(Level::excited_0up, Level::excited_1down, mix);
  add(Level::excited_1down, Level::excited_0up, mix);
  return q;
}

Propagation propagate(const RateModelConfig& config, const LevelPopulation& initial,
                      double dt_ns) {
  validate(config);
  if (dt_ns <= 0.0) dt_ns = config.bin_width_ns / 4.0;
  if (dt_ns > config.bin_width_ns / 4.0 * (1.0 + 1e-12) ||
      !is_integer_ratio(config.bin_width_ns, dt_ns)) {
    throw ValidationError("propagate: dt must divide bin_width and be <= bin_width/4");
  }
  const auto steps_per_bin =
      static_cast<std::size_t>(std::llround(config.bin_width_ns / dt_ns));
  const std::size_t bins = config.bins();

  const AugmentedMatrix step = (augmented_generator(config) * dt_ns).exp();

  Propagation out;
  out.trace.bin_width_ns = config.bin_width_ns;
  out.trace.counts.assign(bins, config.dark_counts_per_bin);
  out.trajectory.reserve(bins * steps_per_bin + 1);
  out.trajectory.push_back(initial);

  Eigen::Matrix<double, 11, 1> state;
  state.head<10>() = initial.p;
  for (std::size_t b = 0; b < bins; ++b) {
    double photons = 0.0;
    for (std::size_t k = 0; k < steps_per_bin; ++k) {
      state(10) = 0.0;
      state = step * state;
      photons += state(10);
      out.trajectory.push_back(LevelPopulation{state.head<10>()});
    }
    out.trace.counts[b] += photons;
  }
  return out;
}

BasisSet simulate_basis_traces(const RateModelConfig& config, double field_g) {
  std::array<PhotonTimeTrace, 4> traces;
  for (auto s : kReadoutStates) {
    traces[index(s)] = propagate(config, LevelPopulation::ground(s)).trace;
  }
  return BasisSet::from_traces(std::span<const PhotonTimeTrace, 4>(traces), 1.0, field_g);
}

PhotonTimeTrace superpose_trace(const BasisSet& basis, const PopulationVector& c) {
  PhotonTimeTrace out;
  out.bin_width_ns = basis.bin_width_ns();
  out.counts.resize(basis.bins());
  Eigen::Map<Eigen::VectorXd>(out.counts.data(), basis.matrix().rows()) =
      basis.matrix() * c.values();
  return out;
}

NoiseModel parse_noise_model(std::string_view text) {
  if (text == "poisson") return NoiseModel::poisson;
  if (text == "gauss" || text == "truncated-gaussian") return NoiseModel::truncated_gaussian;
  if (text == "none") return NoiseModel::none;
  throw ParseError("unknown noise model '" + std::string(text) + "'");
}

std::string_view to_string(NoiseModel model) {
  switch (model) {
    case NoiseModel::none: return "none";
    case NoiseModel::poisson: return "poisson";
    case NoiseModel::truncated_gaussian: return "truncated-gaussian";
  }
  return "?";
}

double sample_count(double mean, NoiseModel model, std::mt19937_64& rng) {
  if (!(mean > 0.0)) return 0.0;
  switch (model) {
    case NoiseModel::none:
      return mean;
    case NoiseModel::poisson:
      return static_cast<double>(std::poisson_distribution<std::int64_t>(mean)(rng));
    case NoiseModel::truncated_gaussian: {
      const double sigma = std::sqrt(mean);
      std::normal_distribution<double> normal(0.0, sigma);
      double x = normal(rng);
      while (std::abs(x) > sigma) x = normal(rng);
      return std::max(0.0, mean + x);
    }
  }
  return mean;
}

PhotonTimeTrace add_shot_noise(const PhotonTimeTrace& trace, NoiseModel model,
                               std::mt19937_64& rng) {
  PhotonTimeTrace out = trace;
  for (auto& m : out.counts) m = sample_count(m, model, rng);
  return out;
}

PhotonTimeTrace add_shot_noise(const PhotonTimeTrace& trace, NoiseModel model,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return add_shot_noise(trace, model, rng);
}

double electron_contrast(const RateModelConfig& config) {
  const auto levels = simulate_basis_traces(config).gated_levels(config.gate_ns);
  return levels(index(ReadoutState::zero_down)) / levels(index(ReadoutState::one_down));
}

RateModelConfig calibrate_isc_for_contrast(RateModelConfig config, double target,
                                           double upper) {
  double lo = config.isc_rate_ms0 * (1.0 + 1e-9) + 1e-12;
  double hi = upper;
  config.isc_rate_ms1 = lo;
  const double c_lo = electron_contrast(config);
  config.isc_rate_ms1 = hi;
  const double c_hi = electron_contrast(config);
  if (!(c_lo <= target && target <= c_hi)) {
    throw NonPhysicalConfig("calibrate: target contrast " + std::to_string(target) +
                            " outside reachable range [" + std::to_string(c_lo) + ", " +
                            std::to_string(c_hi) + "]");
  }
  for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
    config.isc_rate_ms1 = 0.5 * (lo + hi);
    (electron_contrast(config) < target ? lo : hi) = config.isc_rate_ms1;
  }
  config.isc_rate_ms1 = 0.5 * (lo + hi);
  return config;
}

}  // namespace nvread
