#include "nvread/studies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <thread>

#include "nvread/errors.hpp"
#include "nvread/tomography.hpp"

namespace nvread {
namespace {

PopulationVector dirichlet_target(std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(1.0, 1.0);
  Eigen::Vector4d c;
  for (Eigen::Index k = 0; k < 4; ++k) c(k) = gamma(rng);
  return PopulationVector(c / c.sum());
}

double safe_fidelity(const PopulationVector& truth, const PopulationVector& est) {
  try {
    return population_fidelity(truth, est);
  } catch (const ZeroVector&) {
    return 0.0;
  }
}

// One study trial; `model` holds whatever the method needs precomputed.
struct TrialModel {
  ReadoutMethod method;
  NoiseModel noise;
  Constraint constraint;
  const BasisSet::Matrix* basis;
  const PopulationEstimator* estimator;
  Eigen::Matrix4d readout;
  Eigen::Vector4d levels;
};

double run_trial(const TrialModel& model, double sweeps, std::mt19937_64& rng) {
  const PopulationVector target = dirichlet_target(rng);
  if (model.method == ReadoutMethod::direct) {
    const Eigen::VectorXd mean = sweeps * (*model.basis * target.values());
    std::vector<double> m(static_cast<std::size_t>(mean.size()));
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
      m[static_cast<std::size_t>(i)] = sample_count(mean(i), model.noise, rng) / sweeps;
    }
    return safe_fidelity(target, model.estimator->solve(m, model.constraint).c);
  }
  const Eigen::Vector4d mean = sweeps * (model.readout * target.values());
  Eigen::Vector4d measured;
  for (Eigen::Index k = 0; k < 4; ++k) measured(k) = sample_count(mean(k), model.noise, rng) / sweeps;
  return safe_fidelity(target, traditional_invert({model.levels, measured}).c);
}

}  // namespace

ReadoutMethod parse_readout_method(std::string_view text) {
  if (text == "direct") return ReadoutMethod::direct;
  if (text == "traditional") return ReadoutMethod::traditional;
  throw ParseError("unknown readout method '" + std::string(text) + "'");
}

std::string_view to_string(ReadoutMethod m) {
  return m == ReadoutMethod::direct ? "direct" : "traditional";
}

std::string_view to_string(FitModel m) { return m == FitModel::sweeps ? "sweeps" : "time"; }

FitModel parse_fit_model(std::string_view text) {
  if (text == "sweeps") return FitModel::sweeps;
  if (text == "time") return FitModel::time;
  throw ParseError("unknown fit model '" + std::string(text) + "'");
}

std::vector<double> decade_grid(int lo_exp, int hi_exp) {
  std::vector<double> out;
  for (int e = lo_exp; e <= hi_exp; ++e) out.push_back(std::pow(10.0, e));
  return out;
}

void validate(const SweepStudyConfig& config) {
  if (config.test_sweeps.empty()) throw ValidationError("study needs at least one sweep count");
  for (std::size_t i = 0; i < config.test_sweeps.size(); ++i) {
    if (!(config.test_sweeps[i] > 0.0)) throw ValidationError("sweep counts must be > 0");
    if (i > 0 && !(config.test_sweeps[i] > config.test_sweeps[i - 1])) {
      throw ValidationError("sweep counts must be strictly increasing");
    }
  }
  if (!(config.calibration_sweeps >= config.test_sweeps.back())) {
    throw ValidationError("calibration sweeps must be >= every test sweep count");
  }
  if (config.trials < 1) throw ValidationError("trials must be >= 1");
  const Timing& t = config.timing;
  if (!(t.laser_ns > 0.0)) throw ValidationError("laser duration must be > 0");
  if (t.mw_pi_ns < 0.0 || t.rf1_pi_ns < 0.0 || t.rf2_pi_ns < 0.0) {
    throw ValidationError("pulse durations must be >= 0");
  }
  if (!(config.gate_ns > 0.0)) throw ValidationError("gate must be > 0");
}

FidelityCurve run_sweep_study(const SweepStudyConfig& config, const BasisSet& basis) {
  validate(config);
  const BasisSet per_sweep = basis.per_sweep();
  const PopulationEstimator estimator(per_sweep);
  TrialModel model{config.method, config.noise, config.constraint, &per_sweep.matrix(),
                   &estimator,    {},           {}};
  model.levels = per_sweep.gated_levels(config.gate_ns);
  model.readout = readout_matrix(model.levels);

  FidelityCurve curve;
  curve.method = config.method;
  curve.per_shot_ns = per_shot_duration_ns(config.method, config.timing);

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(config.threads == 0 ? hw : config.threads,
                                                  config.trials));
  std::vector<double> scores(config.trials);
  for (std::size_t j = 0; j < config.test_sweeps.size(); ++j) {
    const double sweeps = config.test_sweeps[j];
    const auto work = [&](unsigned w) {
      for (std::size_t k = w; k < config.trials; k += workers) {
        std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                          static_cast<std::uint32_t>(config.seed >> 32),
                          static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(k)};
        std::mt19937_64 rng(seq);
        scores[k] = run_trial(model, sweeps, rng);
      }
    };
    if (workers <= 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }

    double sum = 0.0;
    for (double f : scores) sum += f;
    const double mean = sum / static_cast<double>(scores.size());
    double ss = 0.0;
    for (double f : scores) ss += (f - mean) * (f - mean);
    const double sd = scores.size() > 1 ? std::sqrt(ss / static_cast<double>(scores.size() - 1)) : 0.0;
    curve.points.push_back({sweeps, sweeps * curve.per_shot_ns, mean, sd, scores.size()});
  }
  return curve;
}

FitParams fit_fidelity_curve(const FidelityCurve& curve, FitModel model) {
  FitParams fit;
  fit.model = model;
  fit.delta = model == FitModel::time ? std::log10(curve.per_shot_ns) : 0.0;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& p : curve.points) {
    if (!(p.mean < 1.0) || !(p.sweeps > 0.0)) continue;
    const double x = model == FitModel::sweeps ? std::log10(p.sweeps)
                                               : std::log10(p.time_ns) - fit.delta;
    xs.push_back(x);
    ys.push_back(std::log(1.0 - p.mean));
  }
  if (xs.size() < 4) {
    throw DegenerateFit("fit needs at least 4 points with F < 1, got " + std::to_string(xs.size()));
  }
  const Eigen::Vector3d p = quadratic_fit(xs, ys);
  fit.a = p(0);
  fit.b = p(1);
  fit.c = p(2);
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = fit.a * xs[i] * xs[i] + fit.b * xs[i] + fit.c - ys[i];
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(xs.size()));
  fit.points_used = xs.size();
  return fit;
}

Eigen::Vector3d quadratic_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionMismatch("quadratic_fit: x and y differ in length");
  if (x.size() < 3) throw DegenerateFit("quadratic_fit needs at least 3 points");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd v(n, 3);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double xi = x[static_cast<std::size_t>(i)];
    v.row(i) << xi * xi, xi, 1.0;
    rhs(i) = y[static_cast<std::size_t>(i)];
  }
  const auto qr = v.colPivHouseholderQr();
  if (qr.rank() < 3) throw DegenerateFit("quadratic_fit: abscissae do not span a quadratic");
  return qr.solve(rhs);
}

double per_shot_duration_ns(ReadoutMethod method, const Timing& timing) {
  if (method == ReadoutMethod::direct) return timing.laser_ns;
  const PulseTiming pt{timing.mw_pi_ns, timing.rf1_pi_ns, timing.rf2_pi_ns};
  double ops = 0.0;
  for (const auto& seq : diagonal_sequences(pt)) ops += duration_ns(seq);
  return timing.laser_ns + ops / 4.0;
}

double time_axis(double sweeps, ReadoutMethod method, const Timing& timing) {
  if (!(sweeps >= 1.0)) throw ValidationError("sweeps must be >= 1");
  return sweeps * per_shot_duration_ns(method, timing);
}

double delta_for(ReadoutMethod method, const Timing& timing) {
  return std::log10(per_shot_duration_ns(method, timing));
}

double fitted_fidelity(const FitParams& fit, double x) {
  return 1.0 - std::exp(fit.a * x * x + fit.b * x + fit.c);
}

double abscissa_for_fidelity(const FitParams& fit, double target) {
  if (!(target >= 0.0 && target < 1.0)) {
    throw ValidationError("target fidelity must lie in [0, 1)");
  }
  // F >= target  <=>  q(x) <= level.
  const double level = std::log1p(-target);
  const double a = fit.a;
  const double b = fit.b;
  const double c = fit.c - level;
  const auto q = [&](double x) { return (a * x + b) * x + c; };

  std::vector<double> roots;
  if (a == 0.0) {
    if (b != 0.0) roots.push_back(-c / b);
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      // Stable pair of roots.
      const double s = -0.5 * (b + std::copysign(std::sqrt(disc), b));
      if (s != 0.0) roots.push_back(c / s);
      roots.push_back(s / a);
    }
  }
  std::sort(roots.begin(), roots.end());
  for (double r : roots) {
    if (r < 0.0) continue;
    if (2.0 * a * r + b < 0.0) return r;
  }
  // No downward crossing ahead: the target holds throughout only if q starts
  // at or below the level and never crosses it again.
  const bool crosses_later = std::any_of(roots.begin(), roots.end(), [](double r) { return r > 0.0; });
  if (q(0.0) <= 0.0 && !crosses_later) return 0.0;
  throw TargetUnreachable("fitted curve never reaches fidelity " + std::to_string(target));
}

double time_to_fidelity(const FitParams& fit, double target) {
  return std::pow(10.0, abscissa_for_fidelity(fit, target) + fit.delta);
}

double sweeps_to_fidelity(const FitParams& fit, double target) {
  return std::pow(10.0, abscissa_for_fidelity(fit, target));
}

double speedup(const FitParams& direct, const FitParams& traditional, double target) {
  return time_to_fidelity(traditional, target) / time_to_fidelity(direct, target);
}

std::vector<FieldStudyRow> field_dependence_study(const std::vector<double>& fields_g,
                                                  const FieldStudyConfig& config) {
  if (fields_g.size() < 2) throw ValidationError("field study needs at least two fields");
  validate(config.study);
  std::vector<FieldStudyRow> rows;
  for (double field : fields_g) {
    FieldStudyRow row;
    row.field_g = field;
    row.mixing = readout_flip_flop_mixing(config.spin, field);
    row.eslac_rate = config.eslac_coupling * row.mixing;
    RateModelConfig rates = config.rates;
    rates.eslac_rate = row.eslac_rate;
    const BasisSet basis = simulate_basis_traces(rates, field);
    row.kappa = noise_magnification(basis);
    row.curve = run_sweep_study(config.study, basis);
    row.fit = fit_fidelity_curve(row.curve, FitModel::sweeps);
    try {
      row.sweeps_to_target = sweeps_to_fidelity(row.fit, config.target_fidelity);
    } catch (const TargetUnreachable&) {
      row.sweeps_to_target = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace nvread
