// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nvread/io.hpp"
#include "nvread/photodynamics.hpp"
#include "nvread/readout_estimator.hpp"
#include "nvread/spin_hamiltonian.hpp"
#include "nvread/studies.hpp"
#include "nvread/tomography.hpp"

namespace {

using namespace nvread;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> body;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Rates at 500 G with the ESLAC rate taken from the spin mixing.
RateModelConfig rates_at(double field_g) {
  RateModelConfig r;
  r.eslac_rate = FieldStudyConfig{}.eslac_coupling * readout_flip_flop_mixing({}, field_g);
  return r;
}

PopulationVector dirichlet(std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  Eigen::Vector4d v(g(rng), g(rng), g(rng), g(rng));
  return PopulationVector(v / v.sum());
}

Outcome fidelity_fixture() {
  const PopulationVector col1(0.42180, 0.51137, 0.05892, 0.00791);
  const PopulationVector col2(0.04460, 0.52938, 0.0, 0.42602);
  const PopulationVector col3(0.09760, 0.0, 0.44625, 0.45616);
  const double f1 = population_fidelity(PopulationVector(0.5, 0.5, 0.0, 0.0), col1);
  const double f2 = population_fidelity(PopulationVector(0.0, 0.5, 0.0, 0.5), col2);
  const double f3 = population_fidelity(PopulationVector(0.0, 0.0, 0.5, 0.5), col3);
  Outcome o;
  o.pass = std::abs(f1 - 0.99145) <= 0.0005 && std::abs(f2 - 0.99206) <= 0.0005;
  o.detail = fmt("col1 %.5f, col2 %.5f", f1, f2);
  o.notes.push_back(fmt("column 3: %.5f (reported 0.98845)", f3));
  return o;
}

Outcome estimator_round_trip() {
  const BasisSet basis = simulate_basis_traces(rates_at(500.0), 500.0);
  const PopulationEstimator est(basis);
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const PopulationVector c = dirichlet(rng);
    const Estimate e = est.solve(superpose_trace(basis, c).counts, Constraint::simplex);
    worst = std::max(worst, (e.c.values() - c.values()).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-6, fmt("max |c_est - c_true| = %.3g", worst), {}};
}

Outcome eslac_location() {
  const double b = find_eslac({}, 300.0, 700.0, 0.1);
  return {std::abs(b - 500.0) <= 10.0, fmt("ESLAC at %.3f G", b), {}};
}

Outcome contrast_calibration() {
  RateModelConfig total;
  total.gate_ns = total.window_ns;
  const double whole = electron_contrast(total);
  const double gated = electron_contrast(RateModelConfig{});
  Outcome o;
  o.pass = std::abs(whole - 1.30) <= 0.05;
  o.detail = fmt("total-window L0/L1 = %.4f", whole);
  o.notes.push_back(fmt("L0/L1 over the first %.0f ns = %.4f", RateModelConfig{}.gate_ns, gated));
  return o;
}

Outcome tomography_round_trip() {
  const RateModelConfig rates = rates_at(500.0);
  const Eigen::Vector4d levels = simulate_basis_traces(rates, 500.0).gated_levels(rates.gate_ns);
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const DensityMatrix rho = random_density_matrix(rng);
    const auto rec = simulate_tomography(rho, levels, 1.0, NoiseModel::none, 100 + k);
    worst = std::max(worst, (full_tomography(rec, levels).raw - rho).norm());
  }
  double min_pop = 1.0;
  double min_state = 1.0;
  for (auto s : kReadoutStates) {
    Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
    psi(static_cast<Eigen::Index>(index(s))) = 1.0;
    const auto rec = simulate_tomography(pure_state(psi), levels, 1e7, NoiseModel::poisson,
                                         1 + index(s));
    const Reconstruction r = full_tomography(rec, levels);
    const PopulationVector found(Eigen::Vector4d(r.rho.diagonal().real()));
    min_pop = std::min(min_pop, population_fidelity(PopulationVector::pure(s), found));
    min_state = std::min(min_state, state_fidelity(r.rho, psi));
  }
  Outcome o;
  o.pass = worst < 1e-8 && min_pop > 0.99;
  o.detail = fmt("max Frobenius error %.3g, min basis-state fidelity %.5f", worst, min_pop);
  o.notes.push_back(fmt("min <psi|rho|psi> after projection: %.5f", min_state));
  return o;
}

Outcome closed_form_agreement() {
  const Eigen::Vector4d l(1.0, 0.73, 0.82, 0.56);
  const auto proto = coherence_protocol(Coherence::up0_down1);
  std::mt19937_64 rng(99);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const DensityMatrix rho = random_density_matrix(rng);
    const double s = 0.5 * (rho(0, 0).real() + rho(3, 3).real());
    const double a = rho(0, 3).real();
    const double b = rho(0, 3).imag();
    const double tail = rho(2, 2).real() * l(2) + rho(1, 1).real() * l(3);
    const double ref[4] = {(s - a) * l(0) + (s + a) * l(1) + tail,
                           (s + a) * l(0) + (s - a) * l(1) + tail,
                           (s + b) * l(0) + (s - b) * l(1) + tail,
                           (s - b) * l(0) + (s + b) * l(1) + tail};
    for (int j = 0; j < 4; ++j) {
      const double got = expected_counts(apply_sequence(rho, proto.sequences[j]), l);
      worst = std::max(worst, std::abs(got - ref[j]));
    }
  }
  return {worst < 1e-10, fmt("max deviation %.3g", worst), {}};
}

Outcome speedup_reproduction() {
  const FitParams direct{-0.31, 1.78, -3.47, 4.43, FitModel::time, 0.0, 0};
  const FitParams trad{-0.33, 1.45, -1.28, 5.60, FitModel::time, 0.0, 0};
  const double td = time_to_fidelity(direct, 0.95);
  const double tt = time_to_fidelity(trad, 0.95);
  const double ratio = tt / td;
  Outcome o;
  o.pass = std::abs(td / 6.83e8 - 1.0) <= 0.15 && std::abs(tt / 2.24e10 - 1.0) <= 0.15 &&
           std::abs(ratio - 32.0) <= 5.0;
  o.detail = fmt("t_direct %.3g ns, t_traditional %.3g ns, ratio %.2f", td, tt, ratio);
  FitParams d = direct;
  FitParams t = trad;
  d.delta = delta_for(ReadoutMethod::direct);
  t.delta = delta_for(ReadoutMethod::traditional);
  const double td2 = time_to_fidelity(d, 0.95);
  const double tt2 = time_to_fidelity(t, 0.95);
  o.notes.push_back(fmt("with delta = log10(per-shot duration): %.3g ns, %.3g ns, ratio %.2f", td2, tt2,
                        tt2 / td2));
  return o;
}

SweepStudyConfig desk_study(ReadoutMethod method) {
  SweepStudyConfig cfg;
  cfg.method = method;
  cfg.trials = 100;
  cfg.test_sweeps = decade_grid(3, 7);
  return cfg;
}

Outcome study_ordering() {
  const BasisSet basis = simulate_basis_traces(rates_at(500.0), 500.0);
  const auto direct = run_sweep_study(desk_study(ReadoutMethod::direct), basis);
  const auto trad = run_sweep_study(desk_study(ReadoutMethod::traditional), basis);
  Outcome o;
  o.pass = true;
  int checked = 0;
  std::string row;
  for (std::size_t i = 0; i < direct.points.size(); ++i) {
    const auto& d = direct.points[i];
    const auto& t = trad.points[i];
    row += fmt(" %.0e:%.3f/%.3f", d.sweeps, d.mean, t.mean);
    if (d.mean >= 0.90 && t.mean >= 0.90) continue;
    ++checked;
    const double sigma = std::sqrt((d.stddev * d.stddev) / static_cast<double>(d.trials) +
                                   (t.stddev * t.stddev) / static_cast<double>(t.trials));
    if (d.mean < t.mean - 2.0 * sigma) o.pass = false;
  }
  o.pass = o.pass && checked > 0;
  o.detail = std::to_string(checked) + " points below 0.90 checked";
  o.notes.push_back("sweeps: direct/traditional mean F_p" + row);
  return o;
}

Outcome field_scan() {
  const std::vector<double> fields{400.0, 450.0, 500.0, 550.0, 600.0};
  FieldStudyConfig cfg;
  cfg.study = desk_study(ReadoutMethod::direct);
  const auto rows = field_dependence_study(fields, cfg);
  std::vector<double> kappa;
  std::vector<double> sweeps;
  std::string row;
  for (const auto& r : rows) {
    kappa.push_back(r.kappa);
    sweeps.push_back(std::isnan(r.sweeps_to_target) ? INFINITY : r.sweeps_to_target);
    row += fmt(" %.0fG:%.4g/%.3g", r.field_g, r.kappa, r.sweeps_to_target);
  }
  const auto kmin = std::min_element(kappa.begin(), kappa.end()) - kappa.begin();
  const auto smin = std::min_element(sweeps.begin(), sweeps.end()) - sweeps.begin();
  const Eigen::Vector3d q = quadratic_fit(fields, kappa);
  Outcome o;
  o.pass = kmin == 2 && smin == 2 && q(0) > 0.0;
  o.detail = fmt("argmin kappa %.0f G, argmin sweeps %.0f G, curvature %.4g",
                 fields[static_cast<std::size_t>(kmin)], fields[static_cast<std::size_t>(smin)], q(0));
  o.notes.push_back("field: kappa/sweeps-to-0.9" + row);
  return o;
}

Outcome conservation_and_determinism() {
  double worst = 0.0;
  std::vector<RateModelConfig> configs{RateModelConfig{}, rates_at(500.0)};
  configs.back().singlet_branching_ms1 = 0.2;
  for (const auto& cfg : configs) {
    for (auto s : kReadoutStates) {
      const auto prop = propagate(cfg, LevelPopulation::ground(s));
      for (const auto& lp : prop.trajectory) worst = std::max(worst, std::abs(lp.p.sum() - 1.0));
    }
  }
  const BasisSet basis = simulate_basis_traces(rates_at(500.0), 500.0);
  SweepStudyConfig cfg = desk_study(ReadoutMethod::direct);
  cfg.trials = 40;
  cfg.seed = 12345;
  const std::string a = io::curve_to_csv(run_sweep_study(cfg, basis));
  const std::string b = io::curve_to_csv(run_sweep_study(cfg, basis));
  cfg.method = ReadoutMethod::traditional;
  const std::string c = io::curve_to_csv(run_sweep_study(cfg, basis));
  const std::string d = io::curve_to_csv(run_sweep_study(cfg, basis));
  Outcome o;
  o.pass = worst <= 1e-12 && a == b && c == d;
  o.detail = fmt("max |sum p - 1| = %.3g, repeated studies ", worst);
  o.detail += (a == b && c == d) ? "byte-identical" : "differ";
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "population fidelity fixture", 1e-3, fidelity_fixture},
      {2, "estimator round trip", 10.0, estimator_round_trip},
      {3, "ESLAC location", 5.0, eslac_location},
      {4, "contrast calibration", 1.0, contrast_calibration},
      {5, "tomography round trip", 30.0, tomography_round_trip},
      {6, "closed-form sequence counts", 5.0, closed_form_agreement},
      {7, "speedup from fit constants", 1e-3, speedup_reproduction},
      {8, "direct vs traditional ordering", 600.0, study_ordering},
      {9, "field scan", 900.0, field_scan},
      {10, "conservation and determinism", 60.0, conservation_and_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = elapsed < c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s [%2d] %s: %s (%.3g s of %.3g s%s)\n", pass ? "PASS" : "FAIL", c.id,
                c.name.c_str(), o.detail.c_str(), elapsed, c.budget_s, in_time ? "" : ", over budget");
    for (const auto& n : o.notes) std::printf("       %s\n", n.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
