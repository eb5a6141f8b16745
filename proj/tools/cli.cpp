#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nvread/errors.hpp"
#include "nvread/io.hpp"
#include "nvread/photodynamics.hpp"
#include "nvread/readout_estimator.hpp"
#include "nvread/spin_hamiltonian.hpp"
#include "nvread/studies.hpp"
#include "nvread/tomography.hpp"

namespace nvread::cli {
namespace {

namespace fs = std::filesystem;

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  int verbosity = 0;
};

// Collects outputs of one command and writes the manifest at the end.
class Run {
 public:
  Run(std::string command, const Globals& g, const io::ModelConfig& config, std::ostream& log)
      : out_(g.out_dir), log_(log), verbose_(g.verbosity > 0) {
    manifest_.tool_version = NVREAD_VERSION;
    manifest_.command = std::move(command);
    manifest_.config_hash = io::config_hash(config);
    manifest_.seed = config.study.seed;
    manifest_.started_utc = io::utc_now();
  }

  void write(const std::string& name, const std::string& text) {
    io::write_text(out_ / name, text);
    manifest_.outputs.push_back(name);
    if (verbose_) log_ << "wrote " << (out_ / name).string() << "\n";
  }

  void finish() {
    manifest_.finished_utc = io::utc_now();
    io::write_text(out_ / "manifest.json", io::manifest_to_json(manifest_));
  }

  const fs::path& dir() const { return out_; }

 private:
  fs::path out_;
  std::ostream& log_;
  bool verbose_;
  io::RunManifest manifest_;
};

io::ModelConfig load(const Globals& g) {
  io::ModelConfig config = g.config_path.empty() ? io::ModelConfig{} : io::load_config(g.config_path);
  if (g.seed) config.study.seed = *g.seed;
  return config;
}

// Field-derived ESLAC rate when a field is given, the configured one otherwise.
RateModelConfig rates_for(const io::ModelConfig& config, std::optional<double> field,
                          std::optional<double> eslac_rate) {
  RateModelConfig rates = config.rates;
  if (eslac_rate) {
    rates.eslac_rate = *eslac_rate;
  } else if (field) {
    rates.eslac_rate = config.eslac_coupling * readout_flip_flop_mixing(config.spin, *field);
  }
  validate(rates);
  return rates;
}

PopulationVector parse_populations(const std::string& text) {
  const auto v = io::parse_number_list(text);
  if (v.size() != 4) throw ValidationError("expected four comma-separated populations");
  return PopulationVector(v[0], v[1], v[2], v[3]);
}

std::optional<Eigen::Vector4cd> parse_state(const std::string& text) {
  if (text.empty()) return std::nullopt;
  Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
  const auto values = io::parse_number_list(text);
  if (values.size() == 8) {
    for (Eigen::Index k = 0; k < 4; ++k) {
      psi(k) = {values[static_cast<std::size_t>(2 * k)], values[static_cast<std::size_t>(2 * k + 1)]};
    }
    if (!(psi.norm() > 0.0)) throw ValidationError("state vector is zero");
    return psi.normalized();
  }
  if (!values.empty()) throw ValidationError("--psi needs 8 numbers (re, im per amplitude)");
  return std::nullopt;
}

void simulate_cmd(const Globals& g, std::optional<double> field, std::optional<double> eslac,
                  const std::string& superpose, double sweeps, const std::string& noise,
                  std::ostream& out, std::ostream& err) {
  const io::ModelConfig config = load(g);
  const RateModelConfig rates = rates_for(config, field, eslac);
  const NoiseModel model = parse_noise_model(noise);
  std::optional<PopulationVector> c;
  if (!superpose.empty()) c = parse_populations(superpose);
  if (!(sweeps > 0.0)) throw ValidationError("--sweeps must be > 0");

  const BasisSet basis = simulate_basis_traces(rates, field.value_or(0.0));
  Run run("simulate", g, config, err);
  for (auto s : kReadoutStates) {
    run.write("trace_" + std::string(label(s)) + ".csv", io::trace_to_csv(basis.column(s)));
  }
  run.write("basis.csv", io::basis_to_csv(basis));
  run.write("basis.json", io::basis_metadata_json(basis));
  if (c) {
    PhotonTimeTrace trace = superpose_trace(basis, *c);
    for (auto& x : trace.counts) x *= sweeps;
    trace = add_shot_noise(trace, model, config.study.seed);
    run.write("superposition.csv", io::trace_to_csv(trace));
  }
  run.finish();
  out << "simulated " << basis.bins() << " bins, eslac_rate " << io::format_number(rates.eslac_rate)
      << ", contrast " << io::format_number(electron_contrast(rates)) << "\n";
}

void estimate_cmd(const Globals& g, const std::string& basis_path, const std::string& trace_path,
                  const std::string& constraint, const std::string& expected, double trace_sweeps,
                  std::ostream& out, std::ostream& err) {
  const io::ModelConfig config = load(g);
  const BasisSet basis = io::read_basis(basis_path);
  const PhotonTimeTrace trace = io::read_trace(trace_path);
  std::optional<PopulationVector> c_expected;
  if (!expected.empty()) c_expected = parse_populations(expected);
  const Estimate est = estimate_populations(basis, trace, parse_constraint(constraint), trace_sweeps);
  const std::string report = io::estimation_report_json(est, noise_magnification(basis), c_expected);
  Run run("estimate", g, config, err);
  run.write("estimate.json", report);
  run.finish();
  out << report;
}

void tomo_cmd(const Globals& g, const std::string& records_path, const std::string& state,
              const std::string& psi_text, double sweeps, const std::string& noise, bool no_project,
              std::optional<double> field, std::optional<double> eslac, std::ostream& out,
              std::ostream& err) {
  const io::ModelConfig config = load(g);
  const RateModelConfig rates = rates_for(config, field, eslac);
  const Eigen::Vector4d levels =
      simulate_basis_traces(rates, field.value_or(0.0)).gated_levels(rates.gate_ns);

  std::optional<Eigen::Vector4cd> psi = parse_state(psi_text);
  if (!state.empty()) {
    psi = Eigen::Vector4cd::Zero();
    (*psi)(static_cast<Eigen::Index>(index(parse_readout_state(state)))) = 1.0;
  }

  Run run("tomo", g, config, err);
  TomographyRecord record;
  if (!records_path.empty()) {
    record = io::records_from_json(io::read_text(records_path));
  } else {
    if (!psi) throw ValidationError("tomo needs --records, --state or --psi");
    if (!(sweeps > 0.0)) throw ValidationError("--sweeps must be > 0");
    record = simulate_tomography(pure_state(*psi), levels, sweeps, parse_noise_model(noise),
                                 config.study.seed);
    run.write("records.json", io::records_to_json(record));
  }
  const Reconstruction rec = full_tomography(record, levels, !no_project);
  std::optional<double> fidelity;
  std::optional<double> pop_fidelity;
  if (psi) {
    fidelity = state_fidelity(rec.rho, *psi);
    const Eigen::Vector4d target = psi->cwiseAbs2() / psi->squaredNorm();
    const Eigen::Vector4d found = rec.rho.diagonal().real();
    pop_fidelity = population_fidelity(PopulationVector(target), PopulationVector(found));
  }
  const std::string report = io::reconstruction_report_json(rec, fidelity, pop_fidelity);
  run.write("reconstruction.json", report);
  run.finish();
  out << report;
}

std::vector<io::SpeedupRow> speedup_table(const FitParams& direct, const FitParams& traditional) {
  std::vector<io::SpeedupRow> rows;
  for (double target : {0.9, 0.95}) {
    io::SpeedupRow row{target, std::numeric_limits<double>::quiet_NaN(),
                       std::numeric_limits<double>::quiet_NaN(),
                       std::numeric_limits<double>::quiet_NaN()};
    try {
      row.direct_ns = time_to_fidelity(direct, target);
      row.traditional_ns = time_to_fidelity(traditional, target);
      row.ratio = row.traditional_ns / row.direct_ns;
    } catch (const TargetUnreachable&) {
    }
    rows.push_back(row);
  }
  return rows;
}

void sweep_study_cmd(const Globals& g, const std::string& method, const std::string& grid,
                     std::optional<std::size_t> trials, std::optional<std::string> noise,
                     std::optional<double> field, std::optional<double> eslac, std::ostream& out,
                     std::ostream& err) {
  io::ModelConfig config = load(g);
  if (!grid.empty()) config.study.test_sweeps = io::parse_number_list(grid);
  if (trials) config.study.trials = *trials;
  if (noise) config.study.noise = parse_noise_model(*noise);
  std::vector<ReadoutMethod> methods;
  if (method == "both") {
    methods = {ReadoutMethod::direct, ReadoutMethod::traditional};
  } else {
    methods = {parse_readout_method(method)};
  }
  validate(config.study);
  const RateModelConfig rates = rates_for(config, field, eslac);
  const BasisSet basis = simulate_basis_traces(rates, field.value_or(0.0));

  Run run("sweep-study", g, config, err);
  std::vector<FidelityCurve> curves;
  std::vector<FitParams> fits;
  for (auto m : methods) {
    SweepStudyConfig sc = config.study;
    sc.method = m;
    curves.push_back(run_sweep_study(sc, basis));
    run.write("curve_" + std::string(to_string(m)) + ".csv", io::curve_to_csv(curves.back()));
    try {
      fits.push_back(fit_fidelity_curve(curves.back(), FitModel::time));
    } catch (const DegenerateFit& e) {
      err << "warning: " << e.what() << "\n";
      fits.push_back(FitParams{std::numeric_limits<double>::quiet_NaN(),
                               std::numeric_limits<double>::quiet_NaN(),
                               std::numeric_limits<double>::quiet_NaN(), 0.0, FitModel::time, 0.0, 0});
    }
  }
  std::vector<io::SpeedupRow> speedups;
  if (curves.size() == 2 && fits[0].points_used > 0 && fits[1].points_used > 0) {
    speedups = speedup_table(fits[0], fits[1]);
  }
  run.write("study.json", io::study_report_json(config, curves, fits, speedups));
  run.finish();
  for (const auto& curve : curves) out << io::curve_to_csv(curve);
}

void field_scan_cmd(const Globals& g, const std::string& fields, const std::string& grid,
                    std::optional<std::size_t> trials, std::optional<std::string> noise,
                    const std::string& method, double target, std::ostream& out, std::ostream& err) {
  io::ModelConfig config = load(g);
  if (!grid.empty()) config.study.test_sweeps = io::parse_number_list(grid);
  if (trials) config.study.trials = *trials;
  if (noise) config.study.noise = parse_noise_model(*noise);
  config.study.method = parse_readout_method(method);
  validate(config.rates);
  FieldStudyConfig fc{config.spin, config.rates, config.study, config.eslac_coupling, target};
  const auto rows = field_dependence_study(io::parse_number_list(fields), fc);
  Run run("field-scan", g, config, err);
  const std::string table = io::field_scan_csv(rows);
  run.write("field_scan.csv", table);
  run.write("field_scan.json", io::field_scan_json(rows));
  run.finish();
  out << table;
}

void fit_cmd(const Globals& g, const std::string& curve_path, const std::string& params,
             const std::string& model, const std::string& targets, std::ostream& out, std::ostream& err) {
  const io::ModelConfig config = load(g);
  FitParams fit;
  if (!params.empty()) {
    const auto p = io::parse_number_list(params);
    if (p.size() != 3 && p.size() != 4) throw ValidationError("--params needs a,b,c[,delta]");
    fit.a = p[0];
    fit.b = p[1];
    fit.c = p[2];
    fit.delta = p.size() == 4 ? p[3] : 0.0;
    fit.model = p.size() == 4 ? FitModel::time : FitModel::sweeps;
  } else {
    if (curve_path.empty()) throw ValidationError("fit needs --curve or --params");
    fit = fit_fidelity_curve(io::curve_from_csv(io::read_text(curve_path)), parse_fit_model(model));
  }
  std::string report = io::fit_json(fit);
  std::string lines;
  for (double target : io::parse_number_list(targets)) {
    lines += "target " + io::format_number(target) + ": ";
    try {
      const double x = time_to_fidelity(fit, target);
      lines += (fit.model == FitModel::time ? "time_ns " : "sweeps ") + io::format_number(x) + "\n";
    } catch (const TargetUnreachable&) {
      lines += "unreachable\n";
    }
  }
  Run run("fit", g, config, err);
  run.write("fit.json", report);
  run.write("fit_targets.txt", lines);
  run.finish();
  out << report << lines;
}

void calibrate_cmd(const Globals& g, double contrast, std::ostream& out, std::ostream& err) {
  io::ModelConfig config = load(g);
  validate(config.rates);
  config.rates = calibrate_isc_for_contrast(config.rates, contrast);
  Run run("calibrate", g, config, err);
  run.write("calibrated_config.json", io::config_to_json(config));
  run.finish();
  out << "isc_rate_ms1 = " << io::format_number(config.rates.isc_rate_ms1) << " (contrast "
      << io::format_number(electron_contrast(config.rates)) << ")\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Direct photon-time-trace readout of NV electron-nuclear spin populations"};
  app.set_version_flag("--version", std::string(NVREAD_VERSION));
  app.require_subcommand(1);

  Globals g;
  app.add_option("--config", g.config_path, "Parameter file (JSON or key = value)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out_dir, "Output directory");
  app.add_flag("-v,--verbose", g.verbosity, "Log written files to stderr");

  std::optional<double> field;
  std::optional<double> eslac;
  std::string noise = "poisson";
  std::optional<std::string> noise_opt;
  std::string grid;
  std::optional<std::size_t> trials;
  std::string constraint = "simplex";
  std::string expected;
  std::string superpose;
  double sweeps = 1e7;

  auto* sim = app.add_subcommand("simulate", "Write the four basis traces and the basis set");
  sim->add_option("--field", field, "Magnetic field (G); sets the ESLAC rate from spin mixing");
  sim->add_option("--eslac-rate", eslac, "ESLAC rate per pump cycle");
  sim->add_option("--superpose", superpose, "Populations c0up,c0down,c1up,c1down for a mixed trace");
  sim->add_option("--sweeps", sweeps, "Sweeps for the superposition trace");
  sim->add_option("--noise", noise, "poisson, gauss or none")->check(CLI::IsMember({"poisson", "gauss", "none"}));

  std::string basis_path;
  std::string trace_path;
  double trace_sweeps = 1.0;
  auto* est = app.add_subcommand("estimate", "Fit populations to a measured trace");
  est->add_option("--basis", basis_path, "Basis CSV (with JSON sidecar)")->required();
  est->add_option("--trace", trace_path, "Trace CSV or JSON")->required();
  est->add_option("--constraint", constraint, "simplex or unit-norm")
      ->check(CLI::IsMember({"simplex", "unit-norm"}));
  est->add_option("--expected", expected, "Expected populations; adds the fidelity");
  est->add_option("--trace-sweeps", trace_sweeps, "Sweeps behind the trace");

  std::string records_path;
  std::string state;
  std::string psi;
  bool no_project = false;
  auto* tomo = app.add_subcommand("tomo", "Two-qubit state tomography");
  tomo->add_option("--records", records_path, "Record JSON to reconstruct");
  tomo->add_option("--state", state, "Simulate a basis state: 0up, 0down, 1up or 1down");
  tomo->add_option("--psi", psi, "Simulate a pure state: re0,im0,...,re3,im3");
  tomo->add_option("--sweeps", sweeps, "Sweeps per sequence when simulating");
  tomo->add_option("--noise", noise, "poisson, gauss or none")->check(CLI::IsMember({"poisson", "gauss", "none"}));
  tomo->add_flag("--no-project", no_project, "Keep the raw linear inversion");
  tomo->add_option("--field", field, "Magnetic field (G) for the fluorescence levels");
  tomo->add_option("--eslac-rate", eslac, "ESLAC rate per pump cycle");

  std::string method = "both";
  auto* study = app.add_subcommand("sweep-study", "Fidelity versus sweeps and time");
  study->add_option("--method", method, "direct, traditional or both")
      ->check(CLI::IsMember({"direct", "traditional", "both"}));
  study->add_option("--sweeps-grid", grid, "Comma-separated sweep counts");
  study->add_option("--trials", trials, "Trials per point")->check(CLI::PositiveNumber);
  study->add_option("--noise", noise_opt, "poisson, gauss or none")->check(CLI::IsMember({"poisson", "gauss", "none"}));
  study->add_option("--field", field, "Magnetic field (G)");
  study->add_option("--eslac-rate", eslac, "ESLAC rate per pump cycle");

  std::string fields = "400,450,500,550,600";
  std::string scan_method = "direct";
  double target = 0.9;
  auto* scan = app.add_subcommand("field-scan", "Readout performance across magnetic fields");
  scan->add_option("--fields", fields, "Comma-separated fields (G)");
  scan->add_option("--sweeps-grid", grid, "Comma-separated sweep counts");
  scan->add_option("--trials", trials, "Trials per point")->check(CLI::PositiveNumber);
  scan->add_option("--noise", noise_opt, "poisson, gauss or none")->check(CLI::IsMember({"poisson", "gauss", "none"}));
  scan->add_option("--method", scan_method, "direct or traditional")
      ->check(CLI::IsMember({"direct", "traditional"}));
  scan->add_option("--target", target, "Fidelity for the sweeps column");

  std::string curve_path;
  std::string params;
  std::string model = "sweeps";
  std::string targets = "0.9,0.95";
  auto* fit = app.add_subcommand("fit", "Fit F = 1 - exp(a x^2 + b x + c) and solve for targets");
  fit->add_option("--curve", curve_path, "Curve CSV from sweep-study");
  fit->add_option("--params", params, "Use a,b,c[,delta] instead of fitting");
  fit->add_option("--model", model, "sweeps or time")->check(CLI::IsMember({"sweeps", "time"}));
  fit->add_option("--targets", targets, "Comma-separated target fidelities");

  double contrast = 1.30;
  auto* cal = app.add_subcommand("calibrate", "Fit isc_rate_ms1 to an electron contrast");
  cal->add_option("--contrast", contrast, "Target L(0down)/L(1down)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*sim) {
      simulate_cmd(g, field, eslac, superpose, sweeps, noise, out, err);
    } else if (*est) {
      estimate_cmd(g, basis_path, trace_path, constraint, expected, trace_sweeps, out, err);
    } else if (*tomo) {
      tomo_cmd(g, records_path, state, psi, sweeps, noise, no_project, field, eslac, out, err);
    } else if (*study) {
      sweep_study_cmd(g, method, grid, trials, noise_opt, field, eslac, out, err);
    } else if (*scan) {
      field_scan_cmd(g, fields, grid, trials, noise_opt, scan_method, target, out, err);
    } else if (*fit) {
      fit_cmd(g, curve_path, params, model, targets, out, err);
    } else if (*cal) {
      calibrate_cmd(g, contrast, out, err);
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

}  // namespace nvread::cli
