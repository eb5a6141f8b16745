#pragma once

// Text formats: configuration files, trace and basis CSV (with JSON mirrors),
// tomography records, and JSON/CSV reports. Every writer has a matching
// reader so emitted files load back without loss.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nvread/photodynamics.hpp"
#include "nvread/readout_estimator.hpp"
#include "nvread/spin_hamiltonian.hpp"
#include "nvread/studies.hpp"
#include "nvread/tomography.hpp"
#include "nvread/types.hpp"

namespace nvread::io {

/// Everything a command needs from a parameter file.
struct ModelConfig {
  SpinSystemParams spin;
  RateModelConfig rates;
  SweepStudyConfig study;
  double eslac_coupling = 1.0;
};

/// Flat JSON object or `key = value` lines ('#' comments). Unknown keys and
/// non-numeric values throw ParseError.
ModelConfig parse_config(std::string_view text);
ModelConfig load_config(const std::filesystem::path& path);
/// Sets one key; throws ParseError for unknown keys.
void set_config_value(ModelConfig& config, std::string_view key, double value);
/// Canonical flat JSON of every key, in a fixed order.
std::string config_to_json(const ModelConfig& config);
/// FNV-1a of the canonical JSON.
std::uint64_t config_hash(const ModelConfig& config);

/// Shortest decimal that reads back to the same double.
std::string format_number(double x);
/// Comma-separated numbers, e.g. "0.5,0.5,0,0".
std::vector<double> parse_number_list(std::string_view text);

// Traces. CSV layout:
//   bin_width_ns,window_ns
//   2,2500
//   t_ns,counts
//   0,<counts>
//   ...
// A bare `t_ns,counts` dump (with or without that header line) is also read;
// the bin width is then taken from the spacing of t_ns.
std::string trace_to_csv(const PhotonTimeTrace& trace);
PhotonTimeTrace trace_from_csv(std::string_view text);
std::string trace_to_json(const PhotonTimeTrace& trace);
PhotonTimeTrace trace_from_json(std::string_view text);

// Basis: CSV `bin,l_0up,l_0down,l_1up,l_1down` plus a JSON sidecar with
// bin_width_ns, window_ns, sweeps_calibration and field_g.
std::string basis_to_csv(const BasisSet& basis);
std::string basis_metadata_json(const BasisSet& basis);
BasisSet basis_from_text(std::string_view csv, std::string_view metadata_json);
/// Sidecar path: `basis.csv` -> `basis.json`.
std::filesystem::path basis_metadata_path(const std::filesystem::path& csv_path);
void write_basis(const std::filesystem::path& csv_path, const BasisSet& basis);
BasisSet read_basis(const std::filesystem::path& csv_path);

/// Reads a trace by extension (.json or CSV).
PhotonTimeTrace read_trace(const std::filesystem::path& path);

// Tomography records: {"diagonal": {"L0".."L3", "sweeps"},
// "coherences": [{element_label, X1, X2, Y1, Y2, sweeps}, ...]}. A bare array
// of coherence records or a single record object is accepted too.
std::string records_to_json(const TomographyRecord& record);
TomographyRecord records_from_json(std::string_view text);

// Reports.
std::string estimation_report_json(const Estimate& estimate, double kappa,
                                   const std::optional<PopulationVector>& expected);
/// `fidelity` is <psi|rho|psi>; `population_fidelity` compares diag(rho)
/// with |psi|^2.
std::string reconstruction_report_json(const Reconstruction& rec,
                                       const std::optional<double>& fidelity,
                                       const std::optional<double>& population_fidelity = std::nullopt);
std::string curve_to_csv(const FidelityCurve& curve);
FidelityCurve curve_from_csv(std::string_view text);
std::string fit_json(const FitParams& fit);

struct SpeedupRow {
  double target = 0.0;
  double direct_ns = 0.0;
  double traditional_ns = 0.0;
  double ratio = 0.0;
};

/// Config echo, curves with their fits, and an optional speedup table.
std::string study_report_json(const ModelConfig& config, const std::vector<FidelityCurve>& curves,
                              const std::vector<FitParams>& fits,
                              const std::vector<SpeedupRow>& speedups);
std::string field_scan_csv(const std::vector<FieldStudyRow>& rows);
std::string field_scan_json(const std::vector<FieldStudyRow>& rows);

struct RunManifest {
  std::string tool_version;
  std::string command;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string started_utc;
  std::string finished_utc;
  std::vector<std::string> outputs;
};

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(std::string_view text);
/// ISO-8601 UTC timestamp of now.
std::string utc_now();

std::string read_text(const std::filesystem::path& path);
/// Writes atomically enough for a CLI: to a temp file, then rename.
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace nvread::io
