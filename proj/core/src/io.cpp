#include "nvread/io.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "nvread/errors.hpp"

namespace nvread::io {
namespace {

using Json = nlohmann::ordered_json;

struct ConfigKey {
  const char* name;
  std::function<double&(ModelConfig&)> ref;
};

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"d_gs_mhz", [](ModelConfig& c) -> double& { return c.spin.d_gs_mhz; }},
      {"d_es_mhz", [](ModelConfig& c) -> double& { return c.spin.d_es_mhz; }},
      {"gamma_e_mhz_per_g", [](ModelConfig& c) -> double& { return c.spin.gamma_e_mhz_per_g; }},
      {"gamma_n_mhz_per_g", [](ModelConfig& c) -> double& { return c.spin.gamma_n_mhz_per_g; }},
      {"a_gs_mhz", [](ModelConfig& c) -> double& { return c.spin.a_gs_mhz; }},
      {"a_es_mhz", [](ModelConfig& c) -> double& { return c.spin.a_es_mhz; }},
      {"quadrupole_mhz", [](ModelConfig& c) -> double& { return c.spin.quadrupole_mhz; }},
      {"pump_rate", [](ModelConfig& c) -> double& { return c.rates.pump_rate; }},
      {"rad_rate_ms0", [](ModelConfig& c) -> double& { return c.rates.rad_rate_ms0; }},
      {"rad_rate_ms1", [](ModelConfig& c) -> double& { return c.rates.rad_rate_ms1; }},
      {"isc_rate_ms0", [](ModelConfig& c) -> double& { return c.rates.isc_rate_ms0; }},
      {"isc_rate_ms1", [](ModelConfig& c) -> double& { return c.rates.isc_rate_ms1; }},
      {"singlet_rate", [](ModelConfig& c) -> double& { return c.rates.singlet_rate; }},
      {"singlet_branching_ms1", [](ModelConfig& c) -> double& { return c.rates.singlet_branching_ms1; }},
      {"eslac_rate", [](ModelConfig& c) -> double& { return c.rates.eslac_rate; }},
      {"detection_efficiency", [](ModelConfig& c) -> double& { return c.rates.detection_efficiency; }},
      {"bin_width_ns", [](ModelConfig& c) -> double& { return c.rates.bin_width_ns; }},
      {"window_ns", [](ModelConfig& c) -> double& { return c.rates.window_ns; }},
      {"gate_ns", [](ModelConfig& c) -> double& { return c.rates.gate_ns; }},
      {"dark_counts_per_bin", [](ModelConfig& c) -> double& { return c.rates.dark_counts_per_bin; }},
      {"eslac_coupling", [](ModelConfig& c) -> double& { return c.eslac_coupling; }},
      {"calibration_sweeps", [](ModelConfig& c) -> double& { return c.study.calibration_sweeps; }},
      {"laser_ns", [](ModelConfig& c) -> double& { return c.study.timing.laser_ns; }},
      {"mw_pi_ns", [](ModelConfig& c) -> double& { return c.study.timing.mw_pi_ns; }},
      {"rf1_pi_ns", [](ModelConfig& c) -> double& { return c.study.timing.rf1_pi_ns; }},
      {"rf2_pi_ns", [](ModelConfig& c) -> double& { return c.study.timing.rf2_pi_ns; }},
  };
  return keys;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_number(std::string_view text) {
  const std::string_view t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ParseError("not a number: '" + std::string(t) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto line : split(text, '\n')) {
    line = trim(line);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

bool starts_with_digit(std::string_view s) {
  return !s.empty() && (std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '-' ||
                        s[0] == '+' || s[0] == '.');
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

double number_field(const Json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number()) throw ParseError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

void apply_string_option(ModelConfig& config, std::string_view key, std::string_view value) {
  if (key == "noise") {
    config.study.noise = parse_noise_model(value);
  } else if (key == "method") {
    config.study.method = parse_readout_method(value);
  } else if (key == "constraint") {
    config.study.constraint = parse_constraint(value);
  } else {
    throw ParseError("config key '" + std::string(key) + "' expects a number");
  }
}

void apply_entry(ModelConfig& config, std::string_view key, const Json& value) {
  if (value.is_string()) {
    apply_string_option(config, key, value.get<std::string>());
  } else if (key == "trials" && value.is_number()) {
    config.study.trials = value.get<std::size_t>();
  } else if (key == "seed" && value.is_number()) {
    config.study.seed = value.get<std::uint64_t>();
  } else if (key == "test_sweeps" && value.is_array()) {
    config.study.test_sweeps = value.get<std::vector<double>>();
  } else if (value.is_number()) {
    set_config_value(config, key, value.get<double>());
  } else {
    throw ParseError("config key '" + std::string(key) + "' has an unsupported value");
  }
}

Json trace_json(const PhotonTimeTrace& t) {
  return Json{{"bin_width_ns", t.bin_width_ns}, {"window_ns", t.window_ns()}, {"counts", t.counts}};
}

Json fit_to_json(const FitParams& f) {
  return Json{{"model", to_string(f.model)}, {"a", f.a},
              {"b", f.b},                    {"c", f.c},
              {"delta", f.delta},            {"residual", f.residual},
              {"points_used", f.points_used}};
}

Json vector_json(const Eigen::Vector4d& v) { return Json{v(0), v(1), v(2), v(3)}; }

Json nan_safe(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace

void set_config_value(ModelConfig& config, std::string_view key, double value) {
  if (key == "trials") {
    if (!(value >= 1.0) || value != std::floor(value)) throw ParseError("trials must be a positive integer");
    config.study.trials = static_cast<std::size_t>(value);
    return;
  }
  if (key == "seed") {
    if (!(value >= 0.0) || value != std::floor(value)) throw ParseError("seed must be a non-negative integer");
    config.study.seed = static_cast<std::uint64_t>(value);
    return;
  }
  for (const auto& k : config_keys()) {
    if (key == k.name) {
      k.ref(config) = value;
      return;
    }
  }
  throw ParseError("unknown config key '" + std::string(key) + "'");
}

ModelConfig parse_config(std::string_view text) {
  ModelConfig config;
  const std::string_view body = trim(text);
  if (!body.empty() && body.front() == '{') {
    const Json j = parse_json(body);
    for (const auto& [key, value] : j.items()) apply_entry(config, key, value);
    config.study.gate_ns = config.rates.gate_ns;
    return config;
  }
  for (auto line : split(text, '\n')) {
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find_first_of("=:");
    if (eq == std::string_view::npos) throw ParseError("expected key = value, got '" + std::string(line) + "'");
    const std::string_view key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      apply_string_option(config, key, value.substr(1, value.size() - 2));
    } else if (!starts_with_digit(value)) {
      apply_string_option(config, key, value);
    } else {
      set_config_value(config, key, parse_number(value));
    }
  }
  config.study.gate_ns = config.rates.gate_ns;
  return config;
}

ModelConfig load_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

std::string config_to_json(const ModelConfig& config) {
  Json j;
  ModelConfig copy = config;
  for (const auto& k : config_keys()) j[k.name] = k.ref(copy);
  j["trials"] = config.study.trials;
  j["seed"] = config.study.seed;
  j["test_sweeps"] = config.study.test_sweeps;
  j["noise"] = to_string(config.study.noise);
  j["method"] = to_string(config.study.method);
  j["constraint"] = to_string(config.study.constraint);
  return j.dump(2) + "\n";
}

std::uint64_t config_hash(const ModelConfig& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : config_to_json(config)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string format_number(double x) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw Error("format_number failed");
  return std::string(buf.data(), ptr);
}

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (auto item : split(text, ',')) out.push_back(parse_number(item));
  return out;
}

std::string trace_to_csv(const PhotonTimeTrace& trace) {
  std::string out = "bin_width_ns,window_ns\n";
  out += format_number(trace.bin_width_ns) + "," + format_number(trace.window_ns()) + "\n";
  out += "t_ns,counts\n";
  for (std::size_t i = 0; i < trace.counts.size(); ++i) {
    out += format_number(trace.bin_width_ns * static_cast<double>(i)) + "," +
           format_number(trace.counts[i]) + "\n";
  }
  return out;
}

PhotonTimeTrace trace_from_csv(std::string_view text) {
  const auto rows = lines(text);
  std::size_t i = 0;
  std::optional<double> bin_width;
  std::optional<double> window;
  if (i < rows.size() && rows[i] == "bin_width_ns,window_ns") {
    if (i + 1 >= rows.size()) throw ParseError("trace CSV: missing bin_width_ns,window_ns values");
    const auto v = split(rows[i + 1], ',');
    if (v.size() != 2) throw ParseError("trace CSV: expected two header values");
    bin_width = parse_number(v[0]);
    window = parse_number(v[1]);
    i += 2;
  }
  if (i < rows.size() && rows[i] == "t_ns,counts") ++i;

  std::vector<double> times;
  PhotonTimeTrace trace;
  for (; i < rows.size(); ++i) {
    const auto v = split(rows[i], ',');
    if (v.size() != 2) throw ParseError("trace CSV: expected 't_ns,counts' row, got '" + std::string(rows[i]) + "'");
    times.push_back(parse_number(v[0]));
    const double c = parse_number(v[1]);
    if (c < 0.0) throw ParseError("trace CSV: negative counts");
    trace.counts.push_back(c);
  }
  if (trace.counts.empty()) throw ParseError("trace CSV: no rows");
  if (!bin_width) {
    if (times.size() < 2) throw ParseError("trace CSV: cannot infer bin width from one row");
    bin_width = times[1] - times[0];
  }
  if (!(*bin_width > 0.0)) throw ParseError("trace CSV: bin width must be > 0");
  trace.bin_width_ns = *bin_width;
  if (window && std::abs(*window - trace.window_ns()) > 1e-9 * *window) {
    throw DimensionMismatch("trace CSV: window_ns does not match the number of rows");
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (std::abs(times[k] - trace.bin_width_ns * static_cast<double>(k)) > 1e-6 * trace.bin_width_ns) {
      throw ParseError("trace CSV: t_ns column is not evenly spaced from 0");
    }
  }
  return trace;
}

std::string trace_to_json(const PhotonTimeTrace& trace) { return trace_json(trace).dump(2) + "\n"; }

PhotonTimeTrace trace_from_json(std::string_view text) {
  const Json j = parse_json(text);
  PhotonTimeTrace trace;
  trace.bin_width_ns = number_field(j, "bin_width_ns");
  if (!j.contains("counts") || !j.at("counts").is_array()) throw ParseError("trace JSON: missing counts");
  trace.counts = j.at("counts").get<std::vector<double>>();
  if (j.contains("window_ns") &&
      std::abs(number_field(j, "window_ns") - trace.window_ns()) > 1e-9 * trace.window_ns()) {
    throw DimensionMismatch("trace JSON: window_ns does not match counts");
  }
  return trace;
}

PhotonTimeTrace read_trace(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  return path.extension() == ".json" ? trace_from_json(text) : trace_from_csv(text);
}

std::string basis_to_csv(const BasisSet& basis) {
  std::string out = "bin,l_0up,l_0down,l_1up,l_1down\n";
  const auto& m = basis.matrix();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += std::to_string(i);
    for (Eigen::Index k = 0; k < 4; ++k) out += "," + format_number(m(i, k));
    out += "\n";
  }
  return out;
}

std::string basis_metadata_json(const BasisSet& basis) {
  const Json j{{"bin_width_ns", basis.bin_width_ns()},
               {"window_ns", basis.window_ns()},
               {"sweeps_calibration", basis.sweeps_calibration()},
               {"field_g", basis.field_g()}};
  return j.dump(2) + "\n";
}

BasisSet basis_from_text(std::string_view csv, std::string_view metadata_json) {
  const Json meta = parse_json(metadata_json);
  const auto rows = lines(csv);
  if (rows.empty() || rows[0] != "bin,l_0up,l_0down,l_1up,l_1down") {
    throw ParseError("basis CSV: expected header 'bin,l_0up,l_0down,l_1up,l_1down'");
  }
  BasisSet::Matrix m(static_cast<Eigen::Index>(rows.size() - 1), 4);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto v = split(rows[r], ',');
    if (v.size() != 5) throw ParseError("basis CSV: row " + std::to_string(r) + " needs 5 fields");
    if (parse_number(v[0]) != static_cast<double>(r - 1)) throw ParseError("basis CSV: bin index out of order");
    for (Eigen::Index k = 0; k < 4; ++k) {
      m(static_cast<Eigen::Index>(r - 1), k) = parse_number(v[static_cast<std::size_t>(k + 1)]);
    }
  }
  const double bin_width = number_field(meta, "bin_width_ns");
  const double sweeps = meta.contains("sweeps_calibration") ? number_field(meta, "sweeps_calibration") : 1.0;
  const double field = meta.contains("field_g") ? number_field(meta, "field_g") : 0.0;
  BasisSet basis(m, bin_width, sweeps, field);
  if (meta.contains("window_ns") &&
      std::abs(number_field(meta, "window_ns") - basis.window_ns()) > 1e-9 * basis.window_ns()) {
    throw DimensionMismatch("basis: window_ns does not match the number of rows");
  }
  return basis;
}

std::filesystem::path basis_metadata_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

void write_basis(const std::filesystem::path& csv_path, const BasisSet& basis) {
  write_text(csv_path, basis_to_csv(basis));
  write_text(basis_metadata_path(csv_path), basis_metadata_json(basis));
}

BasisSet read_basis(const std::filesystem::path& csv_path) {
  return basis_from_text(read_text(csv_path), read_text(basis_metadata_path(csv_path)));
}

std::string records_to_json(const TomographyRecord& record) {
  Json j = Json::object();
  if (record.diagonal) {
    const auto& d = *record.diagonal;
    j["diagonal"] = Json{{"L0", d.counts(0)}, {"L1", d.counts(1)}, {"L2", d.counts(2)},
                         {"L3", d.counts(3)}, {"sweeps", d.sweeps}};
  }
  Json list = Json::array();
  for (const auto& r : record.coherences) {
    list.push_back(Json{{"element_label", label(r.element)},
                        {"X1", r.x1},
                        {"X2", r.x2},
                        {"Y1", r.y1},
                        {"Y2", r.y2},
                        {"sweeps", r.sweeps}});
  }
  j["coherences"] = list;
  return j.dump(2) + "\n";
}

TomographyRecord records_from_json(std::string_view text) {
  const Json j = parse_json(text);
  const auto coherence = [](const Json& r) {
    if (!r.contains("element_label") || !r.at("element_label").is_string()) {
      throw ParseError("record: missing element_label");
    }
    CoherenceRecord c;
    c.element = parse_coherence(r.at("element_label").get<std::string>());
    c.x1 = number_field(r, "X1");
    c.x2 = number_field(r, "X2");
    c.y1 = number_field(r, "Y1");
    c.y2 = number_field(r, "Y2");
    c.sweeps = r.contains("sweeps") ? number_field(r, "sweeps") : 1.0;
    for (double v : {c.x1, c.x2, c.y1, c.y2}) {
      if (v < 0.0) throw ParseError("record: counts must be >= 0");
    }
    return c;
  };

  TomographyRecord out;
  if (j.is_array()) {
    for (const auto& r : j) out.coherences.push_back(coherence(r));
    return out;
  }
  if (!j.is_object()) throw ParseError("records: expected an object or array");
  if (j.contains("element_label")) {
    out.coherences.push_back(coherence(j));
    return out;
  }
  if (j.contains("diagonal")) {
    const Json& d = j.at("diagonal");
    DiagonalRecord rec;
    rec.counts << number_field(d, "L0"), number_field(d, "L1"), number_field(d, "L2"), number_field(d, "L3");
    rec.sweeps = d.contains("sweeps") ? number_field(d, "sweeps") : 1.0;
    if (rec.counts.minCoeff() < 0.0) throw ParseError("records: counts must be >= 0");
    out.diagonal = rec;
  }
  if (j.contains("coherences")) {
    for (const auto& r : j.at("coherences")) out.coherences.push_back(coherence(r));
  }
  return out;
}

std::string estimation_report_json(const Estimate& estimate, double kappa,
                                   const std::optional<PopulationVector>& expected) {
  Json j{{"c", vector_json(estimate.c.values())},
         {"residual", estimate.residual},
         {"constraint_mode", to_string(estimate.constraint)},
         {"kappa", kappa}};
  if (expected) {
    j["expected"] = vector_json(expected->values());
    j["fidelity"] = population_fidelity(*expected, estimate.c);
  }
  return j.dump(2) + "\n";
}

std::string reconstruction_report_json(const Reconstruction& rec, const std::optional<double>& fidelity,
                                       const std::optional<double>& pop_fidelity) {
  const auto matrix = [](const DensityMatrix& m, bool imag) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < 4; ++i) {
      Json row = Json::array();
      for (Eigen::Index k = 0; k < 4; ++k) row.push_back(imag ? m(i, k).imag() : m(i, k).real());
      rows.push_back(row);
    }
    return rows;
  };
  Json elements = Json::array();
  for (auto e : kCoherences) {
    const auto& od = rec.elements[static_cast<std::size_t>(e)];
    elements.push_back(Json{{"element_label", label(e)}, {"a", od.a}, {"b", od.b}});
  }
  Json j{{"rho", Json{{"re", matrix(rec.rho, false)}, {"im", matrix(rec.rho, true)}}},
         {"raw", Json{{"re", matrix(rec.raw, false)}, {"im", matrix(rec.raw, true)}}},
         {"psd_projected", rec.psd_projected},
         {"populations", vector_json(rec.populations)},
         {"elements", elements}};
  if (fidelity) j["fidelity"] = *fidelity;
  if (pop_fidelity) j["population_fidelity"] = *pop_fidelity;
  return j.dump(2) + "\n";
}

std::string curve_to_csv(const FidelityCurve& curve) {
  std::string out = "# method=" + std::string(to_string(curve.method)) +
                    " per_shot_ns=" + format_number(curve.per_shot_ns) + "\n";
  out += "sweeps,time_ns,mean_fidelity,std_fidelity,trials\n";
  for (const auto& p : curve.points) {
    out += format_number(p.sweeps) + "," + format_number(p.time_ns) + "," + format_number(p.mean) +
           "," + format_number(p.stddev) + "," + std::to_string(p.trials) + "\n";
  }
  return out;
}

FidelityCurve curve_from_csv(std::string_view text) {
  FidelityCurve curve;
  bool have_shot = false;
  bool seen_header = false;
  for (auto row : lines(text)) {
    if (row.front() == '#') {
      for (auto token : split(trim(row.substr(1)), ' ')) {
        const auto eq = token.find('=');
        if (eq == std::string_view::npos) continue;
        const auto key = token.substr(0, eq);
        const auto value = token.substr(eq + 1);
        if (key == "method") curve.method = parse_readout_method(value);
        if (key == "per_shot_ns") {
          curve.per_shot_ns = parse_number(value);
          have_shot = true;
        }
      }
      continue;
    }
    if (!seen_header) {
      if (row.substr(0, 6) != "sweeps") throw ParseError("curve CSV: expected header row");
      seen_header = true;
      continue;
    }
    const auto v = split(row, ',');
    if (v.size() < 3) throw ParseError("curve CSV: expected sweeps,time_ns,mean_fidelity[,std,trials]");
    CurvePoint p;
    p.sweeps = parse_number(v[0]);
    p.time_ns = parse_number(v[1]);
    p.mean = parse_number(v[2]);
    if (v.size() > 3) p.stddev = parse_number(v[3]);
    if (v.size() > 4) p.trials = static_cast<std::size_t>(parse_number(v[4]));
    if (!curve.points.empty() && !(p.sweeps > curve.points.back().sweeps)) {
      throw ParseError("curve CSV: sweeps must be strictly increasing");
    }
    curve.points.push_back(p);
  }
  if (!have_shot && !curve.points.empty() && curve.points.front().sweeps > 0.0) {
    curve.per_shot_ns = curve.points.front().time_ns / curve.points.front().sweeps;
  }
  return curve;
}

std::string fit_json(const FitParams& fit) { return fit_to_json(fit).dump(2) + "\n"; }

std::string study_report_json(const ModelConfig& config, const std::vector<FidelityCurve>& curves,
                              const std::vector<FitParams>& fits,
                              const std::vector<SpeedupRow>& speedups) {
  Json j;
  j["config"] = Json::parse(config_to_json(config));
  Json cs = Json::array();
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& curve = curves[i];
    Json pts = Json::array();
    for (const auto& p : curve.points) {
      pts.push_back(Json{{"sweeps", p.sweeps},
                         {"time_ns", p.time_ns},
                         {"mean", p.mean},
                         {"std", p.stddev},
                         {"trials", p.trials}});
    }
    Json entry{{"method", to_string(curve.method)}, {"per_shot_ns", curve.per_shot_ns}, {"points", pts}};
    if (i < fits.size()) entry["fit"] = fit_to_json(fits[i]);
    cs.push_back(entry);
  }
  j["curves"] = cs;
  Json table = Json::array();
  for (const auto& s : speedups) {
    table.push_back(Json{{"target", s.target},
                         {"direct_ns", nan_safe(s.direct_ns)},
                         {"traditional_ns", nan_safe(s.traditional_ns)},
                         {"speedup", nan_safe(s.ratio)}});
  }
  j["speedup"] = table;
  return j.dump(2) + "\n";
}

std::string field_scan_csv(const std::vector<FieldStudyRow>& rows) {
  std::string out = "field_g,mixing,eslac_rate,kappa,a,b,c,sweeps_to_target\n";
  for (const auto& r : rows) {
    out += format_number(r.field_g) + "," + format_number(r.mixing) + "," +
           format_number(r.eslac_rate) + "," + format_number(r.kappa) + "," +
           format_number(r.fit.a) + "," + format_number(r.fit.b) + "," + format_number(r.fit.c) +
           "," + (std::isfinite(r.sweeps_to_target) ? format_number(r.sweeps_to_target) : "nan") +
           "\n";
  }
  return out;
}

std::string field_scan_json(const std::vector<FieldStudyRow>& rows) {
  Json list = Json::array();
  for (const auto& r : rows) {
    Json pts = Json::array();
    for (const auto& p : r.curve.points) pts.push_back(Json{{"sweeps", p.sweeps}, {"mean", p.mean}, {"std", p.stddev}});
    list.push_back(Json{{"field_g", r.field_g},
                        {"mixing", r.mixing},
                        {"eslac_rate", r.eslac_rate},
                        {"kappa", r.kappa},
                        {"fit", fit_to_json(r.fit)},
                        {"sweeps_to_target", nan_safe(r.sweeps_to_target)},
                        {"curve", pts}});
  }
  return Json{{"rows", list}}.dump(2) + "\n";
}

std::string manifest_to_json(const RunManifest& m) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(m.config_hash));
  const Json j{{"tool_version", m.tool_version}, {"command", m.command},
               {"config_hash", hash},            {"seed", m.seed},
               {"started_utc", m.started_utc},   {"finished_utc", m.finished_utc},
               {"outputs", m.outputs}};
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(std::string_view text) {
  const Json j = parse_json(text);
  RunManifest m;
  try {
    m.tool_version = j.at("tool_version").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    m.seed = j.at("seed").get<std::uint64_t>();
    m.started_utc = j.at("started_utc").get<std::string>();
    m.finished_utc = j.at("finished_utc").get<std::string>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  return m;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace nvread::io
