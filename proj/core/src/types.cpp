#include "nvread/types.hpp"

#include <cmath>
#include <numeric>
#include <utility>

#include "nvread/errors.hpp"

namespace nvread {

std::string_view label(ReadoutState s) {
  switch (s) {
    case ReadoutState::zero_up: return "0up";
    case ReadoutState::zero_down: return "0down";
    case ReadoutState::one_up: return "1up";
    case ReadoutState::one_down: return "1down";
  }
  return "?";
}

ReadoutState parse_readout_state(std::string_view text) {
  for (auto s : kReadoutStates) {
    if (label(s) == text) return s;
  }
  throw ParseError("unknown readout state '" + std::string(text) +
                   "' (expected 0up, 0down, 1up or 1down)");
}

bool PopulationVector::on_simplex(double tol) const {
  return c_.minCoeff() >= -tol && std::abs(c_.sum() - 1.0) <= tol;
}

double PhotonTimeTrace::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0.0);
}

double PhotonTimeTrace::gated_total(double gate_ns) const {
  const auto n = std::min(counts.size(),
                          static_cast<std::size_t>(std::llround(gate_ns / bin_width_ns)));
  return std::accumulate(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
}

BasisSet::BasisSet(Matrix columns, double bin_width_ns, double sweeps_calibration,
                   double field_g)
    : columns_(std::move(columns)),
      bin_width_ns_(bin_width_ns),
      sweeps_calibration_(sweeps_calibration),
      field_g_(field_g) {
  if (!(bin_width_ns_ > 0.0)) throw ValidationError("BasisSet: bin width must be > 0");
  if (!(sweeps_calibration_ > 0.0)) throw ValidationError("BasisSet: sweeps must be > 0");
  if (columns_.size() > 0 && columns_.minCoeff() < 0.0) {
    throw ValidationError("BasisSet: negative counts");
  }
}

BasisSet BasisSet::from_traces(std::span<const PhotonTimeTrace, 4> traces,
                               double sweeps_calibration, double field_g) {
  const auto n = traces[0].bins();
  for (const auto& t : traces) {
    if (t.bins() != n || t.bin_width_ns != traces[0].bin_width_ns) {
      throw DimensionMismatch("BasisSet: basis traces have different bin grids");
    }
  }
  Matrix m(static_cast<Eigen::Index>(n), 4);
  for (Eigen::Index j = 0; j < 4; ++j) {
    const auto& counts = traces[static_cast<std::size_t>(j)].counts;
    m.col(j) = Eigen::Map<const Eigen::VectorXd>(counts.data(), static_cast<Eigen::Index>(n));
  }
  return BasisSet(std::move(m), traces[0].bin_width_ns, sweeps_calibration, field_g);
}

PhotonTimeTrace BasisSet::column(ReadoutState s) const {
  PhotonTimeTrace t;
  t.bin_width_ns = bin_width_ns_;
  t.counts.resize(bins());
  Eigen::Map<Eigen::VectorXd>(t.counts.data(), columns_.rows()) =
      columns_.col(static_cast<Eigen::Index>(index(s)));
  return t;
}

Eigen::Vector4d BasisSet::gated_levels(double gate_ns) const {
  const auto n = std::min<Eigen::Index>(columns_.rows(),
                                        static_cast<Eigen::Index>(std::llround(gate_ns / bin_width_ns_)));
  return columns_.topRows(n).colwise().sum().transpose();
}

BasisSet BasisSet::per_sweep() const {
  return BasisSet(columns_ / sweeps_calibration_, bin_width_ns_, 1.0, field_g_);
}

}  // namespace nvread
