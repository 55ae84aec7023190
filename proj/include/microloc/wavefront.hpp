#pragma once

#include <string>
#include <vector>

#include "microloc/grid.hpp"
#include "microloc/symbols.hpp"

namespace microloc {

struct WavefrontParams {
  double window_scale = 0.5;
  double cone_half_angle = 0.2;
  std::vector<double> bands;  // empty => {N/32, N/16, N/8}
  double floor_rel = 1e-24;   // sentinel when top two bands fall below this
  double smax_sentinel = 4.5; // estimates beyond the calibrated range
  bool margin_guard = false;  // enforce distance from time-window margins
};

struct SobolevEstimate {
  PhaseDirection point;
  bool sentinel = false;   // "regular at all tested orders"
  double s_est = 0.0;
  double raw_slope = 0.0;
  std::vector<double> band_energies;
  double total_energy = 0.0;
  double window_scale = 0.0, cone_half_angle = 0.0;
  bool ok = true;          // false on per-point errors during scans
  std::string error;
};

struct CalibrationRow {
  double s_label = 0.0;
  double mean_slope = 0.0;
  double fitted_s = 0.0;
  std::vector<double> slopes;  // per seed
};

/// Affine map s_est = alpha + beta * slope fitted on families of known label.
struct CalibrationTable {
  double alpha = 1.0;
  double beta = -0.5;
  double max_residual = 0.0;
  std::vector<CalibrationRow> rows;
};

std::vector<double> default_wavefront_bands(const GridSpec& grid);

/// Raw windowed cone-band fit (no calibration applied; s_est holds the slope).
SobolevEstimate raw_microlocal_fit(const Field& u, const PhaseDirection& p,
                                   const WavefrontParams& params);

/// Calibrated microlocal Sobolev estimate at a phase-space point.
SobolevEstimate microlocal_estimate(const Field& u, const PhaseDirection& p,
                                    const WavefrontParams& params,
                                    const CalibrationTable& cal);

/// Fits the slope-to-s map on random solutions of known regularity label;
/// throws when the fit residual exceeds 0.15.
CalibrationTable calibrate(const GridSpec& grid, const WavefrontParams& params,
                           const std::vector<double>& s_labels,
                           const std::vector<uint64_t>& seeds);

/// Batch estimate over a position/direction net; per-point errors are
/// recorded and the scan continues.
std::vector<SobolevEstimate> wavefront_scan(const Field& u,
                                            const std::vector<Vec>& x_net,
                                            const std::vector<Vec>& dir_net,
                                            const WavefrontParams& params,
                                            const CalibrationTable& cal);

}  // namespace microloc
