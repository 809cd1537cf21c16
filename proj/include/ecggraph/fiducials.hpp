#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ecggraph/preprocess.hpp"

namespace ecggraph::fiducials {

struct PanTompkinsConfig {
  double band_low_hz = 5.0;
  double band_high_hz = 15.0;
  std::size_t band_order = 72;
  double integration_window_s = 0.150;
  double refractory_s = 0.200;
  double t_wave_window_s = 0.360;
  double learning_period_s = 2.0;
  double search_back_factor = 1.66;
};

/// Classic Pan-Tompkins QRS detector: 5-15 Hz bandpass, five-point
/// derivative, squaring, 150 ms moving-window integration, adaptive signal
/// and noise thresholds with T-wave rejection and search-back. Returns the
/// R sample indices in increasing order, at least one refractory period apart.
std::vector<std::size_t> pan_tompkins(std::span<const double> x, double fs,
                                      const PanTompkinsConfig& config = {});

/// Search windows in samples relative to the R offset of a 217-sample
/// segment. Defaults: Q in 50 ms before R, S within ~78 ms after R, T from
/// 25 ms to 300 ms after S, P from 200 ms before R to 25 ms before Q.
struct FiducialWindows {
  std::size_t q_before_r = 18;
  std::size_t s_after_r = 28;
  std::size_t t_min_after_s = 9;
  std::size_t t_max_after_s = 108;
  std::size_t p_before_r = 72;
  std::size_t p_min_before_q = 9;
};

struct Fiducials {
  std::size_t p = 0, q = 0, r = 0, s = 0, t = 0;
  double a_p = 0, a_q = 0, a_r = 0, a_s = 0, a_t = 0;
  // Set when any search window was empty or flat and the point fell back to
  // the window boundary.
  bool degenerate = false;
};

Fiducials locate_fiducials(std::span<const double> segment,
                           std::size_t r_offset = preprocess::kROffset,
                           const FiducialWindows& windows = {});

inline Fiducials locate_fiducials(const preprocess::BeatSegment& segment,
                                  const FiducialWindows& windows = {}) {
  return locate_fiducials(segment.samples, segment.r_offset, windows);
}

struct MatchStats {
  std::size_t reference = 0;
  std::size_t detected = 0;
  std::size_t matched = 0;
  double sensitivity() const {
    return reference == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(reference);
  }
};

/// One-to-one matching of detections to reference beats within `tolerance`
/// samples (both sequences sorted).
MatchStats match_detections(std::span<const std::size_t> reference,
                            std::span<const std::size_t> detected, std::size_t tolerance);

void write_fiducials_csv(std::span<const preprocess::BeatSegment> segments,
                         std::span<const Fiducials> fiducials, const std::string& path);

}  // namespace ecggraph::fiducials
