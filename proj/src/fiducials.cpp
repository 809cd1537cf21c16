#include "ecggraph/fiducials.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace ecggraph::fiducials {

namespace {

struct Candidate {
  std::size_t index;
  double value;
};

// Local maxima of `y`, thinned so that no two survivors are closer than
// `min_distance`; within a cluster the larger peak wins.
std::vector<Candidate> find_peaks(const std::vector<double>& y, std::size_t min_distance) {
  std::vector<Candidate> peaks;
  const std::size_t n = y.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] > 0.0)) continue;
    if (!peaks.empty() && i - peaks.back().index < min_distance) {
      if (y[i] > peaks.back().value) peaks.back() = {i, y[i]};
      continue;
    }
    peaks.push_back({i, y[i]});
  }
  return peaks;
}

std::size_t argmax_abs(const std::vector<double>& y, std::size_t lo, std::size_t hi) {
  std::size_t best = lo;
  for (std::size_t i = lo; i <= hi; ++i) {
    if (std::abs(y[i]) > std::abs(y[best])) best = i;
  }
  return best;
}

double max_slope(const std::vector<double>& y, std::size_t end, std::size_t span) {
  const std::size_t start = std::max<std::size_t>(end >= span ? end - span + 1 : 1, 1);
  double best = 0.0;
  for (std::size_t i = start; i <= end && i < y.size(); ++i) {
    best = std::max(best, std::abs(y[i] - y[i - 1]));
  }
  return best;
}

struct Levels {
  double signal = 0.0;
  double noise = 0.0;
  double threshold = 0.0;

  void update_thresholds() { threshold = noise + 0.25 * (signal - noise); }
  double threshold2() const { return 0.5 * threshold; }
};

struct SearchResult {
  std::size_t index;
  bool degenerate;
};

SearchResult extremum(std::span<const double> seg, long long lo, long long hi, bool find_max,
                      bool fallback_high) {
  const long long last = static_cast<long long>(seg.size()) - 1;
  lo = std::clamp(lo, 0LL, last);
  hi = std::clamp(hi, 0LL, last);
  if (lo > hi) {
    return {static_cast<std::size_t>(fallback_high ? hi : lo), true};
  }
  std::size_t best = static_cast<std::size_t>(lo);
  double lowest = seg[best];
  double highest = seg[best];
  for (auto i = static_cast<std::size_t>(lo); i <= static_cast<std::size_t>(hi); ++i) {
    lowest = std::min(lowest, seg[i]);
    highest = std::max(highest, seg[i]);
    if (find_max ? seg[i] > seg[best] : seg[i] < seg[best]) best = i;
  }
  if (highest == lowest) {
    return {static_cast<std::size_t>(fallback_high ? hi : lo), true};
  }
  return {best, false};
}

}  // namespace

std::vector<std::size_t> pan_tompkins(std::span<const double> x, double fs,
                                      const PanTompkinsConfig& config) {
  const auto window = static_cast<std::size_t>(std::lround(config.integration_window_s * fs));
  if (x.size() < window || x.size() < 5) return {};

  preprocess::FilterSpec band;
  band.low_hz = config.band_low_hz;
  band.high_hz = config.band_high_hz;
  band.fir_order = config.band_order;
  band.sampling_rate = fs;
  const auto bp = preprocess::filter_signal(x, preprocess::design_fir_bandpass(band));

  const std::size_t n = x.size();
  auto at = [&](long long i) {
    return bp[static_cast<std::size_t>(std::clamp(i, 0LL, static_cast<long long>(n) - 1))];
  };
  std::vector<double> squared(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<long long>(i);
    const double d = (2.0 * at(k + 1) + at(k + 2) - at(k - 2) - 2.0 * at(k - 1)) * fs / 8.0;
    squared[i] = d * d;
  }
  const auto mwi = preprocess::moving_average(squared, window);

  const auto refractory = static_cast<std::size_t>(std::lround(config.refractory_s * fs));
  const auto t_window = static_cast<std::size_t>(std::lround(config.t_wave_window_s * fs));
  const auto slope_span = static_cast<std::size_t>(std::lround(0.075 * fs));
  const std::size_t refine = window * 2 / 3;
  const auto peaks = find_peaks(mwi, refractory);

  // Learning phase over the first seconds of signal.
  const std::size_t learn = std::min(n, static_cast<std::size_t>(config.learning_period_s * fs));
  Levels integ;
  Levels band_levels;
  {
    double max_i = 0.0, sum_i = 0.0, max_f = 0.0, sum_f = 0.0;
    for (std::size_t i = 0; i < learn; ++i) {
      max_i = std::max(max_i, mwi[i]);
      sum_i += mwi[i];
      max_f = std::max(max_f, std::abs(bp[i]));
      sum_f += std::abs(bp[i]);
    }
    integ.signal = max_i / 3.0;
    integ.noise = 0.5 * sum_i / static_cast<double>(learn);
    band_levels.signal = max_f / 3.0;
    band_levels.noise = 0.5 * sum_f / static_cast<double>(learn);
    integ.update_thresholds();
    band_levels.update_thresholds();
  }

  std::vector<std::size_t> detections;
  std::vector<std::size_t> detection_locs;  // integrator peak of each detection
  auto refine_r = [&](std::size_t loc) {
    const std::size_t lo = loc > refine ? loc - refine : 0;
    const std::size_t hi = std::min(n - 1, loc + refine);
    return argmax_abs(bp, lo, hi);
  };
  auto mean_recent_rr = [&]() {
    const std::size_t k = std::min<std::size_t>(8, detections.size() - 1);
    return static_cast<double>(detections.back() - detections[detections.size() - 1 - k]) /
           static_cast<double>(k);
  };
  auto accept = [&](std::size_t r, std::size_t loc) {
    detections.push_back(r);
    detection_locs.push_back(loc);
  };

  for (const auto& peak : peaks) {
    const std::size_t loc = peak.index;

    // Search back over a long gap for a peak above the lower threshold.
    if (detections.size() >= 9) {
      const double rr = mean_recent_rr();
      const std::size_t last_loc = detection_locs.back();
      if (static_cast<double>(loc - last_loc) >= config.search_back_factor * rr &&
          loc > last_loc + 2 * refractory) {
        std::size_t best = last_loc + refractory;
        for (std::size_t i = best; i < loc - refractory; ++i) {
          if (mwi[i] > mwi[best]) best = i;
        }
        const std::size_t r = refine_r(best);
        if (mwi[best] > integ.threshold2() && std::abs(bp[r]) > band_levels.threshold2() &&
            r >= detections.back() + refractory) {
          accept(r, best);
          integ.signal = 0.25 * mwi[best] + 0.75 * integ.signal;
          band_levels.signal = 0.25 * std::abs(bp[r]) + 0.75 * band_levels.signal;
        }
      }
    }

    const std::size_t r = refine_r(loc);
    const double band_value = std::abs(bp[r]);
    bool is_qrs = false;
    if (peak.value >= integ.threshold) {
      is_qrs = true;
      if (!detections.empty()) {
        if (r < detections.back() + refractory) {
          is_qrs = false;
        } else if (detections.size() >= 3 && loc - detection_locs.back() <= t_window) {
          const double slope = max_slope(mwi, loc, slope_span);
          const double prev_slope = max_slope(mwi, detection_locs.back(), slope_span);
          if (slope < 0.5 * prev_slope) is_qrs = false;  // T wave
        }
      }
    }
    if (is_qrs) {
      accept(r, loc);
      integ.signal = 0.125 * peak.value + 0.875 * integ.signal;
      if (band_value >= band_levels.threshold) {
        band_levels.signal = 0.125 * band_value + 0.875 * band_levels.signal;
      }
    } else {
      integ.noise = 0.125 * peak.value + 0.875 * integ.noise;
      band_levels.noise = 0.125 * band_value + 0.875 * band_levels.noise;
    }
    integ.update_thresholds();
    band_levels.update_thresholds();
  }
  return detections;
}

Fiducials locate_fiducials(std::span<const double> segment, std::size_t r_offset,
                           const FiducialWindows& w) {
  Fiducials f;
  const auto r = static_cast<long long>(r_offset);
  f.r = r_offset;

  const auto q = extremum(segment, r - static_cast<long long>(w.q_before_r), r - 1, false, false);
  const auto s = extremum(segment, r + 1, r + static_cast<long long>(w.s_after_r), false, true);
  const auto s_idx = static_cast<long long>(s.index);
  const auto t = extremum(segment, s_idx + static_cast<long long>(w.t_min_after_s),
                          std::min<long long>(s_idx + static_cast<long long>(w.t_max_after_s),
                                              static_cast<long long>(segment.size()) - 1),
                          true, true);
  const auto p = extremum(segment, r - static_cast<long long>(w.p_before_r),
                          static_cast<long long>(q.index) - static_cast<long long>(w.p_min_before_q),
                          true, false);

  f.p = p.index;
  f.q = q.index;
  f.s = s.index;
  f.t = t.index;
  f.degenerate = p.degenerate || q.degenerate || s.degenerate || t.degenerate;
  f.a_p = segment[f.p];
  f.a_q = segment[f.q];
  f.a_r = segment[f.r];
  f.a_s = segment[f.s];
  f.a_t = segment[f.t];
  return f;
}

MatchStats match_detections(std::span<const std::size_t> reference,
                            std::span<const std::size_t> detected, std::size_t tolerance) {
  MatchStats stats{reference.size(), detected.size(), 0};
  std::size_t j = 0;
  for (const std::size_t ref : reference) {
    while (j < detected.size() && detected[j] + tolerance < ref) ++j;
    if (j < detected.size() && detected[j] <= ref + tolerance) {
      ++stats.matched;
      ++j;
    }
  }
  return stats;
}

void write_fiducials_csv(std::span<const preprocess::BeatSegment> segments,
                         std::span<const Fiducials> fiducials, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "record_id,r_sample,p,q,r,s,t,degenerate\n";
  for (std::size_t i = 0; i < segments.size() && i < fiducials.size(); ++i) {
    const auto& f = fiducials[i];
    out << segments[i].record_id << ',' << segments[i].r_sample_index << ',' << f.p << ','
        << f.q << ',' << f.r << ',' << f.s << ',' << f.t << ',' << (f.degenerate ? 1 : 0)
        << '\n';
  }
}

}  // namespace ecggraph::fiducials
