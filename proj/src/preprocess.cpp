#include "ecggraph/preprocess.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace ecggraph::preprocess {

namespace {

// Running sums are recomputed from scratch this often to bound drift.
constexpr std::size_t kResyncInterval = 4096;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

std::size_t reflect_index(long long i, std::size_t n) {
  if (n == 1) return 0;
  const long long period = 2 * (static_cast<long long>(n) - 1);
  long long m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<long long>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

std::vector<double> moving_average(std::span<const double> x, std::size_t window,
                                   EvenWindow even) {
  if (window == 0) throw PreprocessError("moving_average: window must be >= 1");
  if (x.empty()) throw PreprocessError("moving_average: empty input");
  const std::size_t n = x.size();
  const long long half =
      static_cast<long long>(even == EvenWindow::Lagging ? window / 2 : (window - 1) / 2);
  const auto w = static_cast<long long>(window);

  // Sums are taken over deviations from x[0], so a constant input produces
  // exactly zero sums and the output reproduces the constant bit for bit.
  const double anchor = x[0];
  auto dev = [&](long long j) { return x[reflect_index(j, n)] - anchor; };
  auto window_sum = [&](long long start) {
    double s = 0.0;
    for (long long j = start; j < start + w; ++j) s += dev(j);
    return s;
  };

  std::vector<double> out(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const long long start = static_cast<long long>(i) - half;
    if (i % kResyncInterval == 0) {
      sum = window_sum(start);
    } else {
      sum += dev(start + w - 1) - dev(start - 1);
    }
    out[i] = anchor + sum / static_cast<double>(w);
  }
  return out;
}

std::vector<double> remove_baseline(std::span<const double> x, const FilterSpec& spec) {
  if (x.size() <= spec.ma_window_2) {
    throw PreprocessError("remove_baseline: signal of " + std::to_string(x.size()) +
                          " samples is shorter than the " + std::to_string(spec.ma_window_2) +
                          "-sample baseline window");
  }
  const auto first = moving_average(x, spec.ma_window_1);
  const auto baseline = moving_average(first, spec.ma_window_2, EvenWindow::Leading);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - baseline[i];
  return out;
}

std::vector<double> design_fir_bandpass(const FilterSpec& spec) {
  const double nyquist = spec.sampling_rate / 2.0;
  if (!(spec.low_hz > 0.0 && spec.low_hz < spec.high_hz && spec.high_hz < nyquist)) {
    throw PreprocessError("design_fir_bandpass: need 0 < low < high < fs/2");
  }
  if (spec.fir_order == 0 || spec.fir_order % 2 != 0) {
    throw PreprocessError("design_fir_bandpass: order must be even and positive");
  }
  const std::size_t taps = spec.fir_order + 1;
  const double m = static_cast<double>(spec.fir_order);
  const double f_lo = spec.low_hz / spec.sampling_rate;
  const double f_hi = spec.high_hz / spec.sampling_rate;
  std::vector<double> h(taps);
  for (std::size_t k = 0; k < taps; ++k) {
    const double t = static_cast<double>(k) - m / 2.0;
    const double ideal = 2.0 * f_hi * sinc(2.0 * f_hi * t) - 2.0 * f_lo * sinc(2.0 * f_lo * t);
    const double hamming = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * k / m);
    h[k] = hamming * ideal;
  }
  if (spec.normalize_passband) {
    const double centre = 0.5 * (spec.low_hz + spec.high_hz);
    const double gain = fir_magnitude(h, centre, spec.sampling_rate);
    for (auto& v : h) v /= gain;
  }
  // Exact symmetry regardless of rounding in the cosine/sine evaluations.
  for (std::size_t k = 0; k < taps / 2; ++k) h[taps - 1 - k] = h[k];
  return h;
}

double fir_magnitude(std::span<const double> taps, double freq_hz, double sampling_rate) {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const double phase = 2.0 * std::numbers::pi * freq_hz * static_cast<double>(k) / sampling_rate;
    re += taps[k] * std::cos(phase);
    im -= taps[k] * std::sin(phase);
  }
  return std::hypot(re, im);
}

std::vector<double> filter_signal(std::span<const double> x, std::span<const double> taps) {
  if (x.empty()) throw PreprocessError("filter_signal: empty input");
  if (taps.empty() || taps.size() % 2 == 0) {
    throw PreprocessError("filter_signal: need an odd, non-zero number of taps");
  }
  const std::size_t n = x.size();
  const auto delay = static_cast<long long>((taps.size() - 1) / 2);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long long centre = static_cast<long long>(i) + delay;
    double acc = 0.0;
    for (std::size_t k = 0; k < taps.size(); ++k) {
      acc += taps[k] * x[reflect_index(centre - static_cast<long long>(k), n)];
    }
    out[i] = acc;
  }
  return out;
}

SegmentationResult segment_beats(std::span<const double> x,
                                 std::span<const wfdb::AnnotatedBeat> beats,
                                 const std::string& record_id, const SegmentOptions& options) {
  SegmentationResult out;
  for (std::size_t i = 0; i < beats.size(); ++i) {
    const auto& beat = beats[i];
    if (!beat.aami_class) {
      ++out.skipped_unlabeled;
      continue;
    }
    if (options.drop_edge_beats && (i == 0 || i + 1 == beats.size())) {
      ++out.skipped_no_neighbor;
      continue;
    }
    const std::size_t r = beat.sample_index;
    if (r < kSamplesBeforeR || r + kSamplesAfterR >= x.size()) {
      ++out.skipped_out_of_bounds;
      continue;
    }
    BeatSegment seg;
    seg.samples.assign(x.begin() + static_cast<std::ptrdiff_t>(r - kSamplesBeforeR),
                       x.begin() + static_cast<std::ptrdiff_t>(r + kSamplesAfterR + 1));
    seg.record_id = record_id;
    seg.r_sample_index = r;
    seg.beat_index = i;
    seg.label = *beat.aami_class;
    out.segments.push_back(std::move(seg));
  }
  return out;
}

std::vector<double> preprocess_signal(std::span<const double> x, const FilterSpec& spec) {
  const auto taps = design_fir_bandpass(spec);
  const auto detrended = remove_baseline(x, spec);
  return filter_signal(detrended, taps);
}

void write_debug_csv(const DebugTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw PreprocessError("cannot write " + path);
  out.precision(10);
  out << "sample_index,raw,baseline_removed,bandpassed\n";
  for (std::size_t i = 0; i < trace.raw.size(); ++i) {
    out << i << ',' << trace.raw[i] << ',' << trace.baseline_removed.at(i) << ','
        << trace.bandpassed.at(i) << '\n';
  }
}

}  // namespace ecggraph::preprocess
