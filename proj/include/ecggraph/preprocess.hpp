#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecggraph/types.hpp"
#include "ecggraph/wfdb.hpp"

namespace ecggraph::preprocess {

class PreprocessError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct FilterSpec {
  std::size_t ma_window_1 = 72;
  std::size_t ma_window_2 = 216;
  std::size_t fir_order = 12;
  double low_hz = 0.5;
  double high_hz = 35.0;
  double sampling_rate = kSamplingRate;
  // Scale the taps to unit gain at the passband centre (scipy.signal.firwin's
  // default). When false the raw windowed-sinc difference is returned.
  bool normalize_passband = true;
};

inline constexpr std::size_t kSegmentLength = 217;
inline constexpr std::size_t kSamplesBeforeR = 86;
inline constexpr std::size_t kSamplesAfterR = 130;
inline constexpr std::size_t kROffset = kSamplesBeforeR;

struct BeatSegment {
  std::vector<double> samples;  // kSegmentLength values, mV
  std::size_t r_offset = kROffset;
  std::string record_id;
  std::size_t r_sample_index = 0;
  std::size_t beat_index = 0;  // position in the record's beat list
  AamiClass label = AamiClass::N;
};

/// Maps an arbitrary index onto [0, n) by mirror reflection about the end
/// samples without repeating them (numpy's "reflect" mode).
std::size_t reflect_index(long long i, std::size_t n);

/// Which way an even window leans around its centre sample.
enum class EvenWindow {
  Lagging,  // [i - w/2, i + w/2 - 1]
  Leading,  // [i - w/2 + 1, i + w/2]
};

/// Centered moving average of width `window`; edges are reflect-padded.
std::vector<double> moving_average(std::span<const double> x, std::size_t window,
                                   EvenWindow even = EvenWindow::Lagging);

/// x - MA(MA(x, 72), 216). The second pass leans the other way so the two
/// half-sample offsets cancel and linear trends are removed exactly.
std::vector<double> remove_baseline(std::span<const double> x, const FilterSpec& spec = {});

/// Hamming-windowed sinc bandpass with `spec.fir_order + 1` taps.
std::vector<double> design_fir_bandpass(const FilterSpec& spec = {});

/// Convolution with reflect-padded edges, shifted left by the group delay
/// (taps.size() - 1) / 2 so features stay aligned with the input.
std::vector<double> filter_signal(std::span<const double> x, std::span<const double> taps);

/// Magnitude response of an FIR at `freq_hz`.
double fir_magnitude(std::span<const double> taps, double freq_hz, double sampling_rate);

struct SegmentationResult {
  std::vector<BeatSegment> segments;
  std::size_t skipped_unlabeled = 0;
  std::size_t skipped_out_of_bounds = 0;
  std::size_t skipped_no_neighbor = 0;
};

struct SegmentOptions {
  // Drop the first and last annotated beat of the record (they lack a
  // previous or following R-R interval).
  bool drop_edge_beats = false;
};

/// Cuts [r - 86, r + 130] windows around every labeled beat.
SegmentationResult segment_beats(std::span<const double> x,
                                 std::span<const wfdb::AnnotatedBeat> beats,
                                 const std::string& record_id,
                                 const SegmentOptions& options = {});

/// remove_baseline followed by filter_signal with the designed bandpass.
std::vector<double> preprocess_signal(std::span<const double> x, const FilterSpec& spec = {});

struct DebugTrace {
  std::vector<double> raw;
  std::vector<double> baseline_removed;
  std::vector<double> bandpassed;
};
void write_debug_csv(const DebugTrace& trace, const std::string& path);

}  // namespace ecggraph::preprocess
