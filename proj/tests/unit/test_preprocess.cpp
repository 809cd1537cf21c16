#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "ecggraph/preprocess.hpp"
#include "test_support.hpp"

using namespace ecggraph;
using namespace ecggraph::preprocess;

namespace {

// Windowed mean with explicit reflect padding, O(n*w).
std::vector<double> brute_ma(const std::vector<double>& x, std::size_t w) {
  const long long n = static_cast<long long>(x.size());
  std::vector<double> out(x.size());
  for (long long i = 0; i < n; ++i) {
    double s = 0;
    for (long long j = i - static_cast<long long>(w / 2);
         j < i - static_cast<long long>(w / 2) + static_cast<long long>(w); ++j) {
      long long k = j;
      while (k < 0 || k >= n) k = k < 0 ? -k : 2 * (n - 1) - k;
      s += x[static_cast<std::size_t>(k)];
    }
    out[static_cast<std::size_t>(i)] = s / static_cast<double>(w);
  }
  return out;
}

std::vector<double> brute_filter(const std::vector<double>& x, const std::vector<double>& h) {
  const long long n = static_cast<long long>(x.size());
  const long long d = static_cast<long long>(h.size() - 1) / 2;
  std::vector<double> out(x.size());
  for (long long i = 0; i < n; ++i) {
    double s = 0;
    for (long long k = 0; k < static_cast<long long>(h.size()); ++k) {
      long long j = i + d - k;
      while (j < 0 || j >= n) j = j < 0 ? -j : 2 * (n - 1) - j;
      s += h[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

double tone_amplitude(const std::vector<double>& x, std::size_t begin, std::size_t len,
                      double freq, double fs) {
  std::complex<double> acc = 0;
  for (std::size_t i = begin; i < begin + len; ++i) {
    const double ph = -2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs;
    acc += x[i] * std::complex<double>(std::cos(ph), std::sin(ph));
  }
  return 2.0 * std::abs(acc) / static_cast<double>(len);
}

// Magnitude of a zero-padded 4096-point DFT bin nearest to `freq`.
double dft_bin_magnitude(const std::vector<double>& h, double freq, double fs) {
  const std::size_t n = 4096;
  const double k = std::round(freq / fs * n);
  std::complex<double> acc = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double ph = -2.0 * std::numbers::pi * k * static_cast<double>(i) / n;
    acc += h[i] * std::complex<double>(std::cos(ph), std::sin(ph));
  }
  return std::abs(acc);
}

}  // namespace

TEST_SUITE("preprocess") {

TEST_CASE("reflect index mirrors without repeating the edge") {
  CHECK(reflect_index(-1, 5) == 1);
  CHECK(reflect_index(-2, 5) == 2);
  CHECK(reflect_index(5, 5) == 3);
  CHECK(reflect_index(6, 5) == 2);
  CHECK(reflect_index(3, 5) == 3);
  CHECK(reflect_index(-9, 5) == 1);
  CHECK(reflect_index(7, 1) == 0);
}

TEST_CASE("moving average of a constant is exact") {
  for (double c : {0.0, 1.5, -3.25e3, 0.1}) {
    for (std::size_t w : {1u, 2u, 3u, 72u, 216u}) {
      std::vector<double> x(5000, c);
      const auto y = moving_average(x, w);
      for (double v : y) REQUIRE(v == c);
    }
  }
}

TEST_CASE("moving average of an impulse") {
  std::vector<double> x(9, 0.0);
  x[4] = 1.0;
  const auto y = moving_average(x, 3);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(y[i] == doctest::Approx(i >= 3 && i <= 5 ? 1.0 / 3.0 : 0.0).epsilon(1e-15));
  }
}

TEST_CASE("moving average matches a brute-force windowed mean") {
  const auto x = test_support::random_vector(1000, 72);
  for (std::size_t w : {72u, 5u, 216u}) {
    const auto y = moving_average(x, w);
    const auto ref = brute_ma(x, w);
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(y[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
  // Long input crosses several resync points.
  const auto long_x = test_support::random_vector(20000, 3, -100, 100);
  const auto y = moving_average(long_x, 216);
  const auto ref = brute_ma(long_x, 216);
  for (std::size_t i = 0; i < long_x.size(); ++i) REQUIRE(std::abs(y[i] - ref[i]) < 1e-10);
}

TEST_CASE("even-window alignment") {
  std::vector<double> x(20, 0.0);
  x[10] = 4.0;
  const auto lag = moving_average(x, 4);
  const auto lead = moving_average(x, 4, EvenWindow::Leading);
  // Lagging window [i-2, i+1] sees x[10] for i in 9..12; leading [i-1, i+2] for 8..11.
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(lag[i] == (i >= 9 && i <= 12 ? 1.0 : 0.0));
    CHECK(lead[i] == (i >= 8 && i <= 11 ? 1.0 : 0.0));
  }
}

TEST_CASE("moving average is linear") {
  const auto a = test_support::random_vector(3000, 1);
  const auto b = test_support::random_vector(3000, 2);
  std::vector<double> mix(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) mix[i] = 2.5 * a[i] - 0.75 * b[i];
  const auto ya = moving_average(a, 72), yb = moving_average(b, 72), ym = moving_average(mix, 72);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double expect = 2.5 * ya[i] - 0.75 * yb[i];
    REQUIRE(std::abs(ym[i] - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
  }
}

TEST_CASE("moving average errors") {
  std::vector<double> x(10, 1.0);
  CHECK_THROWS_AS(moving_average(x, 0), PreprocessError);
  CHECK_THROWS_AS(moving_average(std::vector<double>{}, 3), PreprocessError);
}

TEST_CASE("baseline removal of a constant is exactly zero") {
  for (double c : {0.0, 1.0, -0.37, 1234.5678}) {
    std::vector<double> x(4000, c);
    for (double v : remove_baseline(x)) REQUIRE(v == 0.0);
  }
}

TEST_CASE("baseline removal cancels a linear ramp in the interior") {
  const std::size_t n = 5000;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = -2.0 + 4.0 * static_cast<double>(i) / (n - 1);
  const auto y = remove_baseline(x);
  const double range = 4.0;
  // Interior: both windows away from the reflected edges.
  for (std::size_t i = 36 + 108; i + 36 + 108 < n; ++i) REQUIRE(std::abs(y[i]) <= 1e-9 * range);
}

TEST_CASE("baseline removal keeps 15 Hz and suppresses 0.2 Hz") {
  const double fs = 360.0;
  const std::size_t n = 21600;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    x[i] = std::sin(2 * std::numbers::pi * 0.2 * t) + std::sin(2 * std::numbers::pi * 15.0 * t);
  }
  const auto y = remove_baseline(x);
  // 18000 samples hold whole periods of both tones.
  const double slow = tone_amplitude(y, 1800, 18000, 0.2, fs);
  const double fast = tone_amplitude(y, 1800, 18000, 15.0, fs);
  CHECK(fast >= 0.8);
  CHECK(slow <= 0.3);
}

TEST_CASE("baseline removal rejects short signals") {
  std::vector<double> x(216, 1.0);
  CHECK_THROWS_AS(remove_baseline(x), PreprocessError);
  std::vector<double> ok(217, 1.0);
  CHECK_NOTHROW(remove_baseline(ok));
}

TEST_CASE("bandpass design") {
  const auto h = design_fir_bandpass();
  REQUIRE(h.size() == 13);
  for (std::size_t k = 0; k < 13; ++k) CHECK(h[k] == h[12 - k]);
  // Group delay of a symmetric odd-length FIR: the centre tap.
  CHECK((h.size() - 1) / 2 == 6);
  CHECK(dft_bin_magnitude(h, 10.0, 360.0) > dft_bin_magnitude(h, 120.0, 360.0));

  // scipy.signal.firwin(13, [0.5, 35], pass_zero=False, fs=360, window="hamming").
  const double ref[7] = {-0.0030341356279168234, 0.0005080717978111275, 0.01940967622724442,
                         0.06969109020808813,    0.14628430163563524,   0.21837397992754987,
                         0.24807865585605166};
  for (std::size_t k = 0; k < 7; ++k) CHECK(h[k] == doctest::Approx(ref[k]).epsilon(1e-12));
  CHECK(fir_magnitude(h, 17.75, 360.0) == doctest::Approx(1.0).epsilon(1e-12));

  FilterSpec raw;
  raw.normalize_passband = false;
  const auto hr = design_fir_bandpass(raw);
  // Same call with scale=False.
  CHECK(hr[0] == doctest::Approx(-0.002344186604892091).epsilon(1e-12));
  CHECK(hr[6] == doctest::Approx(0.19166666666666668).epsilon(1e-12));
}

TEST_CASE("bandpass design rejects invalid edges") {
  FilterSpec s;
  s.low_hz = 0.0;
  CHECK_THROWS_AS(design_fir_bandpass(s), PreprocessError);
  s.low_hz = 40.0;
  CHECK_THROWS_AS(design_fir_bandpass(s), PreprocessError);
  s.low_hz = 0.5;
  s.high_hz = 180.0;
  CHECK_THROWS_AS(design_fir_bandpass(s), PreprocessError);
  s.high_hz = 35.0;
  s.fir_order = 11;
  CHECK_THROWS_AS(design_fir_bandpass(s), PreprocessError);
}

TEST_CASE("filtering") {
  const auto h = design_fir_bandpass();
  SUBCASE("zero in, zero out") {
    std::vector<double> x(100, 0.0);
    for (double v : filter_signal(x, h)) CHECK(v == 0.0);
  }
  SUBCASE("impulse response is centred on the impulse") {
    std::vector<double> x(101, 0.0);
    x[50] = 1.0;
    const auto y = filter_signal(x, h);
    for (std::size_t i = 0; i < 101; ++i) {
      const long long k = static_cast<long long>(i) - 50 + 6;
      const double expect = (k >= 0 && k < 13) ? h[static_cast<std::size_t>(k)] : 0.0;
      CHECK(y[i] == expect);
    }
    CHECK(std::max_element(y.begin(), y.end()) - y.begin() == 50);
  }
  SUBCASE("matches brute-force convolution") {
    const auto x = test_support::random_vector(2000, 99, -5, 5);
    const auto y = filter_signal(x, h);
    const auto ref = brute_filter(x, h);
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(std::abs(y[i] - ref[i]) <= 1e-10);
  }
  SUBCASE("linear") {
    const auto a = test_support::random_vector(500, 4), b = test_support::random_vector(500, 5);
    std::vector<double> m(500);
    for (std::size_t i = 0; i < 500; ++i) m[i] = 3.0 * a[i] + 0.5 * b[i];
    const auto ya = filter_signal(a, h), yb = filter_signal(b, h), ym = filter_signal(m, h);
    for (std::size_t i = 0; i < 500; ++i) {
      const double e = 3.0 * ya[i] + 0.5 * yb[i];
      REQUIRE(std::abs(ym[i] - e) <= 1e-12 * std::max(1.0, std::abs(e)));
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(filter_signal(std::vector<double>{}, h), PreprocessError);
    std::vector<double> even_taps(4, 0.25), x(10, 1.0);
    CHECK_THROWS_AS(filter_signal(x, even_taps), PreprocessError);
  }
}

TEST_CASE("segmentation boundaries") {
  std::vector<double> x(400);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  std::vector<wfdb::AnnotatedBeat> beats{
      {85, 'N', AamiClass::N},   {86, 'N', AamiClass::N},  {150, 'F', std::nullopt},
      {200, 'V', AamiClass::V},  {269, 'A', AamiClass::S}, {270, 'N', AamiClass::N}};
  const auto r = segment_beats(x, beats, "rec");
  CHECK(r.skipped_out_of_bounds == 2);  // 85 and 270 (270 + 130 = 400)
  CHECK(r.skipped_unlabeled == 1);
  REQUIRE(r.segments.size() == 3);
  CHECK(r.segments[0].samples.front() == 0.0);
  CHECK(r.segments[0].r_sample_index == 86);
  CHECK(r.segments[2].samples.back() == 399.0);
  for (const auto& s : r.segments) {
    CHECK(s.samples.size() == kSegmentLength);
    CHECK(s.r_offset == 86);
    CHECK(s.samples[s.r_offset] == static_cast<double>(s.r_sample_index));
    CHECK(s.record_id == "rec");
  }
  CHECK(r.segments[1].label == AamiClass::V);
  CHECK(r.segments[2].label == AamiClass::S);

  const auto dropped = segment_beats(x, beats, "rec", {.drop_edge_beats = true});
  // Edge beats are counted as such before the bounds check.
  CHECK(dropped.skipped_no_neighbor == 2);
  CHECK(dropped.skipped_out_of_bounds == 0);
  CHECK(dropped.segments.size() == 3);
}

TEST_CASE("edge beats are dropped when requested") {
  std::vector<double> x(2000, 0.0);
  std::vector<wfdb::AnnotatedBeat> beats;
  for (std::size_t r = 200; r < 1800; r += 300) beats.push_back({r, 'N', AamiClass::N});
  const auto all = segment_beats(x, beats, "r");
  const auto inner = segment_beats(x, beats, "r", {.drop_edge_beats = true});
  CHECK(all.segments.size() == beats.size());
  CHECK(inner.segments.size() == beats.size() - 2);
  CHECK(inner.skipped_no_neighbor == 2);
  CHECK(inner.segments.front().beat_index == 1);
}

TEST_CASE("segment counts never exceed labeled beats") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1000 + rng() % 5000;
    std::vector<double> x(n, 0.0);
    std::vector<wfdb::AnnotatedBeat> beats;
    std::size_t labeled = 0;
    for (std::size_t r = rng() % 50; r < n; r += 1 + rng() % 400) {
      const bool lab = rng() % 5 != 0;
      labeled += lab;
      beats.push_back({r, lab ? 'N' : 'Q', lab ? std::optional(AamiClass::N) : std::nullopt});
    }
    const auto s = segment_beats(x, beats, "r");
    CHECK(s.segments.size() <= labeled);
    CHECK(s.segments.size() + s.skipped_out_of_bounds + s.skipped_unlabeled == beats.size());
  }
}

}  // TEST_SUITE
