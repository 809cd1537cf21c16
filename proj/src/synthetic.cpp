#include "ecggraph/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace ecggraph::synthetic {
namespace {

constexpr double kGain = 200.0;
constexpr int kAdcZero = 1024;
constexpr int kRhythmCode = 28;
constexpr int kNoiseCode = 14;

class Noise {
 public:
  explicit Noise(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double gauss() {
    // Box-Muller; the second variate is discarded to keep the stream simple.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct Wave {
  double t;  // seconds relative to R
  double amp;
  double width;
};

enum class Kind { Normal, Bundle, Supra, Ventricular, Fusion };

std::vector<Wave> template_for(Kind kind) {
  switch (kind) {
    case Kind::Normal:
      return {{-0.20, 0.15, 0.025}, {-0.035, -0.12, 0.010}, {0.0, 1.10, 0.011},
              {0.035, -0.25, 0.011}, {0.26, 0.30, 0.045}};
    case Kind::Bundle:
      return {{-0.20, 0.14, 0.025}, {-0.045, -0.10, 0.014}, {0.0, 0.95, 0.020},
              {0.050, -0.35, 0.016}, {0.28, 0.22, 0.050}};
    case Kind::Supra:
      return {{-0.13, -0.09, 0.018}, {-0.035, -0.12, 0.010}, {0.0, 1.00, 0.011},
              {0.035, -0.22, 0.011}, {0.24, 0.26, 0.042}};
    case Kind::Ventricular:
      return {{-0.060, -0.10, 0.020}, {0.0, 1.40, 0.030}, {0.065, -0.55, 0.030},
              {0.30, -0.45, 0.060}};
    case Kind::Fusion:
      return {{-0.20, 0.08, 0.025}, {-0.040, -0.12, 0.016}, {0.0, 1.20, 0.020},
              {0.050, -0.40, 0.020}, {0.28, -0.10, 0.055}};
  }
  return {};
}

struct PlacedBeat {
  std::size_t r;
  Kind kind;
  char symbol;
  double scale;
};

char pick(Noise& rng, std::initializer_list<std::pair<char, double>> choices) {
  double u = rng.uniform();
  for (const auto& [c, p] : choices) {
    if (u < p) return c;
    u -= p;
  }
  return choices.begin()->first;
}

int to_digital(double mv) {
  const long v = std::lround(mv * kGain) + kAdcZero;
  return static_cast<int>(std::clamp(v, -2047L, 2047L));
}

int checksum16(const std::vector<int>& v) {
  long long s = 0;
  for (int x : v) s += x;
  return static_cast<int>(static_cast<std::int16_t>(static_cast<std::uint16_t>(s & 0xFFFF)));
}

}  // namespace

SyntheticRecord generate_record(const std::string& record_id, const SyntheticOptions& options) {
  Noise rng(options.seed ^ fnv1a(record_id));
  const double fs = kSamplingRate;
  const auto n = static_cast<std::size_t>(options.duration_s * fs);

  const double hr = rng.uniform(60.0, 90.0);
  const double base_rr = 60.0 / hr;
  const double s_rate = options.s_rate * rng.uniform(0.3, 1.7);
  const double v_rate = options.v_rate * rng.uniform(0.3, 1.7);
  const double gain = rng.uniform(0.8, 1.2);
  const double u_lead = rng.uniform();
  const char normal_symbol = u_lead < 0.15 ? 'L' : (u_lead < 0.3 ? 'R' : 'N');

  std::vector<PlacedBeat> beats;
  double t = rng.uniform(0.4, 0.9);
  double rr_factor = 1.0;  // stretched after a premature beat
  bool first = true;
  while (true) {
    PlacedBeat b{0, normal_symbol == 'N' ? Kind::Normal : Kind::Bundle, normal_symbol,
                 gain * (1.0 + 0.05 * rng.gauss())};
    double rr = base_rr * rr_factor * (1.0 + 0.04 * rng.gauss());
    rr_factor = 1.0;
    const double u = first ? 1.0 : rng.uniform();
    if (u < s_rate) {
      rr = base_rr * rng.uniform(0.6, 0.75);
      b.kind = Kind::Supra;
      b.symbol = pick(rng, {{'A', 0.7}, {'a', 0.15}, {'J', 0.1}, {'S', 0.05}});
      rr_factor = 1.1;
    } else if (u < s_rate + v_rate) {
      rr = base_rr * rng.uniform(0.6, 0.72);
      b.kind = Kind::Ventricular;
      b.symbol = pick(rng, {{'V', 0.95}, {'E', 0.05}});
      rr_factor = 1.35;
    } else if (u < s_rate + v_rate + options.f_rate) {
      rr = base_rr * rng.uniform(0.85, 0.95);
      b.kind = Kind::Fusion;
      b.symbol = 'F';
    } else if (b.kind == Kind::Normal && rng.uniform() < 0.01) {
      b.symbol = rng.uniform() < 0.5 ? 'j' : 'e';
    }
    if (!first) t += rr;
    first = false;
    if ((t + 0.7) * fs >= static_cast<double>(n)) break;
    b.r = static_cast<std::size_t>(std::lround(t * fs));
    beats.push_back(b);
  }

  std::vector<double> mlii(n, 0.0);
  for (const auto& b : beats) {
    for (const auto& w : template_for(b.kind)) {
      const double centre = static_cast<double>(b.r) + w.t * fs;
      const double sigma = w.width * fs;
      const auto lo = static_cast<long long>(std::floor(centre - 5 * sigma));
      const auto hi = static_cast<long long>(std::ceil(centre + 5 * sigma));
      for (long long i = std::max(0LL, lo); i <= hi && i < static_cast<long long>(n); ++i) {
        const double z = (static_cast<double>(i) - centre) / sigma;
        mlii[static_cast<std::size_t>(i)] += b.scale * w.amp * std::exp(-0.5 * z * z);
      }
    }
  }
  const double f1 = rng.uniform(0.15, 0.35);
  const double f2 = rng.uniform(0.02, 0.08);
  const double ph1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  std::vector<double> v1(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = static_cast<double>(i) / fs;
    const double wander = options.wander_mv * (std::sin(2 * std::numbers::pi * f1 * ti + ph1) +
                                               0.6 * std::sin(2 * std::numbers::pi * f2 * ti));
    v1[i] = -0.45 * mlii[i] + 0.5 * wander + options.noise_mv * rng.gauss();
    mlii[i] += wander + options.noise_mv * rng.gauss();
  }

  SyntheticRecord rec;
  std::vector<int> d_mlii(n), d_v1(n);
  std::transform(mlii.begin(), mlii.end(), d_mlii.begin(), to_digital);
  std::transform(v1.begin(), v1.end(), d_v1.begin(), to_digital);
  const bool swapped = record_id == "114";
  rec.channel0 = swapped ? d_v1 : d_mlii;
  rec.channel1 = swapped ? d_mlii : d_v1;

  rec.header.record_id = record_id;
  rec.header.n_signals = 2;
  rec.header.sampling_rate = fs;
  rec.header.n_samples = n;
  const std::vector<std::string> leads =
      swapped ? std::vector<std::string>{"V5", "MLII"} : std::vector<std::string>{"MLII", "V1"};
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& ch = c == 0 ? rec.channel0 : rec.channel1;
    wfdb::SignalSpec s;
    s.file_name = record_id + ".dat";
    s.storage_format = 212;
    s.gain = kGain;
    s.adc_resolution = 11;
    s.adc_zero = kAdcZero;
    s.baseline = kAdcZero;
    s.initial_value = ch.empty() ? 0 : ch.front();
    s.checksum = checksum16(ch);
    s.block_size = 0;
    s.lead_name = leads[c];
    rec.header.signals.push_back(s);
  }

  rec.annotations.push_back({0, kRhythmCode, "(N"});
  std::size_t next_noise = static_cast<std::size_t>(40 * fs);
  for (const auto& b : beats) {
    if (b.r >= next_noise) {
      rec.annotations.push_back({b.r - 40, kNoiseCode, ""});
      next_noise += static_cast<std::size_t>(40 * fs);
    }
    rec.annotations.push_back({b.r, *wfdb::beat_code(b.symbol), ""});
  }
  return rec;
}

void write_record(const SyntheticRecord& record, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& id = record.header.record_id;
  {
    std::ofstream out(dir / (id + ".hea"));
    out << wfdb::format_header(record.header);
    if (!out) throw wfdb::WfdbError("cannot write header for " + id);
  }
  const auto dat = wfdb::encode_format212(record.channel0, record.channel1);
  const auto atr = wfdb::encode_annotations(record.annotations);
  for (const auto& [ext, bytes] : {std::pair{".dat", &dat}, std::pair{".atr", &atr}}) {
    std::ofstream out(dir / (id + ext), std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes->data()),
              static_cast<std::streamsize>(bytes->size()));
    if (!out) throw wfdb::WfdbError("cannot write " + id + ext);
  }
}

std::vector<std::string> write_database(const std::filesystem::path& dir,
                                        const wfdb::DatasetSplit& split,
                                        const SyntheticOptions& options) {
  std::vector<std::string> ids;
  for (const auto* group : {&split.train_ids, &split.test_ids}) {
    for (const auto& id : *group) {
      write_record(generate_record(id, options), dir);
      ids.push_back(id);
    }
  }
  return ids;
}

}  // namespace ecggraph::synthetic
