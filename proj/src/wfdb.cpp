#include "ecggraph/wfdb.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ecggraph::wfdb {

namespace {

constexpr int kSkipCode = 59;
constexpr int kNumCode = 60;
constexpr int kSubCode = 61;
constexpr int kChnCode = 62;
constexpr int kAuxCode = 63;
constexpr int kMaxInterval = 0x3FF;

struct BeatCodeEntry {
  int code;
  char symbol;
};

constexpr BeatCodeEntry kBeatCodes[] = {
    {1, 'N'}, {2, 'L'}, {3, 'R'},  {4, 'a'},  {5, 'V'},  {6, 'F'},
    {7, 'J'}, {8, 'A'}, {9, 'S'}, {10, 'E'}, {11, 'j'}, {34, 'e'},
};

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if constexpr (std::is_floating_point_v<T>) {
    // std::from_chars for double is available in libstdc++ 11.
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
  } else {
    const char* begin = s.data();
    if (*begin == '+') ++begin;
    auto [p, ec] = std::from_chars(begin, s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
  }
}

[[noreturn]] void header_error(const std::string& record_id, const std::string& what) {
  throw WfdbError("record " + (record_id.empty() ? std::string("<unknown>") : record_id) +
                  ": " + what);
}

// Leading numeric part of a header token, e.g. "360" of "360/1000" or "212"
// of "212x2".
std::string_view numeric_prefix(std::string_view tok) {
  std::size_t end = 0;
  while (end < tok.size() &&
         (std::isdigit(static_cast<unsigned char>(tok[end])) || tok[end] == '.' ||
          tok[end] == '-' || tok[end] == '+' || tok[end] == 'e' || tok[end] == 'E')) {
    ++end;
  }
  return tok.substr(0, end);
}

int sign_extend_12(int v) { return (v & 0x800) ? v - 0x1000 : v; }

std::uint16_t read_u16(std::span<const std::uint8_t> bytes, std::size_t pos) {
  return static_cast<std::uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
}

void push_u16(std::vector<std::uint8_t>& out, std::uint16_t word) {
  out.push_back(static_cast<std::uint8_t>(word & 0xFF));
  out.push_back(static_cast<std::uint8_t>(word >> 8));
}

}  // namespace

const DatasetSplit& DatasetSplit::standard() {
  static const DatasetSplit split{
      {"101", "106", "108", "109", "112", "114", "115", "116", "118", "119", "122",
       "124", "201", "203", "205", "207", "208", "209", "215", "220", "223", "230"},
      {"100", "103", "105", "111", "113", "117", "121", "123", "200", "202", "210",
       "212", "213", "214", "219", "221", "222", "228", "231", "232", "233", "234"},
  };
  return split;
}

RecordHeader parse_header(std::string_view text) {
  std::vector<std::vector<std::string>> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    lines.push_back(split_ws(line));
  }
  if (lines.empty()) header_error("", "empty header");

  RecordHeader header;
  const auto& rec = lines.front();
  header.record_id = rec[0].substr(0, rec[0].find('/'));
  if (rec.size() < 4) {
    header_error(header.record_id, "record line needs 'id nsig fs nsamples'");
  }
  if (!parse_number(std::string_view(rec[1]), header.n_signals)) {
    header_error(header.record_id, "non-numeric signal count '" + rec[1] + "'");
  }
  if (!parse_number(numeric_prefix(rec[2]), header.sampling_rate) ||
      header.sampling_rate <= 0.0) {
    header_error(header.record_id, "invalid sampling frequency '" + rec[2] + "'");
  }
  long long n_samples = 0;
  if (!parse_number(std::string_view(rec[3]), n_samples) || n_samples < 0) {
    header_error(header.record_id, "invalid sample count '" + rec[3] + "'");
  }
  header.n_samples = static_cast<std::size_t>(n_samples);

  if (header.n_signals != 2) {
    header_error(header.record_id,
                 "expected 2 signals, header declares " + std::to_string(header.n_signals));
  }
  if (lines.size() - 1 < static_cast<std::size_t>(header.n_signals)) {
    header_error(header.record_id, "expected " + std::to_string(header.n_signals) +
                                       " signal lines, found " +
                                       std::to_string(lines.size() - 1));
  }

  for (int s = 0; s < header.n_signals; ++s) {
    const auto& f = lines[1 + s];
    const std::string where = "signal " + std::to_string(s) + ": ";
    if (f.size() < 2) header_error(header.record_id, where + "missing storage format");
    SignalSpec sig;
    sig.file_name = f[0];
    if (!parse_number(numeric_prefix(f[1]), sig.storage_format)) {
      header_error(header.record_id, where + "non-numeric storage format '" + f[1] + "'");
    }
    if (sig.storage_format != 212) {
      header_error(header.record_id,
                   where + "unsupported storage format " + std::to_string(sig.storage_format));
    }
    bool has_baseline = false;
    if (f.size() > 2) {
      // gain[(baseline)][/units]
      std::string_view g = f[2];
      auto paren = g.find('(');
      auto slash = g.find('/');
      std::string_view gain_part = g.substr(0, std::min(paren, slash));
      if (!parse_number(gain_part, sig.gain)) {
        header_error(header.record_id, where + "non-numeric gain '" + f[2] + "'");
      }
      if (paren != std::string_view::npos) {
        auto close = g.find(')', paren);
        if (close == std::string_view::npos ||
            !parse_number(g.substr(paren + 1, close - paren - 1), sig.baseline)) {
          header_error(header.record_id, where + "malformed baseline in '" + f[2] + "'");
        }
        has_baseline = true;
      }
      if (sig.gain == 0.0) sig.gain = 200.0;  // WFDB default gain
    }
    auto int_field = [&](std::size_t idx, int& out, const char* name) {
      if (f.size() > idx && !parse_number(std::string_view(f[idx]), out)) {
        header_error(header.record_id,
                     where + "non-numeric " + name + " '" + f[idx] + "'");
      }
    };
    int_field(3, sig.adc_resolution, "adc resolution");
    int_field(4, sig.adc_zero, "adc zero");
    int_field(5, sig.initial_value, "initial value");
    int_field(6, sig.checksum, "checksum");
    int_field(7, sig.block_size, "block size");
    if (!has_baseline) sig.baseline = sig.adc_zero;
    for (std::size_t i = 8; i < f.size(); ++i) {
      if (!sig.lead_name.empty()) sig.lead_name += ' ';
      sig.lead_name += f[i];
    }
    header.signals.push_back(std::move(sig));
  }
  if (header.signals[0].file_name != header.signals[1].file_name) {
    header_error(header.record_id, "format-212 signals must share one data file");
  }
  return header;
}

Format212Samples decode_format212(std::span<const std::uint8_t> bytes,
                                  std::size_t n_samples_per_signal) {
  const std::size_t needed = 3 * n_samples_per_signal;
  if (bytes.size() < needed) {
    // Offset of the first sample pair that cannot be read completely.
    const std::size_t offset = (bytes.size() / 3) * 3;
    throw WfdbError("truncated format-212 stream at byte offset " + std::to_string(offset) +
                    " (need " + std::to_string(needed) + " bytes, have " +
                    std::to_string(bytes.size()) + ")");
  }
  Format212Samples out;
  out.channel0.resize(n_samples_per_signal);
  out.channel1.resize(n_samples_per_signal);
  for (std::size_t i = 0; i < n_samples_per_signal; ++i) {
    const int b0 = bytes[3 * i];
    const int b1 = bytes[3 * i + 1];
    const int b2 = bytes[3 * i + 2];
    out.channel0[i] = sign_extend_12(((b1 & 0x0F) << 8) | b0);
    out.channel1[i] = sign_extend_12(((b1 & 0xF0) << 4) | b2);
  }
  return out;
}

std::vector<std::uint8_t> encode_format212(std::span<const int> channel0,
                                           std::span<const int> channel1) {
  if (channel0.size() != channel1.size()) {
    throw WfdbError("format-212 channels must have equal length");
  }
  std::vector<std::uint8_t> out;
  out.reserve(3 * channel0.size());
  for (std::size_t i = 0; i < channel0.size(); ++i) {
    const int a = channel0[i];
    const int b = channel1[i];
    if (a < -2048 || a > 2047 || b < -2048 || b > 2047) {
      throw WfdbError("sample out of 12-bit range at index " + std::to_string(i));
    }
    const int ua = a & 0xFFF;
    const int ub = b & 0xFFF;
    out.push_back(static_cast<std::uint8_t>(ua & 0xFF));
    out.push_back(static_cast<std::uint8_t>(((ub >> 4) & 0xF0) | (ua >> 8)));
    out.push_back(static_cast<std::uint8_t>(ub & 0xFF));
  }
  return out;
}

double to_physical(int digital, double gain, int adc_zero) {
  if (!(gain > 0.0)) {
    throw WfdbError("gain must be positive, got " + std::to_string(gain));
  }
  return (digital - adc_zero) / gain;
}

std::optional<char> beat_symbol(int code) {
  for (const auto& e : kBeatCodes) {
    if (e.code == code) return e.symbol;
  }
  return std::nullopt;
}

std::optional<int> beat_code(char symbol) {
  for (const auto& e : kBeatCodes) {
    if (e.symbol == symbol) return e.code;
  }
  return std::nullopt;
}

std::vector<RawAnnotation> parse_annotations(std::span<const std::uint8_t> bytes) {
  std::vector<RawAnnotation> out;
  std::size_t pos = 0;
  long long time = 0;
  for (;;) {
    if (pos + 2 > bytes.size()) {
      throw WfdbError("annotation stream ended at byte offset " + std::to_string(pos) +
                      " before the terminator");
    }
    const std::uint16_t word = read_u16(bytes, pos);
    pos += 2;
    const int code = word >> 10;
    const int interval = word & kMaxInterval;
    if (code == 0 && interval == 0) break;

    switch (code) {
      case kSkipCode: {
        if (pos + 4 > bytes.size()) {
          throw WfdbError("truncated SKIP at byte offset " + std::to_string(pos));
        }
        const std::uint32_t hi = read_u16(bytes, pos);
        const std::uint32_t lo = read_u16(bytes, pos + 2);
        pos += 4;
        time += static_cast<std::int32_t>((hi << 16) | lo);
        break;
      }
      case kNumCode:
      case kSubCode:
      case kChnCode:
        break;
      case kAuxCode:
        pos += static_cast<std::size_t>(interval + (interval & 1));
        if (pos > bytes.size()) {
          throw WfdbError("truncated AUX field ending at byte offset " + std::to_string(pos));
        }
        break;
      default:
        time += interval;
        if (time < 0) {
          throw WfdbError("negative annotation time at byte offset " + std::to_string(pos));
        }
        if (auto sym = beat_symbol(code)) {
          out.push_back({static_cast<std::size_t>(time), *sym});
        }
        break;
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_annotations(std::span<const AnnotationToWrite> annotations) {
  std::vector<std::uint8_t> out;
  long long prev = 0;
  for (const auto& a : annotations) {
    if (a.code <= 0 || a.code >= kSkipCode) {
      throw WfdbError("annotation code must be in [1, 58], got " + std::to_string(a.code));
    }
    const long long delta = static_cast<long long>(a.sample_index) - prev;
    if (delta < 0 || delta > kMaxInterval) {
      push_u16(out, static_cast<std::uint16_t>(kSkipCode << 10));
      const auto v = static_cast<std::uint32_t>(static_cast<std::int32_t>(delta));
      push_u16(out, static_cast<std::uint16_t>(v >> 16));
      push_u16(out, static_cast<std::uint16_t>(v & 0xFFFF));
      push_u16(out, static_cast<std::uint16_t>(a.code << 10));
    } else {
      push_u16(out, static_cast<std::uint16_t>((a.code << 10) | delta));
    }
    if (!a.aux.empty()) {
      if (a.aux.size() > 255) throw WfdbError("aux string longer than 255 bytes");
      push_u16(out, static_cast<std::uint16_t>((kAuxCode << 10) | a.aux.size()));
      out.insert(out.end(), a.aux.begin(), a.aux.end());
      if (a.aux.size() & 1) out.push_back(0);
    }
    prev = static_cast<long long>(a.sample_index);
  }
  push_u16(out, 0);
  return out;
}

std::optional<AamiClass> map_symbol(char symbol) {
  switch (symbol) {
    case 'N': case 'L': case 'R': case 'e': case 'j':
      return AamiClass::N;
    case 'A': case 'a': case 'J': case 'S':
      return AamiClass::S;
    case 'V': case 'E':
      return AamiClass::V;
    default:
      return std::nullopt;
  }
}

std::size_t select_lead_ii(const RecordHeader& header) {
  for (std::size_t i = 0; i < header.signals.size(); ++i) {
    if (header.signals[i].lead_name == "MLII") return i;
  }
  throw WfdbError("record " + header.record_id + ": no MLII channel");
}

std::string format_header(const RecordHeader& header) {
  std::ostringstream out;
  out << header.record_id << ' ' << header.n_signals << ' ' << header.sampling_rate << ' '
      << header.n_samples << '\n';
  for (const auto& s : header.signals) {
    out << s.file_name << ' ' << s.storage_format << ' ' << s.gain;
    if (s.baseline != s.adc_zero) out << '(' << s.baseline << ')';
    out << ' ' << s.adc_resolution << ' ' << s.adc_zero << ' ' << s.initial_value << ' '
        << s.checksum << ' ' << s.block_size << ' ' << s.lead_name << '\n';
  }
  return out.str();
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WfdbError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw WfdbError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EcgRecord load_record(const std::filesystem::path& dir, const std::string& record_id) {
  const auto hea = dir / (record_id + ".hea");
  const auto atr = dir / (record_id + ".atr");
  for (const auto& p : {hea, atr}) {
    if (!std::filesystem::exists(p)) {
      throw WfdbError("record " + record_id + ": missing file " + p.string());
    }
  }
  EcgRecord rec;
  rec.header = parse_header(read_text_file(hea));
  if (rec.header.sampling_rate != kSamplingRate) {
    throw WfdbError("record " + record_id + ": sampling rate " +
                    std::to_string(rec.header.sampling_rate) + " Hz, expected 360");
  }
  rec.lead_ii_channel = select_lead_ii(rec.header);

  const auto dat = dir / rec.header.signals[0].file_name;
  if (!std::filesystem::exists(dat)) {
    throw WfdbError("record " + record_id + ": missing file " + dat.string());
  }
  const auto bytes = read_binary_file(dat);
  Format212Samples digital;
  try {
    digital = decode_format212(bytes, rec.header.n_samples);
  } catch (const WfdbError& e) {
    throw WfdbError("record " + record_id + ": " + e.what());
  }
  const auto& chan = rec.lead_ii_channel == 0 ? digital.channel0 : digital.channel1;
  const auto& spec = rec.header.signals[rec.lead_ii_channel];
  rec.lead_ii.resize(chan.size());
  for (std::size_t i = 0; i < chan.size(); ++i) {
    rec.lead_ii[i] = to_physical(chan[i], spec.gain, spec.baseline);
  }

  std::vector<RawAnnotation> raw;
  try {
    raw = parse_annotations(read_binary_file(atr));
  } catch (const WfdbError& e) {
    throw WfdbError("record " + record_id + ": " + e.what());
  }
  rec.beats.reserve(raw.size());
  for (const auto& a : raw) {
    if (!rec.beats.empty() && a.sample_index <= rec.beats.back().sample_index) {
      throw WfdbError("record " + record_id + ": beat annotations not strictly increasing at sample " +
                      std::to_string(a.sample_index));
    }
    if (a.sample_index >= rec.header.n_samples) {
      throw WfdbError("record " + record_id + ": beat annotation at sample " +
                      std::to_string(a.sample_index) + " beyond record end");
    }
    rec.beats.push_back({a.sample_index, a.symbol, map_symbol(a.symbol)});
  }
  return rec;
}

DatasetError::DatasetError(std::vector<std::string> failures)
    : WfdbError([&] {
        std::string msg = std::to_string(failures.size()) + " record(s) failed to load";
        for (const auto& f : failures) msg += "\n  " + f;
        return msg;
      }()),
      failures_(std::move(failures)) {}

LoadedDataset load_dataset(const std::filesystem::path& root, const DatasetSplit& split) {
  LoadedDataset out;
  std::vector<std::string> failures;
  auto load_all = [&](const std::vector<std::string>& ids, std::vector<EcgRecord>& dst) {
    for (const auto& id : ids) {
      try {
        dst.push_back(load_record(root, id));
      } catch (const WfdbError& e) {
        failures.emplace_back(e.what());
      }
    }
  };
  load_all(split.train_ids, out.train);
  load_all(split.test_ids, out.test);
  if (!failures.empty()) throw DatasetError(std::move(failures));
  return out;
}

void write_beat_audit_csv(const EcgRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw WfdbError("cannot write " + path.string());
  out << "sample_index,symbol,aami_class\n";
  for (const auto& b : record.beats) {
    out << b.sample_index << ',' << b.symbol << ',';
    if (b.aami_class) out << class_char(*b.aami_class);
    out << '\n';
  }
}

}  // namespace ecggraph::wfdb
