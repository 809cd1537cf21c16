#pragma once

// Reader (and a minimal writer) for MIT-BIH style WFDB records: `.hea` text
// headers, format-212 `.dat` signal files and MIT `.atr` annotation files.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ecggraph/types.hpp"

namespace ecggraph::wfdb {

class WfdbError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SignalSpec {
  std::string file_name;
  int storage_format = 0;
  double gain = 200.0;  // adu per mV
  int adc_resolution = 12;
  int adc_zero = 0;
  int baseline = 0;  // defaults to adc_zero when the header gives none
  int initial_value = 0;
  int checksum = 0;
  int block_size = 0;
  std::string lead_name;
};

struct RecordHeader {
  std::string record_id;
  int n_signals = 0;
  double sampling_rate = 0.0;
  std::size_t n_samples = 0;
  std::vector<SignalSpec> signals;
};

struct AnnotatedBeat {
  std::size_t sample_index = 0;
  char symbol = 0;
  std::optional<AamiClass> aami_class;
};

struct EcgRecord {
  RecordHeader header;
  std::size_t lead_ii_channel = 0;
  std::vector<double> lead_ii;  // mV
  std::vector<AnnotatedBeat> beats;
};

/// Inter-patient train/test record split.
struct DatasetSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;

  /// The 22/22 split of the 44 MIT-BIH records that remain after dropping
  /// the four paced records.
  static const DatasetSplit& standard();
};

/// Raw annotation as stored in the annotation stream (beat codes only).
struct RawAnnotation {
  std::size_t sample_index = 0;
  char symbol = 0;
};

struct Format212Samples {
  std::vector<int> channel0;
  std::vector<int> channel1;
};

/// Parses a `.hea` header. Only two-signal format-212 records are accepted.
RecordHeader parse_header(std::string_view text);

/// Decodes `n_samples_per_signal` interleaved sample pairs from format-212
/// bytes (three bytes per pair of 12-bit two's-complement samples).
Format212Samples decode_format212(std::span<const std::uint8_t> bytes,
                                  std::size_t n_samples_per_signal);

/// Inverse of decode_format212. Values must lie in [-2048, 2047].
std::vector<std::uint8_t> encode_format212(std::span<const int> channel0,
                                           std::span<const int> channel1);

double to_physical(int digital, double gain, int adc_zero);

/// Beat annotations from an MIT-format annotation stream. Non-beat codes are
/// skipped; SKIP, NUM, SUB, CHN and AUX words are consumed.
std::vector<RawAnnotation> parse_annotations(std::span<const std::uint8_t> bytes);

/// Beat-code to symbol table of the MIT annotation format; nullopt for codes
/// that are not treated as beats.
std::optional<char> beat_symbol(int code);
std::optional<int> beat_code(char symbol);

/// Writes an annotation stream for the given beats (plus optional rhythm
/// annotations carried as code 28 with an AUX string). Used by the synthetic
/// database generator and round-trip tests.
struct AnnotationToWrite {
  std::size_t sample_index = 0;
  int code = 1;
  std::string aux;
};
std::vector<std::uint8_t> encode_annotations(std::span<const AnnotationToWrite> annotations);

/// AAMI grouping: {N,L,R,e,j} -> N, {A,a,J,S} -> S, {V,E} -> V, else nullopt.
std::optional<AamiClass> map_symbol(char symbol);

/// Index of the MLII channel.
std::size_t select_lead_ii(const RecordHeader& header);

std::string format_header(const RecordHeader& header);

/// Loads `<dir>/<id>.hea/.dat/.atr`, converting lead II to mV.
EcgRecord load_record(const std::filesystem::path& dir, const std::string& record_id);

struct LoadedDataset {
  std::vector<EcgRecord> train;
  std::vector<EcgRecord> test;
};

/// Thrown by load_dataset; carries one message per failing record.
class DatasetError : public WfdbError {
 public:
  explicit DatasetError(std::vector<std::string> failures);
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::vector<std::string> failures_;
};

LoadedDataset load_dataset(const std::filesystem::path& root, const DatasetSplit& split);

/// Audit CSV of (sample_index, symbol, aami_class).
void write_beat_audit_csv(const EcgRecord& record, const std::filesystem::path& path);

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace ecggraph::wfdb
