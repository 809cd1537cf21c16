#pragma once

// Synthetic MIT-BIH look-alike database. Beats are sums of Gaussian waves;
// supraventricular beats come early with a distorted P wave, ventricular
// beats are wide with an inverted T wave and a compensatory pause. Records
// carry baseline wander, noise, rhythm annotations and a few beats outside
// the three classes, and are written as format-212 WFDB files.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ecggraph/wfdb.hpp"

namespace ecggraph::synthetic {

struct SyntheticOptions {
  std::uint64_t seed = 1;
  double duration_s = 120.0;
  double noise_mv = 0.015;
  double wander_mv = 0.15;
  double s_rate = 0.08;  // fraction of supraventricular beats
  double v_rate = 0.08;  // fraction of ventricular beats
  double f_rate = 0.01;  // fusion beats (outside the kept classes)
};

struct SyntheticRecord {
  wfdb::RecordHeader header;
  std::vector<int> channel0;
  std::vector<int> channel1;
  std::vector<wfdb::AnnotationToWrite> annotations;
};

/// Deterministic given (record_id, options). Record "114" stores MLII on
/// channel 1, as in the real database.
SyntheticRecord generate_record(const std::string& record_id, const SyntheticOptions& options);

void write_record(const SyntheticRecord& record, const std::filesystem::path& dir);

/// Writes every record of the split into `dir`; returns the ids written.
std::vector<std::string> write_database(const std::filesystem::path& dir,
                                        const wfdb::DatasetSplit& split,
                                        const SyntheticOptions& options);

}  // namespace ecggraph::synthetic
