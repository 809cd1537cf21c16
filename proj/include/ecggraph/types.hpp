#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ecggraph {

inline constexpr double kSamplingRate = 360.0;
inline constexpr std::size_t kNumClasses = 3;

// AAMI heartbeat classes kept by the pipeline. The numeric value is the
// class index used by the model and the confusion matrix.
enum class AamiClass : int { N = 0, S = 1, V = 2 };

inline constexpr std::array<AamiClass, kNumClasses> kAllClasses{AamiClass::N, AamiClass::S,
                                                                AamiClass::V};

constexpr int class_index(AamiClass c) { return static_cast<int>(c); }

inline AamiClass class_from_index(int i) {
  if (i < 0 || i >= static_cast<int>(kNumClasses)) {
    throw std::out_of_range("class index out of range: " + std::to_string(i));
  }
  return static_cast<AamiClass>(i);
}

constexpr char class_char(AamiClass c) {
  switch (c) {
    case AamiClass::N: return 'N';
    case AamiClass::S: return 'S';
    case AamiClass::V: return 'V';
  }
  return '?';
}

inline std::optional<AamiClass> class_from_string(std::string_view s) {
  if (s == "N") return AamiClass::N;
  if (s == "S") return AamiClass::S;
  if (s == "V") return AamiClass::V;
  return std::nullopt;
}

}  // namespace ecggraph
