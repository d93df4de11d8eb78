// include/lfe/common.hpp

// Copyright 2026  LFE-Kit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef LFE_COMMON_HPP_
#define LFE_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace lfe {

inline constexpr const char* kVersion = "0.1.0";

enum class ErrorCode {
  kMissingFile,
  kDuplicateUtteranceId,
  kSchemaViolation,
  kInsufficientData,
  kEmptyAudio,
  kBadWav,
  kTooShort,
  kRateMismatch,
  kTooFewFrames,
  kDimensionMismatch,
  kNumericalFailure,
  kTooFewUtterances,
  kSingularSystem,
  kEmptyUtterance,
  kConfigMismatch,
  kTooFewSpeakers,
  kDegenerateSame,
  kEmptyGroup,
  kLengthMismatch,
  kTooFewUnits,
  kMissingFamilyLabel,
  kMissingContrast,
  kInvalidSpec,
  kIoError,
};

const char* error_name(ErrorCode code);

// All toolkit failures surface as LfeError; code() keeps them matchable.
class LfeError : public std::runtime_error {
 public:
  LfeError(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(error_name(code)) + ": " + msg),
        code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// strcat-style message building without std::format (gcc 11).
template <typename... Args>
std::string strcat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

template <typename... Args>
[[noreturn]] void raise(ErrorCode code, Args&&... args) {
  throw LfeError(code, strcat(std::forward<Args>(args)...));
}

// FNV-1a, used for config digests and cache keys.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64(s.data(), s.size(), h);
}

std::string to_hex16(std::uint64_t v);

// SplitMix64; derives independent per-item seeds from one master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t item) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (item + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Uniform draw in [0, 1) with 53 random bits.
inline double uniform01(std::uint64_t word) {
  return static_cast<double>(word >> 11) * 0x1.0p-53;
}

// Standard normal draw via Box-Muller; avoids distribution classes whose
// output differs between standard library implementations.
template <typename Engine>
double normal01(Engine& rng) {
  const double u1 = uniform01(rng());
  const double u2 = uniform01(rng());
  const double r = std::sqrt(-2.0 * std::log1p(-u1));
  return r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace lfe

#endif  // LFE_COMMON_HPP_
