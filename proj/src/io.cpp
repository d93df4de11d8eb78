// src/io.cpp

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

#include "lfe/io.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace lfe {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kDuplicateUtteranceId: return "DuplicateUtteranceId";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kEmptyAudio: return "EmptyAudio";
    case ErrorCode::kBadWav: return "BadWav";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kRateMismatch: return "RateMismatch";
    case ErrorCode::kTooFewFrames: return "TooFewFrames";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kTooFewUtterances: return "TooFewUtterances";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kEmptyUtterance: return "EmptyUtterance";
    case ErrorCode::kConfigMismatch: return "ConfigMismatch";
    case ErrorCode::kTooFewSpeakers: return "TooFewSpeakers";
    case ErrorCode::kDegenerateSame: return "DegenerateSame";
    case ErrorCode::kEmptyGroup: return "EmptyGroup";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kTooFewUnits: return "TooFewUnits";
    case ErrorCode::kMissingFamilyLabel: return "MissingFamilyLabel";
    case ErrorCode::kMissingContrast: return "MissingContrast";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kIoError: return "IoError";
  }
  return "UnknownError";
}

std::string to_hex16(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

namespace {

void put_le(std::ostream& os, std::uint64_t v, int n_bytes) {
  char buf[8];
  for (int i = 0; i < n_bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, n_bytes);
  if (!os) raise(ErrorCode::kIoError, "short write");
}

std::uint64_t get_le(const char* buf, int n_bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < n_bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

}  // namespace

void BinaryWriter::magic(const char m[4]) {
  os_.write(m, 4);
  if (!os_) raise(ErrorCode::kIoError, "short write");
}
void BinaryWriter::u16(std::uint16_t v) { put_le(os_, v, 2); }
void BinaryWriter::u32(std::uint32_t v) { put_le(os_, v, 4); }
void BinaryWriter::u64(std::uint64_t v) { put_le(os_, v, 8); }
void BinaryWriter::f32(float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_le(os_, bits, 4);
}
void BinaryWriter::f64(double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_le(os_, bits, 8);
}
void BinaryWriter::str(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!os_) raise(ErrorCode::kIoError, "short write");
}
void BinaryWriter::f32_array(const float* data, std::size_t n) {
  char buf[1 << 16];
  for (std::size_t i = 0; i < n;) {
    const std::size_t m = std::min(n - i, sizeof(buf) / 4);
    for (std::size_t j = 0; j < m; ++j) {
      std::uint32_t bits;
      std::memcpy(&bits, &data[i + j], 4);
      for (int b = 0; b < 4; ++b)
        buf[4 * j + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
    os_.write(buf, static_cast<std::streamsize>(4 * m));
    i += m;
  }
  if (!os_) raise(ErrorCode::kIoError, "short write");
}
void BinaryWriter::f64_array(const double* data, std::size_t n) {
  char buf[1 << 16];
  for (std::size_t i = 0; i < n;) {
    const std::size_t m = std::min(n - i, sizeof(buf) / 8);
    for (std::size_t j = 0; j < m; ++j) {
      std::uint64_t bits;
      std::memcpy(&bits, &data[i + j], 8);
      for (int b = 0; b < 8; ++b)
        buf[8 * j + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
    os_.write(buf, static_cast<std::streamsize>(8 * m));
    i += m;
  }
  if (!os_) raise(ErrorCode::kIoError, "short write");
}

void BinaryReader::need(std::size_t n, char* out) {
  is_.read(out, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is_.gcount()) != n)
    raise(ErrorCode::kIoError, strcat("truncated file: ", source_));
}

void BinaryReader::expect_magic(const char m[4]) {
  char buf[4];
  need(4, buf);
  if (std::memcmp(buf, m, 4) != 0)
    raise(ErrorCode::kIoError,
          strcat("bad magic in ", source_, " (expected ", std::string(m, 4),
                 ", found ", std::string(buf, 4), ")"));
}
std::uint16_t BinaryReader::u16() {
  char b[2];
  need(2, b);
  return static_cast<std::uint16_t>(get_le(b, 2));
}
std::uint32_t BinaryReader::u32() {
  char b[4];
  need(4, b);
  return static_cast<std::uint32_t>(get_le(b, 4));
}
std::uint64_t BinaryReader::u64() {
  char b[8];
  need(8, b);
  return get_le(b, 8);
}
float BinaryReader::f32() {
  std::uint32_t bits = u32();
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}
double BinaryReader::f64() {
  std::uint64_t bits = u64();
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}
std::string BinaryReader::str() {
  std::uint32_t n = u32();
  if (n > (1u << 20))
    raise(ErrorCode::kIoError, strcat("unreasonable string length in ", source_));
  std::string s(n, '\0');
  if (n > 0) need(n, s.data());
  return s;
}
void BinaryReader::f32_array(float* data, std::size_t n) {
  char buf[1 << 16];
  for (std::size_t i = 0; i < n;) {
    const std::size_t m = std::min(n - i, sizeof(buf) / 4);
    need(4 * m, buf);
    for (std::size_t j = 0; j < m; ++j) {
      const auto bits = static_cast<std::uint32_t>(get_le(buf + 4 * j, 4));
      std::memcpy(&data[i + j], &bits, 4);
    }
    i += m;
  }
}
void BinaryReader::f64_array(double* data, std::size_t n) {
  char buf[1 << 16];
  for (std::size_t i = 0; i < n;) {
    const std::size_t m = std::min(n - i, sizeof(buf) / 8);
    need(8 * m, buf);
    for (std::size_t j = 0; j < m; ++j) {
      const std::uint64_t bits = get_le(buf + 8 * j, 8);
      std::memcpy(&data[i + j], &bits, 8);
    }
    i += m;
  }
}

void atomic_write_file(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& body) {
  namespace fs = std::filesystem;
  static std::atomic<std::uint64_t> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += strcat(".tmp.", static_cast<unsigned long>(::getpid()), ".",
                counter.fetch_add(1));
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) raise(ErrorCode::kIoError, strcat("cannot open ", tmp.string()));
    body(os);
    os.flush();
    if (!os) raise(ErrorCode::kIoError, strcat("write failed: ", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    raise(ErrorCode::kIoError,
          strcat("rename ", tmp.string(), " -> ", path.string(), ": ",
                 ec.message()));
  }
}

void atomic_write_file(const std::filesystem::path& path,
                       std::string_view bytes) {
  atomic_write_file(path, [&](std::ostream& os) {
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  });
}

std::vector<char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(ErrorCode::kMissingFile, path.string());
  is.seekg(0, std::ios::end);
  const auto n = is.tellg();
  is.seekg(0, std::ios::beg);
  std::vector<char> bytes(static_cast<std::size_t>(n));
  if (n > 0) is.read(bytes.data(), n);
  if (!is) raise(ErrorCode::kIoError, strcat("read failed: ", path.string()));
  return bytes;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return fnv1a64(bytes.data(), bytes.size());
}

}  // namespace lfe
