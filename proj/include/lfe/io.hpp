// include/lfe/io.hpp

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

#ifndef LFE_IO_HPP_
#define LFE_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lfe/common.hpp"

namespace lfe {

// Little-endian primitive I/O over std streams.  All on-disk formats
// (LFEF/LFEG/LFET/LFEI) go through these.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& os) : os_(os) {}
  void magic(const char m[4]);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void str(const std::string& s);  // u32 length + UTF-8 bytes
  void f32_array(const float* data, std::size_t n);
  void f64_array(const double* data, std::size_t n);
  void f32_array(std::span<const float> v) { f32_array(v.data(), v.size()); }
  void f64_array(std::span<const double> v) { f64_array(v.data(), v.size()); }

 private:
  std::ostream& os_;
};

class BinaryReader {
 public:
  BinaryReader(std::istream& is, std::string source)
      : is_(is), source_(std::move(source)) {}
  void expect_magic(const char m[4]);
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string str();
  void f32_array(float* data, std::size_t n);
  void f64_array(double* data, std::size_t n);
  void f32_array(std::span<float> v) { f32_array(v.data(), v.size()); }
  void f64_array(std::span<double> v) { f64_array(v.data(), v.size()); }

 private:
  void need(std::size_t n, char* out);
  std::istream& is_;
  std::string source_;
};

// Writes via a temp file in the same directory, then renames into place, so
// concurrent writers of the same cache entry cannot leave torn files.
void atomic_write_file(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& body);
void atomic_write_file(const std::filesystem::path& path,
                       std::string_view bytes);

std::vector<char> read_file_bytes(const std::filesystem::path& path);
std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace lfe

#endif  // LFE_IO_HPP_
