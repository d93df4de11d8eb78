// src/wav.cpp

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

#include "lfe/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "lfe/common.hpp"
#include "lfe/io.hpp"

namespace lfe {

namespace {

std::uint32_t le32(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;  // target is little-endian; header bytes are LE by definition
}

std::uint16_t le16(const char* p) {
  std::uint16_t v;
  std::memcpy(&v, p, 2);
  return v;
}

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_file_bytes(path);
  auto bad = [&](const char* what) {
    raise(ErrorCode::kBadWav, strcat(path.string(), ": ", what));
  };

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    bad("not a RIFF/WAVE file");

  WavData wav;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = bytes.data() + pos;
    const std::uint32_t chunk_size = le32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) bad("truncated chunk");

    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_size < 16) bad("fmt chunk too small");
      const std::uint16_t format = le16(bytes.data() + body);
      const std::uint16_t channels = le16(bytes.data() + body + 2);
      const std::uint32_t rate = le32(bytes.data() + body + 4);
      const std::uint16_t bits = le16(bytes.data() + body + 14);
      if (format != 1) bad("only PCM (format 1) is supported");
      if (channels != 1) bad("only mono audio is supported");
      if (bits != 16) bad("only 16-bit samples are supported");
      wav.sample_rate_hz = static_cast<int>(rate);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) bad("data chunk before fmt chunk");
      const std::size_t n = chunk_size / 2;
      wav.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::int16_t s;
        std::memcpy(&s, bytes.data() + body + 2 * i, 2);
        wav.samples[i] = static_cast<float>(s) / 32768.0f;
      }
      return wav;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }
  bad("no data chunk");
  return wav;  // unreachable
}

void write_wav(const std::filesystem::path& path,
               const std::vector<float>& samples, int sample_rate_hz) {
  atomic_write_file(path, [&](std::ostream& os) {
    BinaryWriter w(os);
    const std::uint32_t data_bytes =
        static_cast<std::uint32_t>(samples.size() * 2);
    w.magic("RIFF");
    w.u32(36 + data_bytes);
    w.magic("WAVE");
    w.magic("fmt ");
    w.u32(16);
    w.u16(1);  // PCM
    w.u16(1);  // mono
    w.u32(static_cast<std::uint32_t>(sample_rate_hz));
    w.u32(static_cast<std::uint32_t>(sample_rate_hz * 2));  // byte rate
    w.u16(2);   // block align
    w.u16(16);  // bits per sample
    w.magic("data");
    w.u32(data_bytes);
    for (float s : samples) {
      const float clamped = std::clamp(s, -1.0f, 32767.0f / 32768.0f);
      w.u16(static_cast<std::uint16_t>(
          static_cast<std::int16_t>(std::lrint(clamped * 32768.0f))));
    }
  });
}

}  // namespace lfe
