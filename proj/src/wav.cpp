// Copyright 2026 The SAGRNN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sagrnn/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "sagrnn/errors.hpp"

namespace sagrnn {

namespace {

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

uint16_t get_u16(const std::string& b, size_t pos) {
  return static_cast<uint16_t>(static_cast<unsigned char>(b[pos]) |
                               (static_cast<unsigned char>(b[pos + 1]) << 8));
}

uint32_t get_u32(const std::string& b, size_t pos) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<uint32_t>(static_cast<unsigned char>(b[pos + i]))
         << (8 * i);
  }
  return v;
}

}  // namespace

void write_wav(const std::string& path, const WavData& wav, WavFormat format) {
  if (wav.channels.empty()) throw UsageError("write_wav: no channels");
  const size_t frames = wav.channels[0].size();
  for (const auto& ch : wav.channels) {
    if (ch.size() != frames) {
      throw DimensionError("write_wav: channel length mismatch");
    }
  }
  const uint16_t num_channels = static_cast<uint16_t>(wav.channels.size());
  const bool is_float = format == WavFormat::kFloat32;
  const uint16_t bytes_per_sample = is_float ? 4 : 2;
  const uint32_t byte_rate =
      static_cast<uint32_t>(wav.sample_rate) * num_channels * bytes_per_sample;
  const uint16_t block_align = num_channels * bytes_per_sample;
  const uint32_t data_size =
      static_cast<uint32_t>(frames) * num_channels * bytes_per_sample;

  std::string out;
  out.reserve(data_size + 64);
  out.append("RIFF");
  const uint32_t fmt_size = is_float ? 18 : 16;
  // RIFF size: WAVE + fmt chunk + (fact chunk for float) + data chunk.
  uint32_t riff_size = 4 + (8 + fmt_size) + (8 + data_size);
  if (is_float) riff_size += 8 + 4;
  put_u32(out, riff_size);
  out.append("WAVE");

  out.append("fmt ");
  put_u32(out, fmt_size);
  put_u16(out, is_float ? 3 : 1);  // IEEE float or PCM
  put_u16(out, num_channels);
  put_u32(out, static_cast<uint32_t>(wav.sample_rate));
  put_u32(out, byte_rate);
  put_u16(out, block_align);
  put_u16(out, bytes_per_sample * 8);
  if (is_float) put_u16(out, 0);  // cbSize

  if (is_float) {
    out.append("fact");
    put_u32(out, 4);
    put_u32(out, static_cast<uint32_t>(frames));
  }

  out.append("data");
  put_u32(out, data_size);
  for (size_t i = 0; i < frames; ++i) {
    for (const auto& ch : wav.channels) {
      if (is_float) {
        const float f = static_cast<float>(ch[i]);
        uint32_t bits;
        std::memcpy(&bits, &f, sizeof bits);
        put_u32(out, bits);
      } else {
        const double clipped = std::clamp(ch[i], -1.0, 1.0);
        const int32_t q = static_cast<int32_t>(std::lrint(clipped * 32767.0));
        put_u16(out, static_cast<uint16_t>(static_cast<int16_t>(q)));
      }
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path);
}

WavData read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || bytes.compare(0, 4, "RIFF") != 0 ||
      bytes.compare(8, 4, "WAVE") != 0) {
    throw FormatError("read_wav: not a RIFF/WAVE file: " + path);
  }

  uint16_t audio_format = 0, num_channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  size_t data_pos = 0, data_size = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const uint32_t size = get_u32(bytes, pos + 4);
    const size_t body = pos + 8;
    if (body + size > bytes.size()) {
      throw FormatError("read_wav: truncated chunk " + id);
    }
    if (id == "fmt ") {
      if (size < 16) throw FormatError("read_wav: fmt chunk too small");
      audio_format = get_u16(bytes, body);
      num_channels = get_u16(bytes, body + 2);
      sample_rate = get_u32(bytes, body + 4);
      bits = get_u16(bytes, body + 14);
    } else if (id == "data") {
      data_pos = body;
      data_size = size;
    }
    pos = body + size + (size % 2);  // chunks are word-aligned
  }
  if (audio_format == 0 || data_pos == 0) {
    throw FormatError("read_wav: missing fmt or data chunk");
  }
  if (num_channels == 0) throw FormatError("read_wav: zero channels");

  WavData out;
  out.sample_rate = static_cast<int>(sample_rate);
  out.channels.resize(num_channels);
  if (audio_format == 3 && bits == 32) {
    const size_t frames = data_size / (4 * num_channels);
    for (auto& ch : out.channels) ch.resize(frames);
    for (size_t i = 0; i < frames; ++i) {
      for (uint16_t c = 0; c < num_channels; ++c) {
        const uint32_t raw = get_u32(bytes, data_pos + 4 * (i * num_channels + c));
        float v;
        std::memcpy(&v, &raw, sizeof v);
        out.channels[c][i] = static_cast<double>(v);
      }
    }
  } else if (audio_format == 1 && bits == 16) {
    const size_t frames = data_size / (2 * num_channels);
    for (auto& ch : out.channels) ch.resize(frames);
    for (size_t i = 0; i < frames; ++i) {
      for (uint16_t c = 0; c < num_channels; ++c) {
        const int16_t raw = static_cast<int16_t>(
            get_u16(bytes, data_pos + 2 * (i * num_channels + c)));
        out.channels[c][i] = raw / 32767.0;
      }
    }
  } else {
    throw FormatError("read_wav: unsupported encoding (format " +
                      std::to_string(audio_format) + ", " +
                      std::to_string(bits) + " bits)");
  }
  return out;
}

}  // namespace sagrnn
