// Copyright 2026 The mrcqt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "mrcqt/wav.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include "mrcqt/error.h"

namespace mrcqt {
namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint16_t ReadU16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

uint32_t ReadU32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

void PutU16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void PutTag(std::vector<uint8_t>& out, std::string_view tag) {
  out.insert(out.end(), tag.begin(), tag.end());
}

std::string ChunkName(const uint8_t* p) {
  return std::string(reinterpret_cast<const char*>(p), 4);
}

int BitsOf(SampleFormat format) {
  switch (format) {
    case SampleFormat::kPcm16:
      return 16;
    case SampleFormat::kPcm24:
      return 24;
    case SampleFormat::kFloat32:
      return 32;
  }
  return 0;
}

struct FmtInfo {
  SampleFormat format;
  int channels;
  double sample_rate;
  std::size_t block_align;
};

FmtInfo ParseFmt(const uint8_t* p, std::size_t size) {
  if (size < 16) throw FormatError("wav 'fmt ' chunk: too short");
  uint16_t tag = ReadU16(p);
  const int channels = ReadU16(p + 2);
  const uint32_t rate = ReadU32(p + 4);
  const std::size_t block_align = ReadU16(p + 12);
  const int bits = ReadU16(p + 14);
  if (tag == kFormatExtensible) {
    if (size < 40) throw FormatError("wav 'fmt ' chunk: extensible too short");
    tag = ReadU16(p + 24);  // first two bytes of the subformat GUID
  }
  FmtInfo info{};
  if (tag == kFormatPcm && bits == 16) {
    info.format = SampleFormat::kPcm16;
  } else if (tag == kFormatPcm && bits == 24) {
    info.format = SampleFormat::kPcm24;
  } else if (tag == kFormatFloat && bits == 32) {
    info.format = SampleFormat::kFloat32;
  } else {
    throw FormatError("wav 'fmt ' chunk: unsupported encoding (format tag " +
                      std::to_string(tag) + ", " + std::to_string(bits) +
                      " bits)");
  }
  if (channels != 1 && channels != 2) {
    throw FormatError("wav 'fmt ' chunk: unsupported channel count " +
                      std::to_string(channels));
  }
  if (rate == 0) throw FormatError("wav 'fmt ' chunk: zero sample rate");
  if (block_align != static_cast<std::size_t>(channels * bits / 8)) {
    throw FormatError("wav 'fmt ' chunk: inconsistent block align");
  }
  info.channels = channels;
  info.sample_rate = rate;
  info.block_align = block_align;
  return info;
}

double DecodeSample(const uint8_t* p, SampleFormat format) {
  switch (format) {
    case SampleFormat::kPcm16:
      return static_cast<int16_t>(ReadU16(p)) / 32768.0;
    case SampleFormat::kPcm24: {
      int32_t v = static_cast<int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    case SampleFormat::kFloat32: {
      const uint32_t bits = ReadU32(p);
      float f;
      std::memcpy(&f, &bits, sizeof(f));
      return f;
    }
  }
  return 0.0;
}

int32_t Quantize(double x, int bits) {
  const double scale = std::ldexp(1.0, bits - 1);
  const double q = std::clamp(std::round(x * scale), -scale, scale - 1.0);
  return static_cast<int32_t>(q);
}

}  // namespace

SampleFormat ParseSampleFormat(const std::string& name) {
  if (name == "pcm16") return SampleFormat::kPcm16;
  if (name == "pcm24") return SampleFormat::kPcm24;
  if (name == "float32") return SampleFormat::kFloat32;
  throw ConfigError("unknown sample format '" + name +
                    "' (expected pcm16, pcm24 or float32)");
}

std::string SampleFormatName(SampleFormat format) {
  switch (format) {
    case SampleFormat::kPcm16:
      return "pcm16";
    case SampleFormat::kPcm24:
      return "pcm24";
    case SampleFormat::kFloat32:
      return "float32";
  }
  return "?";
}

WavFile DecodeWav(std::span<const uint8_t> bytes) {
  if (bytes.size() < 12) throw FormatError("wav 'RIFF' header: truncated");
  if (ChunkName(bytes.data()) != "RIFF" || ChunkName(bytes.data() + 8) != "WAVE") {
    throw FormatError("wav 'RIFF' header: not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  FmtInfo fmt{};
  std::size_t pos = 12;
  while (true) {
    if (pos + 8 > bytes.size()) {
      throw FormatError(have_fmt ? "wav 'data' chunk: missing (file truncated)"
                                 : "wav 'fmt ' chunk: missing (file truncated)");
    }
    const std::string name = ChunkName(bytes.data() + pos);
    const std::size_t size = ReadU32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = bytes.size() - body;
    if (name == "fmt ") {
      if (size > available) throw FormatError("wav 'fmt ' chunk: truncated");
      fmt = ParseFmt(bytes.data() + body, size);
      have_fmt = true;
    } else if (name == "data") {
      if (!have_fmt) throw FormatError("wav 'data' chunk: precedes 'fmt '");
      if (size > available) {
        throw FormatError("wav 'data' chunk: truncated (declares " +
                          std::to_string(size) + " bytes, " +
                          std::to_string(available) + " present)");
      }
      if (size % fmt.block_align != 0) {
        throw FormatError("wav 'data' chunk: size is not a whole frame count");
      }
      const std::size_t frames = size / fmt.block_align;
      const std::size_t width = fmt.block_align / fmt.channels;
      WavFile wav;
      wav.sample_rate = fmt.sample_rate;
      wav.channels = fmt.channels;
      wav.format = fmt.format;
      wav.samples.resize(frames);
      const uint8_t* p = bytes.data() + body;
      for (std::size_t i = 0; i < frames; ++i, p += fmt.block_align) {
        const double left = DecodeSample(p, fmt.format);
        wav.samples[i] = fmt.channels == 1
                             ? left
                             : 0.5 * (left + DecodeSample(p + width, fmt.format));
      }
      return wav;
    } else if (size > available) {
      throw FormatError("wav '" + name + "' chunk: truncated");
    }
    pos = body + size + (size & 1);  // chunks are word aligned
  }
}

WavFile LoadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("wav: cannot open '" + path + "'");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  try {
    return DecodeWav(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::vector<uint8_t> EncodeWav(std::span<const double> samples,
                               double sample_rate, SampleFormat format) {
  if (!(sample_rate > 0.0) || sample_rate > 4294967295.0 ||
      sample_rate != std::floor(sample_rate)) {
    throw ParameterError("wav: sample rate must be a positive integer");
  }
  for (double x : samples) {
    if (!std::isfinite(x)) throw ParameterError("wav: non-finite sample");
  }
  const int bits = BitsOf(format);
  const uint32_t width = bits / 8;
  const uint32_t data_size = static_cast<uint32_t>(samples.size() * width);
  std::vector<uint8_t> out;
  out.reserve(44 + data_size);
  PutTag(out, "RIFF");
  PutU32(out, 36 + data_size + (data_size & 1));
  PutTag(out, "WAVE");
  PutTag(out, "fmt ");
  PutU32(out, 16);
  PutU16(out, format == SampleFormat::kFloat32 ? kFormatFloat : kFormatPcm);
  PutU16(out, 1);
  PutU32(out, static_cast<uint32_t>(sample_rate));
  PutU32(out, static_cast<uint32_t>(sample_rate) * width);
  PutU16(out, static_cast<uint16_t>(width));
  PutU16(out, static_cast<uint16_t>(bits));
  PutTag(out, "data");
  PutU32(out, data_size);
  for (double x : samples) {
    if (format == SampleFormat::kFloat32) {
      const float f = static_cast<float>(x);
      uint32_t v;
      std::memcpy(&v, &f, sizeof(v));
      PutU32(out, v);
    } else {
      const uint32_t q = static_cast<uint32_t>(Quantize(x, bits));
      for (uint32_t i = 0; i < width; ++i) {
        out.push_back(static_cast<uint8_t>(q >> (8 * i)));
      }
    }
  }
  if (data_size & 1) out.push_back(0);
  return out;
}

void SaveWav(const std::string& path, std::span<const double> samples,
             double sample_rate, SampleFormat format) {
  const std::vector<uint8_t> bytes = EncodeWav(samples, sample_rate, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("wav: cannot write '" + path + "'");
}

}  // namespace mrcqt
