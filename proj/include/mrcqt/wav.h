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


#ifndef MRCQT_WAV_H_
#define MRCQT_WAV_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

// RIFF/WAVE reading and writing. Supported encodings: PCM 16-bit, PCM 24-bit
// and IEEE float 32-bit (plain or WAVE_FORMAT_EXTENSIBLE headers), mono or
// stereo. Stereo is downmixed on load as 0.5 (L + R), the -6 dB pan law.
//
// PCM quantization (no dither): q = clamp(round(x 2^(B-1)), -2^(B-1),
// 2^(B-1) - 1) and x = q / 2^(B-1), so in-range values come back within half
// an LSB and +1.0 within one LSB. Float32 stores x rounded to float, which is
// lossless for float-representable values.
namespace mrcqt {

enum class SampleFormat { kPcm16, kPcm24, kFloat32 };

// "pcm16", "pcm24", "float32". Throws ConfigError otherwise.
SampleFormat ParseSampleFormat(const std::string& name);
std::string SampleFormatName(SampleFormat format);

struct WavFile {
  double sample_rate = 0.0;
  int channels = 0;  // as stored; samples are always mono
  SampleFormat format = SampleFormat::kFloat32;
  std::vector<double> samples;
};

// Throws FormatError naming the offending chunk on unsupported or truncated
// contents; nothing is returned in that case.
WavFile DecodeWav(std::span<const uint8_t> bytes);
WavFile LoadWav(const std::string& path);

// Mono file. Throws ParameterError on a non-positive rate or non-finite
// sample.
std::vector<uint8_t> EncodeWav(std::span<const double> samples,
                               double sample_rate, SampleFormat format);
void SaveWav(const std::string& path, std::span<const double> samples,
             double sample_rate, SampleFormat format);

}  // namespace mrcqt

#endif  // MRCQT_WAV_H_
