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


#include "mrcqt/checkpoint.h"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include "mrcqt/error.h"

namespace mrcqt {
namespace {

constexpr std::string_view kMagic = "MRCQTCKP";
constexpr uint8_t kDtypeFloat64 = 1;

class Writer {
 public:
  void U8(uint8_t v) { out_.push_back(v); }
  void U32(uint32_t v) { Bytes(v, 4); }
  void U64(uint64_t v) { Bytes(v, 8); }
  void F64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    U64(bits);
  }
  void Raw(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void String(std::string_view s) {
    U32(static_cast<uint32_t>(s.size()));
    Raw(s);
  }
  void Tensor(const std::string& name, const Shape& shape,
              std::span<const double> values) {
    String(name);
    U8(kDtypeFloat64);
    U32(static_cast<uint32_t>(shape.size()));
    for (std::size_t d : shape) U64(d);
    for (double v : values) F64(v);
  }
  std::vector<uint8_t> Take() { return std::move(out_); }

 private:
  void Bytes(uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  std::vector<uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  uint8_t U8() { return Take(1)[0]; }
  uint32_t U32() { return static_cast<uint32_t>(Bytes(4)); }
  uint64_t U64() { return Bytes(8); }
  double F64() {
    const uint64_t bits = U64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  std::string Raw(std::size_t n) {
    const uint8_t* p = Take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  std::string String() { return Raw(U32()); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const uint8_t* Take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw FormatError("checkpoint: truncated");
    const uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  uint64_t Bytes(int n) {
    const uint8_t* p = Take(static_cast<std::size_t>(n));
    uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
    return v;
  }

  std::span<const uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void PutGroup(Writer& w, const std::string& prefix,
              const std::map<std::string, Tensor>& group) {
  for (const auto& [name, t] : group) w.Tensor(prefix + name, t.shape(), t.data());
}

void PutGroup(Writer& w, const std::string& prefix,
              const std::map<std::string, std::vector<double>>& group,
              const std::map<std::string, Tensor>& shapes) {
  for (const auto& [name, v] : group) {
    const auto it = shapes.find(name);
    const Shape shape = it != shapes.end() ? it->second.shape() : Shape{v.size()};
    w.Tensor(prefix + name, shape, v);
  }
}

}  // namespace

std::vector<uint8_t> EncodeCheckpoint(const Checkpoint& c) {
  Writer w;
  w.Raw(kMagic);
  w.U32(kCheckpointVersion);
  w.U64(c.iteration);
  w.U64(c.adam.step);
  w.String(c.rng_state);
  w.String(c.config_text);
  const std::size_t count = c.params.trainable.size() +
                            c.params.buffers.size() + c.ema.trainable.size() +
                            c.adam.m.size() + c.adam.v.size();
  w.U32(static_cast<uint32_t>(count));
  PutGroup(w, "param/", c.params.trainable);
  PutGroup(w, "buffer/", c.params.buffers);
  PutGroup(w, "ema/", c.ema.trainable);
  PutGroup(w, "adam_m/", c.adam.m, c.params.trainable);
  PutGroup(w, "adam_v/", c.adam.v, c.params.trainable);
  return w.Take();
}

Checkpoint DecodeCheckpoint(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < kMagic.size() || r.Raw(kMagic.size()) != kMagic) {
    throw FormatError("checkpoint: bad magic");
  }
  const uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " +
                      std::to_string(version));
  }
  Checkpoint c;
  c.iteration = r.U64();
  c.adam.step = r.U64();
  c.rng_state = r.String();
  c.config_text = r.String();
  const uint32_t count = r.U32();
  for (uint32_t i = 0; i < count; ++i) {
    const std::string full = r.String();
    if (r.U8() != kDtypeFloat64) {
      throw FormatError("checkpoint: tensor '" + full + "' has unknown dtype");
    }
    const uint32_t rank = r.U32();
    if (rank > 8) {
      throw FormatError("checkpoint: tensor '" + full + "' has rank " +
                        std::to_string(rank));
    }
    Shape shape(rank);
    for (std::size_t& d : shape) d = r.U64();
    const std::size_t n = ShapeSize(shape);
    if (n > bytes.size() / 8) {
      throw FormatError("checkpoint: tensor '" + full + "' truncated");
    }
    std::vector<double> values(n);
    for (double& v : values) v = r.F64();
    const std::size_t slash = full.find('/');
    const std::string group = full.substr(0, slash);
    const std::string name = slash == std::string::npos ? "" : full.substr(slash + 1);
    if (group == "param") {
      c.params.trainable[name] = Tensor::FromData(shape, std::move(values), true);
    } else if (group == "buffer") {
      c.params.buffers[name] = Tensor::FromData(shape, std::move(values));
    } else if (group == "ema") {
      c.ema.trainable[name] = Tensor::FromData(shape, std::move(values));
    } else if (group == "adam_m") {
      c.adam.m[name] = std::move(values);
    } else if (group == "adam_v") {
      c.adam.v[name] = std::move(values);
    } else {
      throw FormatError("checkpoint: unknown tensor group in '" + full + "'");
    }
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes");
  return c;
}

void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint) {
  const std::vector<uint8_t> bytes = EncodeCheckpoint(checkpoint);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("checkpoint: cannot write '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw FormatError("checkpoint: cannot rename to '" + path + "'");
  }
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open '" + path + "'");
  const std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  try {
    return DecodeCheckpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void CheckSameTree(const std::map<std::string, Tensor>& expected,
                   const std::map<std::string, Tensor>& actual,
                   const std::string& what) {
  for (const auto& [name, t] : expected) {
    const auto it = actual.find(name);
    if (it == actual.end()) {
      throw SizeError(what + ": missing tensor '" + name + "'");
    }
    if (it->second.shape() != t.shape()) {
      throw SizeError(what + ": tensor '" + name + "' has shape " +
                      ShapeToString(it->second.shape()) + ", expected " +
                      ShapeToString(t.shape()));
    }
  }
  for (const auto& [name, t] : actual) {
    if (!expected.count(name)) {
      throw SizeError(what + ": unexpected tensor '" + name + "'");
    }
  }
}

}  // namespace mrcqt
