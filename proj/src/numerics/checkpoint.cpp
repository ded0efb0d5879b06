// Copyright 2026 The CRL Authors
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

#include "crl/numerics/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "crl/common/error.hpp"

namespace crl::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'C', 'R', 'L', '1'};
constexpr std::uint8_t kDtypeF32 = 1;
// Guards against absurd allocations from corrupted length fields.
constexpr std::uint64_t kMaxElements = 1ULL << 32;

class Writer {
 public:
  template <typename T>
  void pod(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void floats(const std::vector<float>& v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
    bytes_.insert(bytes_.end(), p, p + v.size() * sizeof(float));
  }
  void raw(const std::vector<std::uint8_t>& v) {
    bytes_.insert(bytes_.end(), v.begin(), v.end());
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T pod() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<float> floats(std::uint64_t n) {
    if (n > kMaxElements) throw FormatError("checkpoint: tensor too large");
    need(n * sizeof(float));
    std::vector<float> v(n);
    std::memcpy(v.data(), bytes_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
    return v;
  }
  std::span<const std::uint8_t> block(std::uint64_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) throw FormatError("checkpoint: truncated data");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> encode_optimizers(
    const std::vector<std::pair<std::string, AdamState>>& optimizers) {
  Writer w;
  w.pod(static_cast<std::uint32_t>(optimizers.size()));
  for (const auto& [name, st] : optimizers) {
    w.str(name);
    w.pod(st.config.lr);
    w.pod(st.config.beta1);
    w.pod(st.config.beta2);
    w.pod(st.config.eps);
    w.pod(st.step);
    w.pod(static_cast<std::uint32_t>(st.first_moment.size()));
    for (const auto& [pname, m] : st.first_moment) {
      const auto it = st.second_moment.find(pname);
      if (it == st.second_moment.end() || it->second.size() != m.size()) {
        throw FormatError("optimizer moments out of sync for " + pname);
      }
      w.str(pname);
      w.pod(static_cast<std::uint64_t>(m.size()));
      w.floats(m);
      w.floats(it->second);
    }
  }
  return w.take();
}

std::vector<std::pair<std::string, AdamState>> decode_optimizers(
    std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  std::vector<std::pair<std::string, AdamState>> out;
  const auto count = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    AdamState st;
    st.config.lr = r.pod<float>();
    st.config.beta1 = r.pod<float>();
    st.config.beta2 = r.pod<float>();
    st.config.eps = r.pod<float>();
    st.step = r.pod<std::uint64_t>();
    const auto moments = r.pod<std::uint32_t>();
    for (std::uint32_t j = 0; j < moments; ++j) {
      std::string pname = r.str();
      const auto n = r.pod<std::uint64_t>();
      st.first_moment[pname] = r.floats(n);
      st.second_moment[pname] = r.floats(n);
    }
    out.emplace_back(std::move(name), std::move(st));
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes in optimizer section");
  return out;
}

}  // namespace

void Checkpoint::add_params(const std::string& prefix, const ParamSet& set) {
  for (const auto& [name, t] : set) {
    params.push_back({prefix + "/" + name, t.shape(),
                      std::vector<float>(t.data().begin(), t.data().end())});
  }
}

void Checkpoint::load_params(const std::string& prefix, ParamSet& set) const {
  for (auto& [name, t] : set) {
    const std::string full = prefix + "/" + name;
    const NamedTensor* found = nullptr;
    for (const auto& nt : params) {
      if (nt.name == full) {
        found = &nt;
        break;
      }
    }
    if (!found) throw FormatError("checkpoint: missing parameter " + full);
    if (found->shape != t.shape()) {
      throw FormatError("checkpoint: shape mismatch for " + full + ": stored " +
                        to_string(found->shape) + ", expected " + to_string(t.shape()));
    }
    std::copy(found->data.begin(), found->data.end(), t.data().begin());
  }
}

bool Checkpoint::has_params(const std::string& prefix) const {
  const std::string p = prefix + "/";
  for (const auto& nt : params) {
    if (nt.name.compare(0, p.size(), p) == 0) return true;
  }
  return false;
}

const AdamState* Checkpoint::optimizer(const std::string& name) const {
  for (const auto& [n, st] : optimizers) {
    if (n == name) return &st;
  }
  return nullptr;
}

std::vector<std::uint8_t> serialize(const Checkpoint& checkpoint) {
  Writer w;
  for (char c : kMagic) w.pod(c);
  w.pod(kCheckpointVersion);
  w.pod(static_cast<std::uint32_t>(checkpoint.params.size()));
  for (const auto& t : checkpoint.params) {
    if (numel(t.shape) != t.data.size()) {
      throw FormatError("checkpoint: data/shape mismatch for " + t.name);
    }
    w.str(t.name);
    w.pod(kDtypeF32);
    w.pod(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.pod(static_cast<std::uint64_t>(d));
    w.floats(t.data);
  }

  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> sections;
  sections.emplace_back("optimizer", encode_optimizers(checkpoint.optimizers));
  sections.emplace_back(
      "rng", std::vector<std::uint8_t>(checkpoint.rng_state.begin(),
                                       checkpoint.rng_state.end()));
  {
    Writer s;
    s.pod(checkpoint.normalizer.count);
    s.pod(checkpoint.normalizer.mean);
    s.pod(checkpoint.normalizer.m2);
    sections.emplace_back("normalizer", s.take());
  }
  {
    Writer s;
    s.pod(static_cast<std::uint32_t>(checkpoint.metadata.size()));
    for (const auto& [k, v] : checkpoint.metadata) {
      s.str(k);
      s.str(v);
    }
    sections.emplace_back("metadata", s.take());
  }
  w.pod(static_cast<std::uint32_t>(sections.size()));
  for (const auto& [name, bytes] : sections) {
    w.str(name);
    w.pod(static_cast<std::uint64_t>(bytes.size()));
    w.raw(bytes);
  }
  std::vector<std::uint8_t> out = w.take();
  const auto crc = static_cast<std::uint32_t>(::crc32(0L, out.data(), static_cast<uInt>(out.size())));
  const auto* p = reinterpret_cast<const std::uint8_t*>(&crc);
  out.insert(out.end(), p, p + sizeof(crc));
  return out;
}

Checkpoint deserialize(std::span<const std::uint8_t> all) {
  Reader head(all);
  char magic[4];
  for (char& c : magic) c = head.pod<char>();
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("checkpoint: bad magic");
  const auto version = head.pod<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint: format version " + std::to_string(version) +
                       ", expected " + std::to_string(kCheckpointVersion));
  }
  constexpr std::size_t kCrcBytes = sizeof(std::uint32_t);
  if (all.size() < 8 + kCrcBytes) throw FormatError("checkpoint: truncated data");
  const auto bytes = all.first(all.size() - kCrcBytes);
  std::uint32_t stored = 0;
  std::memcpy(&stored, all.data() + bytes.size(), kCrcBytes);
  if (stored != static_cast<std::uint32_t>(::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())))) {
    throw FormatError("checkpoint: checksum mismatch (truncated or corrupted file)");
  }
  Reader r(bytes);
  r.block(8);  // magic and version, checked above
  Checkpoint ck;
  const auto count = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.str();
    if (r.pod<std::uint8_t>() != kDtypeF32) throw FormatError("checkpoint: unknown dtype");
    const auto ndim = r.pod<std::uint32_t>();
    if (ndim > 8) throw FormatError("checkpoint: implausible tensor rank");
    std::uint64_t n = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      const auto dim = r.pod<std::uint64_t>();
      if (dim > kMaxElements) throw FormatError("checkpoint: implausible dimension");
      t.shape.push_back(static_cast<std::size_t>(dim));
      n *= dim;
      if (n > kMaxElements) throw FormatError("checkpoint: tensor too large");
    }
    t.data = r.floats(n);
    ck.params.push_back(std::move(t));
  }
  const auto sections = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < sections; ++i) {
    const std::string name = r.str();
    const auto len = r.pod<std::uint64_t>();
    const auto block = r.block(len);
    if (name == "optimizer") {
      ck.optimizers = decode_optimizers(block);
    } else if (name == "rng") {
      ck.rng_state.assign(block.begin(), block.end());
    } else if (name == "normalizer") {
      Reader s(block);
      ck.normalizer.count = s.pod<std::uint64_t>();
      ck.normalizer.mean = s.pod<double>();
      ck.normalizer.m2 = s.pod<double>();
    } else if (name == "metadata") {
      Reader s(block);
      const auto n = s.pod<std::uint32_t>();
      for (std::uint32_t j = 0; j < n; ++j) {
        std::string k = s.str();
        ck.metadata[k] = s.str();
      }
    } else {
      throw FormatError("checkpoint: unknown section " + name);
    }
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const auto bytes = serialize(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IOError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace crl::nn
