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

#include "sagrnn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace sagrnn {

namespace {

constexpr char kMagic[4] = {'S', 'G', 'R', 'N'};

uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

void put_f64(std::string& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u64(out, bits);
}

class Reader {
 public:
  Reader(const std::string& bytes, size_t limit)
      : bytes_(bytes), limit_(limit) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<uint32_t>(
               static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<uint64_t>(
               static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 8;
    return v;
  }
  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string str(size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  size_t pos() const { return pos_; }

 private:
  void need(size_t n) {
    if (pos_ + n > limit_) {
      throw FormatError("checkpoint: truncated file");
    }
  }
  const std::string& bytes_;
  size_t limit_;
  size_t pos_ = 0;
};

void put_record(std::string& out, const std::string& name, const Tensor& t) {
  put_u64(out, name.size());
  out.append(name);
  put_u64(out, static_cast<uint64_t>(t.rank()));
  for (int64_t i = 0; i < t.rank(); ++i) {
    put_u64(out, static_cast<uint64_t>(t.extent(i)));
  }
  for (int64_t i = 0; i < t.numel(); ++i) put_f64(out, t[i]);
}

struct Record {
  std::string name;
  Tensor tensor;
};

Record read_record(Reader& r) {
  Record rec;
  rec.name = r.str(r.u64());
  const uint64_t rank = r.u64();
  if (rank > 8) throw FormatError("checkpoint: implausible tensor rank");
  Shape shape;
  int64_t numel = 1;
  for (uint64_t i = 0; i < rank; ++i) {
    const uint64_t e = r.u64();
    if (e == 0 || e > (1ull << 32)) {
      throw FormatError("checkpoint: implausible tensor extent");
    }
    shape.push_back(static_cast<int64_t>(e));
    numel *= static_cast<int64_t>(e);
  }
  std::vector<double> data(static_cast<size_t>(numel));
  for (auto& v : data) v = r.f64();
  rec.tensor = Tensor(std::move(shape), std::move(data));
  return rec;
}

}  // namespace

std::string canonical_config_text(const ModelConfig& config) {
  nlohmann::json j;
  j["attention_dim"] = config.attention_dim;
  j["channels"] = config.channels;
  j["chunk_size"] = config.chunk_size;
  j["dense_connectivity"] = config.dense_connectivity;
  j["frame_size"] = config.frame_size;
  j["hidden"] = config.hidden;
  j["mode"] = to_string(config.mode);
  j["multiscale"] = to_string(config.multiscale);
  j["num_blocks"] = config.num_blocks;
  j["num_speakers"] = config.num_speakers;
  j["self_attention"] = config.self_attention;
  return j.dump();
}

ModelConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad config text: ") + e.what());
  }
  ModelConfig c;
  try {
    c.attention_dim = j.at("attention_dim").get<int64_t>();
    c.channels = j.at("channels").get<int64_t>();
    c.chunk_size = j.at("chunk_size").get<int64_t>();
    c.dense_connectivity = j.at("dense_connectivity").get<bool>();
    c.frame_size = j.at("frame_size").get<int64_t>();
    c.hidden = j.at("hidden").get<int64_t>();
    c.mode = mode_from_string(j.at("mode").get<std::string>());
    c.multiscale = multiscale_from_string(j.at("multiscale").get<std::string>());
    c.num_blocks = j.at("num_blocks").get<int64_t>();
    c.num_speakers = j.at("num_speakers").get<int64_t>();
    c.self_attention = j.at("self_attention").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad config field: ") + e.what());
  }
  return c;
}

void save_checkpoint(const SagrnnParams& params, const AmsGrad* optim,
                     const std::string& path) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  const std::string config = canonical_config_text(params.config);
  put_u64(out, config.size());
  out.append(config);

  uint64_t count = params.store.items().size();
  if (optim) count += 1 + 3 * params.store.items().size();
  put_u64(out, count);
  for (const auto& [name, v] : params.store.items()) {
    put_record(out, "param." + name, v->value);
  }
  if (optim) {
    put_record(out, "optim.t",
               Tensor::scalar(static_cast<double>(optim->step_count())));
    const auto& slots = optim->slots();
    for (size_t i = 0; i < params.store.items().size(); ++i) {
      const std::string& name = params.store.items()[i].first;
      put_record(out, "optim.m." + name, slots[i].m);
      put_record(out, "optim.v." + name, slots[i].v);
      put_record(out, "optim.vmax." + name, slots[i].v_max);
    }
  }
  put_u64(out, fnv1a(out));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());

  if (bytes.size() < 4 + 4 + 8 + 8 + 8) {
    throw FormatError("checkpoint: truncated file");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic bytes");
  }
  // Verify the checksum over everything before the trailer.
  const size_t body_len = bytes.size() - 8;
  {
    uint64_t stored = 0;
    for (int i = 0; i < 8; ++i) {
      stored |= static_cast<uint64_t>(
                    static_cast<unsigned char>(bytes[body_len + i]))
                << (8 * i);
    }
    if (stored != fnv1a(bytes.substr(0, body_len))) {
      throw FormatError("checkpoint: checksum mismatch");
    }
  }

  Reader r(bytes, body_len);
  (void)r.str(4);  // magic
  const uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported format version " +
                      std::to_string(version));
  }
  const std::string config_text = r.str(r.u64());
  const ModelConfig config = parse_config_text(config_text);

  LoadedCheckpoint out;
  out.params = init_sagrnn(config, 0);
  const uint64_t count = r.u64();
  std::vector<Record> optim_records;
  size_t params_seen = 0;
  for (uint64_t i = 0; i < count; ++i) {
    Record rec = read_record(r);
    if (rec.name.rfind("param.", 0) == 0) {
      const std::string name = rec.name.substr(6);
      Var v = out.params.store.find(name);
      if (!v) throw FormatError("checkpoint: unknown parameter " + name);
      if (v->value.shape() != rec.tensor.shape()) {
        throw FormatError("checkpoint: shape mismatch for " + name);
      }
      v->value = std::move(rec.tensor);
      ++params_seen;
    } else {
      optim_records.push_back(std::move(rec));
    }
  }
  if (params_seen != out.params.store.items().size()) {
    throw FormatError("checkpoint: missing parameter records");
  }

  if (!optim_records.empty()) {
    out.has_optim = true;
    out.optim_slots.resize(out.params.store.items().size());
    for (size_t i = 0; i < out.params.store.items().size(); ++i) {
      const Shape& shape = out.params.store.items()[i].second->value.shape();
      out.optim_slots[i].m = Tensor::zeros(shape);
      out.optim_slots[i].v = Tensor::zeros(shape);
      out.optim_slots[i].v_max = Tensor::zeros(shape);
    }
    for (auto& rec : optim_records) {
      if (rec.name == "optim.t") {
        out.optim_step = static_cast<int64_t>(rec.tensor.item());
        continue;
      }
      for (const char* prefix : {"optim.m.", "optim.v.", "optim.vmax."}) {
        if (rec.name.rfind(prefix, 0) != 0) continue;
        const std::string name = rec.name.substr(std::strlen(prefix));
        for (size_t i = 0; i < out.params.store.items().size(); ++i) {
          if (out.params.store.items()[i].first != name) continue;
          Tensor& dst = std::string(prefix) == "optim.m."
                            ? out.optim_slots[i].m
                            : (std::string(prefix) == "optim.v."
                                   ? out.optim_slots[i].v
                                   : out.optim_slots[i].v_max);
          if (dst.shape() != rec.tensor.shape()) {
            throw FormatError("checkpoint: optimizer shape mismatch for " +
                              name);
          }
          dst = std::move(rec.tensor);
          break;
        }
        break;
      }
    }
  }
  return out;
}

LoadedCheckpoint load_checkpoint(const std::string& path,
                                 const ModelConfig& expected) {
  LoadedCheckpoint out = load_checkpoint(path);
  if (!(out.params.config == expected)) {
    throw ConfigError("checkpoint config does not match the expected config");
  }
  return out;
}

void restore_optimizer(const LoadedCheckpoint& ckpt, AmsGrad* optim) {
  if (!ckpt.has_optim || !optim) return;
  optim->set_step_count(ckpt.optim_step);
  auto& slots = optim->slots();
  if (slots.size() != ckpt.optim_slots.size()) {
    throw UsageError("restore_optimizer: slot count mismatch");
  }
  for (size_t i = 0; i < slots.size(); ++i) slots[i] = ckpt.optim_slots[i];
}

}  // namespace sagrnn
