#include "gated/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "gated/errors.hpp"

using nlohmann::json;

namespace gated {

namespace {

uint32_t crc_of(const std::string& manifest, const std::vector<float>& payload) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(manifest.data()),
              static_cast<uInt>(manifest.size()));
  const auto* bytes = reinterpret_cast<const Bytef*>(payload.data());
  size_t left = payload.size() * sizeof(float);
  while (left > 0) {
    const uInt chunk = static_cast<uInt>(std::min<size_t>(left, 1u << 30));
    crc = crc32(crc, bytes, chunk);
    bytes += chunk;
    left -= chunk;
  }
  return static_cast<uint32_t>(crc);
}

json tensor_entry(const std::string& name, const Tensor& t, size_t offset) {
  return json{{"name", name},
              {"shape", {t.n(), t.c(), t.h(), t.w()}},
              {"offset", offset},
              {"numel", t.numel()}};
}

template <typename W>
void write_raw(std::ofstream& f, const W& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(W));
}

struct Parsed {
  json manifest;
  std::vector<float> payload;
};

Parsed read_and_verify(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  const size_t head = 8 + sizeof(uint32_t) + sizeof(uint64_t);
  if (bytes.size() < head + sizeof(uint32_t))
    throw ChecksumMismatch("checkpoint truncated: " + path);
  if (std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
    throw VersionMismatch("not a checkpoint file (bad magic): " + path);
  uint32_t version;
  std::memcpy(&version, bytes.data() + 8, sizeof(version));
  if (version != kCheckpointVersion)
    throw VersionMismatch("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
  uint64_t mlen;
  std::memcpy(&mlen, bytes.data() + 12, sizeof(mlen));
  if (bytes.size() < head + mlen + sizeof(uint32_t))
    throw ChecksumMismatch("checkpoint truncated: " + path);

  const std::string manifest = bytes.substr(head, mlen);
  const size_t payload_bytes = bytes.size() - head - mlen - sizeof(uint32_t);
  if (payload_bytes % sizeof(float) != 0)
    throw ChecksumMismatch("checkpoint payload misaligned: " + path);

  Parsed p;
  p.payload.resize(payload_bytes / sizeof(float));
  std::memcpy(p.payload.data(), bytes.data() + head + mlen, payload_bytes);

  uint32_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - sizeof(uint32_t), sizeof(stored));
  if (stored != crc_of(manifest, p.payload))
    throw ChecksumMismatch("checkpoint checksum mismatch: " + path);

  try {
    p.manifest = json::parse(manifest);
  } catch (const json::exception& e) {
    throw ChecksumMismatch("checkpoint manifest unreadable: " + std::string(e.what()));
  }
  return p;
}

void copy_one(const json& entry, const std::vector<float>& payload, Tensor& dst,
              std::vector<std::string>& problems) {
  const auto shape = entry.at("shape");
  const std::array<int, 4> want{shape.at(0).get<int>(), shape.at(1).get<int>(),
                                shape.at(2).get<int>(), shape.at(3).get<int>()};
  const std::string name = entry.at("name").get<std::string>();
  if (want != dst.shape()) {
    problems.push_back(name + ": file " +
                       Tensor(want[0], want[1], want[2], want[3]).shape_str() + " vs model " +
                       dst.shape_str());
    return;
  }
  const size_t off = entry.at("offset").get<size_t>();
  const size_t numel = entry.at("numel").get<size_t>();
  if (off + numel > payload.size()) {
    problems.push_back(name + ": payload out of range");
    return;
  }
  std::copy(payload.begin() + off, payload.begin() + off + numel, dst.data());
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamList& state, const CheckpointMeta& meta,
                     const NamedTensors& optimizer_state) {
  json tensors = json::array();
  json opt = json::array();
  size_t offset = 0;
  for (const auto& p : state) {
    tensors.push_back(tensor_entry(p.name, *p.value, offset));
    offset += p.value->numel();
  }
  for (const auto& [name, t] : optimizer_state) {
    opt.push_back(tensor_entry(name, t, offset));
    offset += t.numel();
  }
  json manifest{{"version", kCheckpointVersion},
                {"epoch", meta.epoch},
                {"step", meta.step},
                {"config", meta.config_json},
                {"tensors", std::move(tensors)},
                {"opt", std::move(opt)}};
  const std::string mstr = manifest.dump();

  std::vector<float> payload;
  payload.reserve(offset);
  for (const auto& p : state) payload.insert(payload.end(), p.value->vec().begin(), p.value->vec().end());
  for (const auto& [name, t] : optimizer_state)
    payload.insert(payload.end(), t.vec().begin(), t.vec().end());

  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint: " + path);
  f.write(kCheckpointMagic, 8);
  write_raw(f, kCheckpointVersion);
  write_raw(f, static_cast<uint64_t>(mstr.size()));
  f.write(mstr.data(), static_cast<std::streamsize>(mstr.size()));
  f.write(reinterpret_cast<const char*>(payload.data()),
          static_cast<std::streamsize>(payload.size() * sizeof(float)));
  write_raw(f, crc_of(mstr, payload));
  f.close();
  if (!f.good()) throw IoError("failed writing checkpoint (disk full?): " + path);
}

CheckpointMeta load_checkpoint(const std::string& path, const ParamList& state,
                               NamedTensors* optimizer_state) {
  Parsed p = read_and_verify(path);

  std::vector<std::string> problems;
  std::map<std::string, Tensor*> by_name;
  for (const auto& s : state) by_name[s.name] = s.value;

  std::set<std::string> seen;
  for (const auto& entry : p.manifest.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      problems.push_back(name + ": not present in model");
      continue;
    }
    seen.insert(name);
    copy_one(entry, p.payload, *it->second, problems);
  }
  for (const auto& s : state)
    if (!seen.count(s.name)) problems.push_back(s.name + ": missing from checkpoint");
  if (!problems.empty()) {
    std::string msg = "checkpoint/model mismatch:";
    for (const auto& s : problems) msg += "\n  " + s;
    throw ShapeError(msg);
  }

  if (optimizer_state) {
    optimizer_state->clear();
    for (const auto& entry : p.manifest.at("opt")) {
      const auto shape = entry.at("shape");
      Tensor t(shape.at(0).get<int>(), shape.at(1).get<int>(), shape.at(2).get<int>(),
               shape.at(3).get<int>());
      std::vector<std::string> probs;
      copy_one(entry, p.payload, t, probs);
      if (!probs.empty()) throw ChecksumMismatch("optimizer tensor unreadable: " + probs[0]);
      optimizer_state->emplace_back(entry.at("name").get<std::string>(), std::move(t));
    }
  }

  CheckpointMeta meta;
  meta.epoch = p.manifest.at("epoch").get<int>();
  meta.step = p.manifest.at("step").get<int64_t>();
  meta.config_json = p.manifest.at("config").get<std::string>();
  return meta;
}

CheckpointMeta peek_checkpoint(const std::string& path) {
  Parsed p = read_and_verify(path);
  CheckpointMeta meta;
  meta.epoch = p.manifest.at("epoch").get<int>();
  meta.step = p.manifest.at("step").get<int64_t>();
  meta.config_json = p.manifest.at("config").get<std::string>();
  return meta;
}

}  // namespace gated
