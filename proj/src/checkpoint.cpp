#include "dcrf/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "dcrf/errors.hpp"
#include "dcrf/io_util.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint serialization assumes a little-endian host");

namespace dcrf {

namespace {

constexpr char kMagic[4] = {'D', 'C', 'R', 'F'};

template <typename T>
void append_raw(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T read_raw(const std::string& data, std::size_t& pos, const std::string& source) {
  if (data.size() - pos < sizeof(T)) throw DataError(source + ": checkpoint truncated at byte " + std::to_string(pos));
  T value;
  std::memcpy(&value, data.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

std::string read_bytes(const std::string& data, std::size_t& pos, std::size_t count, const std::string& source) {
  if (data.size() - pos < count) throw DataError(source + ": checkpoint truncated at byte " + std::to_string(pos));
  std::string out = data.substr(pos, count);
  pos += count;
  return out;
}

}  // namespace

void Checkpoint::set(const std::string& name, std::vector<double> values) {
  for (auto& [n, v] : arrays)
    if (n == name) {
      v = std::move(values);
      return;
    }
  arrays.emplace_back(name, std::move(values));
}

const std::vector<double>* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, v] : arrays)
    if (n == name) return &v;
  return nullptr;
}

const std::vector<double>& Checkpoint::require(const std::string& name) const {
  const auto* v = find(name);
  if (!v) throw DataError("checkpoint is missing array '" + name + "'");
  return *v;
}

std::string Checkpoint::serialize() const {
  std::string out(kMagic, sizeof kMagic);
  append_raw<std::uint32_t>(out, kVersion);
  append_raw<std::uint32_t>(out, static_cast<std::uint32_t>(config_json.size()));
  out += config_json;
  append_raw<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& [name, values] : arrays) {
    append_raw<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    append_raw<std::uint64_t>(out, static_cast<std::uint64_t>(values.size()));
    const std::size_t bytes = values.size() * sizeof(double);
    const std::size_t base = out.size();
    out.resize(base + bytes);
    std::memcpy(out.data() + base, values.data(), bytes);
  }
  return out;
}

Checkpoint Checkpoint::deserialize(const std::string& data, const std::string& source_name) {
  std::size_t pos = 0;
  const std::string magic = read_bytes(data, pos, 4, source_name);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw DataError(source_name + ": not a checkpoint file");
  const auto version = read_raw<std::uint32_t>(data, pos, source_name);
  if (version != kVersion)
    throw DataError(source_name + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  const auto config_len = read_raw<std::uint32_t>(data, pos, source_name);
  ckpt.config_json = read_bytes(data, pos, config_len, source_name);
  const auto array_count = read_raw<std::uint32_t>(data, pos, source_name);
  for (std::uint32_t a = 0; a < array_count; ++a) {
    const auto name_len = read_raw<std::uint32_t>(data, pos, source_name);
    std::string name = read_bytes(data, pos, name_len, source_name);
    const auto count = read_raw<std::uint64_t>(data, pos, source_name);
    if ((data.size() - pos) / sizeof(double) < count)
      throw DataError(source_name + ": checkpoint truncated at byte " + std::to_string(pos));
    std::vector<double> values(count);
    std::memcpy(values.data(), data.data() + pos, count * sizeof(double));
    pos += count * sizeof(double);
    ckpt.arrays.emplace_back(std::move(name), std::move(values));
  }
  if (pos != data.size()) throw DataError(source_name + ": trailing bytes after checkpoint payload");
  return ckpt;
}

void Checkpoint::save(const std::string& path) const { write_file_atomic(path, serialize()); }

Checkpoint Checkpoint::load(const std::string& path) { return deserialize(read_file(path), path); }

}  // namespace dcrf
