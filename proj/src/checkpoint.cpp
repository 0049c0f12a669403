#include "pcc/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace pcc {

namespace {

constexpr char kMagic[4] = {'P', 'C', 'K', '1'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kScalarWidth = 8;

void append_u16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xff));
  b.push_back(static_cast<char>((v >> 8) & 0xff));
}
void append_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void append_u64(std::string& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void append_f64(std::string& b, real v) {
  append_u64(b, std::bit_cast<std::uint64_t>(v));
}

struct Reader {
  const std::string& b;
  std::size_t pos = 0;
  void need(std::size_t n) const {
    if (pos + n > b.size())
      throw RestoreError("checkpoint truncated at byte " + std::to_string(pos));
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint8_t>(b[pos]) |
                      (static_cast<std::uint16_t>(static_cast<std::uint8_t>(b[pos + 1])) << 8);
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(b[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(b[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = b.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void RecordFile::put(const std::string& name, Shape shape,
                     std::vector<real> data) {
  if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
    throw ContractViolation("record '" + name + "' shape/data mismatch");
  records[name] = {std::move(shape), std::move(data)};
}

void RecordFile::put_scalar(const std::string& name, real v) {
  put(name, {1}, {v});
}

void RecordFile::put_text(const std::string& name, const std::string& text) {
  // Pack bytes into f64 lanes: [length, then ceil(len/8) words].
  std::vector<real> data;
  data.push_back(static_cast<real>(text.size()));
  for (std::size_t i = 0; i < text.size(); i += 8) {
    std::uint64_t w = 0;
    for (std::size_t j = 0; j < 8 && i + j < text.size(); ++j)
      w |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(text[i + j])) << (8 * j);
    data.push_back(std::bit_cast<real>(w));
  }
  const auto count = static_cast<std::int64_t>(data.size());
  put(name, {count}, std::move(data));
}

void RecordFile::put_u64(const std::string& name,
                         const std::vector<std::uint64_t>& v) {
  std::vector<real> data(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) data[i] = std::bit_cast<real>(v[i]);
  const auto count = static_cast<std::int64_t>(data.size());
  put(name, {count}, std::move(data));
}

const std::pair<Shape, std::vector<real>>& RecordFile::get(
    const std::string& name) const {
  auto it = records.find(name);
  if (it == records.end())
    throw RestoreError("checkpoint record '" + name + "' missing");
  return it->second;
}

real RecordFile::get_scalar(const std::string& name) const {
  const auto& r = get(name);
  if (r.second.size() != 1)
    throw RestoreError("record '" + name + "' is not a scalar");
  return r.second[0];
}

std::string RecordFile::get_text(const std::string& name) const {
  const auto& r = get(name);
  if (r.second.empty()) throw RestoreError("empty text record '" + name + "'");
  const auto len = static_cast<std::size_t>(r.second[0]);
  std::string out;
  out.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    const std::uint64_t w = std::bit_cast<std::uint64_t>(r.second[1 + i / 8]);
    out.push_back(static_cast<char>((w >> (8 * (i % 8))) & 0xff));
  }
  return out;
}

std::vector<std::uint64_t> RecordFile::get_u64(const std::string& name) const {
  const auto& r = get(name);
  std::vector<std::uint64_t> out(r.second.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::bit_cast<std::uint64_t>(r.second[i]);
  return out;
}

void RecordFile::save(const std::string& path) const {
  std::string b;
  b.append(kMagic, 4);
  append_u16(b, kVersion);
  append_u16(b, kScalarWidth);
  append_u32(b, static_cast<std::uint32_t>(records.size()));
  for (const auto& [name, rec] : records) {
    append_u16(b, static_cast<std::uint16_t>(name.size()));
    b.append(name);
    b.push_back(static_cast<char>(rec.first.size()));
    for (auto d : rec.first) append_u64(b, static_cast<std::uint64_t>(d));
    for (real v : rec.second) append_f64(b, v);
  }
  write_file_atomic(path, b);
}

RecordFile RecordFile::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RestoreError("cannot open checkpoint '" + path + "'");
  std::string b((std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>());
  Reader r{b};
  if (r.bytes(4) != std::string(kMagic, 4))
    throw RestoreError("bad checkpoint magic in '" + path + "'");
  const auto version = r.u16();
  if (version != kVersion)
    throw RestoreError("checkpoint version " + std::to_string(version) +
                       " unsupported (expected " + std::to_string(kVersion) + ")");
  const auto width = r.u16();
  if (width != kScalarWidth)
    throw RestoreError("checkpoint scalar width " + std::to_string(width) +
                       " unsupported");
  const auto count = r.u32();
  RecordFile out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.u16();
    const std::string name = r.bytes(name_len);
    r.need(1);
    const int rank = static_cast<std::uint8_t>(b[r.pos++]);
    Shape shape(rank);
    for (int d = 0; d < rank; ++d) shape[d] = static_cast<std::int64_t>(r.u64());
    const auto n = static_cast<std::size_t>(shape_numel(shape));
    std::vector<real> data(n);
    for (std::size_t e = 0; e < n; ++e) data[e] = std::bit_cast<real>(r.u64());
    out.records[name] = {std::move(shape), std::move(data)};
  }
  if (r.pos != b.size())
    throw RestoreError("trailing bytes in checkpoint '" + path + "'");
  return out;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("rename failed for '" + path + "'");
}

}  // namespace pcc
