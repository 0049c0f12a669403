#include "pcc/pointcloud.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pcc/checkpoint.hpp"

namespace pcc {

PointCloud PointCloud::from_points(const std::vector<Vec3>& pts) {
  PointCloud c;
  c.xyz.reserve(pts.size() * 3);
  for (const auto& p : pts) c.push(p);
  return c;
}

Tensor cloud_tensor(const PointCloud& c) {
  require(c.size() >= 1, "empty point cloud");
  return Tensor::constant({c.size(), 3}, c.xyz);
}

PointCloud tensor_cloud(const Tensor& t) {
  require(t.shape().size() == 2 && t.shape()[1] == 3,
          "cloud tensor must be Nx3");
  PointCloud c;
  c.xyz.assign(t.values().begin(), t.values().end());
  return c;
}

NormTransform normalize_cloud(PointCloud& c) {
  require(c.size() >= 1, "normalize of empty cloud");
  NormTransform t;
  const std::int64_t n = c.size();
  for (std::int64_t i = 0; i < n; ++i)
    for (int d = 0; d < 3; ++d) t.center[d] += c.xyz[3 * i + d];
  for (int d = 0; d < 3; ++d) t.center[d] /= static_cast<real>(n);
  real max_r2 = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    real r2 = 0;
    for (int d = 0; d < 3; ++d) {
      const real v = c.xyz[3 * i + d] - t.center[d];
      r2 += v * v;
    }
    max_r2 = std::max(max_r2, r2);
  }
  t.scale = max_r2 > 0 ? 0.5 / std::sqrt(max_r2) : 1.0;
  for (std::int64_t i = 0; i < n; ++i)
    for (int d = 0; d < 3; ++d)
      c.xyz[3 * i + d] = (c.xyz[3 * i + d] - t.center[d]) * t.scale;
  return t;
}

void denormalize_cloud(PointCloud& c, const NormTransform& t) {
  for (std::int64_t i = 0; i < c.size(); ++i)
    for (int d = 0; d < 3; ++d)
      c.xyz[3 * i + d] = c.xyz[3 * i + d] / t.scale + t.center[d];
}

CloudFormat format_from_path(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".xyz")
    return CloudFormat::XyzAscii;
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".pcb")
    return CloudFormat::PcbBinary;
  throw ContractViolation("cannot infer cloud format from '" + path +
                          "' (use .xyz or .pcb)");
}

namespace {

PointCloud read_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  PointCloud c;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // strip trailing CR from files written on other platforms
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    Vec3 p;
    for (int d = 0; d < 3; ++d) {
      if (!(ls >> p[d]) || !std::isfinite(p[d]))
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": expected three finite coordinates, got '" + line +
                         "'");
    }
    std::string extra;
    if (ls >> extra)
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": trailing token '" + extra + "'");
    c.push(p);
  }
  if (c.size() == 0) throw ParseError(path + ": no points in file");
  return c;
}

void write_xyz(const std::string& path, const PointCloud& c) {
  std::string out;
  out.reserve(static_cast<std::size_t>(c.size()) * 36);
  char buf[128];
  for (std::int64_t i = 0; i < c.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", c.xyz[3 * i],
                  c.xyz[3 * i + 1], c.xyz[3 * i + 2]);
    out += buf;
  }
  write_file_atomic(path, out);
}

constexpr char kPcbMagic[4] = {'P', 'C', 'B', '1'};

PointCloud read_pcb(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string b((std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>());
  if (b.size() < 16 || std::memcmp(b.data(), kPcbMagic, 4) != 0)
    throw ParseError(path + ": not a pcb file (bad header)");
  std::uint32_t count = 0, flags = 0;
  std::memcpy(&count, b.data() + 4, 4);
  std::memcpy(&flags, b.data() + 8, 4);
  (void)flags;  // reserved
  if (count == 0) throw ParseError(path + ": zero points");
  const std::size_t need = 16 + static_cast<std::size_t>(count) * 3 * 4;
  if (b.size() != need)
    throw ParseError(path + ": payload size " + std::to_string(b.size() - 16) +
                     " does not match count " + std::to_string(count) +
                     " at offset 16");
  PointCloud c;
  c.xyz.resize(static_cast<std::size_t>(count) * 3);
  for (std::size_t i = 0; i < c.xyz.size(); ++i) {
    std::uint32_t w = 0;
    std::memcpy(&w, b.data() + 16 + i * 4, 4);
    const float f = std::bit_cast<float>(w);
    if (!std::isfinite(f))
      throw ParseError(path + ": non-finite coordinate at record " +
                       std::to_string(i / 3));
    c.xyz[i] = static_cast<real>(f);
  }
  return c;
}

void write_pcb(const std::string& path, const PointCloud& c) {
  std::string b;
  b.append(kPcbMagic, 4);
  const std::uint32_t count = static_cast<std::uint32_t>(c.size());
  const std::uint32_t flags = 0, reserved = 0;
  b.append(reinterpret_cast<const char*>(&count), 4);
  b.append(reinterpret_cast<const char*>(&flags), 4);
  b.append(reinterpret_cast<const char*>(&reserved), 4);
  for (real v : c.xyz) {
    const float f = static_cast<float>(v);
    const std::uint32_t w = std::bit_cast<std::uint32_t>(f);
    b.append(reinterpret_cast<const char*>(&w), 4);
  }
  write_file_atomic(path, b);
}

}  // namespace

PointCloud read_cloud(const std::string& path, CloudFormat fmt) {
  return fmt == CloudFormat::XyzAscii ? read_xyz(path) : read_pcb(path);
}

PointCloud read_cloud(const std::string& path) {
  return read_cloud(path, format_from_path(path));
}

void write_cloud(const std::string& path, const PointCloud& c,
                 CloudFormat fmt) {
  require(c.size() >= 1, "refusing to write an empty cloud");
  if (fmt == CloudFormat::XyzAscii)
    write_xyz(path, c);
  else
    write_pcb(path, c);
}

void write_cloud(const std::string& path, const PointCloud& c) {
  write_cloud(path, c, format_from_path(path));
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path + "'");
  std::vector<ManifestEntry> out;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ManifestEntry e;
    std::string fields[5];
    for (int i = 0; i < 5; ++i) {
      if (!std::getline(ls, fields[i], '\t'))
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": expected 5 tab-separated fields");
    }
    e.id = fields[0];
    e.category = fields[1];
    e.split = fields[2];
    e.partial_path = fields[3];
    e.complete_path = fields[4];
    if (e.split != "train" && e.split != "test")
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": split must be train or test, got '" + e.split + "'");
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
  std::string out = "# id\tcategory\tsplit\tpartial\tcomplete\n";
  for (const auto& e : entries) {
    out += e.id + "\t" + e.category + "\t" + e.split + "\t" + e.partial_path +
           "\t" + e.complete_path + "\n";
  }
  write_file_atomic(path, out);
}

}  // namespace pcc
