#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcc/common.hpp"
#include "pcc/tensor.hpp"

namespace pcc {

using Vec3 = std::array<real, 3>;

struct PointCloud {
  std::vector<real> xyz;  // flat row-major N x 3
  std::optional<int> category;
  std::string id;

  std::int64_t size() const { return static_cast<std::int64_t>(xyz.size()) / 3; }
  Vec3 point(std::int64_t i) const {
    return {xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]};
  }
  void push(const Vec3& p) { xyz.insert(xyz.end(), p.begin(), p.end()); }

  static PointCloud from_points(const std::vector<Vec3>& pts);
};

Tensor cloud_tensor(const PointCloud& c);
PointCloud tensor_cloud(const Tensor& t);

// Centering + scaling so the farthest point sits at radius 0.5. Recorded so
// outputs can be mapped back to the input frame.
struct NormTransform {
  Vec3 center{0, 0, 0};
  real scale = 1.0;  // multiplier applied to centered coordinates
};

NormTransform normalize_cloud(PointCloud& c);
void denormalize_cloud(PointCloud& c, const NormTransform& t);

enum class CloudFormat { XyzAscii, PcbBinary };

// Picks the format from the file extension (.xyz / .pcb); anything else is a
// contract violation unless `fmt` is given explicitly.
CloudFormat format_from_path(const std::string& path);

PointCloud read_cloud(const std::string& path, CloudFormat fmt);
PointCloud read_cloud(const std::string& path);
void write_cloud(const std::string& path, const PointCloud& c, CloudFormat fmt);
void write_cloud(const std::string& path, const PointCloud& c);

// Dataset manifest: one tab-separated record per pair.
struct ManifestEntry {
  std::string id;
  std::string category;  // category name
  std::string split;     // "train" | "test"
  std::string partial_path;
  std::string complete_path;
};

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);

}  // namespace pcc
