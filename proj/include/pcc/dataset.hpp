#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcc/pointcloud.hpp"
#include "pcc/synthetic.hpp"

namespace pcc {

struct Instance {
  std::string id;
  int category = 0;
  bool train = true;
  PointCloud partial;
  PointCloud complete;
};

struct SyntheticDatasetSpec {
  std::vector<Category> categories{Category::PlaneSlab, Category::Cylinder,
                                   Category::BoxFrame, Category::SphereShell};
  int per_category = 50;
  std::int64_t partial_points = 256;
  std::int64_t complete_points = 2048;
  real keep_fraction = 0.5;
  real train_fraction = 0.8;
  std::uint64_t seed = 1;
};

// Deterministic synthetic dataset: per instance, a complete surface sample
// and a partial view culled from an independent sample of the same surface.
std::vector<Instance> build_synthetic_dataset(const SyntheticDatasetSpec& spec);

// Writes clouds + manifest under `root`; returns the manifest path.
std::string write_dataset(const SyntheticDatasetSpec& spec,
                          const std::string& root,
                          CloudFormat format = CloudFormat::PcbBinary);

// Loads every pair referenced by a manifest (paths relative to its directory).
std::vector<Instance> load_dataset(const std::string& manifest_path);

std::vector<const Instance*> split_of(const std::vector<Instance>& all,
                                      bool train);

}  // namespace pcc
