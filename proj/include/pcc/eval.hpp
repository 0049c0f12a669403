#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pcc/dataset.hpp"
#include "pcc/generator.hpp"
#include "pcc/losses.hpp"

namespace pcc {

struct InstanceMetrics {
  std::string id;
  std::string category;
  real cd_t = 0;
  real cd_p = 0;
  std::int64_t resolution = 0;
};

struct CategorySummary {
  std::int64_t count = 0;
  real mean_cd_t = 0;
  real mean_cd_p = 0;
};

struct EvalReport {
  std::vector<InstanceMetrics> instances;
  std::int64_t resolution = 0;
  std::uint64_t config_hash = 0;
  std::optional<real> fpd_value;

  std::map<std::string, CategorySummary> by_category() const;
  std::int64_t count() const { return static_cast<std::int64_t>(instances.size()); }
  real mean_cd_t() const;
  real mean_cd_p() const;

  // Line-oriented records: id, category, CD-T, CD-P, resolution (raw units).
  std::string machine_text() const;
  // Table with the usual scaling conventions called out in the header
  // (CD-T x 1e-3, CD-P x 1e-4).
  std::string pretty_text() const;
};

using PredictFn = std::function<PointCloud(const Instance&)>;
using FeatureFn = std::function<std::vector<real>(const PointCloud&)>;

// CD-T / CD-P of `predict` output against each instance's complete cloud.
EvalReport evaluate(const std::vector<const Instance*>& tests,
                    std::int64_t resolution, const PredictFn& predict,
                    const FeatureFn* fpd_features = nullptr,
                    std::int64_t feature_width = 0);

// predict = fine output of gen.complete with the trainer's mean shapes
PredictFn generator_predictor(const Generator& gen,
                              const std::function<Tensor(int)>& mean_shape_for,
                              std::int64_t resolution);

struct OcclusionPoint {
  real p = 0;
  real mean_cd_t = 0;
  real mean_cd_p = 0;
  std::int64_t count = 0;
};

// Occludes each test partial by p percent, completes, and reports mean CD,
// for each p in the list (rows ordered by p).
std::vector<OcclusionPoint> occlusion_sweep(
    const std::vector<const Instance*>& tests, const std::vector<real>& p_list,
    std::int64_t resolution, const PredictFn& predict, std::uint64_t seed);

}  // namespace pcc
