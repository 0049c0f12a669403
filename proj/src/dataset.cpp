#include "pcc/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

namespace pcc {

namespace {

std::string instance_name(Category cat, int i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03d", category_name(cat), i);
  return buf;
}

}  // namespace

std::vector<Instance> build_synthetic_dataset(
    const SyntheticDatasetSpec& spec) {
  require(spec.per_category >= 1, "per_category must be >= 1");
  require(spec.keep_fraction > 0 && spec.keep_fraction <= 1,
          "keep_fraction must be in (0,1]");
  require(!spec.categories.empty(), "no categories requested");
  const auto dense_points = static_cast<std::int64_t>(std::llround(
      static_cast<real>(spec.partial_points) / spec.keep_fraction));

  std::vector<Instance> out;
  Rng master(spec.seed);
  const int n_train = static_cast<int>(
      std::llround(spec.train_fraction * static_cast<real>(spec.per_category)));
  for (Category cat : spec.categories) {
    for (int i = 0; i < spec.per_category; ++i) {
      const std::uint64_t inst_seed = master.raw();
      Instance inst;
      inst.id = instance_name(cat, i);
      inst.category = static_cast<int>(cat);
      inst.train = i < n_train;
      inst.complete = gen_synthetic(cat, spec.complete_points, inst_seed);
      inst.complete.id = inst.id;

      // Independent surface sample for the view, same shape parameters
      // because gen_synthetic draws them from the same seed.
      PointCloud dense = gen_synthetic(cat, dense_points, inst_seed + 1);
      Rng view_rng(inst_seed ^ 0x9e3779b97f4a7c15ull);
      Vec3 v;
      do {
        v = {view_rng.uniform(-1, 1), view_rng.uniform(-1, 1),
             view_rng.uniform(-1, 1)};
      } while (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] < 1e-4);
      inst.partial = make_partial(dense, v, spec.keep_fraction, inst_seed);
      inst.partial.category = static_cast<int>(cat);
      inst.partial.id = inst.id;
      out.push_back(std::move(inst));
    }
  }
  return out;
}

std::string write_dataset(const SyntheticDatasetSpec& spec,
                          const std::string& root, CloudFormat format) {
  namespace fs = std::filesystem;
  const auto instances = build_synthetic_dataset(spec);
  const char* ext = format == CloudFormat::PcbBinary ? ".pcb" : ".xyz";
  std::vector<ManifestEntry> entries;
  for (const auto& inst : instances) {
    const std::string cat = category_name(static_cast<Category>(inst.category));
    fs::create_directories(fs::path(root) / cat);
    const std::string partial_rel = cat + "/" + inst.id + "_partial" + ext;
    const std::string complete_rel = cat + "/" + inst.id + "_complete" + ext;
    write_cloud((fs::path(root) / partial_rel).string(), inst.partial, format);
    write_cloud((fs::path(root) / complete_rel).string(), inst.complete,
                format);
    entries.push_back({inst.id, cat, inst.train ? "train" : "test",
                       partial_rel, complete_rel});
  }
  const std::string manifest = (fs::path(root) / "manifest.tsv").string();
  write_manifest(manifest, entries);
  return manifest;
}

std::vector<Instance> load_dataset(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  const auto entries = read_manifest(manifest_path);
  if (entries.empty())
    throw ParseError("manifest '" + manifest_path + "' lists no instances");
  const fs::path base = fs::path(manifest_path).parent_path();
  std::vector<Instance> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    Instance inst;
    inst.id = e.id;
    inst.category = static_cast<int>(category_from_name(e.category));
    inst.train = e.split == "train";
    inst.partial = read_cloud((base / e.partial_path).string());
    inst.complete = read_cloud((base / e.complete_path).string());
    inst.partial.category = inst.category;
    inst.complete.category = inst.category;
    inst.partial.id = inst.id;
    inst.complete.id = inst.id;
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<const Instance*> split_of(const std::vector<Instance>& all,
                                      bool train) {
  std::vector<const Instance*> out;
  for (const auto& inst : all)
    if (inst.train == train) out.push_back(&inst);
  return out;
}

}  // namespace pcc
