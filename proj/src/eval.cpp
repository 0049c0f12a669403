#include "pcc/eval.hpp"

#include <algorithm>
#include <cstdio>

namespace pcc {

namespace {

std::string fmt(real v, const char* spec = "%.9g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

std::map<std::string, CategorySummary> EvalReport::by_category() const {
  std::map<std::string, CategorySummary> out;
  for (const auto& m : instances) {
    auto& s = out[m.category];
    ++s.count;
    s.mean_cd_t += m.cd_t;
    s.mean_cd_p += m.cd_p;
  }
  for (auto& [_, s] : out) {
    s.mean_cd_t /= static_cast<real>(s.count);
    s.mean_cd_p /= static_cast<real>(s.count);
  }
  return out;
}

real EvalReport::mean_cd_t() const {
  real sum = 0;
  for (const auto& m : instances) sum += m.cd_t;
  return instances.empty() ? 0 : sum / static_cast<real>(instances.size());
}

real EvalReport::mean_cd_p() const {
  real sum = 0;
  for (const auto& m : instances) sum += m.cd_p;
  return instances.empty() ? 0 : sum / static_cast<real>(instances.size());
}

std::string EvalReport::machine_text() const {
  std::string out = "# id\tcategory\tcd_t\tcd_p\tresolution\n";
  for (const auto& m : instances)
    out += m.id + "\t" + m.category + "\t" + fmt(m.cd_t, "%.17g") + "\t" +
           fmt(m.cd_p, "%.17g") + "\t" + std::to_string(m.resolution) + "\n";
  out += "# mean\tall\t" + fmt(mean_cd_t(), "%.17g") + "\t" +
         fmt(mean_cd_p(), "%.17g") + "\t" + std::to_string(resolution) + "\n";
  if (fpd_value)
    out += "# fpd\tall\t" + fmt(*fpd_value, "%.17g") + "\t-\t" +
           std::to_string(resolution) + "\n";
  return out;
}

std::string EvalReport::pretty_text() const {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-14s %6s %14s %14s\n", "category", "n",
                "CD-T (x1e-3)", "CD-P (x1e-4)");
  out += buf;
  for (const auto& [cat, s] : by_category()) {
    std::snprintf(buf, sizeof buf, "%-14s %6lld %14.4f %14.4f\n", cat.c_str(),
                  static_cast<long long>(s.count), s.mean_cd_t * 1e3,
                  s.mean_cd_p * 1e4);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-14s %6lld %14.4f %14.4f\n", "average",
                static_cast<long long>(count()), mean_cd_t() * 1e3,
                mean_cd_p() * 1e4);
  out += buf;
  if (fpd_value) {
    std::snprintf(buf, sizeof buf, "FPD: %.6g\n", *fpd_value);
    out += buf;
  }
  return out;
}

EvalReport evaluate(const std::vector<const Instance*>& tests,
                    std::int64_t resolution, const PredictFn& predict,
                    const FeatureFn* fpd_features,
                    std::int64_t feature_width) {
  require(!tests.empty(), "evaluate with empty test split");
  NoGradGuard ng;
  EvalReport report;
  report.resolution = resolution;
  std::vector<real> fake_feats, real_feats;
  for (const Instance* inst : tests) {
    const PointCloud out = predict(*inst);
    Tensor a = cloud_tensor(out);
    Tensor b = cloud_tensor(inst->complete);
    InstanceMetrics m;
    m.id = inst->id;
    m.category = category_name(static_cast<Category>(inst->category));
    m.cd_t = chamfer(a, b, ChamferVariant::CdT).item();
    m.cd_p = chamfer(a, b, ChamferVariant::CdP).item();
    m.resolution = resolution;
    report.instances.push_back(std::move(m));
    if (fpd_features) {
      auto ff = (*fpd_features)(out);
      auto rf = (*fpd_features)(inst->complete);
      fake_feats.insert(fake_feats.end(), ff.begin(), ff.end());
      real_feats.insert(real_feats.end(), rf.begin(), rf.end());
    }
  }
  if (fpd_features) {
    const auto rows = static_cast<std::int64_t>(tests.size());
    report.fpd_value =
        fpd(fake_feats, rows, real_feats, rows, feature_width);
  }
  return report;
}

PredictFn generator_predictor(const Generator& gen,
                              const std::function<Tensor(int)>& mean_shape_for,
                              std::int64_t resolution) {
  return [&gen, mean_shape_for, resolution](const Instance& inst) {
    NoGradGuard ng;
    auto res = gen.complete(inst.partial, resolution,
                            mean_shape_for(inst.category));
    PointCloud out = tensor_cloud(res.fine);
    out.id = inst.id;
    out.category = inst.category;
    return out;
  };
}

std::vector<OcclusionPoint> occlusion_sweep(
    const std::vector<const Instance*>& tests, const std::vector<real>& p_list,
    std::int64_t resolution, const PredictFn& predict, std::uint64_t seed) {
  require(!tests.empty(), "occlusion sweep with empty test split");
  std::vector<real> ps = p_list;
  std::sort(ps.begin(), ps.end());
  std::vector<OcclusionPoint> out;
  for (real p : ps) {
    require(p > 0 && p < 100,
            "occlusion percentage must be strictly between 0 and 100");
    OcclusionPoint point;
    point.p = p;
    std::vector<Instance> occluded;
    occluded.reserve(tests.size());
    for (std::size_t i = 0; i < tests.size(); ++i) {
      Instance inst = *tests[i];
      inst.partial = occlude(inst.partial, p, seed + i);
      occluded.push_back(std::move(inst));
    }
    std::vector<const Instance*> ptrs;
    for (const auto& inst : occluded) ptrs.push_back(&inst);
    const EvalReport r = evaluate(ptrs, resolution, predict);
    point.mean_cd_t = r.mean_cd_t();
    point.mean_cd_p = r.mean_cd_p();
    point.count = r.count();
    out.push_back(point);
  }
  return out;
}

}  // namespace pcc
