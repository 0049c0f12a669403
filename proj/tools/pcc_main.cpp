#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pcc/checkpoint.hpp"
#include "pcc/eval.hpp"
#include "pcc/trainer.hpp"

namespace fs = std::filesystem;
using namespace pcc;

namespace {

std::string env_data_root() {
  const char* v = std::getenv("PCC_DATA_ROOT");
  return v ? v : "";
}

std::string resolve_manifest(const TrainConfig& cfg) {
  if (cfg.manifest.empty())
    throw ContractViolation("config has no 'manifest' entry");
  fs::path p = cfg.manifest;
  std::string root = cfg.data_root.empty() ? env_data_root() : cfg.data_root;
  if (p.is_relative() && !root.empty()) p = fs::path(root) / p;
  return p.string();
}

int cmd_gen_data(const std::string& root, int per_category,
                 std::int64_t partial_points, std::int64_t complete_points,
                 std::uint64_t seed, double train_fraction,
                 double keep_fraction, const std::string& format,
                 const std::vector<std::string>& categories) {
  SyntheticDatasetSpec spec;
  spec.per_category = per_category;
  spec.partial_points = partial_points;
  spec.complete_points = complete_points;
  spec.seed = seed;
  spec.train_fraction = train_fraction;
  spec.keep_fraction = keep_fraction;
  if (!categories.empty()) {
    spec.categories.clear();
    for (const auto& name : categories)
      spec.categories.push_back(category_from_name(name));
  }
  const CloudFormat fmt =
      format == "xyz" ? CloudFormat::XyzAscii : CloudFormat::PcbBinary;
  const std::string manifest = write_dataset(spec, root, fmt);
  std::cout << "wrote " << spec.categories.size() * spec.per_category
            << " instances; manifest: " << manifest << "\n";
  return 0;
}

int cmd_train(const std::string& config_path,
              const std::vector<std::string>& overrides) {
  TrainConfig cfg = load_config(config_path, overrides);
  if (cfg.data_root.empty()) cfg.data_root = env_data_root();
  auto dataset = load_dataset(resolve_manifest(cfg));
  fs::create_directories(cfg.out_dir);

  Trainer trainer(cfg, std::move(dataset));
  std::ostringstream trace;
  trainer.run(&trace);
  const std::string trace_path = (fs::path(cfg.out_dir) / "trace.tsv").string();
  write_file_atomic(trace_path, trace.str());
  const std::string ckpt_path =
      (fs::path(cfg.out_dir) / "checkpoint.pck").string();
  trainer.save(ckpt_path);
  std::cout << "trained " << trainer.step() << " steps\ncheckpoint: "
            << ckpt_path << "\ntrace: " << trace_path << "\n";
  return 0;
}

int cmd_complete(const std::string& ckpt, const std::string& input,
                 const std::string& output, std::int64_t resolution,
                 const std::string& coarse_path, const std::string& category,
                 bool do_normalize) {
  InferenceModel model = InferenceModel::load(ckpt);
  PointCloud cloud = read_cloud(input);
  NormTransform transform;
  if (do_normalize) transform = normalize_cloud(cloud);

  Tensor mean_shape;
  if (!model.cfg.no_mean_shape) {
    if (!category.empty()) {
      mean_shape = model.mean_shape_for(
          static_cast<int>(category_from_name(category)));
    } else {
      std::cerr << "[complete] no --category given; using the average mean "
                   "shape over all categories\n";
      mean_shape = model.mean_shapes.get(-1);
    }
  }

  NoGradGuard ng;
  auto res = model.gen->complete(cloud, resolution, mean_shape);
  PointCloud fine = tensor_cloud(res.fine);
  if (do_normalize) denormalize_cloud(fine, transform);
  write_cloud(output, fine);
  std::cout << "wrote " << fine.size() << " points to " << output << "\n";
  if (!coarse_path.empty()) {
    PointCloud coarse = tensor_cloud(res.coarse);
    if (do_normalize) denormalize_cloud(coarse, transform);
    write_cloud(coarse_path, coarse);
    std::cout << "wrote " << coarse.size() << " coarse points to "
              << coarse_path << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& manifest,
             std::int64_t resolution, bool with_fpd,
             const std::string& out_path) {
  InferenceModel model = InferenceModel::load(ckpt);
  if (resolution == 0) resolution = model.cfg.resolution;
  auto dataset = load_dataset(manifest);
  auto tests = split_of(dataset, false);
  if (tests.empty()) throw ContractViolation("manifest has no test instances");

  // warn about categories with no test coverage
  for (const auto& inst : dataset) {
    bool covered = false;
    for (const auto* t : tests) covered = covered || t->category == inst.category;
    if (!covered)
      std::cerr << "[eval] warning: category '"
                << category_name(static_cast<Category>(inst.category))
                << "' has zero test instances; omitted\n";
  }

  auto predictor = generator_predictor(
      *model.gen, [&model](int cat) { return model.mean_shape_for(cat); },
      resolution);
  FeatureFn features = [&model](const PointCloud& c) {
    return model.features(c);
  };
  EvalReport report =
      evaluate(tests, resolution, predictor, with_fpd ? &features : nullptr,
               model.feature_width());
  std::cout << report.pretty_text();
  if (!out_path.empty()) {
    write_file_atomic(out_path, report.machine_text());
    std::cout << "report: " << out_path << "\n";
  }
  return 0;
}

int cmd_occlude_eval(const std::string& ckpt, const std::string& manifest,
                     std::vector<double> p_list, std::int64_t resolution,
                     std::uint64_t seed, const std::string& out_path) {
  InferenceModel model = InferenceModel::load(ckpt);
  if (resolution == 0) resolution = model.cfg.resolution;
  auto dataset = load_dataset(manifest);
  auto tests = split_of(dataset, false);
  if (tests.empty()) throw ContractViolation("manifest has no test instances");
  auto predictor = generator_predictor(
      *model.gen, [&model](int cat) { return model.mean_shape_for(cat); },
      resolution);
  std::vector<real> ps(p_list.begin(), p_list.end());
  const auto sweep = occlusion_sweep(tests, ps, resolution, predictor, seed);
  std::string table = "# p\tmean_cd_t\tmean_cd_p\tinstances\n";
  char buf[128];
  for (const auto& pt : sweep) {
    std::snprintf(buf, sizeof buf, "%.0f\t%.17g\t%.17g\t%lld\n", pt.p,
                  pt.mean_cd_t, pt.mean_cd_p,
                  static_cast<long long>(pt.count));
    table += buf;
  }
  std::cout << table;
  if (!out_path.empty()) {
    write_file_atomic(out_path, table);
    std::cout << "report: " << out_path << "\n";
  }
  return 0;
}

int cmd_interpolate(const std::string& ckpt, const std::string& cloud_a,
                    const std::string& cloud_b, const std::string& out_dir,
                    int steps, std::int64_t resolution,
                    const std::string& category) {
  InferenceModel model = InferenceModel::load(ckpt);
  if (resolution == 0) resolution = model.cfg.resolution;
  PointCloud a = read_cloud(cloud_a);
  PointCloud b = read_cloud(cloud_b);
  Tensor mean_shape;
  if (!model.cfg.no_mean_shape)
    mean_shape = category.empty()
                     ? model.mean_shapes.get(-1)
                     : model.mean_shape_for(
                           static_cast<int>(category_from_name(category)));
  fs::create_directories(out_dir);
  NoGradGuard ng;
  const auto results =
      model.gen->interpolate_latent(a, b, steps, resolution, mean_shape);
  for (std::size_t i = 0; i < results.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%03zu.pcb", i);
    write_cloud((fs::path(out_dir) / name).string(),
                tensor_cloud(results[i].fine));
  }
  std::cout << "wrote " << results.size() << " interpolation steps to "
            << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point cloud completion toolkit"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  std::string gd_root = env_data_root();
  int gd_per_category = 50;
  std::int64_t gd_partial = 256, gd_complete = 2048;
  std::uint64_t gd_seed = 1;
  double gd_train_fraction = 0.8, gd_keep = 0.5;
  std::string gd_format = "pcb";
  std::vector<std::string> gd_categories;
  gen->add_option("--root", gd_root, "output directory")
      ->required(env_data_root().empty());
  gen->add_option("--per-category", gd_per_category, "instances per category");
  gen->add_option("--partial-points", gd_partial, "points per partial input");
  gen->add_option("--complete-points", gd_complete, "points per complete cloud");
  gen->add_option("--seed", gd_seed, "dataset seed");
  gen->add_option("--train-fraction", gd_train_fraction, "train split fraction");
  gen->add_option("--keep-fraction", gd_keep, "visible fraction for partials");
  gen->add_option("--format", gd_format, "pcb or xyz")
      ->check(CLI::IsMember({"pcb", "xyz"}));
  gen->add_option("--categories", gd_categories,
                  "subset of: plane-slab cylinder box-frame sphere-shell");

  // train
  auto* train = app.add_subcommand("train", "train a model from a config file");
  std::string tr_config;
  std::vector<std::string> tr_sets;
  train->add_option("config", tr_config, "key=value config file")->required();
  train->add_option("--set", tr_sets, "override config entries (key=value)");

  // complete
  auto* complete = app.add_subcommand("complete", "complete a partial cloud");
  std::string cp_ckpt, cp_input, cp_output, cp_coarse, cp_category;
  std::int64_t cp_resolution = 2048;
  bool cp_normalize = false;
  complete->add_option("checkpoint", cp_ckpt)->required();
  complete->add_option("input", cp_input, "partial cloud (.xyz/.pcb)")->required();
  complete->add_option("output", cp_output, "output cloud path")->required();
  complete->add_option("--resolution", cp_resolution,
                       "output points: 2048, 4096, 8192 or 16384");
  complete->add_option("--coarse", cp_coarse, "also write the coarse output");
  complete->add_option("--category", cp_category, "mean-shape category name");
  complete->add_flag("--normalize", cp_normalize,
                     "normalize the input, de-normalize outputs");

  // eval
  auto* ev = app.add_subcommand("eval", "per-category CD (and FPD) report");
  std::string ev_ckpt, ev_manifest, ev_out;
  std::int64_t ev_resolution = 0;
  bool ev_fpd = false;
  ev->add_option("checkpoint", ev_ckpt)->required();
  ev->add_option("manifest", ev_manifest)->required();
  ev->add_option("--resolution", ev_resolution, "0 = config value");
  ev->add_flag("--fpd", ev_fpd, "also compute FPD");
  ev->add_option("--out", ev_out, "machine-readable report path");

  // occlude-eval
  auto* oc = app.add_subcommand("occlude-eval", "CD vs occlusion percentage");
  std::string oc_ckpt, oc_manifest, oc_out;
  std::vector<double> oc_p{20, 30, 40, 50, 60, 70};
  std::int64_t oc_resolution = 0;
  std::uint64_t oc_seed = 7;
  oc->add_option("checkpoint", oc_ckpt)->required();
  oc->add_option("manifest", oc_manifest)->required();
  oc->add_option("--p", oc_p, "occlusion percentages in (0,100)");
  oc->add_option("--resolution", oc_resolution, "0 = config value");
  oc->add_option("--seed", oc_seed, "anchor seed");
  oc->add_option("--out", oc_out, "report path");

  // interpolate
  auto* ip = app.add_subcommand("interpolate", "latent interpolation dump");
  std::string ip_ckpt, ip_a, ip_b, ip_dir, ip_category;
  int ip_steps = 5;
  std::int64_t ip_resolution = 0;
  ip->add_option("checkpoint", ip_ckpt)->required();
  ip->add_option("cloud_a", ip_a)->required();
  ip->add_option("cloud_b", ip_b)->required();
  ip->add_option("out_dir", ip_dir)->required();
  ip->add_option("--steps", ip_steps, "number of interpolation steps (>= 2)");
  ip->add_option("--resolution", ip_resolution, "0 = config value");
  ip->add_option("--category", ip_category, "mean-shape category of cloud A");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed())
      return cmd_gen_data(gd_root, gd_per_category, gd_partial, gd_complete,
                          gd_seed, gd_train_fraction, gd_keep, gd_format,
                          gd_categories);
    if (train->parsed()) return cmd_train(tr_config, tr_sets);
    if (complete->parsed())
      return cmd_complete(cp_ckpt, cp_input, cp_output, cp_resolution,
                          cp_coarse, cp_category, cp_normalize);
    if (ev->parsed())
      return cmd_eval(ev_ckpt, ev_manifest, ev_resolution, ev_fpd, ev_out);
    if (oc->parsed())
      return cmd_occlude_eval(oc_ckpt, oc_manifest, oc_p, oc_resolution,
                              oc_seed, oc_out);
    if (ip->parsed())
      return cmd_interpolate(ip_ckpt, ip_a, ip_b, ip_dir, ip_steps,
                             ip_resolution, ip_category);
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericFault& e) {
    std::cerr << "numeric fault: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {  // parse/io/restore
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
