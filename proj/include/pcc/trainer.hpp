#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pcc/dataset.hpp"
#include "pcc/discriminator.hpp"
#include "pcc/generator.hpp"
#include "pcc/losses.hpp"
#include "pcc/random.hpp"

namespace pcc {

struct TrainConfig {
  // optimization schedule
  real lr_G = 1e-4;
  real lr_D = 5e-5;
  real lr_decay = 0.7;
  std::int64_t lr_decay_epochs = 40;
  real lr_floor = 1e-6;
  real lambda = 1.0;   // GAN weight
  real beta = 200.0;   // reconstruction weight
  real lambda_f_start = 0.01;
  std::int64_t lambda_f_ramp_iters = 50000;
  std::int64_t steps = 1000;
  std::int64_t batch_size = 1;
  std::uint64_t seed = 1;
  bool adversarial = true;
  std::int64_t d_steps_per_g = 1;
  std::int64_t pretrain_steps = 200;  // shape-prior autoencoder
  bool augment_scaling = false;       // random scale in [1/1.5, 1]
  std::int64_t epoch_size = 0;        // instances per epoch; 0 = train split size

  // model
  std::int64_t N_c = 512;
  std::int64_t N_s = 256;
  std::array<real, 3> radii{0.1, 0.2, 0.4};
  std::array<std::int64_t, 3> max_samples{32, 64, 128};
  std::int64_t resolution = 2048;
  std::int64_t latent_width = 1024;
  std::vector<std::int64_t> enc1_widths{128, 256};
  std::vector<std::int64_t> enc2_widths{512, 1024};
  std::vector<std::int64_t> coarse_hidden{1024, 1024};
  std::vector<std::int64_t> lift_feature_widths{256, 128};
  std::int64_t lift_contraction_width = 128;
  std::vector<std::int64_t> disp_hidden{256, 128, 64};
  std::vector<std::int64_t> disc_point_widths{64, 128};
  std::vector<std::int64_t> disc_integrate_widths{256, 128};
  real grid_code_range = 0.05;
  std::int64_t fps_start_index = 0;

  // ablations
  bool no_mean_shape = false;
  bool no_contraction_expansion = false;
  bool no_mirror = false;

  // io
  std::string manifest;
  std::string data_root;
  std::string out_dir = ".";
  std::int64_t checkpoint_every = 0;
  std::int64_t log_every = 1;

  GeneratorConfig generator_config() const;
  DiscriminatorConfig discriminator_config() const;
};

// lr(epoch) = max(base * decay^floor(epoch/every), floor_lr)
real lr_schedule(std::int64_t epoch, real base_lr, real decay = 0.7,
                 std::int64_t decay_epochs = 40, real floor_lr = 1e-6);

// Linear ramp from `start` at iteration 0 to exactly 1 at `ramp_iters`.
real lambda_f_schedule(std::int64_t iteration, real start = 0.01,
                       std::int64_t ramp_iters = 50000);

// Adam with bias correction driven by the true step count; moments are
// checkpointed so a restore continues the exact trajectory.
struct AdamState {
  real beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::int64_t t = 0;
  std::map<std::string, std::pair<std::vector<real>, std::vector<real>>>
      moments;

  void step(ParamStore& params, real lr);
};

struct StepReport {
  std::int64_t step = 0;
  real total = 0, rec = 0, rec_coarse = 0, rec_fine = 0;
  real gan_g = 0, d_loss = 0;
  real lambda_f = 0, lr_g = 0, lr_d = 0;
  std::string trace_line() const;  // tab-separated, full precision
  static std::string trace_header();
};

class Trainer {
 public:
  Trainer(TrainConfig cfg, std::vector<Instance> dataset);

  // Rebuilds everything (params, optimizer moments, rng, step counter) from a
  // checkpoint; the dataset reloads through the embedded config's manifest.
  static std::unique_ptr<Trainer> restore(const std::string& path);
  static std::unique_ptr<Trainer> restore(const std::string& path,
                                          std::vector<Instance> dataset);

  StepReport train_step();
  // Runs to cfg.steps, writing one trace line per log_every steps.
  void run(std::ostream* trace);
  void save(const std::string& path) const;

  const TrainConfig& config() const { return cfg_; }
  std::int64_t step() const { return step_; }
  std::int64_t epoch() const;
  Generator& generator() { return *gen_; }
  const Generator& generator() const { return *gen_; }
  Discriminator& discriminator() { return *disc_; }
  const Discriminator& discriminator() const { return *disc_; }
  const MeanShapeTable& mean_shapes() const { return mean_shapes_; }
  // Undefined tensor when the mean-shape prior is disabled.
  Tensor mean_shape_for(int category) const;
  const Generator* prior_encoder() const { return prior_gen_.get(); }
  const std::vector<Instance>& dataset() const { return data_; }

 private:
  Trainer(TrainConfig cfg, std::vector<Instance> dataset, bool fresh_init);
  void pretrain_prior();
  void batch_instances(std::vector<const Instance*>& out,
                       std::vector<real>& scales);

  TrainConfig cfg_;
  std::vector<Instance> data_;
  std::vector<const Instance*> train_split_;
  std::unique_ptr<Generator> gen_;
  std::unique_ptr<Discriminator> disc_;
  std::unique_ptr<Generator> prior_gen_;  // frozen shape-prior autoencoder
  MeanShapeTable mean_shapes_;
  AdamState opt_g_, opt_d_;
  Rng data_rng_;
  std::int64_t step_ = 0;
};

// Model-only view of a checkpoint: enough to run completion and evaluation
// without the training dataset.
struct InferenceModel {
  TrainConfig cfg;
  std::unique_ptr<Generator> gen;
  std::unique_ptr<Generator> prior;  // frozen shape-prior encoder, may be null
  MeanShapeTable mean_shapes;

  Tensor mean_shape_for(int category) const;
  // Features for FPD: the prior encoder when present, else the generator's.
  std::vector<real> features(const PointCloud& cloud) const;
  std::int64_t feature_width() const { return cfg.latent_width; }

  static InferenceModel load(const std::string& checkpoint_path);
};

// Serialize/parse the full config as a canonical key=value document.
std::string config_to_text(const TrainConfig& cfg);
TrainConfig config_from_text(const std::string& text);
// Parses a config file plus `--set key=value` overrides. Unknown keys raise
// ContractViolation listing every offender with a nearest-key suggestion.
TrainConfig load_config(const std::string& path,
                        const std::vector<std::string>& overrides = {});
TrainConfig parse_config_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs);

}  // namespace pcc
