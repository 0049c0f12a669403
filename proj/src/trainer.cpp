#include "pcc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "pcc/checkpoint.hpp"

namespace pcc {

GeneratorConfig TrainConfig::generator_config() const {
  GeneratorConfig g;
  g.n_coarse = N_c;
  g.latent_width = latent_width;
  g.enc1_widths = enc1_widths;
  g.enc2_widths = enc2_widths;
  g.coarse_hidden = coarse_hidden;
  g.lift_feature_widths = lift_feature_widths;
  g.lift_contraction_width = lift_contraction_width;
  g.disp_hidden = disp_hidden;
  g.grid_code_range = grid_code_range;
  g.fps_start = fps_start_index;
  g.use_mean_shape = !no_mean_shape;
  g.use_mirror = !no_mirror;
  g.use_contraction_expansion = !no_contraction_expansion;
  return g;
}

DiscriminatorConfig TrainConfig::discriminator_config() const {
  DiscriminatorConfig d;
  d.n_seeds = N_s;
  d.radii = radii;
  d.max_samples = max_samples;
  d.point_widths = disc_point_widths;
  d.integrate_widths = disc_integrate_widths;
  d.fps_start = 0;
  return d;
}

real lr_schedule(std::int64_t epoch, real base_lr, real decay,
                 std::int64_t decay_epochs, real floor_lr) {
  require(epoch >= 0, "epoch must be non-negative");
  require(base_lr > 0 && decay > 0 && decay_epochs > 0 && floor_lr > 0,
          "schedule parameters must be positive");
  const auto k = epoch / decay_epochs;
  real lr = base_lr;
  for (std::int64_t i = 0; i < k && lr > floor_lr; ++i) lr *= decay;
  return std::max(lr, floor_lr);
}

real lambda_f_schedule(std::int64_t iteration, real start,
                       std::int64_t ramp_iters) {
  require(iteration >= 0, "iteration must be non-negative");
  require(start > 0 && start <= 1 && ramp_iters > 0, "bad lambda_f ramp");
  if (iteration >= ramp_iters) return 1.0;
  return start + (1.0 - start) * static_cast<real>(iteration) /
                     static_cast<real>(ramp_iters);
}

void AdamState::step(ParamStore& params, real lr) {
  ++t;
  const real bc1 = 1.0 - std::pow(beta1, static_cast<real>(t));
  const real bc2 = 1.0 - std::pow(beta2, static_cast<real>(t));
  for (auto& [name, tensor] : params.all()) {
    Tensor p = tensor;
    auto g = p.grad();
    auto& [m, v] = moments[name];
    if (m.empty()) {
      m.assign(g.size(), 0.0);
      v.assign(g.size(), 0.0);
    }
    auto w = p.mutable_values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      const real mhat = m[i] / bc1;
      const real vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

namespace {

std::string fmt_full(real v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string StepReport::trace_header() {
  return "# step\ttotal\trec\trec_coarse\trec_fine\tgan_g\td_loss\tlambda_f\tlr_g\tlr_d";
}

std::string StepReport::trace_line() const {
  std::string s = std::to_string(step);
  for (real v : {total, rec, rec_coarse, rec_fine, gan_g, d_loss, lambda_f,
                 lr_g, lr_d})
    s += "\t" + fmt_full(v);
  return s;
}

Trainer::Trainer(TrainConfig cfg, std::vector<Instance> dataset)
    : Trainer(std::move(cfg), std::move(dataset), true) {}

Trainer::Trainer(TrainConfig cfg, std::vector<Instance> dataset,
                 bool fresh_init)
    : cfg_(std::move(cfg)),
      data_(std::move(dataset)),
      data_rng_(cfg_.seed) {
  require(!data_.empty(), "trainer needs a non-empty dataset");
  train_split_ = split_of(data_, true);
  require(!train_split_.empty(), "dataset has no training instances");
  gen_ = std::make_unique<Generator>(cfg_.generator_config(), cfg_.seed);
  disc_ = std::make_unique<Discriminator>(cfg_.discriminator_config(),
                                          cfg_.seed + 1);
  if (fresh_init && !cfg_.no_mean_shape) pretrain_prior();
}

void Trainer::pretrain_prior() {
  // A briefly trained autoencoder (same encoder + coarse decoder widths)
  // provides the frozen embedding for mean shapes and FPD features.
  GeneratorConfig pc = cfg_.generator_config();
  prior_gen_ = std::make_unique<Generator>(pc, cfg_.seed + 2);
  AdamState opt;
  Rng rng(cfg_.seed + 3);
  for (std::int64_t s = 0; s < cfg_.pretrain_steps; ++s) {
    const Instance* inst =
        train_split_[static_cast<std::size_t>(rng.index(
            static_cast<std::int64_t>(train_split_.size())))];
    Tensor target = cloud_tensor(inst->complete);
    prior_gen_->params().zero_grad();
    Tensor latent = prior_gen_->encode(target);
    Tensor coarse = prior_gen_->coarse_decode(latent);
    LossValue loss = chamfer(coarse, target, ChamferVariant::CdP);
    backward(loss.value);
    opt.step(prior_gen_->params(), cfg_.lr_G);
  }
  std::vector<const PointCloud*> completes;
  std::vector<int> categories;
  for (const Instance* inst : train_split_) {
    completes.push_back(&inst->complete);
    if (std::find(categories.begin(), categories.end(), inst->category) ==
        categories.end())
      categories.push_back(inst->category);
  }
  mean_shapes_ = build_mean_shapes(
      completes,
      [this](const Tensor& cloud) { return prior_gen_->encode(cloud); },
      categories);
}

Tensor Trainer::mean_shape_for(int category) const {
  if (cfg_.no_mean_shape) return Tensor();
  return mean_shapes_.get(category);
}

std::int64_t Trainer::epoch() const {
  const std::int64_t denom =
      cfg_.epoch_size > 0 ? cfg_.epoch_size
                          : static_cast<std::int64_t>(train_split_.size());
  return step_ * cfg_.batch_size / std::max<std::int64_t>(1, denom);
}

void Trainer::batch_instances(std::vector<const Instance*>& out,
                              std::vector<real>& scales) {
  out.clear();
  scales.clear();
  for (std::int64_t b = 0; b < cfg_.batch_size; ++b) {
    out.push_back(train_split_[static_cast<std::size_t>(data_rng_.index(
        static_cast<std::int64_t>(train_split_.size())))]);
    scales.push_back(cfg_.augment_scaling
                         ? data_rng_.uniform(1.0 / 1.5, 1.0)
                         : 1.0);
  }
}

namespace {

PointCloud scaled_cloud(const PointCloud& c, real s) {
  if (s == 1.0) return c;
  PointCloud out = c;
  for (auto& v : out.xyz) v *= s;
  return out;
}

void check_normalized(const PointCloud& c, const std::string& id) {
  real max_r2 = 0;
  for (std::int64_t i = 0; i < c.size(); ++i) {
    const Vec3 p = c.point(i);
    max_r2 = std::max(max_r2, p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  }
  if (max_r2 > 0.25 * (1.0 + 1e-9) + 1e-12)
    throw ContractViolation("instance '" + id +
                            "' is not normalized (max radius " +
                            std::to_string(std::sqrt(max_r2)) + " > 0.5)");
}

}  // namespace

StepReport Trainer::train_step() {
  std::vector<const Instance*> batch;
  std::vector<real> scales;
  batch_instances(batch, scales);

  StepReport report;
  report.step = step_;
  report.lambda_f =
      lambda_f_schedule(step_, cfg_.lambda_f_start, cfg_.lambda_f_ramp_iters);
  const std::int64_t ep = epoch();
  report.lr_g = lr_schedule(ep, cfg_.lr_G, cfg_.lr_decay, cfg_.lr_decay_epochs,
                            cfg_.lr_floor);
  report.lr_d = lr_schedule(ep, cfg_.lr_D, cfg_.lr_decay, cfg_.lr_decay_epochs,
                            cfg_.lr_floor);

  std::vector<PointCloud> partials, completes;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    PointCloud p = scaled_cloud(batch[b]->partial, scales[b]);
    PointCloud q = scaled_cloud(batch[b]->complete, scales[b]);
    check_normalized(p, batch[b]->id);
    check_normalized(q, batch[b]->id);
    partials.push_back(std::move(p));
    completes.push_back(std::move(q));
  }
  const real inv_b = 1.0 / static_cast<real>(batch.size());

  // ---- discriminator phase: Eq. 7 on detached fakes ----
  if (cfg_.adversarial) {
    std::vector<PointCloud> fakes;
    {
      NoGradGuard ng;  // the generator graph is not retained for D updates
      for (std::size_t b = 0; b < batch.size(); ++b) {
        auto res = gen_->complete(partials[b], cfg_.resolution,
                                  mean_shape_for(batch[b]->category));
        fakes.push_back(tensor_cloud(res.fine));
      }
    }
    try {
      for (std::int64_t d = 0; d < cfg_.d_steps_per_g; ++d) {
        disc_->params().zero_grad();
        Tensor loss;
        real value = 0;
        for (std::size_t b = 0; b < batch.size(); ++b) {
          Tensor d_fake = disc_->discriminate(cloud_tensor(fakes[b]));
          Tensor d_real = disc_->discriminate(cloud_tensor(completes[b]));
          LossValue lv = lsgan_discriminator(d_fake, d_real);
          value += lv.item();
          loss = loss.defined() ? add(loss, lv.value) : lv.value;
        }
        loss = mul(loss, inv_b);
        backward(loss);
        opt_d_.step(disc_->params(), report.lr_d);
        report.d_loss = value * inv_b;
      }
    } catch (const NumericFault& f) {
      throw NumericFault("step " + std::to_string(step_) +
                             " aborted in discriminator phase: " + f.what(),
                         f.op_kind, f.node_id);
    }
  }

  // ---- generator phase: Eq. 8 ----
  try {
    gen_->params().zero_grad();
    Tensor loss;
    real rec_sum = 0, rec_coarse_sum = 0, rec_fine_sum = 0, gan_sum = 0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      auto res = gen_->complete(partials[b], cfg_.resolution,
                                mean_shape_for(batch[b]->category));
      Tensor gt = cloud_tensor(completes[b]);
      LossValue rec =
          reconstruction_loss(res.coarse, res.fine, gt, report.lambda_f);
      rec_sum += rec.item();
      rec_coarse_sum += rec.components.at("rec_coarse");
      rec_fine_sum += rec.components.at("rec_fine");
      Tensor inst_loss;
      if (cfg_.adversarial) {
        Tensor d_fake = disc_->discriminate(res.fine);
        LossValue gan = lsgan_generator(d_fake);
        gan_sum += gan.item();
        inst_loss = total_loss(gan, rec, cfg_.lambda, cfg_.beta).value;
      } else {
        inst_loss = mul(rec.value, cfg_.beta);
      }
      loss = loss.defined() ? add(loss, inst_loss) : inst_loss;
    }
    loss = mul(loss, inv_b);
    backward(loss);
    opt_g_.step(gen_->params(), report.lr_g);
    report.rec = rec_sum * inv_b;
    report.rec_coarse = rec_coarse_sum * inv_b;
    report.rec_fine = rec_fine_sum * inv_b;
    report.gan_g = gan_sum * inv_b;
    report.total = loss.item();
  } catch (const NumericFault& f) {
    throw NumericFault("step " + std::to_string(step_) +
                           " aborted in generator phase: " + f.what(),
                       f.op_kind, f.node_id);
  }

  ++step_;
  return report;
}

void Trainer::run(std::ostream* trace) {
  namespace fs = std::filesystem;
  if (trace && step_ == 0) *trace << StepReport::trace_header() << "\n";
  while (step_ < cfg_.steps) {
    StepReport r = train_step();
    if (trace && (r.step % std::max<std::int64_t>(1, cfg_.log_every) == 0 ||
                  r.step + 1 == cfg_.steps))
      *trace << r.trace_line() << "\n";
    if (cfg_.checkpoint_every > 0 && step_ % cfg_.checkpoint_every == 0 &&
        step_ < cfg_.steps)
      save((fs::path(cfg_.out_dir) / "checkpoint.pck").string());
  }
}

void Trainer::save(const std::string& path) const {
  RecordFile f;
  for (const auto& [name, t] : gen_->params().all())
    f.put("G/" + name, t.shape(), {t.values().begin(), t.values().end()});
  for (const auto& [name, t] : disc_->params().all())
    f.put("D/" + name, t.shape(), {t.values().begin(), t.values().end()});
  if (prior_gen_)
    for (const auto& [name, t] : prior_gen_->params().all())
      f.put("prior/" + name, t.shape(),
            {t.values().begin(), t.values().end()});
  for (const auto& [cat, v] : mean_shapes_.by_category)
    f.put("meanshape/" + std::to_string(cat),
          {static_cast<std::int64_t>(v.size())}, v);

  auto put_moments = [&f](const std::string& ns, const AdamState& opt) {
    f.put_scalar(ns + "/t", static_cast<real>(opt.t));
    for (const auto& [name, mv] : opt.moments) {
      f.put(ns + "/m/" + name,
            {static_cast<std::int64_t>(mv.first.size())}, mv.first);
      f.put(ns + "/v/" + name,
            {static_cast<std::int64_t>(mv.second.size())}, mv.second);
    }
  };
  put_moments("opt_g", opt_g_);
  put_moments("opt_d", opt_d_);

  f.put_scalar("state/step", static_cast<real>(step_));
  f.put_text("state/rng", data_rng_.serialize());
  const std::string cfg_text = config_to_text(cfg_);
  f.put_text("state/config", cfg_text);
  f.put_scalar("state/config_hash",
               static_cast<real>(fnv1a64(cfg_text) >> 11));
  // manifest of parameter groups
  std::string groups = "G D";
  if (prior_gen_) groups += " prior";
  if (!mean_shapes_.empty()) groups += " meanshape";
  f.put_text("state/groups", groups);
  f.save(path);
}

namespace {

void load_store(const RecordFile& f, const std::string& ns,
                ParamStore& store) {
  for (const auto& [name, t] : store.all()) {
    const auto& rec = f.get(ns + "/" + name);
    if (rec.first != t.shape())
      throw RestoreError("checkpoint record '" + ns + "/" + name +
                         "' has shape " + shape_str(rec.first) +
                         ", model expects " + shape_str(t.shape()));
    Tensor tt = t;
    auto w = tt.mutable_values();
    std::copy(rec.second.begin(), rec.second.end(), w.begin());
  }
}

void load_moments(const RecordFile& f, const std::string& ns, AdamState& opt,
                  const ParamStore& store) {
  opt.t = static_cast<std::int64_t>(f.get_scalar(ns + "/t"));
  opt.moments.clear();
  if (opt.t == 0) return;
  for (const auto& [name, t] : store.all()) {
    auto& mv = opt.moments[name];
    mv.first = f.get(ns + "/m/" + name).second;
    mv.second = f.get(ns + "/v/" + name).second;
    if (static_cast<std::int64_t>(mv.first.size()) != t.numel() ||
        static_cast<std::int64_t>(mv.second.size()) != t.numel())
      throw RestoreError("optimizer moment size mismatch for '" + name + "'");
  }
}

}  // namespace

Tensor InferenceModel::mean_shape_for(int category) const {
  if (cfg.no_mean_shape) return Tensor();
  return mean_shapes.get(category);
}

std::vector<real> InferenceModel::features(const PointCloud& cloud) const {
  NoGradGuard ng;
  const Generator& enc = prior ? *prior : *gen;
  Tensor f = enc.encode(cloud_tensor(cloud));
  return {f.values().begin(), f.values().end()};
}

InferenceModel InferenceModel::load(const std::string& path) {
  const RecordFile f = RecordFile::load(path);
  InferenceModel m;
  m.cfg = config_from_text(f.get_text("state/config"));
  m.gen = std::make_unique<Generator>(m.cfg.generator_config(), m.cfg.seed);
  load_store(f, "G", m.gen->params());
  if (!m.cfg.no_mean_shape) {
    m.prior =
        std::make_unique<Generator>(m.cfg.generator_config(), m.cfg.seed + 2);
    load_store(f, "prior", m.prior->params());
    m.mean_shapes.width = m.cfg.latent_width;
    for (const auto& [name, rec] : f.records)
      if (name.rfind("meanshape/", 0) == 0)
        m.mean_shapes.by_category[std::stoi(name.substr(10))] = rec.second;
    if (m.mean_shapes.by_category.empty())
      throw RestoreError("checkpoint is missing mean-shape records");
  }
  return m;
}

std::unique_ptr<Trainer> Trainer::restore(const std::string& path) {
  const RecordFile f = RecordFile::load(path);
  const TrainConfig cfg = config_from_text(f.get_text("state/config"));
  require(!cfg.manifest.empty(),
          "checkpoint config names no manifest; use the dataset overload");
  namespace fs = std::filesystem;
  fs::path mpath = cfg.manifest;
  if (mpath.is_relative() && !cfg.data_root.empty())
    mpath = fs::path(cfg.data_root) / mpath;
  return restore(path, load_dataset(mpath.string()));
}

std::unique_ptr<Trainer> Trainer::restore(const std::string& path,
                                          std::vector<Instance> dataset) {
  const RecordFile f = RecordFile::load(path);
  TrainConfig cfg = config_from_text(f.get_text("state/config"));
  auto t = std::unique_ptr<Trainer>(
      new Trainer(std::move(cfg), std::move(dataset), false));

  load_store(f, "G", t->gen_->params());
  load_store(f, "D", t->disc_->params());
  if (!t->cfg_.no_mean_shape) {
    GeneratorConfig pc = t->cfg_.generator_config();
    t->prior_gen_ = std::make_unique<Generator>(pc, t->cfg_.seed + 2);
    load_store(f, "prior", t->prior_gen_->params());
    t->mean_shapes_.width = t->cfg_.latent_width;
    for (const auto& [name, rec] : f.records) {
      if (name.rfind("meanshape/", 0) == 0)
        t->mean_shapes_.by_category[std::stoi(name.substr(10))] = rec.second;
    }
    if (t->mean_shapes_.by_category.empty())
      throw RestoreError("checkpoint is missing mean-shape records");
  }
  load_moments(f, "opt_g", t->opt_g_, t->gen_->params());
  load_moments(f, "opt_d", t->opt_d_, t->disc_->params());
  t->step_ = static_cast<std::int64_t>(f.get_scalar("state/step"));
  t->data_rng_.deserialize(f.get_text("state/rng"));
  return t;
}

}  // namespace pcc
