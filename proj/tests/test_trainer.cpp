#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "pcc/checkpoint.hpp"
#include "pcc/trainer.hpp"
#include "test_util.hpp"

using namespace pcc;
using pcc::test::scratch_dir;

namespace {

TrainConfig tiny_train_config() {
  TrainConfig cfg;
  cfg.N_c = 32;
  cfg.N_s = 16;
  cfg.max_samples = {4, 6, 8};
  cfg.resolution = 128;
  cfg.latent_width = 16;
  cfg.enc1_widths = {8, 8};
  cfg.enc2_widths = {16, 16};
  cfg.coarse_hidden = {16};
  cfg.lift_feature_widths = {16, 8};
  cfg.lift_contraction_width = 4;
  cfg.disp_hidden = {8};
  cfg.disc_point_widths = {8, 16};
  cfg.disc_integrate_widths = {16, 8};
  cfg.pretrain_steps = 5;
  cfg.steps = 20;
  cfg.lambda_f_ramp_iters = 100;
  cfg.seed = 3;
  return cfg;
}

std::vector<Instance> tiny_dataset(std::uint64_t seed = 11) {
  SyntheticDatasetSpec spec;
  spec.categories = {Category::Cylinder, Category::BoxFrame};
  spec.per_category = 4;
  spec.partial_points = 32;
  spec.complete_points = 128;
  spec.train_fraction = 0.75;
  spec.seed = seed;
  return build_synthetic_dataset(spec);
}

std::map<std::string, std::vector<real>> snapshot(const ParamStore& store) {
  std::map<std::string, std::vector<real>> out;
  for (const auto& [name, t] : store.all())
    out[name] = {t.values().begin(), t.values().end()};
  return out;
}

}  // namespace

TEST_CASE("learning-rate schedule hits the paper anchors") {
  CHECK(lr_schedule(0, 1e-4) == 1e-4);
  CHECK(lr_schedule(0, 5e-5) == 5e-5);
  CHECK(lr_schedule(39, 1e-4) == 1e-4);
  CHECK(lr_schedule(40, 1e-4) == doctest::Approx(7e-5).epsilon(1e-15));
  CHECK(lr_schedule(80, 1e-4) == doctest::Approx(4.9e-5).epsilon(1e-15));
  CHECK(lr_schedule(100000, 1e-4) == 1e-6);  // floor reached and held
  CHECK(lr_schedule(1000000, 1e-4) == 1e-6);
  real prev = lr_schedule(0, 1e-4);
  for (int e = 1; e < 500; ++e) {
    const real lr = lr_schedule(e, 1e-4);
    CHECK(lr <= prev);
    prev = lr;
  }
}

TEST_CASE("lambda_f ramp endpoints are exact and the ramp is monotone") {
  CHECK(lambda_f_schedule(0) == 0.01);
  CHECK(lambda_f_schedule(50000) == 1.0);
  CHECK(lambda_f_schedule(1000000) == 1.0);
  real prev = 0;
  for (std::int64_t it = 0; it <= 50000; it += 500) {
    const real v = lambda_f_schedule(it);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("adam updates trend a quadratic toward its minimum") {
  ParamStore store;
  Tensor w = store.create("w", {2}, {4.0, -3.0});
  AdamState opt;
  for (int i = 0; i < 400; ++i) {
    store.zero_grad();
    Tensor loss = mul(mean_axis(square(w), 0), 2.0);
    backward(loss);
    opt.step(store, 0.05);
  }
  CHECK(std::abs(w.values()[0]) < 0.05);
  CHECK(std::abs(w.values()[1]) < 0.05);
  CHECK(opt.t == 400);
}

TEST_CASE("adversarial off: zero GAN components and untouched discriminator") {
  TrainConfig cfg = tiny_train_config();
  cfg.adversarial = false;
  cfg.steps = 5;
  Trainer trainer(cfg, tiny_dataset());
  const auto d_before = snapshot(trainer.discriminator().params());
  const auto g_before = snapshot(trainer.generator().params());
  for (int i = 0; i < 5; ++i) {
    const StepReport r = trainer.train_step();
    CHECK(r.gan_g == 0.0);
    CHECK(r.d_loss == 0.0);
    CHECK(r.rec > 0.0);
  }
  CHECK(snapshot(trainer.discriminator().params()) == d_before);
  CHECK(snapshot(trainer.generator().params()) != g_before);
}

TEST_CASE("adversarial on: both networks move, report carries schedules") {
  TrainConfig cfg = tiny_train_config();
  Trainer trainer(cfg, tiny_dataset());
  const auto d_before = snapshot(trainer.discriminator().params());
  const auto g_before = snapshot(trainer.generator().params());
  const StepReport r = trainer.train_step();
  CHECK(r.lambda_f == lambda_f_schedule(0, cfg.lambda_f_start,
                                        cfg.lambda_f_ramp_iters));
  CHECK(r.lr_g == 1e-4);
  CHECK(r.lr_d == 5e-5);
  CHECK(r.d_loss > 0.0);
  CHECK(snapshot(trainer.discriminator().params()) != d_before);
  CHECK(snapshot(trainer.generator().params()) != g_before);
}

TEST_CASE("identical seeds give bit-identical 100-step traces") {
  TrainConfig cfg = tiny_train_config();
  cfg.steps = 100;
  auto run_trace = [&] {
    Trainer trainer(cfg, tiny_dataset());
    std::string out;
    for (int i = 0; i < 100; ++i) out += trainer.train_step().trace_line() + "\n";
    return out;
  };
  const std::string a = run_trace();
  const std::string b = run_trace();
  CHECK(a == b);
}

TEST_CASE("checkpoint mid-run resumes the exact trajectory") {
  const std::string dir = scratch_dir("trainer_resume");
  TrainConfig cfg = tiny_train_config();
  cfg.steps = 24;

  Trainer uninterrupted(cfg, tiny_dataset());
  std::string full_trace;
  std::string ckpt_path = dir + "/mid.pck";
  for (int i = 0; i < 24; ++i) {
    if (i == 12) uninterrupted.save(ckpt_path);
    full_trace += uninterrupted.train_step().trace_line() + "\n";
  }

  auto resumed = Trainer::restore(ckpt_path, tiny_dataset());
  CHECK(resumed->step() == 12);
  std::string tail;
  for (int i = 12; i < 24; ++i)
    tail += resumed->train_step().trace_line() + "\n";
  // the resumed tail must equal the uninterrupted steps 13..24 bit-for-bit
  std::istringstream full(full_trace);
  std::string line, expect_tail;
  for (int i = 0; i < 24; ++i) {
    std::getline(full, line);
    if (i >= 12) expect_tail += line + "\n";
  }
  CHECK(tail == expect_tail);
}

TEST_CASE("checkpoint holds both network namespaces and survives inspection") {
  const std::string dir = scratch_dir("trainer_ckpt");
  TrainConfig cfg = tiny_train_config();
  cfg.steps = 3;
  Trainer trainer(cfg, tiny_dataset());
  for (int i = 0; i < 3; ++i) trainer.train_step();
  const std::string path = dir + "/model.pck";
  trainer.save(path);

  const RecordFile f = RecordFile::load(path);
  bool has_g = false, has_d = false, has_means = false, has_prior = false;
  for (const auto& [name, _] : f.records) {
    has_g = has_g || name.rfind("G/", 0) == 0;
    has_d = has_d || name.rfind("D/", 0) == 0;
    has_means = has_means || name.rfind("meanshape/", 0) == 0;
    has_prior = has_prior || name.rfind("prior/", 0) == 0;
  }
  CHECK(has_g);
  CHECK(has_d);
  CHECK(has_means);
  CHECK(has_prior);
  CHECK(f.get_scalar("state/step") == 3.0);
  const std::string groups = f.get_text("state/groups");
  CHECK(groups.find("G") != std::string::npos);
  CHECK(groups.find("D") != std::string::npos);
}

TEST_CASE("restore from a truncated checkpoint fails without side effects") {
  const std::string dir = scratch_dir("trainer_trunc");
  TrainConfig cfg = tiny_train_config();
  cfg.steps = 1;
  Trainer trainer(cfg, tiny_dataset());
  trainer.train_step();
  const std::string path = dir + "/model.pck";
  trainer.save(path);
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  pcc::write_file_atomic(path, bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(Trainer::restore(path, tiny_dataset()), RestoreError);
}

TEST_CASE("reconstruction loss descends on a tiny fixed dataset") {
  TrainConfig cfg = tiny_train_config();
  cfg.adversarial = false;
  cfg.steps = 2000;
  cfg.lambda_f_ramp_iters = 200;
  Trainer trainer(cfg, tiny_dataset(21));
  std::vector<real> rec;
  for (int i = 0; i < 2000; ++i) rec.push_back(trainer.train_step().rec);
  auto window_mean = [&](int end) {
    real sum = 0;
    for (int i = end - 50; i < end; ++i) sum += rec[i];
    return sum / 50.0;
  };
  CHECK(window_mean(2000) < window_mean(100));
}

TEST_CASE("un-normalized instances are rejected") {
  TrainConfig cfg = tiny_train_config();
  auto data = tiny_dataset();
  for (auto& v : data[0].complete.xyz) v *= 3.0;  // blow the radius
  data[0].train = true;
  Trainer trainer(cfg, std::move(data));
  // the bad instance comes up eventually; every draw must be checked
  bool threw = false;
  try {
    for (int i = 0; i < 50; ++i) trainer.train_step();
  } catch (const ContractViolation& e) {
    threw = std::string(e.what()).find("not normalized") != std::string::npos;
  }
  CHECK(threw);
}

TEST_CASE("numeric faults name the phase and abort the step") {
  TrainConfig cfg = tiny_train_config();
  cfg.adversarial = false;
  cfg.lr_G = 1e18;  // drive the parameters to overflow
  cfg.steps = 20;
  Trainer trainer(cfg, tiny_dataset());
  bool faulted = false;
  try {
    for (int i = 0; i < 20; ++i) trainer.train_step();
  } catch (const NumericFault& e) {
    faulted = true;
    CHECK(std::string(e.what()).find("phase") != std::string::npos);
  }
  CHECK(faulted);
}

TEST_CASE("augment scaling stays inside the unit ball and changes the trace") {
  TrainConfig cfg = tiny_train_config();
  cfg.steps = 10;
  cfg.augment_scaling = true;
  Trainer a(cfg, tiny_dataset());
  std::string trace_a;
  for (int i = 0; i < 10; ++i) trace_a += a.train_step().trace_line() + "\n";
  cfg.augment_scaling = false;
  Trainer b(cfg, tiny_dataset());
  std::string trace_b;
  for (int i = 0; i < 10; ++i) trace_b += b.train_step().trace_line() + "\n";
  CHECK(trace_a != trace_b);
}

TEST_CASE("config text round-trips and rejects unknown keys with hints") {
  TrainConfig cfg = tiny_train_config();
  cfg.no_mirror = true;
  cfg.manifest = "data/manifest.tsv";
  const std::string text = config_to_text(cfg);
  const TrainConfig back = config_from_text(text);
  CHECK(config_to_text(back) == text);
  CHECK(back.N_c == 32);
  CHECK(back.no_mirror == true);
  CHECK(back.manifest == "data/manifest.tsv");

  try {
    config_from_text("lrG = 1e-4\n");
    FAIL("expected unknown-key error");
  } catch (const ContractViolation& e) {
    const std::string msg = e.what();
    CHECK(msg.find("lrG") != std::string::npos);
    CHECK(msg.find("lr_G") != std::string::npos);  // suggestion
  }
  try {
    config_from_text("lrG = 1\nbeta_x = 2\n");
    FAIL("expected unknown-key error");
  } catch (const ContractViolation& e) {
    const std::string msg = e.what();
    CHECK(msg.find("lrG") != std::string::npos);
    CHECK(msg.find("beta_x") != std::string::npos);  // all offenders listed
  }
  CHECK_THROWS_AS(config_from_text("lr_G = fast\n"), ParseError);

  // ablation alias flips the adversarial flag
  const TrainConfig alias = config_from_text("no_discriminator = true\n");
  CHECK(alias.adversarial == false);
}

TEST_CASE("mean shapes are present unless ablated") {
  TrainConfig cfg = tiny_train_config();
  cfg.steps = 1;
  Trainer full(cfg, tiny_dataset());
  CHECK_FALSE(full.mean_shapes().empty());
  CHECK(full.mean_shape_for(static_cast<int>(Category::Cylinder)).defined());

  cfg.no_mean_shape = true;
  Trainer ablated(cfg, tiny_dataset());
  CHECK(ablated.mean_shapes().empty());
  CHECK_FALSE(ablated.mean_shape_for(0).defined());
  ablated.train_step();  // still trains
}
