// Acceptance suite: one pass/fail line per criterion. Heavy criteria train
// real adversarial models at desk scale, so the full run takes a while; use
// --only k[,k...] to run a subset during development.

#include <algorithm>
#include <chrono>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sinegan/sinegan.hpp"
#include "../test_util.hpp"

namespace fs = std::filesystem;
using namespace sinegan;
using Clock = std::chrono::steady_clock;

namespace {

std::string g_cli;
fs::path g_work = "acceptance_work";

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "    ok:   " : "    FAIL: ") + what);
  }
  void note(const std::string& what) { notes.push_back("    note: " + what); }
};

// Desk-scale adversarial schedule: rmsprop with a step size that converges
// in a few hundred epochs on one CPU core. The paper-default sgd at 1e-6 is
// available through the config system but would need orders of magnitude
// more epochs than a desk budget allows.
struct DeskSchedule {
  double learning_rate = 2e-4;
  int max_epochs = 450;
  int batch_size = 32;
  OptKind optimizer = OptKind::rmsprop;
};

TrainConfig desk_train_config(ObjKind kind, double lambda_reg, uint64_t seed,
                              const DeskSchedule& s = {}) {
  TrainConfig cfg;
  cfg.objective.kind = kind;
  cfg.objective.lambda_reg = lambda_reg;
  cfg.learning_rate = s.learning_rate;
  cfg.batch_size = s.batch_size;
  cfg.max_epochs = s.max_epochs;
  cfg.optimizer = s.optimizer;
  cfg.seed = seed;
  return cfg;
}

std::vector<Waveform> make_targets(const SignalSpec& spec, int count,
                                   uint64_t seed) {
  std::vector<Waveform> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::derive(seed, 0xda7a + static_cast<uint64_t>(i));
    out.push_back(apply_window(synthesize(spec, rng),
                               WindowKind::blackman_harris_4term));
  }
  return out;
}

struct PeakCheck {
  int hits = 0;
  int total = 0;
};

// How many generated samples place their strongest peaks at the target
// frequencies (within +-2 bins) with the top peak at least 10x the median
// spectral power.
PeakCheck generated_peak_hits(GeneratorParams& gen,
                              const std::vector<double>& targets_hz,
                              int n_samples, uint64_t seed) {
  PeakCheck result;
  result.total = n_samples;
  const double tol_hz = 2.0 * 16000.0 / 512;  // +-2 bins
  Rng rng = Rng::derive(seed, 0x5eed);
  for (int s = 0; s < n_samples; ++s) {
    LatentVector z;
    rng.fill_normal(z.values, 0.0, 0.01);
    Waveform w = generate(gen, z);
    Spectrogram sp = stft(w, StftConfig::analysis());
    auto peaks = dominant_peaks(sp, static_cast<int>(targets_hz.size()));
    if (peaks.size() != targets_hz.size()) continue;
    const double med = median_power(sp);
    if (med <= 0.0 || peaks[0].power < 10.0 * med) continue;
    bool all = true;
    for (double want : targets_hz) {
      double best = 1e300;
      for (const auto& p : peaks) best = std::min(best, std::abs(p.freq_hz - want));
      all &= best <= tol_hz;
    }
    if (all) ++result.hits;
  }
  return result;
}

GeneratorParams train_gan(const SignalSpec& spec, ObjKind kind,
                          double lambda_reg, std::optional<double> clip,
                          uint64_t seed, const DeskSchedule& sched,
                          const char* tag) {
  auto targets = make_targets(spec, 150, seed);
  Rng gr = Rng::derive(seed, 0x6e11), dr = Rng::derive(seed, 0xd15c);
  GeneratorParams gen = init_generator(gr);
  DiscriminatorParams disc =
      make_discriminator(DiscInput::spectrogram_256x60, dr, clip);
  TrainConfig cfg = desk_train_config(kind, lambda_reg, seed, sched);
  const auto t0 = Clock::now();
  auto cb = [&](int e, const EpochStats& st, GeneratorParams&,
                DiscriminatorParams&) {
    if (e % 100 == 0)
      std::printf("      [%s] epoch %d  d %.4g  g %.4g  (%.0f s)\n", tag, e,
                  st.d_loss, st.g_loss, seconds_since(t0));
  };
  TrainReport r = train(gen, disc, targets, cfg, cb);
  std::printf("      [%s] done: %d epochs, %s, %.0f s\n", tag, r.epochs_run,
              stop_reason_name(r.reason), r.wall_seconds);
  return gen;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome out;
  const auto t0 = Clock::now();
  const double eps = 1e-5;

  double worst_layer = 0.0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(1000 + seed);
    auto check = [&](Network& net, const Tensor& x) {
      Rng crng(2000 + seed);
      for (Tensor* p : net.params()) crng.fill_normal(p->values, 0.0, 0.3);
      Tensor probe = net.forward(x);
      std::vector<double> c(static_cast<size_t>(probe.numel()));
      for (auto& v : c) v = crng.normal(0.0, 1.0);
      TanhDotLoss loss(c);
      worst_layer = std::max(worst_layer, grad_check(net, x, loss, eps));
    };
    {
      Network n;
      n.add<FullyConnected>(6, 4);
      check(n, testutil::random_tensor({3, 6}, rng));
    }
    {
      Network n;
      n.add<FullyConnected>(8, 3, true);
      check(n, testutil::random_tensor({2, 8}, rng));
    }
    {
      Network n;
      n.add<Conv2d>(2, 3);
      check(n, testutil::random_tensor({2, 2, 5, 4}, rng));
    }
    {
      Network n;
      n.add<BatchNorm>(4);
      check(n, testutil::random_tensor({6, 4}, rng));
    }
    {
      Network n;
      n.add<BatchNorm>(3);
      check(n, testutil::random_tensor({2, 3, 4, 5}, rng));
    }
    {
      Network n;
      n.add<Conv2d>(1, 2);
      n.add<Activation>(ActKind::relu);
      n.add<MaxPool>();
      n.add<Activation>(ActKind::cosine);
      n.add<Activation>(ActKind::tanh);
      check(n, testutil::random_tensor({2, 1, 6, 5}, rng));
    }
  }
  out.check(worst_layer <= 1e-4,
            "per-layer checks over 20 seeds, worst rel err " +
                fmt_double(worst_layer));

  double worst_gen = 0.0, worst_disc = 0.0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(3000 + seed);
    GeneratorParams g = init_generator(rng);
    testutil::verification_init(g.net, rng);
    enforce_tying(g);
    Tensor z({2, kLatentDim});
    rng.fill_normal(z.values, 0.0, 1.0);
    std::vector<double> c(static_cast<size_t>(2 * kOutputSamples));
    for (auto& v : c) v = rng.normal(0.0, 1.0 / (2.0 * kOutputSamples));
    TanhDotLoss loss(c);
    GradCheckOptions opt;
    opt.max_coords_per_tensor = 10;
    opt.sample_seed = seed;
    worst_gen = std::max(worst_gen, grad_check(g.net, z, loss, eps, opt));

    Rng drng(4000 + seed);
    DiscriminatorParams d = make_discriminator(DiscInput::spectrogram_256x60, drng);
    testutil::verification_init(d.net, drng);
    Tensor x = testutil::random_tensor({2, 1, 256, 60}, drng, 0.5);
    for (auto& v : x.values) v = std::abs(v);
    std::vector<double> dc = {1.0, -1.0};
    TanhDotLoss dloss(dc);
    GradCheckOptions dopt;
    dopt.max_coords_per_tensor = 5;
    dopt.sample_seed = seed;
    worst_disc = std::max(worst_disc, grad_check(d.net, x, dloss, eps, dopt));
  }
  out.check(worst_gen <= 1e-4,
            "full generator over 20 seeds, worst rel err " + fmt_double(worst_gen));
  out.check(worst_disc <= 1e-4,
            "full discriminator over 20 seeds, worst rel err " + fmt_double(worst_disc));

  const double elapsed = seconds_since(t0);
  out.check(elapsed < 60.0, "runtime " + fmt_double(elapsed) + " s < 60 s");
  return out;
}

Outcome criterion2() {
  Outcome out;
  Rng rng(77);
  for (int k : {8, 64, 512}) {
    std::vector<double> fw(static_cast<size_t>(k / 2 - 1));
    std::vector<std::complex<double>> cw(fw.size());
    for (size_t i = 0; i < fw.size(); ++i) {
      fw[i] = rng.normal(0.0, 1.0);
      cw[i] = std::complex<double>(fw[i], 0.0);
    }
    const double dc = rng.normal(0.0, 1.0);

    Network probe = testutil::make_realization_probe(k, fw, dc, 0.0);
    Tensor got = probe.forward(testutil::ramp_batch(k));
    const auto oracle = half_spectrum_waveform(fw, dc, 0.0, k);
    const auto idft = testutil::conjugate_symmetric_idft(cw, dc, 0.0, k);

    double worst_oracle = 0.0, worst_idft = 0.0;
    for (int n = 0; n < k; ++n) {
      worst_oracle = std::max(worst_oracle,
                              std::abs(got.values[static_cast<size_t>(n)] -
                                       oracle[static_cast<size_t>(n)]));
      worst_idft = std::max(worst_idft,
                            std::abs(got.values[static_cast<size_t>(n)] -
                                     idft[static_cast<size_t>(n)]));
    }
    out.check(worst_oracle <= 1e-9,
              "K=" + std::to_string(k) + " tied net vs cosine-series oracle, max err " +
                  fmt_double(worst_oracle));
    out.check(worst_idft <= 1e-9,
              "K=" + std::to_string(k) + " tied net vs inverse-DFT oracle, max err " +
                  fmt_double(worst_idft));
  }
  return out;
}

Outcome criterion3() {
  Outcome out;
  ObjectiveConfig gan{ObjKind::gan, 0, 0, 0};
  ObjectiveConfig lsgan{ObjKind::lsgan, 0, 0, 0};
  ObjectiveConfig wgan{ObjKind::wgan, 0, 0, 0};
  ObjectiveConfig gp{ObjKind::wgan_gp, 0, 10.0, 0};
  ObjectiveConfig lp{ObjKind::wgan_lp, 0, 0, 10.0};

  std::vector<double> half(6, 0.5);
  out.check(std::abs(d_loss(gan, half, half) - 2.0 * std::log(2.0)) <= 1e-12,
            "classic objective at s=0.5 equals 2 ln 2");

  std::vector<double> ones(4, 1.0), zeros(4, 0.0);
  out.check(std::abs(d_loss(lsgan, ones, zeros)) <= 1e-12,
            "least-squares perfect discriminator equals 0");

  std::vector<double> real = {2.0, 4.0, 6.0};  // mean 4
  std::vector<double> fake = {1.0, 2.0, 3.0};  // mean 2
  out.check(std::abs(d_loss(wgan, real, fake) - (2.0 - 4.0)) <= 1e-12,
            "wasserstein loss equals mean_fake - mean_real");

  std::vector<double> s(3, 0.0), unit(3, 1.0), halfn(3, 0.5);
  out.check(std::abs(d_loss(gp, s, s, &unit)) <= 1e-12,
            "gradient penalty at norm 1 equals 0");
  out.check(std::abs(d_loss(lp, s, s, &halfn)) <= 1e-12,
            "one-sided penalty at norm 0.5 equals 0");
  out.check(std::abs(d_loss(gp, s, s, &halfn) - 10.0 * 0.25) <= 1e-12,
            "two-sided penalty at norm 0.5 equals lambda/4");
  return out;
}

Outcome criterion4() {
  Outcome out;
  SignalSpec spec;
  spec.frequencies_hz = {1000.0};
  spec.snr_db = 99.0;
  auto targets = make_targets(spec, 32, 11);
  Rng gr(12), dr(13);
  GeneratorParams gen = init_generator(gr);
  DiscriminatorParams disc =
      make_discriminator(DiscInput::spectrogram_256x60, dr, 0.005);
  TrainConfig cfg = desk_train_config(ObjKind::wgan, 1e-6, 11);
  cfg.batch_size = 16;
  cfg.max_epochs = 50;
  cfg.g_loss_tolerance = 1e-300;  // run the full 50 epochs
  TrainReport r = train(gen, disc, targets, cfg);

  out.check(r.epochs_run == 50, "ran 50 epochs");
  out.check(tying_max_gap(gen) == 0.0, "tying equality exact after training");
  double worst = 0.0;
  for (Tensor* p : disc.net.params())
    for (double v : p->values) worst = std::max(worst, std::abs(v));
  out.check(worst <= 0.005,
            "all discriminator weights in [-0.005, 0.005], max |w| " +
                fmt_double(worst));
  return out;
}

Outcome criterion5() {
  Outcome out;
  const auto t0 = Clock::now();
  SignalSpec spec;
  spec.frequencies_hz = {1000.0};
  spec.snr_db = 99.0;
  GeneratorParams gen =
      train_gan(spec, ObjKind::wgan, 1e-6, 0.005, 501, {}, "fig3");
  PeakCheck pc = generated_peak_hits(gen, {1000.0}, 10, 501);
  const double elapsed = seconds_since(t0);
  out.check(pc.hits >= 8, "mono 1 kHz peak hits " + std::to_string(pc.hits) +
                              "/10 (need >= 8)");
  out.check(elapsed <= 1800.0, "runtime " + fmt_double(elapsed) + " s <= 1800 s");
  return out;
}

Outcome criterion6() {
  Outcome out;
  const auto t0 = Clock::now();
  SignalSpec spec;
  spec.frequencies_hz = {1000.0, 1500.0};
  spec.snr_db = 99.0;
  GeneratorParams gen =
      train_gan(spec, ObjKind::wgan, 1e-6, 0.005, 601, {}, "fig4");
  PeakCheck pc = generated_peak_hits(gen, {1000.0, 1500.0}, 10, 601);
  out.check(pc.hits >= 7, "dual-tone peak hits " + std::to_string(pc.hits) +
                              "/10 (need >= 7)");
  out.note("runtime " + fmt_double(seconds_since(t0)) + " s");
  return out;
}

Outcome criterion7() {
  Outcome out;
  SignalSpec spec;
  spec.frequencies_hz = {1000.0, 1500.0};
  spec.snr_db = 20.0;
  GeneratorParams wgan_gen =
      train_gan(spec, ObjKind::wgan, 1e-6, 0.005, 701, {}, "fig5-wgan");
  PeakCheck wgan_pc = generated_peak_hits(wgan_gen, {1000.0, 1500.0}, 10, 701);
  out.check(wgan_pc.hits >= 7, "noisy dual-tone wasserstein hits " +
                                   std::to_string(wgan_pc.hits) + "/10 (need >= 7)");

  // soft comparison, reported not asserted: classic objective under the
  // identical budget
  GeneratorParams gan_gen =
      train_gan(spec, ObjKind::gan, 1e-6, std::nullopt, 701, {}, "fig5-gan");
  PeakCheck gan_pc = generated_peak_hits(gan_gen, {1000.0, 1500.0}, 10, 701);
  out.note("soft comparison at 20 dB: wasserstein " +
           std::to_string(wgan_pc.hits) + "/10 vs classic " +
           std::to_string(gan_pc.hits) + "/10 (reported, not asserted)");
  return out;
}

// Species generators shared by criteria 8 and 9.
struct SpeciesModels {
  std::vector<GeneratorParams> gens;
  LabeledDataset pool;
  std::vector<PreparedItem> prepared;
};

SpeciesModels train_species_models(int num_classes, const DeskSchedule& sched) {
  SpeciesModels m;
  m.pool = build_pseudo_species(num_classes, 350, 25.0, 0x900d);
  std::printf("      preparing classifier inputs for the real pool...\n");
  m.prepared = prepare_items(m.pool);

  for (int k = 0; k < num_classes; ++k) {
    const fs::path ckpt = g_work / ("gen_class" + std::to_string(k) + ".ckpt");
    if (fs::exists(ckpt)) {
      m.gens.push_back(load_generator(ckpt.string()));
      std::printf("      [species %d] loaded cached %s\n", k, ckpt.c_str());
      continue;
    }
    SignalSpec spec;
    spec.frequencies_hz = pseudo_species_table()[static_cast<size_t>(k)].frequencies_hz;
    spec.snr_db = 25.0;
    spec.freq_jitter_std = kSpeciesFreqJitterStd;
    spec.phase_jitter_std = kSpeciesPhaseJitterStd;
    GeneratorParams gen =
        train_gan(spec, ObjKind::wgan, 2.5e-6, 0.005,
                  0xabc0 + static_cast<uint64_t>(k), sched,
                  ("species " + std::to_string(k)).c_str());
    save_generator(gen, ckpt.string());
    m.gens.push_back(std::move(gen));
  }
  return m;
}

Outcome criterion8(SpeciesModels& m) {
  Outcome out;
  // exact closed-form properties
  {
    std::vector<std::vector<double>> uniform(8, std::vector<double>(5, 0.2));
    out.check(std::abs(inception_score_from_posteriors(uniform) - 1.0) <= 1e-9,
              "uniform posteriors give score 1");
    std::vector<std::vector<double>> onehot;
    for (int i = 0; i < 20; ++i) {
      std::vector<double> row(5, 0.0);
      row[static_cast<size_t>(i % 5)] = 1.0;
      onehot.push_back(row);
    }
    out.check(std::abs(inception_score_from_posteriors(onehot) - 5.0) <= 1e-9,
              "balanced one-hot posteriors give score 5");
  }

  ClassifierTrainConfig ccfg;
  ccfg.seed = 0x15c0;
  ccfg.max_epochs = 40;
  auto trained = train_classifier_prepared(m.prepared, m.pool.num_classes(), ccfg);

  const int per_class = 20;
  std::vector<Waveform> from_trained, from_untrained;
  for (size_t k = 0; k < m.gens.size(); ++k) {
    auto w = generate_samples(m.gens[k], per_class, 0xf00 + 31 * k);
    from_trained.insert(from_trained.end(), w.begin(), w.end());
    Rng rng(0xbad + k);
    GeneratorParams fresh = init_generator(rng);
    auto u = generate_samples(fresh, per_class, 0xf11 + 31 * k);
    from_untrained.insert(from_untrained.end(), u.begin(), u.end());
  }
  const double is_trained = inception_score(trained.params, from_trained);
  const double is_untrained = inception_score(trained.params, from_untrained);
  out.check(is_trained > is_untrained,
            "score(trained) " + fmt_double(is_trained) + " > score(untrained) " +
                fmt_double(is_untrained));
  out.note("absolute scores are not comparable to the frog-data numbers; "
           "only the ordering is meaningful here");
  return out;
}

Outcome criterion9(SpeciesModels& m) {
  Outcome out;
  const auto t0 = Clock::now();
  ExperimentConfig ec;
  ec.num_classes = m.pool.num_classes();
  ec.train_per_class = 150;
  ec.folds = 5;
  ec.seed = 0xe9;
  ec.classifier.max_epochs = 60;
  ec.classifier.plateau_epochs = 20;

  std::printf("      experiment 1 (real only)...\n");
  EvalReport exp1 = run_exp1(m.prepared, ec);
  std::printf("      exp1 class-average %.2f%%, epochs %.1f\n",
              100.0 * exp1.class_average, exp1.mean_epochs_to_convergence);
  out.check(exp1.class_average >= 0.90,
            "real-only class average " + fmt_double(100.0 * exp1.class_average) +
                "% >= 90%");

  std::printf("      generating synthetic items (600/class)...\n");
  std::vector<std::vector<PreparedItem>> synth_by_class;
  for (size_t k = 0; k < m.gens.size(); ++k) {
    auto waves = generate_samples(m.gens[k], 600, 0x5e0 + 7919 * (k + 1));
    std::vector<PreparedItem> items;
    for (auto& w : waves)
      items.push_back({classifier_input(w), static_cast<int>(k)});
    synth_by_class.push_back(std::move(items));
  }
  auto take = [&](int per_class) {
    std::vector<PreparedItem> out_items;
    for (const auto& cls : synth_by_class)
      out_items.insert(out_items.end(), cls.begin(), cls.begin() + per_class);
    return out_items;
  };

  std::printf("      experiment 2 (synthetic only, 600/class)...\n");
  EvalReport exp2 = run_exp2(m.prepared, take(600), ec);
  std::printf("      exp2 class-average %.2f%%\n", 100.0 * exp2.class_average);
  out.check(exp2.class_average >= exp1.class_average - 0.15,
            "synthetic-only at 600/class " + fmt_double(100.0 * exp2.class_average) +
                "% within 15 points of real-only");

  std::printf("      experiment 3 (150 real + 150 synthetic)...\n");
  EvalReport exp3 = run_exp3(m.prepared, take(150), ec);
  std::printf("      exp3 class-average %.2f%%, epochs %.1f\n",
              100.0 * exp3.class_average, exp3.mean_epochs_to_convergence);
  out.check(exp3.class_average >= exp1.class_average - 0.02,
            "augmented 150+150 " + fmt_double(100.0 * exp3.class_average) +
                "% >= real-only - 2 points");
  out.note("epochs to convergence: real-only " +
           fmt_double(exp1.mean_epochs_to_convergence) + ", augmented " +
           fmt_double(exp3.mean_epochs_to_convergence) +
           " (speed-up trend reported with the curves)");

  const double elapsed = seconds_since(t0);
  out.check(elapsed <= 7200.0,
            "grid runtime " + fmt_double(elapsed) + " s <= 7200 s");
  return out;
}

int run_cli(const std::string& args) {
  const int rc = std::system((g_cli + " " + args + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string strip_wall_ms(const std::string& csv) {
  std::stringstream in(csv), out;
  std::string line;
  while (std::getline(in, line)) out << line.substr(0, line.rfind(',')) << "\n";
  return out.str();
}

Outcome criterion10() {
  Outcome out;
  if (g_cli.empty()) {
    out.check(false, "no --cli path provided");
    return out;
  }
  const fs::path dir = g_work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);

  {
    std::ofstream f(dir / "synth.cfg");
    f << "[signal]\nnum_waveforms = 5\nfrequencies_hz = 1200,2400\n"
         "snr_db = 25\nfreq_jitter_std = 0.01\nphase_jitter_std = 0.3\n";
  }
  bool ok = run_cli("synthesize --config " + (dir / "synth.cfg").string() +
                    " --seed 42 --out " + (dir / "s1").string()) == 0;
  ok = ok && run_cli("synthesize --config " + (dir / "s1" / "config_echo.cfg").string() +
                     " --out " + (dir / "s2").string()) == 0;
  bool same = slurp(dir / "s1" / "manifest.csv") == slurp(dir / "s2" / "manifest.csv");
  for (int i = 0; i < 5 && same; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "wave_%06d.wav", i);
    same = slurp(dir / "s1" / name) == slurp(dir / "s2" / name);
  }
  out.check(ok && same, "synthesize rerun from echo is byte-identical");

  {
    std::ofstream f(dir / "train.cfg");
    f << "[signal]\nnum_waveforms = 12\n"
         "[objective]\nkind = wgan\nclip = 0.005\nlambda_reg = 1e-6\n"
         "[train]\nlearning_rate = 2e-4\noptimizer = rmsprop\nbatch_size = 6\n"
         "max_epochs = 3\ncheckpoint_every = 0\nsample_wavs_every = 0\n";
  }
  ok = run_cli("train --config " + (dir / "train.cfg").string() + " --seed 7 --out " +
               (dir / "t1").string()) == 0;
  ok = ok && run_cli("train --config " + (dir / "t1" / "config_echo.cfg").string() +
                     " --out " + (dir / "t2").string()) == 0;
  out.check(ok && strip_wall_ms(slurp(dir / "t1" / "loss.csv")) ==
                      strip_wall_ms(slurp(dir / "t2" / "loss.csv")),
            "train rerun: loss history identical (timing column excluded)");
  out.check(slurp(dir / "t1" / "gen.ckpt") == slurp(dir / "t2" / "gen.ckpt") &&
                slurp(dir / "t1" / "disc.ckpt") == slurp(dir / "t2" / "disc.ckpt"),
            "train rerun: checkpoints byte-identical");
  out.note("wall_ms column carries real timing and is excluded from the "
           "comparison by design");

  {
    std::ofstream f(dir / "eval.cfg");
    f << "[eval]\nexperiment = exp1\nnum_classes = 2\npool_per_class = 12\n"
         "train_per_class = 4\nfolds = 2\nclassifier_max_epochs = 3\n"
         "plateau_epochs = 3\n";
  }
  ok = run_cli("evaluate --config " + (dir / "eval.cfg").string() +
               " --seed 9 --out " + (dir / "e1").string()) == 0;
  ok = ok && run_cli("evaluate --config " + (dir / "e1" / "config_echo.cfg").string() +
                     " --out " + (dir / "e2").string()) == 0;
  out.check(ok && slurp(dir / "e1" / "confusion_exp1.csv") ==
                          slurp(dir / "e2" / "confusion_exp1.csv") &&
                slurp(dir / "e1" / "table_exp1.csv") ==
                    slurp(dir / "e2" / "table_exp1.csv") &&
                slurp(dir / "e1" / "curves_exp1.csv") ==
                    slurp(dir / "e2" / "curves_exp1.csv"),
            "evaluate rerun: report files byte-identical");
  return out;
}

Outcome criterion11() {
  Outcome out;
  // WAV round trip within one quantization step
  {
    SignalSpec spec;
    spec.frequencies_hz = {997.0};
    spec.snr_db = 25.0;
    Rng rng(3);
    Waveform w = synthesize(spec, rng);
    const fs::path p = g_work / "roundtrip.wav";
    wav_write(w, p.string());
    Waveform r = wav_read(p.string());
    double worst = 0.0;
    for (int i = 0; i < w.length(); ++i)
      worst = std::max(worst, std::abs(r.samples[static_cast<size_t>(i)] -
                                       w.samples[static_cast<size_t>(i)]));
    out.check(worst <= 1.0 / 32767.0,
              "wav round trip max err " + fmt_double(worst) + " <= 1 lsb");
  }
  // checkpoint round trip reproduces forward outputs bit-exactly at 32-bit
  {
    Rng rng(4);
    GeneratorParams g = init_generator(rng);
    const fs::path p = g_work / "gen_check.ckpt";
    save_generator(g, p.string());
    GeneratorParams a = load_generator(p.string());
    GeneratorParams b = load_generator(p.string());
    LatentVector z;
    Rng zr(5);
    zr.fill_normal(z.values, 0.0, 0.01);
    Waveform wa = generate(a, z);
    Waveform wb = generate(b, z);
    bool identical = wa.samples == wb.samples;
    // and equals the in-memory float-rounded parameters
    for (Tensor* t : g.net.params())
      for (double& v : t->values) v = static_cast<double>(static_cast<float>(v));
    for (Tensor* t : g.net.state())
      for (double& v : t->values) v = static_cast<double>(static_cast<float>(v));
    Waveform wr = generate(g, z);
    identical = identical && wa.samples == wr.samples;
    out.check(identical, "checkpoint round trip forward outputs bit-exact");
  }
  // stft against the direct-transform oracle
  {
    Rng rng(6);
    Waveform w;
    w.samples.resize(2048);
    for (auto& v : w.samples) v = rng.normal(0.0, 0.4);
    StftConfig cfg = StftConfig::analysis();
    Spectrogram s = stft(w, cfg);
    const auto win = make_window(cfg.window, cfg.frame_len);
    double worst = 0.0, scale = 0.0;
    for (int t = 0; t < s.num_frames; ++t) {
      std::vector<double> frame(static_cast<size_t>(cfg.frame_len));
      for (int n = 0; n < cfg.frame_len; ++n)
        frame[static_cast<size_t>(n)] =
            w.samples[static_cast<size_t>(t * cfg.hop_len + n)] *
            win[static_cast<size_t>(n)];
      const auto ref = testutil::naive_dft_magnitudes(frame, cfg.num_bins);
      for (int k = 0; k < cfg.num_bins; ++k) {
        worst = std::max(worst, std::abs(s.at(k, t) - ref[static_cast<size_t>(k)]));
        scale = std::max(scale, ref[static_cast<size_t>(k)]);
      }
    }
    out.check(worst / scale <= 1e-9, "stft vs direct-transform oracle rel err " +
                                         fmt_double(worst / scale));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) g_cli = argv[++i];
    if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    }
  }
  fs::create_directories(g_work);

  auto want = [&](int k) { return only.empty() || only.count(k); };
  int failures = 0;
  auto report = [&](int k, const char* title, Outcome o) {
    std::printf("[%s] criterion %d: %s\n", o.pass ? "PASS" : "FAIL", k, title);
    for (const auto& n : o.notes) std::printf("%s\n", n.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };

  const auto t0 = Clock::now();
  if (want(1)) report(1, "gradient correctness", criterion1());
  if (want(2)) report(2, "realization-layer oracle", criterion2());
  if (want(3)) report(3, "objective identities", criterion3());
  if (want(4)) report(4, "constraint invariants after 50-epoch run", criterion4());
  if (want(5)) report(5, "mono-frequency synthesis analog", criterion5());
  if (want(6)) report(6, "dual-frequency synthesis analog", criterion6());
  if (want(7)) report(7, "noise-robustness analog", criterion7());
  if (want(8) || want(9)) {
    std::printf("--- training per-class generators (shared by criteria 8, 9)\n");
    SpeciesModels m = train_species_models(5, {});
    if (want(8)) report(8, "inception-score properties", criterion8(m));
    if (want(9)) report(9, "classification experiment analogs", criterion9(m));
  }
  if (want(10)) report(10, "determinism of command reruns", criterion10());
  if (want(11)) report(11, "i/o exactness", criterion11());

  std::printf("%s: %d criterion(s) failed, total %.0f s\n",
              failures == 0 ? "ALL PASS" : "FAILURES", failures,
              seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
