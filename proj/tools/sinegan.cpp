// Command-line front end: dataset synthesis, adversarial training, and the
// classification experiment grid, all driven by one flat config file per run.

#include <CLI11.hpp>
#include <Eigen/Core>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <string>

#include "sinegan/sinegan.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sinegan;

namespace {

struct CliOverrides {
  std::string config_path;
  std::string recipe;
  std::string out_dir;
  long long seed = -1;
  int threads = 0;
};

Config resolve_config(const CliOverrides& o, const std::string& command) {
  Config cfg = o.recipe.empty() ? Config() : recipe_config(o.recipe);
  if (!o.config_path.empty()) cfg.merge_file(o.config_path);
  cfg.set("run", "command", command);
  if (o.seed >= 0) cfg.set("run", "seed", std::to_string(o.seed));
  if (!o.out_dir.empty()) cfg.set("run", "out_dir", o.out_dir);
  if (o.threads > 0) cfg.set("run", "threads", std::to_string(o.threads));
  if (cfg.get("run", "out_dir").empty()) {
    const char* env = std::getenv("SINEGAN_OUT");
    cfg.set("run", "out_dir", env && *env ? std::string(env) + "/" + command
                                          : "sinegan_out/" + command);
  }
  return cfg;
}

std::string prepare_out_dir(const Config& cfg) {
  const std::string out = cfg.get("run", "out_dir");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory: " + out);
  cfg.write_file(out + "/config_echo.cfg");
  Eigen::setNbThreads(std::max(1, cfg.get_int("run", "threads")));
  return out;
}

SignalSpec signal_spec_from(const Config& cfg) {
  SignalSpec spec;
  const int species = cfg.get_int("signal", "species_class");
  if (species >= 0) {
    const auto& table = pseudo_species_table();
    if (species >= static_cast<int>(table.size()))
      throw ConfigError("species_class out of range");
    spec.frequencies_hz = table[static_cast<size_t>(species)].frequencies_hz;
    spec.freq_jitter_std = kSpeciesFreqJitterStd;
    spec.phase_jitter_std = kSpeciesPhaseJitterStd;
  } else {
    spec.frequencies_hz = cfg.get_double_list("signal", "frequencies_hz");
    spec.freq_jitter_std = cfg.get_double("signal", "freq_jitter_std");
    spec.phase_jitter_std = cfg.get_double("signal", "phase_jitter_std");
  }
  spec.sample_rate_hz = cfg.get_int("signal", "sample_rate_hz");
  spec.length_samples = cfg.get_int("signal", "length_samples");
  spec.snr_db = cfg.get_double("signal", "snr_db");
  spec.validate();
  return spec;
}

std::vector<Waveform> make_targets(const Config& cfg) {
  const SignalSpec spec = signal_spec_from(cfg);
  const WindowKind window = window_from_name(cfg.get("signal", "window"));
  const int n = cfg.get_int("signal", "num_waveforms");
  const uint64_t seed = cfg.get_u64("run", "seed");
  std::vector<Waveform> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::derive(seed, 0xda7a + static_cast<uint64_t>(i));
    Waveform w = synthesize(spec, rng);
    if (window != WindowKind::rectangular) w = apply_window(w, window);
    out.push_back(std::move(w));
  }
  return out;
}

int cmd_synthesize(const Config& cfg) {
  const std::string out = prepare_out_dir(cfg);
  const auto waves = make_targets(cfg);
  const int species = cfg.get_int("signal", "species_class");
  const std::string class_name =
      species >= 0 ? pseudo_species_table()[static_cast<size_t>(species)].name
                   : std::string("signal");

  CsvWriter manifest(out + "/manifest.csv");
  manifest.row({"index", "filename", "class_id", "class_name", "length"});
  for (size_t i = 0; i < waves.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "wave_%06zu.wav", i);
    wav_write(waves[i], out + "/" + name);
    manifest.row({std::to_string(i), name, std::to_string(species), class_name,
                  std::to_string(waves[i].length())});
  }
  std::printf("wrote %zu waveforms to %s\n", waves.size(), out.c_str());
  return 0;
}

TrainConfig train_config_from(const Config& cfg) {
  TrainConfig tc;
  tc.objective.kind = objective_from_name(cfg.get("objective", "kind"));
  tc.objective.lambda_reg = cfg.get_double("objective", "lambda_reg");
  tc.objective.lambda_gp = cfg.get_double("objective", "lambda_gp");
  tc.objective.lambda_lp = cfg.get_double("objective", "lambda_lp");
  tc.learning_rate = cfg.get_double("train", "learning_rate");
  tc.batch_size = cfg.get_int("train", "batch_size");
  tc.d_steps_per_g_step = cfg.get_int("train", "d_steps_per_g_step");
  tc.max_epochs = cfg.get_int("train", "max_epochs");
  tc.g_loss_tolerance = cfg.get_double("train", "g_loss_tolerance");
  tc.optimizer = optimizer_from_name(cfg.get("train", "optimizer"));
  tc.seed = cfg.get_u64("run", "seed");
  return tc;
}

int cmd_train(const Config& cfg) {
  const std::string out = prepare_out_dir(cfg);
  const auto targets = make_targets(cfg);
  const TrainConfig tc = train_config_from(cfg);
  const uint64_t seed = tc.seed;

  const std::string disc_kind = cfg.get("train", "discriminator");
  if (disc_kind != "cnn" && disc_kind != "mlp")
    throw ConfigError("discriminator must be cnn or mlp");
  const double clip = cfg.get_double("objective", "clip");

  Rng gen_rng = Rng::derive(seed, 0x6e11);
  Rng disc_rng = Rng::derive(seed, 0xd15c);
  GeneratorParams gen = init_generator(gen_rng);
  DiscriminatorParams disc = make_discriminator(
      disc_kind == "cnn" ? DiscInput::spectrogram_256x60 : DiscInput::waveform_8000,
      disc_rng, clip > 0 ? std::optional<double>(clip) : std::nullopt);

  const int ckpt_every = cfg.get_int("train", "checkpoint_every");
  const int wav_every = cfg.get_int("train", "sample_wavs_every");
  fs::create_directories(out + "/samples");

  auto callback = [&](int epoch, const EpochStats& stats, GeneratorParams& g,
                      DiscriminatorParams& d) {
    if (ckpt_every > 0 && epoch % ckpt_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "/gen_%06d.ckpt", epoch);
      save_generator(g, out + name);
      std::snprintf(name, sizeof name, "/disc_%06d.ckpt", epoch);
      save_discriminator(d, out + name);
    }
    if (wav_every > 0 && epoch % wav_every == 0) {
      Rng rng = Rng::derive(seed, 0x3a3e + static_cast<uint64_t>(epoch));
      for (int s = 0; s < 5; ++s) {
        LatentVector z;
        rng.fill_normal(z.values, 0.0, 0.01);
        char name[64];
        std::snprintf(name, sizeof name, "/samples/ep%06d_s%d.wav", epoch, s);
        wav_write(generate(g, z), out + name);
      }
    }
    if (epoch % 50 == 0)
      std::printf("epoch %d  d_loss %.6g  g_loss %.6g\n", epoch, stats.d_loss,
                  stats.g_loss);
  };

  TrainReport report = train(gen, disc, targets, tc, callback);
  write_loss_csv(report, out + "/loss.csv");
  save_generator(gen, out + "/gen.ckpt");
  save_discriminator(disc, out + "/disc.ckpt");

  std::printf("finished after %d epochs (%s), wall %.1f s\n", report.epochs_run,
              stop_reason_name(report.reason), report.wall_seconds);
  if (report.reason == StopReason::diverged) {
    std::fprintf(stderr, "training diverged; parameters rolled back\n");
    return 3;
  }
  return 0;
}

std::vector<GeneratorParams> load_generators(const Config& cfg, int num_classes) {
  const std::string dir = cfg.get("eval", "generator_dir");
  if (dir.empty()) throw ConfigError("experiment needs generator_dir");
  std::vector<GeneratorParams> gens;
  for (int k = 0; k < num_classes; ++k) {
    const std::string path = dir + "/gen_class" + std::to_string(k) + ".ckpt";
    if (!fs::exists(path)) throw IoError("missing generator for class " +
                                         std::to_string(k) + ": " + path);
    gens.push_back(load_generator(path));
  }
  return gens;
}

json report_to_json(const EvalReport& r) {
  json j;
  j["class_average"] = r.class_average;
  j["per_class_accuracy"] = r.per_class_accuracy;
  j["mean_epochs_to_convergence"] = r.mean_epochs_to_convergence;
  j["confusion"] = r.confusion;
  return j;
}

int cmd_evaluate(const Config& cfg) {
  const std::string out = prepare_out_dir(cfg);
  const std::string experiment = cfg.get("eval", "experiment");
  const uint64_t seed = cfg.get_u64("run", "seed");

  ExperimentConfig ec;
  ec.num_classes = cfg.get_int("eval", "num_classes");
  ec.train_per_class = cfg.get_int("eval", "train_per_class");
  ec.folds = cfg.get_int("eval", "folds");
  ec.seed = seed;
  ec.asymmetric_class = cfg.get_int("eval", "asymmetric_class");
  ec.classifier.learning_rate = cfg.get_double("eval", "classifier_learning_rate");
  ec.classifier.batch_size = cfg.get_int("eval", "classifier_batch_size");
  ec.classifier.max_epochs = cfg.get_int("eval", "classifier_max_epochs");
  ec.classifier.plateau_epochs = cfg.get_int("eval", "plateau_epochs");

  const LabeledDataset pool_ds = build_pseudo_species(
      ec.num_classes, cfg.get_int("eval", "pool_per_class"),
      cfg.get_double("eval", "snr_db"), Rng::derive(seed, 0x4ea1).next_u64());
  const auto pool = prepare_items(pool_ds);
  const auto& names = pool_ds.class_names;

  json summary;
  summary["experiment"] = experiment;

  if (experiment == "exp1") {
    EvalReport r = run_exp1(pool, ec);
    write_confusion_csv(r, names, out + "/confusion_exp1.csv");
    std::vector<std::pair<std::string, EvalReport>> rows = {{"Real only", r}};
    write_accuracy_table_csv(rows, names, out + "/table_exp1.csv");
    write_curves_csv(rows, out + "/curves_exp1.csv");
    summary["report"] = report_to_json(r);
  } else if (experiment == "exp2" || experiment == "exp3") {
    auto gens = load_generators(cfg, ec.num_classes);
    const auto sizes = cfg.get_int_list("eval", "synthetic_sizes");
    SINEGAN_CHECK(!sizes.empty(), "synthetic_sizes must be non-empty");
    const int max_size = *std::max_element(sizes.begin(), sizes.end());

    // One synthetic set per class at the largest size; smaller compositions
    // take prefixes, mirroring nested training-set growth.
    std::vector<std::vector<PreparedItem>> synth_by_class;
    for (size_t k = 0; k < gens.size(); ++k) {
      auto waves = generate_samples(gens[k], max_size,
                                    seed + 7919ull * (k + 1));
      std::vector<PreparedItem> items;
      for (auto& w : waves)
        items.push_back({classifier_input(w), static_cast<int>(k)});
      synth_by_class.push_back(std::move(items));
    }

    std::vector<std::pair<std::string, EvalReport>> rows;
    if (experiment == "exp3") rows.emplace_back("Real only", run_exp1(pool, ec));
    for (int size : sizes) {
      std::vector<PreparedItem> synth;
      for (const auto& cls : synth_by_class)
        synth.insert(synth.end(), cls.begin(), cls.begin() + size);
      const std::string label =
          experiment == "exp2" ? std::to_string(size)
                               : std::to_string(ec.train_per_class) + "+" +
                                     std::to_string(size);
      EvalReport r = experiment == "exp2" ? run_exp2(pool, synth, ec)
                                          : run_exp3(pool, synth, ec);
      write_confusion_csv(r, names,
                          out + "/confusion_" + experiment + "_" + label + ".csv");
      rows.emplace_back(label, r);
    }
    write_accuracy_table_csv(rows, names, out + "/table_" + experiment + ".csv");
    write_curves_csv(rows, out + "/curves_" + experiment + ".csv");
    for (const auto& [label, r] : rows) summary["rows"][label] = report_to_json(r);
  } else if (experiment == "inception") {
    auto gens = load_generators(cfg, ec.num_classes);
    ClassifierTrainConfig ccfg = ec.classifier;
    ccfg.seed = seed;
    auto trained = train_classifier_prepared(pool, ec.num_classes, ccfg);

    const int per_class = cfg.get_int("eval", "is_samples_per_class");
    std::vector<Waveform> trained_samples, untrained_samples;
    for (size_t k = 0; k < gens.size(); ++k) {
      auto w = generate_samples(gens[k], per_class, seed + 101ull * (k + 1));
      trained_samples.insert(trained_samples.end(), w.begin(), w.end());
      Rng rng = Rng::derive(seed, 0x0e11 + k);
      GeneratorParams fresh = init_generator(rng);
      auto u = generate_samples(fresh, per_class, seed + 103ull * (k + 1));
      untrained_samples.insert(untrained_samples.end(), u.begin(), u.end());
    }
    summary["inception_score_trained"] =
        inception_score(trained.params, trained_samples);
    summary["inception_score_untrained"] =
        inception_score(trained.params, untrained_samples);
  } else {
    throw ConfigError("unknown experiment: " + experiment);
  }

  std::ofstream jf(out + "/summary_" + experiment + ".json", std::ios::trunc);
  if (!jf) throw IoError("cannot write summary");
  jf << summary.dump(2) << "\n";
  std::printf("experiment %s written to %s\n", experiment.c_str(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial sinusoid synthesis toolkit"};
  app.require_subcommand(1);

  CliOverrides o;
  std::string command;
  for (const char* name : {"synthesize", "train", "evaluate"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", o.config_path, "config file");
    sub->add_option("--recipe", o.recipe,
                    "named preset (fig2|fig3|fig4|fig5|species<k>|exp1|exp2|exp3|"
                    "inception, with _<objective> variants)");
    sub->add_option("--seed", o.seed, "override run seed");
    sub->add_option("--out", o.out_dir, "output directory");
    sub->add_option("--threads", o.threads, "worker cap");
    sub->callback([&command, name] { command = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const Config cfg = resolve_config(o, command);
    if (command == "synthesize") return cmd_synthesize(cfg);
    if (command == "train") return cmd_train(cfg);
    return cmd_evaluate(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DivergedError& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return 3;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
