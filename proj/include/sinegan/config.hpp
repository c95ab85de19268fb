#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sinegan/common.hpp"

namespace sinegan {

// Flat run configuration: "[section]" headers and "key = value" lines, one
// file per run. Every key has a schema entry with a default; unknown keys
// are rejected. A run echoes its fully-resolved configuration before doing
// any work, and re-running from the echo reproduces the run.

struct ConfigKey {
  std::string section;
  std::string key;
  std::string default_value;
};

inline const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"run", "command", ""},
      {"run", "seed", "0"},
      {"run", "out_dir", ""},
      {"run", "threads", "1"},

      {"signal", "frequencies_hz", "1000"},
      {"signal", "sample_rate_hz", "16000"},
      {"signal", "length_samples", "8000"},
      {"signal", "snr_db", "99"},
      {"signal", "freq_jitter_std", "0"},
      {"signal", "phase_jitter_std", "0"},
      {"signal", "num_waveforms", "150"},
      {"signal", "window", "blackman_harris"},
      {"signal", "species_class", "-1"},

      {"objective", "kind", "wgan"},
      {"objective", "lambda_reg", "1e-06"},
      {"objective", "lambda_gp", "0"},
      {"objective", "lambda_lp", "0"},
      {"objective", "clip", "0.005"},

      {"train", "learning_rate", "1e-06"},
      {"train", "batch_size", "32"},
      {"train", "d_steps_per_g_step", "1"},
      {"train", "max_epochs", "10000"},
      {"train", "g_loss_tolerance", "1e-06"},
      {"train", "optimizer", "sgd"},
      {"train", "discriminator", "cnn"},
      {"train", "checkpoint_every", "100"},
      {"train", "sample_wavs_every", "100"},

      {"eval", "experiment", "exp1"},
      {"eval", "num_classes", "5"},
      {"eval", "pool_per_class", "350"},
      {"eval", "train_per_class", "150"},
      {"eval", "folds", "5"},
      {"eval", "snr_db", "25"},
      {"eval", "synthetic_sizes", "75,150,225,300,375,450,525,600"},
      {"eval", "generator_dir", ""},
      {"eval", "is_samples_per_class", "20"},
      {"eval", "classifier_learning_rate", "0.0001"},
      {"eval", "classifier_batch_size", "32"},
      {"eval", "classifier_max_epochs", "60"},
      {"eval", "plateau_epochs", "20"},
      {"eval", "asymmetric_class", "-1"},
  };
  return schema;
}

class Config {
 public:
  Config() {
    for (const auto& k : config_schema()) values_[k.section + "." + k.key] = k.default_value;
  }

  static Config from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    Config cfg;
    cfg.merge_stream(f, path);
    return cfg;
  }

  void merge_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    merge_stream(f, path);
  }

  void set(const std::string& section, const std::string& key,
           const std::string& value) {
    const std::string full = section + "." + key;
    if (!values_.count(full))
      throw ConfigError("unknown config key: [" + section + "] " + key);
    values_[full] = value;
  }

  const std::string& get(const std::string& section, const std::string& key) const {
    const auto it = values_.find(section + "." + key);
    if (it == values_.end())
      throw ConfigError("unknown config key: [" + section + "] " + key);
    return it->second;
  }

  int get_int(const std::string& s, const std::string& k) const {
    return static_cast<int>(parse_ll(get(s, k), s, k));
  }
  uint64_t get_u64(const std::string& s, const std::string& k) const {
    return static_cast<uint64_t>(parse_ll(get(s, k), s, k));
  }
  double get_double(const std::string& s, const std::string& k) const {
    const std::string& v = get(s, k);
    try {
      size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError("bad number for [" + s + "] " + k + ": " + v);
    }
  }
  std::vector<double> get_double_list(const std::string& s, const std::string& k) const {
    std::vector<double> out;
    std::stringstream ss(get(s, k));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty()) continue;
      try {
        out.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ConfigError("bad list entry for [" + s + "] " + k + ": " + tok);
      }
    }
    return out;
  }
  std::vector<int> get_int_list(const std::string& s, const std::string& k) const {
    std::vector<int> out;
    for (double d : get_double_list(s, k)) out.push_back(static_cast<int>(d));
    return out;
  }

  // Canonical serialization in schema order; the echo written before a run.
  std::string to_string() const {
    std::string out;
    std::string current;
    for (const auto& k : config_schema()) {
      if (k.section != current) {
        if (!current.empty()) out += "\n";
        out += "[" + k.section + "]\n";
        current = k.section;
      }
      out += k.key + " = " + values_.at(k.section + "." + k.key) + "\n";
    }
    return out;
  }

  void write_file(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write config echo: " + path);
    f << to_string();
    if (!f) throw IoError("write failed: " + path);
  }

 private:
  static long long parse_ll(const std::string& v, const std::string& s,
                            const std::string& k) {
    try {
      size_t pos = 0;
      const long long x = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ConfigError("bad integer for [" + s + "] " + k + ": " + v);
    }
  }

  void merge_stream(std::istream& in, const std::string& origin) {
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError(origin + ":" + std::to_string(lineno) +
                            ": malformed section header");
        section = line.substr(1, line.size() - 2);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": key outside any section");
      set(section, key, value);
    }
  }

  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Named reproduction recipes. Figure recipes carry the per-objective
// regularization coefficients from the corresponding experiment; the
// schedule fields hold desk-scale settings that train in minutes on a CPU.

inline Config recipe_config(const std::string& name) {
  Config c;
  auto desk_schedule = [&c] {
    c.set("train", "optimizer", "rmsprop");
    c.set("train", "learning_rate", "0.0002");
    c.set("train", "max_epochs", "600");
    c.set("train", "batch_size", "32");
  };
  auto signal_mono = [&c] { c.set("signal", "frequencies_hz", "1000"); };
  auto signal_dual = [&c] { c.set("signal", "frequencies_hz", "1000,1500"); };
  auto objective = [&c](const char* kind, const char* reg, const char* clip,
                        const char* gp, const char* lp) {
    c.set("objective", "kind", kind);
    c.set("objective", "lambda_reg", reg);
    c.set("objective", "clip", clip);
    c.set("objective", "lambda_gp", gp);
    c.set("objective", "lambda_lp", lp);
  };

  std::string base = name.substr(0, name.find('_'));
  std::string variant =
      name.find('_') == std::string::npos ? "" : name.substr(name.find('_') + 1);
  if (name.rfind("species", 0) == 0) {
    base = "species";
    variant = name.substr(7);
  }

  if (base == "fig2" || base == "fig3") {
    c.set("run", "command", "train");
    signal_mono();
    c.set("signal", "snr_db", "99");
    desk_schedule();
    c.set("train", "discriminator", base == "fig2" ? "mlp" : "cnn");
    if (base == "fig2") {
      if (variant == "gan") objective("gan", "1e-04", "0", "0", "0");
      else if (variant == "lsgan") objective("lsgan", "1e-06", "0", "0", "0");
      else objective("wgan", "2.5e-06", "0.0015", "0", "0");
    } else {
      if (variant == "gan") objective("gan", "1e-04", "0", "0", "0");
      else if (variant == "lsgan") objective("lsgan", "1e-04", "0", "0", "0");
      else objective("wgan", "1e-06", "0.005", "0", "0");
    }
    return c;
  }
  if (base == "fig4" || base == "fig5") {
    c.set("run", "command", "train");
    signal_dual();
    c.set("signal", "snr_db", base == "fig4" ? "99" : "20");
    desk_schedule();
    c.set("train", "discriminator", "cnn");
    if (variant == "gan")
      objective("gan", base == "fig4" ? "1e-05" : "1e-06", "0", "0", "0");
    else if (variant == "lsgan") objective("lsgan", "0.5e-06", "0", "0", "0");
    else if (variant == "wgan_gp")
      objective("wgan_gp", "1e-06", "0", base == "fig4" ? "20" : "10", "0");
    else if (variant == "wgan_lp")
      objective("wgan_lp", "1e-06", "0", "0", base == "fig4" ? "10" : "15");
    else objective("wgan", "1e-06", "0.005", "0", "0");
    return c;
  }
  if (base == "species") {
    // per-class generator training for the classification experiments
    c.set("run", "command", "train");
    c.set("signal", "species_class", variant.empty() ? "0" : variant);
    c.set("signal", "snr_db", "25");
    desk_schedule();
    c.set("train", "discriminator", "cnn");
    objective("wgan", "2.5e-06", "0.005", "0", "0");
    return c;
  }
  if (base == "exp1" || base == "exp2" || base == "exp3" || base == "inception") {
    c.set("run", "command", "evaluate");
    c.set("eval", "experiment", base);
    return c;
  }
  throw ConfigError("unknown recipe: " + name);
}

}  // namespace sinegan
