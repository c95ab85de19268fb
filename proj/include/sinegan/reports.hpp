#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "sinegan/common.hpp"
#include "sinegan/evaluation.hpp"
#include "sinegan/training.hpp"

namespace sinegan {

// Shortest round-trippable decimal form.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : f_(path, std::ios::trunc) {
    if (!f_) throw IoError("cannot open for write: " + path);
  }
  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) f_ << ',';
      f_ << cells[i];
    }
    f_ << '\n';
  }
  void flush() { f_.flush(); }

 private:
  std::ofstream f_;
};

inline void write_confusion_csv(const EvalReport& r,
                                const std::vector<std::string>& class_names,
                                const std::string& path) {
  CsvWriter csv(path);
  std::vector<std::string> header = {"true\\pred"};
  for (const auto& n : class_names) header.push_back(n);
  csv.row(header);
  for (size_t i = 0; i < r.confusion.size(); ++i) {
    std::vector<std::string> row = {class_names[i]};
    for (int64_t v : r.confusion[i]) row.push_back(std::to_string(v));
    csv.row(row);
  }
}

// Per-composition accuracy table: one row per training-set composition,
// per-class accuracies, class average, and mean epochs-to-convergence.
inline void write_accuracy_table_csv(
    const std::vector<std::pair<std::string, EvalReport>>& rows,
    const std::vector<std::string>& class_names, const std::string& path) {
  CsvWriter csv(path);
  std::vector<std::string> header = {"composition"};
  for (const auto& n : class_names) header.push_back(n);
  header.push_back("average");
  header.push_back("epochs_to_convergence");
  csv.row(header);
  for (const auto& [label, r] : rows) {
    std::vector<std::string> row = {label};
    for (double a : r.per_class_accuracy) row.push_back(fmt_double(100.0 * a));
    row.push_back(fmt_double(100.0 * r.class_average));
    row.push_back(fmt_double(r.mean_epochs_to_convergence));
    csv.row(row);
  }
}

inline void write_curves_csv(
    const std::vector<std::pair<std::string, EvalReport>>& rows,
    const std::string& path) {
  CsvWriter csv(path);
  csv.row({"composition", "fold", "epoch", "val_accuracy"});
  for (const auto& [label, r] : rows)
    for (size_t f = 0; f < r.fold_curves.size(); ++f)
      for (size_t e = 0; e < r.fold_curves[f].size(); ++e)
        csv.row({label, std::to_string(f), std::to_string(e + 1),
                 fmt_double(r.fold_curves[f][e])});
}

inline void write_loss_csv(const TrainReport& r, const std::string& path) {
  CsvWriter csv(path);
  csv.row({"epoch", "d_loss", "g_loss", "reg", "penalty", "wall_ms"});
  for (size_t e = 0; e < r.history.size(); ++e) {
    const EpochStats& s = r.history[e];
    csv.row({std::to_string(e + 1), fmt_double(s.d_loss), fmt_double(s.g_loss),
             fmt_double(s.reg_term), fmt_double(s.penalty_term),
             fmt_double(s.wall_ms)});
  }
}

}  // namespace sinegan
