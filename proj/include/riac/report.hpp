#pragma once
// Report emission. Every number goes through fusion::format_double, so
// identical runs yield byte-identical files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "riac/error.hpp"
#include "riac/fusion.hpp"
#include "riac/training.hpp"

namespace riac::report {

using skeleton::Part;
using train::ProtocolReport;
using train::RowReport;

inline std::string num(double v) { return fusion::format_double(v); }

inline std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

inline std::string file_tag(const std::string& s) {
  std::string t = s;
  for (char& c : t)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return t;
}

// [section] headers followed by "key = value" lines.
inline std::string report_text(const ProtocolReport& r) {
  std::ostringstream os;
  os << "[run]\n";
  os << "dataset = " << r.dataset << '\n';
  os << "protocol = " << r.protocol << '\n';
  os << "fusion_mode = " << train::fusion_mode_name(r.fusion_mode) << '\n';
  os << "seed = " << r.seed << '\n';
  os << "rows = " << r.rows.size() << '\n';
  for (const auto& row : r.rows) {
    os << "\n[row " << row.name << "]\n";
    os << "folds = " << row.folds << '\n';
    os << "test_samples = " << row.test_samples << '\n';
    for (const auto& [part, s] : row.parts) {
      const auto p = skeleton::part_name(part);
      os << "train_loss." << p << " = " << num(s.train_loss) << '\n';
      os << "train_accuracy." << p << " = " << num(s.train_accuracy) << '\n';
      os << "test_accuracy." << p << " = " << num(s.test_accuracy) << '\n';
    }
    if (row.fused) {
      if (row.name != "Overall") os << "fusion.weights = " << fusion::weights_str(row.weights) << '\n';
      os << "fusion.accuracy = " << num(row.fused_accuracy) << '\n';
    }
    if (!row.roc_fused.curves.empty()) os << "fusion.macro_auc = " << num(row.roc_fused.macro_auc) << '\n';
    if (!row.roc_fs.curves.empty()) os << "FS.macro_auc = " << num(row.roc_fs.macro_auc) << '\n';
    for (std::size_t c : row.roc_fused.skipped) os << "roc.skipped_class = " << row.class_names.at(c) << '\n';
    for (const auto& run : row.runs) {
      os << "run." << skeleton::part_name(run.part) << ".fold" << run.fold << " = epochs " << run.history.size() << " best "
         << run.best_epoch << (run.early_stopped ? " early_stopped" : "") << " test_accuracy " << num(run.test_accuracy) << '\n';
    }
  }
  if (!r.config.empty()) {
    os << "\n[config]\n";
    for (const auto& [k, v] : r.config) os << k << " = " << v << '\n';
  }
  return os.str();
}

// Mirrors the result tables: one block of loss/accuracy rows per evaluated
// row, and test accuracy only for the MSR "Overall" mean.
inline std::string table_csv(const ProtocolReport& r) {
  std::ostringstream os;
  os << "row,metric";
  for (Part p : skeleton::kAllParts) os << ',' << skeleton::part_name(p);
  os << ",weighted_fusion,weights\n";
  for (const auto& row : r.rows) {
    auto line = [&](const std::string& metric, auto get, bool with_fusion) {
      os << row.name << ',' << metric;
      for (Part p : skeleton::kAllParts) {
        os << ',';
        if (auto it = row.parts.find(p); it != row.parts.end()) os << get(it->second);
      }
      os << ',';
      if (with_fusion && row.fused) os << percent(row.fused_accuracy);
      os << ',';
      if (with_fusion && row.fused && row.name != "Overall") os << '"' << fusion::weights_str(row.weights) << '"';
      os << '\n';
    };
    if (row.name != "Overall") {
      line("training_loss", [](const train::PartSummary& s) { return num(s.train_loss); }, false);
      line("training_accuracy", [](const train::PartSummary& s) { return percent(s.train_accuracy); }, false);
    }
    line("test_accuracy", [](const train::PartSummary& s) { return percent(s.test_accuracy); }, true);
  }
  return os.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot write '" + p.string() + "'");
  os << text;
  if (!os) throw IoError("short write to '" + p.string() + "'");
}

inline void write_confusion(const std::filesystem::path& p, const RowReport& row) {
  std::ostringstream os;
  os << "true\\predicted";
  for (const auto& c : row.class_names) os << ',' << c;
  os << '\n';
  for (std::size_t i = 0; i < row.confusion.size(); ++i) {
    os << row.class_names.at(i);
    for (auto v : row.confusion[i]) os << ',' << v;
    os << '\n';
  }
  write_text(p, os.str());
}

inline void write_roc(const std::filesystem::path& p, const RowReport& row, const metrics::RocReport& roc) {
  std::ostringstream os;
  os << "class,fpr,tpr,auc\n";
  for (const auto& c : roc.curves)
    for (const auto& pt : c.points) os << row.class_names.at(c.cls) << ',' << num(pt.fpr) << ',' << num(pt.tpr) << ',' << num(c.auc) << '\n';
  write_text(p, os.str());
}

inline void write_history(const std::filesystem::path& p, const train::RunRecord& run) {
  std::ostringstream os;
  os << "epoch,lr,train_loss,train_accuracy,val_loss,val_accuracy\n";
  for (const auto& e : run.history)
    os << e.epoch << ',' << num(e.lr) << ',' << num(e.train_loss) << ',' << num(e.train_accuracy) << ',' << num(e.val_loss) << ','
       << num(e.val_accuracy) << '\n';
  write_text(p, os.str());
}

// report.txt, table.csv, and per-row confusion / ROC / history / prediction files.
inline void write_report(const std::filesystem::path& dir, const ProtocolReport& r) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.txt", report_text(r));
  write_text(dir / "table.csv", table_csv(r));
  for (const auto& row : r.rows) {
    if (row.name == "Overall") continue;
    const std::string t = file_tag(row.name);
    if (!row.confusion.empty()) write_confusion(dir / ("confusion_" + t + ".csv"), row);
    if (!row.roc_fused.curves.empty()) write_roc(dir / ("roc_fusion_" + t + ".csv"), row, row.roc_fused);
    if (!row.roc_fs.curves.empty()) write_roc(dir / ("roc_FS_" + t + ".csv"), row, row.roc_fs);
    for (const auto& run : row.runs)
      write_history(dir / ("history_" + t + "_" + skeleton::part_name(run.part) + "_fold" + std::to_string(run.fold) + ".csv"), run);
    for (const auto& [part, preds] : row.predictions)
      fusion::write_predictions(dir / ("predictions_" + t + "_" + skeleton::part_name(part) + ".csv"), preds);
  }
}

}  // namespace riac::report
